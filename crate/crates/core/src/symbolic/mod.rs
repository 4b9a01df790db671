//! Words, subshifts, points and exact language counting.

mod generated;
mod point;
mod sft;
mod sturmian;
mod word;

use serde::{Deserialize, Serialize};

pub use generated::Generated;
pub use point::{PeriodicPoint, PointOracle, SamplePath, SharedPoint, SturmianPoint};
pub use sft::Sft;
pub(crate) use sft::enumerate_words;
pub use sturmian::{Convention, PhaseInterval, Sturmian};
pub use word::{contains_factor, occurrences, Cylinder, CylinderMeet, Symbol, Word};

use crate::error::{Error, Result};
use crate::quadratic::{QuadraticJson, QuadraticReal};

/// Largest language, in symbols, listed by [`Subshift::cover`].
const COVER_LIMIT: u128 = 1 << 26;

#[derive(Clone, Debug)]
pub enum Subshift {
    Sft(Sft),
    Sturmian(Sturmian),
    Generated(Generated),
    Product(Box<Subshift>, Box<Subshift>),
}

/// Entropy in nats. `exact` values come from a Perron root; estimates are
/// `(1/n)·log|L_n|` at `horizon = n`, an upper bound by subadditivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub exact: bool,
    pub horizon: Option<usize>,
}

impl Subshift {
    pub fn full_shift(alphabet: usize) -> Self {
        Self::Sft(Sft::full_shift(alphabet))
    }

    pub fn golden_mean() -> Self {
        Self::Sft(Sft::golden_mean())
    }

    pub fn silver_sturmian() -> Self {
        Self::Sturmian(Sturmian::silver())
    }

    pub fn product(a: Subshift, b: Subshift) -> Self {
        Self::Product(Box::new(a), Box::new(b))
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Self::Sft(s) => s.alphabet_size(),
            Self::Sturmian(_) => 2,
            Self::Generated(g) => g.alphabet_size(),
            Self::Product(a, b) => a.alphabet_size() * b.alphabet_size(),
        }
    }

    /// Pair symbol of a product to its coordinates.
    pub fn split_symbol(&self, s: Symbol) -> Option<(Symbol, Symbol)> {
        match self {
            Self::Product(_, b) => {
                let k = b.alphabet_size() as Symbol;
                Some((s / k, s % k))
            }
            _ => None,
        }
    }

    fn split_word(&self, word: &[Symbol]) -> (Word, Word) {
        let (u, v): (Vec<Symbol>, Vec<Symbol>) = word
            .iter()
            .map(|&s| self.split_symbol(s).expect("product symbol"))
            .unzip();
        (Word(u), Word(v))
    }

    pub fn admissible(&self, word: &[Symbol]) -> Result<bool> {
        Word::from(word).check_alphabet(self.alphabet_size())?;
        Ok(match self {
            Self::Sft(s) => s.admissible(word),
            Self::Sturmian(s) => s.admissible(word),
            Self::Generated(g) => g.admissible(word)?,
            Self::Product(a, b) => {
                let (u, v) = self.split_word(word);
                a.admissible(&u)? && b.admissible(&v)?
            }
        })
    }

    /// All admissible words of length `n`, sorted.
    pub fn language(&self, n: usize) -> Result<Vec<Word>> {
        Ok(match self {
            Self::Sft(s) => s.language(n),
            Self::Sturmian(s) => s.language(n),
            Self::Generated(g) => g.language(n)?,
            Self::Product(a, b) => {
                let k = b.alphabet_size() as Symbol;
                let (la, lb) = (a.language(n)?, b.language(n)?);
                let mut out = Vec::with_capacity(la.len() * lb.len());
                for u in &la {
                    for v in &lb {
                        out.push(Word(u.iter().zip(v.iter()).map(|(&x, &y)| x * k + y).collect()));
                    }
                }
                out.sort();
                out
            }
        })
    }

    /// Texts of length at least `depth` whose length-`depth` factors are
    /// exactly the admissible words of that length: one orbit segment for
    /// Sturmian systems, the language itself otherwise.
    pub fn cover(&self, depth: usize) -> Result<Vec<Word>> {
        if let Self::Sturmian(s) = self {
            if let Some(text) = s.cover(depth) {
                return Ok(vec![text]);
            }
        }
        let size = self.count_words(depth)?.saturating_mul(depth.max(1) as u128);
        if size > COVER_LIMIT {
            return Err(Error::DepthExceeded {
                requested: depth,
                certified: (0..depth).rev().find(|&d| self.count_words(d).is_ok_and(|c| c * (d.max(1) as u128) <= COVER_LIMIT)).unwrap_or(0),
            });
        }
        self.language(depth)
    }

    pub fn count_words(&self, n: usize) -> Result<u128> {
        match self {
            Self::Sft(s) => Ok(s.count_words(n)),
            Self::Sturmian(_) => Ok(n as u128 + 1),
            Self::Product(a, b) => Ok(a.count_words(n)? * b.count_words(n)?),
            Self::Generated(_) => Ok(self.language(n)?.len() as u128),
        }
    }

    /// Exact for SFTs (and products of SFTs); otherwise `(1/n)·log|L_n|`.
    pub fn topological_entropy(&self, horizon: usize) -> Result<EntropyEstimate> {
        match self {
            Self::Sft(s) => Ok(EntropyEstimate {
                value: s.perron_root()?.ln(),
                exact: true,
                horizon: None,
            }),
            Self::Product(a, b) => {
                let (x, y) = (a.topological_entropy(horizon)?, b.topological_entropy(horizon)?);
                Ok(EntropyEstimate {
                    value: x.value + y.value,
                    exact: x.exact && y.exact,
                    horizon: x.horizon.or(y.horizon),
                })
            }
            _ => {
                let n = horizon.max(1);
                let count = self.count_words(n)?;
                if count == 0 {
                    return Err(Error::EmptySubshift);
                }
                Ok(EntropyEstimate {
                    value: (count as f64).ln() / n as f64,
                    exact: false,
                    horizon: Some(n),
                })
            }
        }
    }

    /// Points with `σⁿx = x`.
    pub fn periodic_points(&self, n: usize) -> Vec<PeriodicPoint> {
        let words = match self {
            Self::Sft(s) => s.periodic_words(n),
            Self::Sturmian(_) => Vec::new(),
            Self::Generated(g) => g.periodic_words(n),
            Self::Product(a, b) => {
                let k = b.alphabet_size() as Symbol;
                let (pa, pb) = (a.periodic_points(n), b.periodic_points(n));
                let mut out = Vec::new();
                for u in &pa {
                    for v in &pb {
                        out.push(Word(
                            u.word().iter().zip(v.word().iter()).map(|(&x, &y)| x * k + y).collect(),
                        ));
                    }
                }
                out
            }
        };
        words
            .into_iter()
            .filter_map(|w| PeriodicPoint::new(w).ok())
            .collect()
    }

    /// Every admissible word of length `< depth` extends to the right.
    pub fn check_extendability(&self, depth: usize) -> Result<bool> {
        for n in 1..depth {
            let longer = self.language(n + 1)?;
            let prefixes: std::collections::BTreeSet<Word> =
                longer.iter().map(|w| Word::from(&w[..n])).collect();
            if self.language(n)?.iter().any(|w| !prefixes.contains(w)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn from_spec(spec: &SubshiftSpec) -> Result<Self> {
        match spec {
            SubshiftSpec::Sft {
                alphabet,
                adjacency,
                forbidden,
            } => {
                if let Some(rows) = adjacency {
                    let matrix = rows
                        .iter()
                        .map(|r| {
                            r.chars()
                                .map(|c| match c {
                                    '0' => Ok(0u8),
                                    '1' => Ok(1u8),
                                    _ => Err(Error::Parse(format!("bad adjacency row {r:?}"))),
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(Self::Sft(Sft::from_adjacency(&matrix)?));
                }
                let alphabet = alphabet.ok_or_else(|| Error::Parse("sft needs alphabet or adjacency".into()))?;
                Ok(Self::Sft(Sft::from_forbidden(alphabet, forbidden.clone().unwrap_or_default())?))
            }
            SubshiftSpec::Sturmian { alpha, d, convention } => {
                let alpha = QuadraticReal::from_json_repr(alpha, *d)?;
                Ok(Self::Sturmian(Sturmian::new(alpha, *convention)?))
            }
            SubshiftSpec::Product { left, right } => {
                Ok(Self::product(Self::from_spec(left)?, Self::from_spec(right)?))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SubshiftSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }
}

fn default_radicand() -> u32 {
    2
}

/// JSON description of a subshift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubshiftSpec {
    Sft {
        #[serde(default)]
        alphabet: Option<usize>,
        #[serde(default)]
        adjacency: Option<Vec<String>>,
        #[serde(default)]
        forbidden: Option<Vec<Word>>,
    },
    Sturmian {
        alpha: QuadraticJson,
        #[serde(default = "default_radicand")]
        d: u32,
        #[serde(default)]
        convention: Convention,
    },
    Product {
        left: Box<SubshiftSpec>,
        right: Box<SubshiftSpec>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn spec_parsing() {
        let g = Subshift::from_json(r#"{"kind":"sft","alphabet":2,"forbidden":["11"]}"#).unwrap();
        assert_eq!(g.count_words(5).unwrap(), 13);
        let a = Subshift::from_json(r#"{"kind":"sft","adjacency":["11","10"]}"#).unwrap();
        assert_eq!(a.language(3).unwrap(), g.language(3).unwrap());
        let s = Subshift::from_json(r#"{"kind":"sturmian","alpha":{"a":"-1","b":"1"}}"#).unwrap();
        assert_eq!(s.language(4).unwrap().len(), 5);
        let p = Subshift::from_json(
            r#"{"kind":"product","left":{"kind":"sft","alphabet":2},"right":{"kind":"sturmian","alpha":{"a":"-1","b":"1"}}}"#,
        )
        .unwrap();
        assert_eq!(p.alphabet_size(), 4);
        assert_eq!(p.count_words(3).unwrap(), 8 * 4);
        assert_eq!(p.language(3).unwrap().len(), 32);
        assert!(Subshift::from_json(r#"{"kind":"sft","adjacency":["12","10"]}"#).is_err());
    }

    #[test]
    fn symbol_range_is_checked() {
        let g = Subshift::golden_mean();
        assert_eq!(
            g.admissible(&w("02")),
            Err(Error::SymbolOutOfRange {
                symbol: 2,
                alphabet: 2
            })
        );
    }

    #[test]
    fn product_admissibility() {
        let p = Subshift::product(Subshift::golden_mean(), Subshift::full_shift(2));
        // symbols: 2·a + b
        assert!(p.admissible(&[2, 0, 3]).unwrap());
        assert!(!p.admissible(&[2, 3]).unwrap());
        assert_eq!(p.periodic_points(1).len(), 2);
    }

    #[test]
    fn extendability() {
        assert!(Subshift::golden_mean().check_extendability(8).unwrap());
        assert!(Subshift::silver_sturmian().check_extendability(8).unwrap());
    }
}
