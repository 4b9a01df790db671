use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::quadratic::QuadraticReal;
use crate::symbolic::{SamplePath, Sft, Symbol, Word};

/// Stationary Markov chain on the alphabet, with exact entries in a
/// quadratic field (rational in most uses; the Parry measure of the golden
/// mean shift lives in ℚ(√5)).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    p: Vec<Vec<QuadraticReal>>,
    pi: Vec<QuadraticReal>,
    p_f64: Vec<Vec<f64>>,
    pi_f64: Vec<f64>,
}

impl MarkovMeasure {
    /// Validates row sums, nonnegativity and `πP = π`, all exactly.
    pub fn new(p: Vec<Vec<QuadraticReal>>, pi: Vec<QuadraticReal>) -> Result<Self> {
        let n = p.len();
        if n == 0 || pi.len() != n || p.iter().any(|r| r.len() != n) {
            return Err(Error::Parse("transition matrix and stationary vector disagree in size".into()));
        }
        let one = QuadraticReal::one();
        for (i, row) in p.iter().enumerate() {
            if row.iter().any(|x| x.is_negative()) {
                return Err(Error::PreconditionFailed(format!("row {i} has a negative entry")));
            }
            if row.iter().sum::<QuadraticReal>() != one {
                return Err(Error::PreconditionFailed(format!("row {i} does not sum to 1")));
            }
        }
        if pi.iter().any(|x| x.is_negative()) || pi.iter().sum::<QuadraticReal>() != one {
            return Err(Error::PreconditionFailed("pi is not a probability vector".into()));
        }
        for j in 0..n {
            let col: QuadraticReal = (0..n).map(|i| &pi[i] * &p[i][j]).sum();
            if col != pi[j] {
                return Err(Error::PreconditionFailed(format!("pi P != pi in coordinate {j}")));
            }
        }
        let p_f64 = p.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
        let pi_f64 = pi.iter().map(|x| x.to_f64()).collect();
        Ok(Self { p, pi, p_f64, pi_f64 })
    }

    /// Solves `πP = π`, `Σπ = 1` exactly; the chain must have a unique
    /// stationary vector.
    pub fn with_stationary(p: Vec<Vec<QuadraticReal>>) -> Result<Self> {
        let pi = stationary(&p)?;
        Self::new(p, pi)
    }

    pub fn bernoulli(probs: Vec<QuadraticReal>) -> Result<Self> {
        let p = vec![probs.clone(); probs.len()];
        Self::new(p, probs)
    }

    pub fn uniform_bernoulli(alphabet: usize) -> Self {
        let x = QuadraticReal::from_ratio(1, alphabet as i64);
        Self::bernoulli(vec![x; alphabet]).expect("uniform vector")
    }

    /// Measure of maximal entropy of a two-symbol memory-1 SFT,
    /// `P_ij = A_ij v_j / (λ v_i)`, `π_i ∝ u_i v_i`.
    pub fn parry(sft: &Sft) -> Result<Self> {
        if sft.memory() != 1 || sft.vertices().len() != 2 || sft.alphabet_size() != 2 {
            return Err(Error::Unsupported(
                "exact Parry measure is implemented for two-symbol memory-1 shifts".into(),
            ));
        }
        let a = sft.transfer_matrix();
        let ai = |i: usize, j: usize| QuadraticReal::from_int(a[i][j] as i64);
        let tr = (a[0][0] + a[1][1]) as i64;
        let det = (a[0][0] * a[1][1]) as i64 - (a[0][1] * a[1][0]) as i64;
        let disc = tr * tr - 4 * det;
        let (s, d) = square_free_split(disc as u64);
        let lambda = if d == 1 {
            QuadraticReal::from_ratio(tr + s as i64, 2)
        } else {
            QuadraticReal::from_parts((tr, 2), (s as i64, 2), d as u32)?
        };
        let right = if a[0][1] != 0 {
            [ai(0, 1), &lambda - &ai(0, 0)]
        } else {
            [&lambda - &ai(1, 1), ai(1, 0)]
        };
        let left = if a[1][0] != 0 {
            [ai(1, 0), &lambda - &ai(0, 0)]
        } else {
            [&lambda - &ai(1, 1), ai(0, 1)]
        };
        let p: Vec<Vec<QuadraticReal>> = (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| &(&ai(i, j) * &right[j]) / &(&lambda * &right[i]))
                    .collect()
            })
            .collect();
        let weights: Vec<QuadraticReal> = (0..2).map(|i| &left[i] * &right[i]).collect();
        let total: QuadraticReal = weights.iter().sum();
        let pi = weights.iter().map(|w| w / &total).collect();
        Self::new(p, pi)
    }

    pub fn states(&self) -> usize {
        self.p.len()
    }

    pub fn transition(&self) -> &[Vec<QuadraticReal>] {
        &self.p
    }

    pub fn stationary(&self) -> &[QuadraticReal] {
        &self.pi
    }

    pub fn transition_f64(&self) -> &[Vec<f64>] {
        &self.p_f64
    }

    pub fn stationary_f64(&self) -> &[f64] {
        &self.pi_f64
    }

    /// `−Σ_i π_i Σ_j P_ij log P_ij`.
    pub fn entropy_rate(&self) -> f64 {
        self.pi_f64
            .iter()
            .zip(&self.p_f64)
            .map(|(&pi, row)| pi * row.iter().map(|&x| plogp(x)).sum::<f64>())
            .sum::<f64>()
    }

    /// Orbit segment of length `len` placed at `[origin, origin + len)`.
    pub fn sample_path(&self, origin: i64, len: usize, seed: u64) -> SamplePath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(len);
        if len > 0 {
            let start = WeightedIndex::new(&self.pi_f64).expect("probability vector");
            let rows: Vec<WeightedIndex<f64>> = self
                .p_f64
                .iter()
                .map(|r| WeightedIndex::new(r).expect("stochastic row"))
                .collect();
            let mut s = start.sample(&mut rng);
            out.push(s as Symbol);
            for _ in 1..len {
                s = rows[s].sample(&mut rng);
                out.push(s as Symbol);
            }
        }
        SamplePath::new(origin, Word(out))
    }

    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::Markov {
            p: self.p.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
            pi: Some(self.pi.iter().map(|x| x.to_string()).collect()),
        }
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let MeasureSpec::Markov { p, pi } = spec;
        let parse = |s: &String| s.parse::<QuadraticReal>();
        let p = p
            .iter()
            .map(|r| r.iter().map(parse).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        match pi {
            Some(pi) => Self::new(p, pi.iter().map(parse).collect::<Result<Vec<_>>>()?),
            None => Self::with_stationary(p),
        }
    }
}

pub(crate) fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// `n = s²·d` with `d` square-free.
fn square_free_split(n: u64) -> (u64, u64) {
    let (mut s, mut d) = (1u64, n);
    let mut f = 2u64;
    while f * f <= d {
        while d % (f * f) == 0 {
            d /= f * f;
            s *= f;
        }
        f += 1;
    }
    (s, d)
}

/// Exact Gaussian elimination on `π(P − I) = 0` with the last equation
/// replaced by `Σπ = 1`.
fn stationary(p: &[Vec<QuadraticReal>]) -> Result<Vec<QuadraticReal>> {
    let n = p.len();
    // Row j of the system: Σ_i π_i (P_ij − δ_ij) = 0.
    let mut m: Vec<Vec<QuadraticReal>> = (0..n)
        .map(|j| {
            let mut row: Vec<QuadraticReal> = (0..n)
                .map(|i| {
                    if i == j {
                        &p[i][j] - &QuadraticReal::one()
                    } else {
                        p[i][j].clone()
                    }
                })
                .collect();
            row.push(QuadraticReal::zero());
            row
        })
        .collect();
    m[n - 1] = vec![QuadraticReal::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::PreconditionFailed("stationary vector is not unique".into()))?;
        m.swap(col, pivot);
        let inv = &QuadraticReal::one() / &m[col][col];
        for k in col..=n {
            m[col][k] = &m[col][k] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for k in col..=n {
                    m[r][k] = &m[r][k] - &(&f * &m[col][k]);
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n].clone()).collect())
}

impl Measure for MarkovMeasure {
    fn alphabet_size(&self) -> usize {
        self.p.len()
    }

    fn cylinder_mass(&self, word: &[Symbol]) -> Result<QuadraticReal> {
        Word::from(word).check_alphabet(self.p.len())?;
        let Some((&first, rest)) = word.split_first() else {
            return Ok(QuadraticReal::one());
        };
        let mut mass = self.pi[first as usize].clone();
        let mut prev = first as usize;
        for &s in rest {
            if mass.is_zero() {
                break;
            }
            mass = &mass * &self.p[prev][s as usize];
            prev = s as usize;
        }
        Ok(mass)
    }

    fn cylinder_mass_f64(&self, word: &[Symbol]) -> Result<f64> {
        Word::from(word).check_alphabet(self.p.len())?;
        let Some((&first, rest)) = word.split_first() else {
            return Ok(1.0);
        };
        let mut mass = self.pi_f64[first as usize];
        let mut prev = first as usize;
        for &s in rest {
            mass *= self.p_f64[prev][s as usize];
            prev = s as usize;
        }
        Ok(mass)
    }

    fn block_distribution(&self, n: usize) -> Result<Vec<(Word, f64)>> {
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(n);
        for s in 0..self.states() {
            if self.pi_f64[s] > 0.0 && n > 0 {
                word.push(s as Symbol);
                self.extend(&mut word, self.pi_f64[s], n, &mut out);
                word.pop();
            }
        }
        if n == 0 {
            out.push((Word::default(), 1.0));
        }
        Ok(out)
    }
}

impl MarkovMeasure {
    fn extend(&self, word: &mut Vec<Symbol>, mass: f64, n: usize, out: &mut Vec<(Word, f64)>) {
        if word.len() == n {
            out.push((Word(word.clone()), mass));
            return;
        }
        let last = *word.last().expect("nonempty") as usize;
        for (j, &pj) in self.p_f64[last].iter().enumerate() {
            if pj > 0.0 {
                word.push(j as Symbol);
                self.extend(word, mass * pj, n, out);
                word.pop();
            }
        }
    }
}

/// JSON description of a measure; entries are strings such as `"1/3"` or
/// `"-1/2+1/2√5"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureSpec {
    Markov {
        #[serde(rename = "P")]
        p: Vec<Vec<String>>,
        #[serde(default)]
        pi: Option<Vec<String>>,
    },
}
