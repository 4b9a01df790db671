//! Shift-invariant measures behind one cylinder-mass interface, with block
//! entropies, integrals of locally constant functions and the distance `D`.

mod empirical;
mod markov;

use std::fmt;

use serde::Serialize;

pub use empirical::{EmpiricalMeasure, Mixture, SturmianMeasure};
pub use markov::{MarkovMeasure, MeasureSpec};
pub(crate) use markov::plogp;

use crate::error::{Error, Result};
use crate::quadratic::QuadraticReal;
use crate::symbolic::{Cylinder, Symbol, Word};

/// A shift-invariant probability measure, known through its cylinders.
pub trait Measure: fmt::Debug + Send + Sync {
    fn alphabet_size(&self) -> usize;

    /// `μ([w])` for the cylinder anchored at 0; by invariance this is the
    /// mass at every anchor.
    fn cylinder_mass(&self, word: &[Symbol]) -> Result<QuadraticReal>;

    fn cylinder_mass_f64(&self, word: &[Symbol]) -> Result<f64> {
        Ok(self.cylinder_mass(word)?.to_f64())
    }

    fn cylinder(&self, c: &Cylinder) -> Result<QuadraticReal> {
        self.cylinder_mass(&c.word)
    }

    /// Longest word length the measure can evaluate, if bounded.
    fn max_block(&self) -> Option<usize> {
        None
    }

    /// Length of the orbit segment behind an empirical measure.
    fn data_length(&self) -> Option<usize> {
        None
    }

    /// The words of length `n` with positive mass, with their masses.
    fn block_distribution(&self, n: usize) -> Result<Vec<(Word, f64)>> {
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(n);
        self.grow(&mut word, n, &mut out)?;
        Ok(out)
    }

    #[doc(hidden)]
    fn grow(&self, word: &mut Vec<Symbol>, n: usize, out: &mut Vec<(Word, f64)>) -> Result<()> {
        let mass = self.cylinder_mass_f64(word)?;
        if mass <= 0.0 {
            return Ok(());
        }
        if word.len() == n {
            out.push((Word(word.clone()), mass));
            return Ok(());
        }
        for a in 0..self.alphabet_size() as Symbol {
            word.push(a);
            self.grow(word, n, out)?;
            word.pop();
        }
        Ok(())
    }
}

/// `H_n = −Σ_{|w|=n} μ(w) log μ(w)`.
pub fn block_shannon(measure: &dyn Measure, n: usize) -> Result<f64> {
    if let Some(len) = measure.data_length() {
        if len < 10 * n {
            return Err(Error::InsufficientData(format!(
                "orbit segment of length {len} is shorter than 10·{n}"
            )));
        }
    }
    Ok(measure
        .block_distribution(n)?
        .iter()
        .map(|(_, m)| plogp(*m))
        .sum())
}

/// `(1/n)·H_n`.
pub fn block_entropy(measure: &dyn Measure, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::PreconditionFailed("block length must be positive".into()));
    }
    Ok(block_shannon(measure, n)? / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockEntropyRow {
    pub n: usize,
    pub h_n: f64,
    pub h_n_over_n: f64,
    /// `H_n − H_{n−1}`, with `H_0 = 0`.
    pub conditional: f64,
}

pub fn block_entropy_table(measure: &dyn Measure, max_n: usize) -> Result<Vec<BlockEntropyRow>> {
    let mut prev = 0.0;
    (1..=max_n)
        .map(|n| {
            let h = block_shannon(measure, n)?;
            let row = BlockEntropyRow {
                n,
                h_n: h,
                h_n_over_n: h / n as f64,
                conditional: h - prev,
            };
            prev = h;
            Ok(row)
        })
        .collect()
}

/// `Σ_{|w| = window} f(w)·μ(w)`, exact.
pub fn integrate_locally_constant(
    measure: &dyn Measure,
    window: usize,
    f: impl Fn(&[Symbol]) -> Result<QuadraticReal>,
) -> Result<QuadraticReal> {
    if let Some(max) = measure.max_block() {
        if window > max {
            return Err(Error::DepthExceeded {
                requested: window,
                certified: max,
            });
        }
    }
    let mut total = QuadraticReal::zero();
    let mut stack = vec![Vec::new()];
    while let Some(word) = stack.pop() {
        let mass = measure.cylinder_mass(&word)?;
        if mass.is_zero() {
            continue;
        }
        if word.len() == window {
            total = total.try_add(&f(&word)?.try_mul(&mass)?)?;
            continue;
        }
        for a in 0..measure.alphabet_size() as Symbol {
            let mut next = word.clone();
            next.push(a);
            stack.push(next);
        }
    }
    Ok(total)
}

/// Truncation depth of the distance `D`: the first `terms` indicator
/// functions of the enumeration are used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DMetricConfig {
    pub terms: usize,
}

impl DMetricConfig {
    pub fn new(terms: usize) -> Self {
        Self { terms }
    }

    /// Tail bound `Σ_{n > N} 2^{−n} ≤ 2^{1−N}`.
    pub fn error_bound(&self) -> f64 {
        2f64.powi(1 - self.terms as i32)
    }

    /// The indicator family: words of length 1, 2, … in lexicographic
    /// order within each length, each read as the cylinder anchored at 0.
    pub fn cylinders(&self, alphabet: usize) -> Vec<Word> {
        let mut out = Vec::with_capacity(self.terms);
        let mut len = 1;
        while out.len() < self.terms {
            let mut buf = vec![0; len];
            crate::symbolic::enumerate_words(alphabet, &mut buf, 0, &mut |w| {
                if out.len() < self.terms {
                    out.push(Word::from(w));
                }
            });
            len += 1;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DDistance {
    pub value: f64,
    #[serde(skip)]
    pub exact: QuadraticReal,
    pub error_bound: f64,
}

/// `Σ_{n ≤ N} |μ(f_n) − ν(f_n)| / 2ⁿ`.
pub fn d_distance(mu: &dyn Measure, nu: &dyn Measure, config: &DMetricConfig) -> Result<DDistance> {
    if mu.alphabet_size() != nu.alphabet_size() {
        return Err(Error::PreconditionFailed("measures live on different alphabets".into()));
    }
    let mut exact = QuadraticReal::zero();
    for (i, w) in config.cylinders(mu.alphabet_size()).iter().enumerate() {
        let diff = mu.cylinder_mass(w)?.try_sub(&nu.cylinder_mass(w)?)?.abs();
        let weight = QuadraticReal::rational(num_rational::BigRational::new(
            1.into(),
            num_bigint::BigInt::from(2u8).pow(i as u32 + 1),
        ));
        exact = exact.try_add(&diff.try_mul(&weight)?)?;
    }
    Ok(DDistance {
        value: exact.to_f64(),
        exact,
        error_bound: config.error_bound(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::symbolic::{PeriodicPoint, Sft, Sturmian};

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    fn dirac(w: &str) -> EmpiricalMeasure {
        EmpiricalMeasure::periodic(2, PeriodicPoint::new(w.parse().unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn integrals() {
        let b = MarkovMeasure::uniform_bernoulli(2);
        let f = |w: &[Symbol]| Ok(if w[0] == 0 { q("1") } else { q("2") });
        assert_eq!(integrate_locally_constant(&b, 1, f).unwrap(), q("3/2"));
        let g = |w: &[Symbol]| Ok(if w[0] == 0 { q("1") } else { q("√2") });
        assert_eq!(integrate_locally_constant(&b, 1, g).unwrap(), q("1/2+1/2√2"));
        let c = |_: &[Symbol]| Ok(q("7/3"));
        let parry = MarkovMeasure::parry(&Sft::golden_mean()).unwrap();
        assert_eq!(integrate_locally_constant(&parry, 3, c).unwrap(), q("7/3"));
    }

    #[test]
    fn markov_block_entropies() {
        let parry = MarkovMeasure::parry(&Sft::golden_mean()).unwrap();
        let h = parry.entropy_rate();
        let h10 = block_entropy(&parry, 10).unwrap();
        assert!(h10 >= h && h10 - h < 0.02);
        let rows = block_entropy_table(&parry, 15).unwrap();
        for pair in rows.windows(2).skip(1) {
            assert!(pair[1].conditional <= pair[0].conditional + 1e-12);
        }
        assert!((rows[14].conditional - h).abs() < 1e-9);
        let b = MarkovMeasure::uniform_bernoulli(2);
        assert!((block_entropy(&b, 7).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn d_distance_properties() {
        let cfg = DMetricConfig::new(8);
        let zero = dirac("0");
        let one = dirac("1");
        assert_eq!(d_distance(&zero, &zero, &cfg).unwrap().value, 0.0);
        let d = d_distance(&zero, &one, &cfg).unwrap();
        // [0], [1], [00], [11] differ by 1; f_1..f_8 = 0,1,00,01,10,11,000,001.
        let expected = 0.5 + 0.25 + 0.125 + 1.0 / 64.0 + 1.0 / 128.0;
        assert!((d.value - expected).abs() < 1e-15);
        let d16 = d_distance(&zero, &one, &DMetricConfig::new(16)).unwrap();
        assert!((d16.value - d.value).abs() <= 2f64.powi(-7));
        assert_eq!(d.error_bound, 2f64.powi(-7));
        let s = SturmianMeasure::new(Sturmian::silver());
        let parry = MarkovMeasure::parry(&Sft::golden_mean()).unwrap();
        assert!(d_distance(&s, &parry, &cfg).is_err(), "different fields do not mix");
    }

    #[test]
    fn d_distance_is_convex() {
        let cfg = DMetricConfig::new(10);
        let ms: Vec<Arc<dyn Measure>> = ["0", "01", "011", "0010"]
            .iter()
            .map(|w| Arc::new(dirac(w)) as Arc<dyn Measure>)
            .collect();
        let t = q("2/7");
        let s = &QuadraticReal::one() - &t;
        let mix = |a: &Arc<dyn Measure>, b: &Arc<dyn Measure>| {
            Mixture::new(vec![(t.clone(), a.clone()), (s.clone(), b.clone())]).unwrap()
        };
        let lhs = d_distance(&mix(&ms[0], &ms[1]), &mix(&ms[2], &ms[3]), &cfg).unwrap().exact;
        let rhs = &t * &d_distance(ms[0].as_ref(), ms[2].as_ref(), &cfg).unwrap().exact
            + &s * &d_distance(ms[1].as_ref(), ms[3].as_ref(), &cfg).unwrap().exact;
        assert!(lhs <= rhs);
    }
}
