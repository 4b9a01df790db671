use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::quadratic::QuadraticReal;
use crate::symbolic::{PeriodicPoint, PointOracle, Sturmian, Symbol, Word};

/// Block frequencies along an orbit.
///
/// For a periodic point the frequencies are exact and define the invariant
/// periodic measure; for a finite segment they are the frequencies of
/// windows fully inside the segment.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    alphabet: usize,
    source: Source,
    max_block: usize,
}

#[derive(Clone, Debug)]
enum Source {
    Periodic(PeriodicPoint),
    Segment { block: Word },
}

impl EmpiricalMeasure {
    /// The measure equidistributed on the orbit of `point`.
    pub fn periodic(alphabet: usize, point: PeriodicPoint) -> Result<Self> {
        point.word().check_alphabet(alphabet)?;
        Ok(Self {
            alphabet,
            source: Source::Periodic(point),
            max_block: usize::MAX,
        })
    }

    /// Frequencies along `x[start .. start + length)`, for word lengths up
    /// to `max_block`.
    pub fn segment(
        alphabet: usize,
        point: &dyn PointOracle,
        start: i64,
        length: usize,
        max_block: usize,
    ) -> Result<Self> {
        let block = point.block(start, start + length as i64)?;
        block.check_alphabet(alphabet)?;
        Ok(Self {
            alphabet,
            source: Source::Segment { block },
            max_block,
        })
    }

    pub fn source_length(&self) -> Option<usize> {
        match &self.source {
            Source::Periodic(_) => None,
            Source::Segment { block } => Some(block.len()),
        }
    }

    pub fn periodic_point(&self) -> Option<&PeriodicPoint> {
        match &self.source {
            Source::Periodic(p) => Some(p),
            Source::Segment { .. } => None,
        }
    }

    fn count(&self, word: &[Symbol]) -> (usize, usize) {
        match &self.source {
            Source::Periodic(p) => {
                let n = p.period();
                let text = p
                    .block(0, (n + word.len()).saturating_sub(1) as i64)
                    .expect("periodic points are total");
                (text.occurrences(word).len(), n)
            }
            Source::Segment { block } => {
                let windows = (block.len() + 1).saturating_sub(word.len());
                (block.occurrences(word).len(), windows)
            }
        }
    }
}

impl Measure for EmpiricalMeasure {
    fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    fn max_block(&self) -> Option<usize> {
        (self.max_block != usize::MAX).then_some(self.max_block)
    }

    fn data_length(&self) -> Option<usize> {
        self.source_length()
    }

    fn cylinder_mass(&self, word: &[Symbol]) -> Result<QuadraticReal> {
        Word::from(word).check_alphabet(self.alphabet)?;
        if word.is_empty() {
            return Ok(QuadraticReal::one());
        }
        if word.len() > self.max_block {
            return Err(Error::DepthExceeded {
                requested: word.len(),
                certified: self.max_block,
            });
        }
        let (hits, total) = self.count(word);
        if total == 0 {
            return Err(Error::InsufficientData(format!(
                "segment shorter than the word {}",
                Word::from(word)
            )));
        }
        Ok(QuadraticReal::from_ratio(hits as i64, total as i64))
    }

    fn block_distribution(&self, n: usize) -> Result<Vec<(Word, f64)>> {
        if n > self.max_block {
            return Err(Error::DepthExceeded {
                requested: n,
                certified: self.max_block,
            });
        }
        let (text, total) = match &self.source {
            Source::Periodic(p) => {
                let len = p.period();
                (p.block(0, (len + n).saturating_sub(1) as i64)?, len)
            }
            Source::Segment { block } => (block.clone(), (block.len() + 1).saturating_sub(n)),
        };
        if total == 0 {
            return Err(Error::InsufficientData("segment shorter than block length".into()));
        }
        let mut counts = std::collections::BTreeMap::<Word, usize>::new();
        for w in text.windows(n.max(1)).take(total) {
            *counts.entry(Word::from(&w[..n])).or_default() += 1;
        }
        Ok(counts
            .into_iter()
            .map(|(w, c)| (w, c as f64 / total as f64))
            .collect())
    }
}

/// The unique invariant measure of a Sturmian subshift (Lebesgue measure
/// on phases).
#[derive(Clone, Debug)]
pub struct SturmianMeasure {
    system: Sturmian,
}

impl SturmianMeasure {
    pub fn new(system: Sturmian) -> Self {
        Self { system }
    }
}

impl Measure for SturmianMeasure {
    fn alphabet_size(&self) -> usize {
        2
    }

    fn cylinder_mass(&self, word: &[Symbol]) -> Result<QuadraticReal> {
        Word::from(word).check_alphabet(2)?;
        Ok(self.system.cylinder_mass(word))
    }

    fn block_distribution(&self, n: usize) -> Result<Vec<(Word, f64)>> {
        Ok(self
            .system
            .phase_intervals(n)
            .into_iter()
            .map(|iv| {
                let m = iv.length().to_f64();
                (iv.word, m)
            })
            .collect())
    }
}

/// Convex combination `Σ t_i μ_i` with exact weights summing to 1.
#[derive(Clone, Debug)]
pub struct Mixture {
    parts: Vec<(QuadraticReal, Arc<dyn Measure>)>,
}

impl Mixture {
    pub fn new(parts: Vec<(QuadraticReal, Arc<dyn Measure>)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parse("empty mixture".into()));
        }
        if parts.iter().any(|(t, _)| t.is_negative())
            || parts.iter().map(|(t, _)| t).sum::<QuadraticReal>() != QuadraticReal::one()
        {
            return Err(Error::PreconditionFailed("mixture weights must be a probability vector".into()));
        }
        let a = parts[0].1.alphabet_size();
        if parts.iter().any(|(_, m)| m.alphabet_size() != a) {
            return Err(Error::PreconditionFailed("mixture parts disagree on alphabet".into()));
        }
        Ok(Self { parts })
    }
}

impl Measure for Mixture {
    fn alphabet_size(&self) -> usize {
        self.parts[0].1.alphabet_size()
    }

    fn max_block(&self) -> Option<usize> {
        self.parts.iter().filter_map(|(_, m)| m.max_block()).min()
    }

    fn cylinder_mass(&self, word: &[Symbol]) -> Result<QuadraticReal> {
        let mut total = QuadraticReal::zero();
        for (t, m) in &self.parts {
            total = total.try_add(&t.try_mul(&m.cylinder_mass(word)?)?)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::block_entropy;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn periodic_measure_is_exact() {
        let p = PeriodicPoint::new(w("01")).unwrap();
        let m = EmpiricalMeasure::periodic(2, p).unwrap();
        assert_eq!(m.cylinder_mass(&w("01")).unwrap(), QuadraticReal::from_ratio(1, 2));
        assert_eq!(m.cylinder_mass(&w("00")).unwrap(), QuadraticReal::zero());
        let h3 = block_entropy(&m, 3).unwrap();
        assert!((h3 - 2f64.ln() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_frequencies_are_shift_invariant() {
        let p = PeriodicPoint::new(w("00101")).unwrap();
        let m = EmpiricalMeasure::periodic(2, p).unwrap();
        for u in ["0", "1", "00", "01", "10", "010", "0010"] {
            let u = w(u);
            let left: QuadraticReal = (0..2u8)
                .map(|a| m.cylinder_mass(&[&[a][..], &u[..]].concat()).unwrap())
                .sum();
            let right: QuadraticReal = (0..2u8)
                .map(|a| m.cylinder_mass(&[&u[..], &[a][..]].concat()).unwrap())
                .sum();
            let mu = m.cylinder_mass(&u).unwrap();
            assert_eq!(left, mu);
            assert_eq!(right, mu);
        }
    }

    #[test]
    fn segment_needs_enough_data() {
        let p = crate::symbolic::SamplePath::new(0, w("0110100110"));
        let m = EmpiricalMeasure::segment(2, &p, 0, 10, 4).unwrap();
        assert_eq!(m.cylinder_mass(&w("1")).unwrap(), QuadraticReal::from_ratio(1, 2));
        assert!(matches!(block_entropy(&m, 2), Err(Error::InsufficientData(_))));
        assert!(block_entropy(&m, 1).is_ok());
    }

    #[test]
    fn mixture_is_linear() {
        let a: Arc<dyn Measure> =
            Arc::new(EmpiricalMeasure::periodic(2, PeriodicPoint::new(w("0")).unwrap()).unwrap());
        let b: Arc<dyn Measure> =
            Arc::new(EmpiricalMeasure::periodic(2, PeriodicPoint::new(w("1")).unwrap()).unwrap());
        let m = Mixture::new(vec![
            (QuadraticReal::from_ratio(1, 3), a),
            (QuadraticReal::from_ratio(2, 3), b),
        ])
        .unwrap();
        assert_eq!(m.cylinder_mass(&w("1")).unwrap(), QuadraticReal::from_ratio(2, 3));
        assert_eq!(m.cylinder_mass(&w("01")).unwrap(), QuadraticReal::zero());
    }
}
