//! Sturmian subshifts as codings of an irrational circle rotation.
//!
//! The point with phase `θ` has `x_i = 1` iff `{θ + iα}` lies in the
//! coding interval `[0, α)` (or `(0, α]` with [`Convention::RightClosed`]).
//! The phases whose length-`n` codings agree form intervals cut out by the
//! breakpoints `{−jα}`, `j = −1, …, n − 1`, so every cylinder is an exact
//! interval of the field and its Lebesgue mass is exact too.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadratic::QuadraticReal;
use crate::symbolic::word::{Symbol, Word};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `x_i = 1` iff `{θ + iα} ∈ [0, α)`.
    #[default]
    LeftClosed,
    /// `x_i = 1` iff `{θ + iα} ∈ (0, α]`.
    RightClosed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sturmian {
    alpha: QuadraticReal,
    convention: Convention,
}

/// One cylinder of the rotation coding: the phase interval and its word.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseInterval {
    pub lo: QuadraticReal,
    pub hi: QuadraticReal,
    pub word: Word,
}

impl PhaseInterval {
    pub fn length(&self) -> QuadraticReal {
        &self.hi - &self.lo
    }
}

impl Sturmian {
    pub fn new(alpha: QuadraticReal, convention: Convention) -> Result<Self> {
        if alpha.is_rational() {
            return Err(Error::PreconditionFailed(format!(
                "rotation number {alpha} must be irrational"
            )));
        }
        if !alpha.is_positive() || alpha >= QuadraticReal::one() {
            return Err(Error::PreconditionFailed(format!(
                "rotation number {alpha} must lie in (0, 1)"
            )));
        }
        Ok(Self { alpha, convention })
    }

    /// Rotation by `√2 − 1` with the left-closed convention.
    pub fn silver() -> Self {
        let alpha = QuadraticReal::from_parts((-1, 1), (1, 1), 2).expect("sqrt 2");
        Self::new(alpha, Convention::LeftClosed).expect("irrational in (0,1)")
    }

    pub fn alpha(&self) -> &QuadraticReal {
        &self.alpha
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Symbol of the coding at circle position `y ∈ [0, 1)`.
    pub fn symbol_at(&self, y: &QuadraticReal) -> Symbol {
        let inside = match self.convention {
            Convention::LeftClosed => y < &self.alpha,
            Convention::RightClosed => y.is_positive() && y <= &self.alpha,
        };
        Symbol::from(inside)
    }

    /// Coding of `{θ + iα}` for `i ∈ [start, end)`.
    ///
    /// Positions are located in floating point and recomputed exactly
    /// whenever they fall within `1e-9` of an endpoint of the coding
    /// interval, so the result is always exact.
    pub fn code(&self, phase: &QuadraticReal, start: i64, end: i64) -> Word {
        if end <= start {
            return Word::default();
        }
        let (pf, af) = (phase.to_f64(), self.alpha.to_f64());
        let out = (start..end)
            .map(|i| {
                let y = (pf + i as f64 * af).rem_euclid(1.0);
                let margin = y.min((y - af).abs()).min(1.0 - y);
                if i.unsigned_abs() < 1 << 20 && margin > 1e-9 {
                    Symbol::from(y < af)
                } else {
                    self.symbol_at(&(phase + &self.alpha.mul_int(i)).fract())
                }
            })
            .collect();
        Word(out)
    }

    /// Sorted distinct breakpoints of the length-`n` phase partition.
    fn breakpoints(&self, n: usize) -> Vec<QuadraticReal> {
        let mut pts: Vec<QuadraticReal> = (-1..n as i64)
            .map(|j| self.alpha.mul_int(-j).fract())
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        pts.dedup();
        pts
    }

    /// The `n + 1` phase intervals of length-`n` cylinders, in phase order.
    pub fn phase_intervals(&self, n: usize) -> Vec<PhaseInterval> {
        if n == 0 {
            return vec![PhaseInterval {
                lo: QuadraticReal::zero(),
                hi: QuadraticReal::one(),
                word: Word::default(),
            }];
        }
        let mut pts = self.breakpoints(n);
        pts.push(QuadraticReal::one());
        let half = QuadraticReal::from_ratio(1, 2);
        pts.windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) * &half;
                PhaseInterval {
                    lo: w[0].clone(),
                    hi: w[1].clone(),
                    word: self.code(&mid, 0, n as i64),
                }
            })
            .collect()
    }

    pub fn language(&self, n: usize) -> Vec<Word> {
        let mut words: Vec<Word> = self.phase_intervals(n).into_iter().map(|iv| iv.word).collect();
        words.sort();
        words
    }

    /// An orbit segment containing every admissible word of length `depth`,
    /// checked against [`language`](Self::language).
    pub fn cover(&self, depth: usize) -> Option<Word> {
        let depth = depth.max(1);
        let target: HashSet<Word> = self.language(depth).into_iter().collect();
        let mut len = 2 * depth;
        while len <= 256 * depth {
            let text = self.code(&QuadraticReal::zero(), 0, len as i64);
            let seen: HashSet<&[Symbol]> = text.windows(depth).collect();
            if seen.len() == target.len() && seen.iter().all(|w| target.contains(*w)) {
                return Some(text);
            }
            len *= 2;
        }
        None
    }

    /// Phase interval on which `x[0..len) = word`, if any.
    pub fn cylinder_interval(&self, word: &[Symbol]) -> Option<PhaseInterval> {
        let n = word.len();
        if n == 0 {
            return self.phase_intervals(0).pop();
        }
        let mut pts = self.breakpoints(n);
        pts.push(QuadraticReal::one());
        let half = QuadraticReal::from_ratio(1, 2);
        pts.windows(2).find_map(|w| {
            let mid = (&w[0] + &w[1]) * &half;
            (self.code(&mid, 0, n as i64).as_slice() == word).then(|| PhaseInterval {
                lo: w[0].clone(),
                hi: w[1].clone(),
                word: Word::from(word),
            })
        })
    }

    pub fn admissible(&self, word: &[Symbol]) -> bool {
        word.iter().all(|&s| s < 2) && self.cylinder_interval(word).is_some()
    }

    /// Lebesgue measure of `{θ : x[0..len) = word}`, the unique invariant
    /// measure of the cylinder.
    pub fn cylinder_mass(&self, word: &[Symbol]) -> QuadraticReal {
        self.cylinder_interval(word)
            .map(|iv| iv.length())
            .unwrap_or_else(QuadraticReal::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn complexity_is_n_plus_one() {
        let s = Sturmian::silver();
        for n in 1..=30 {
            assert_eq!(s.language(n).len(), n + 1, "n = {n}");
        }
    }

    #[test]
    fn ones_are_isolated() {
        // α < 1/2 so no two consecutive positions land in [0, α).
        let s = Sturmian::silver();
        assert!(!s.admissible(&w("11")));
        assert!(s.admissible(&w("00")));
        assert!(!s.admissible(&w("000")));
        assert!(s.admissible(&w("0101")) || s.admissible(&w("1010")));
    }

    #[test]
    fn masses_sum_to_one_and_match_frequency() {
        let s = Sturmian::silver();
        for n in 1..=8 {
            let total: QuadraticReal = s.phase_intervals(n).iter().map(|iv| iv.length()).sum();
            assert_eq!(total, QuadraticReal::one());
        }
        assert_eq!(s.cylinder_mass(&w("1")), s.alpha().clone());
    }

    #[test]
    fn conventions_agree_off_breakpoints() {
        let a = Sturmian::silver();
        let b = Sturmian::new(a.alpha().clone(), Convention::RightClosed).unwrap();
        assert_eq!(a.language(12), b.language(12));
        // At phase 0 they differ in the first symbol only.
        let z = QuadraticReal::zero();
        assert_eq!(a.code(&z, 0, 1), w("1"));
        assert_eq!(b.code(&z, 0, 1), w("0"));
    }

    #[test]
    fn fast_coding_matches_exact() {
        let s = Sturmian::silver();
        let phase = QuadraticReal::from_parts((1, 3), (-1, 7), 2).unwrap();
        let fast = s.code(&phase, -200, 200);
        let exact: Vec<Symbol> = (-200..200)
            .map(|i| s.symbol_at(&(&phase + &s.alpha().mul_int(i)).fract()))
            .collect();
        assert_eq!(fast.0, exact);
        // Phase 0 lands exactly on the left endpoint at i = 0.
        assert_eq!(s.code(&QuadraticReal::zero(), 0, 1), w("1"));
    }

    #[test]
    fn cover_contains_the_language() {
        let s = Sturmian::silver();
        let text = s.cover(40).unwrap();
        let seen: HashSet<&[Symbol]> = text.windows(40).collect();
        assert_eq!(seen.len(), 41);
    }

    #[test]
    fn rejects_rational_rotation() {
        assert!(Sturmian::new(QuadraticReal::from_ratio(1, 3), Convention::LeftClosed).is_err());
    }
}
