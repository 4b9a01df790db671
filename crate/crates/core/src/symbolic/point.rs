//! Points of subshifts, given by rules producing any finite window.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadratic::QuadraticReal;
use crate::symbolic::sturmian::Sturmian;
use crate::symbolic::word::{Symbol, Word};

/// A bi-infinite sequence, queried one window at a time.
///
/// Implementations must return consistent symbols for overlapping windows.
pub trait PointOracle: fmt::Debug + Send + Sync {
    /// `x[start .. end)`.
    fn block(&self, start: i64, end: i64) -> Result<Word>;

    fn symbol(&self, i: i64) -> Result<Symbol> {
        Ok(self.block(i, i + 1)?[0])
    }
}

pub type SharedPoint = Arc<dyn PointOracle>;

/// `w^∞` with `x[0 .. len) = w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicPoint {
    word: Word,
}

impl PeriodicPoint {
    pub fn new(word: Word) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::Parse("periodic point needs a nonempty word".into()));
        }
        Ok(Self { word })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    /// Least `p` with `σᵖx = x`.
    pub fn minimal_period(&self) -> usize {
        let n = self.word.len();
        (1..=n)
            .find(|&p| n.is_multiple_of(p) && (0..n).all(|i| self.word[i] == self.word[i % p]))
            .unwrap_or(n)
    }

    /// Lexicographically least rotation of the minimal-period word; equal
    /// for all points on one orbit.
    pub fn canonical_orbit_word(&self) -> Word {
        let p = self.minimal_period();
        let base = &self.word[..p];
        (0..p)
            .map(|r| Word([&base[r..], &base[..r]].concat()))
            .min()
            .expect("nonempty word")
    }
}

impl PointOracle for PeriodicPoint {
    fn block(&self, start: i64, end: i64) -> Result<Word> {
        let n = self.word.len() as i64;
        Ok(Word(
            (start..end).map(|i| self.word[i.rem_euclid(n) as usize]).collect(),
        ))
    }
}

/// Coding of the rotation orbit of `phase`.
#[derive(Clone, Debug, PartialEq)]
pub struct SturmianPoint {
    system: Sturmian,
    phase: QuadraticReal,
}

impl SturmianPoint {
    pub fn new(system: Sturmian, phase: QuadraticReal) -> Self {
        let phase = phase.fract();
        Self { system, phase }
    }

    pub fn phase(&self) -> &QuadraticReal {
        &self.phase
    }

    pub fn system(&self) -> &Sturmian {
        &self.system
    }
}

impl PointOracle for SturmianPoint {
    fn block(&self, start: i64, end: i64) -> Result<Word> {
        Ok(self.system.code(&self.phase, start, end))
    }
}

/// A finite orbit segment placed at coordinates `[origin, origin + len)`;
/// windows reaching outside it fail with [`Error::HorizonExceeded`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplePath {
    origin: i64,
    word: Word,
}

impl SamplePath {
    pub fn new(origin: i64, word: Word) -> Self {
        Self { origin, word }
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn end(&self) -> i64 {
        self.origin + self.word.len() as i64
    }

    pub fn word(&self) -> &Word {
        &self.word
    }
}

impl PointOracle for SamplePath {
    fn block(&self, start: i64, end: i64) -> Result<Word> {
        if start < self.origin || end > self.end() {
            return Err(Error::HorizonExceeded { start, end });
        }
        let a = (start - self.origin) as usize;
        let b = (end - self.origin).max(start - self.origin) as usize;
        Ok(Word::from(&self.word[a..b]))
    }
}
