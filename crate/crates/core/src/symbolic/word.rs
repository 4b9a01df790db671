use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Alphabet index, 0-based.
pub type Symbol = u8;

/// A finite word over a subshift alphabet.
///
/// Displayed (and serialized) as a string of digits, so alphabets are
/// limited to ten symbols in text form; larger alphabets fall back to
/// lowercase letters.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn repeat(symbol: Symbol, n: usize) -> Self {
        Self(vec![symbol; n])
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&s| usize::from(s) >= alphabet) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, alphabet }),
            None => Ok(()),
        }
    }

    /// Starting positions of `pattern` in `self`, overlaps included.
    pub fn occurrences(&self, pattern: &[Symbol]) -> Vec<usize> {
        occurrences(&self.0, pattern)
    }

    pub fn contains_factor(&self, pattern: &[Symbol]) -> bool {
        contains_factor(&self.0, pattern)
    }

    pub fn concat(parts: &[&[Symbol]]) -> Self {
        Self(parts.concat())
    }
}

pub fn occurrences(text: &[Symbol], pattern: &[Symbol]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > text.len() {
        return Vec::new();
    }
    text.windows(pattern.len())
        .enumerate()
        .filter(|(_, w)| *w == pattern)
        .map(|(i, _)| i)
        .collect()
}

pub fn contains_factor(text: &[Symbol], pattern: &[Symbol]) -> bool {
    pattern.is_empty() || text.windows(pattern.len()).any(|w| w == pattern)
}

fn symbol_char(s: Symbol) -> char {
    if s < 10 {
        char::from(b'0' + s)
    } else {
        char::from(b'a' + (s - 10))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&c| symbol_char(c)).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0'..='9' => Ok(c as u8 - b'0'),
                'a'..='z' => Ok(c as u8 - b'a' + 10),
                _ => Err(Error::Parse(format!("bad symbol {c:?} in word {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Deref for Word {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl DerefMut for Word {
    fn deref_mut(&mut self) -> &mut [Symbol] {
        &mut self.0
    }
}

impl std::borrow::Borrow<[Symbol]> for Word {
    fn borrow(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Self(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Self(v.to_vec())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `{x : x[anchor .. anchor + len) = word}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cylinder {
    pub anchor: i64,
    pub word: Word,
}

impl Cylinder {
    pub fn new(anchor: i64, word: Word) -> Self {
        Self { anchor, word }
    }

    pub fn at_zero(word: Word) -> Self {
        Self { anchor: 0, word }
    }

    pub fn end(&self) -> i64 {
        self.anchor + self.word.len() as i64
    }

    /// Combine two cylinder constraints.
    pub fn meet(&self, other: &Cylinder) -> CylinderMeet {
        let lo = self.anchor.min(other.anchor);
        let hi = self.end().max(other.end());
        let mut merged: Vec<Option<Symbol>> = vec![None; (hi - lo) as usize];
        for c in [self, other] {
            for (i, &s) in c.word.iter().enumerate() {
                let slot = &mut merged[(c.anchor - lo) as usize + i];
                match slot {
                    Some(t) if *t != s => return CylinderMeet::Disjoint,
                    _ => *slot = Some(s),
                }
            }
        }
        match merged.into_iter().collect::<Option<Vec<_>>>() {
            Some(w) => CylinderMeet::Merged(Cylinder::new(lo, Word(w))),
            None => CylinderMeet::Gapped,
        }
    }
}

/// Result of [`Cylinder::meet`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CylinderMeet {
    /// The words disagree on a shared coordinate.
    Disjoint,
    /// Overlapping or adjacent: the intersection is this single cylinder.
    Merged(Cylinder),
    /// Separated by free coordinates; not representable as one word.
    Gapped,
}
