//! Subshifts known only through a finite language table.
//!
//! The table holds admissible words of the certified window length `W`;
//! shorter words are admissible iff they are factors of a table word, and
//! longer queries fail with [`Error::DepthExceeded`] instead of guessing.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::symbolic::word::{contains_factor, Symbol, Word};

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    alphabet: usize,
    window: usize,
    words: BTreeSet<Word>,
}

impl Generated {
    /// Table of `window`-words. Every word must have exactly that length.
    pub fn new(alphabet: usize, window: usize, words: impl IntoIterator<Item = Word>) -> Result<Self> {
        let words: BTreeSet<Word> = words.into_iter().collect();
        for w in &words {
            w.check_alphabet(alphabet)?;
            if w.len() != window {
                return Err(Error::Parse(format!(
                    "table word {w} has length {} instead of {window}",
                    w.len()
                )));
            }
        }
        if words.is_empty() {
            return Err(Error::EmptySubshift);
        }
        Ok(Self {
            alphabet,
            window,
            words,
        })
    }

    /// Table built from every `window`-factor of the given long blocks.
    pub fn from_blocks<'a>(
        alphabet: usize,
        window: usize,
        blocks: impl IntoIterator<Item = &'a Word>,
    ) -> Result<Self> {
        let mut words = BTreeSet::new();
        for b in blocks {
            if b.len() >= window {
                for f in b.windows(window) {
                    words.insert(Word::from(f));
                }
            }
        }
        Self::new(alphabet, window, words)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn table(&self) -> &BTreeSet<Word> {
        &self.words
    }

    fn check_depth(&self, n: usize) -> Result<()> {
        if n > self.window {
            Err(Error::DepthExceeded {
                requested: n,
                certified: self.window,
            })
        } else {
            Ok(())
        }
    }

    pub fn admissible(&self, word: &[Symbol]) -> Result<bool> {
        self.check_depth(word.len())?;
        let probe = Word::from(word);
        // Fast path: a table word starting with `word`.
        if let Some(next) = self.words.range(probe.clone()..).next() {
            if next.starts_with(word) {
                return Ok(true);
            }
        }
        Ok(self.words.iter().any(|t| contains_factor(t, word)))
    }

    pub fn language(&self, n: usize) -> Result<Vec<Word>> {
        self.check_depth(n)?;
        let set: BTreeSet<Word> = self
            .words
            .iter()
            .flat_map(|t| t.windows(n.max(1)).map(|f| Word::from(&f[..n])))
            .collect();
        Ok(set.into_iter().collect())
    }

    /// Words `w` of length `n` whose periodic extension is admissible up to
    /// the certified window.
    pub fn periodic_words(&self, n: usize) -> Vec<Word> {
        if n == 0 {
            return Vec::new();
        }
        let mut out = BTreeSet::new();
        for t in &self.words {
            for f in t.windows(n.min(self.window)) {
                if f.len() < n {
                    continue;
                }
                let ext: Vec<Symbol> = (0..self.window).map(|i| f[i % n]).collect();
                if self.words.contains(&Word(ext)) {
                    out.insert(Word::from(f));
                }
            }
        }
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn factor_queries_and_depth() {
        let block = w("0010010010");
        let g = Generated::from_blocks(2, 4, [&block]).unwrap();
        assert!(g.admissible(&w("100")).unwrap());
        assert!(!g.admissible(&w("11")).unwrap());
        assert_eq!(
            g.admissible(&w("00100")),
            Err(Error::DepthExceeded {
                requested: 5,
                certified: 4
            })
        );
        assert_eq!(g.language(2).unwrap(), vec![w("00"), w("01"), w("10")]);
        assert_eq!(g.periodic_words(3), vec![w("001"), w("010"), w("100")]);
    }
}
