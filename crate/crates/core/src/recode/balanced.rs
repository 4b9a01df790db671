use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{Symbol, Word};

/// Binary words of a fixed length and weight, optionally pinned to start
/// and end with 1 and to avoid runs of `K` or more 0s, ranked in
/// lexicographic order (`0 < 1`).
///
/// Counts saturate at `u128::MAX`; ranks are exact below that.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedCode {
    pub length: usize,
    pub ones: usize,
    pub first_last_one: bool,
    pub max_zero_run: Option<usize>,
    #[serde(skip)]
    table: Vec<u128>,
}

impl BalancedCode {
    /// All words of length `2k` with exactly `k` ones.
    pub fn balanced(k: usize) -> Self {
        Self::new(2 * k, k, false, None)
    }

    /// `ones` ones among `length` symbols; with `max_zero_run = Some(K)` no
    /// run of `K` zeros may occur.
    pub fn new(length: usize, ones: usize, first_last_one: bool, max_zero_run: Option<usize>) -> Self {
        let mut code = Self {
            length,
            ones,
            first_last_one,
            max_zero_run,
            table: Vec::new(),
        };
        code.fill();
        code
    }

    fn runs(&self) -> usize {
        self.max_zero_run.unwrap_or(1).max(1)
    }

    fn idx(&self, pos: usize, ones_left: usize, run: usize) -> usize {
        (pos * (self.ones + 1) + ones_left) * self.runs() + run
    }

    fn allowed(&self, pos: usize, symbol: Symbol, run: usize) -> bool {
        if self.first_last_one && (pos == 0 || pos + 1 == self.length) && symbol == 0 {
            return false;
        }
        match (symbol, self.max_zero_run) {
            (0, Some(k)) => run + 1 < k,
            _ => true,
        }
    }

    fn next_run(&self, symbol: Symbol, run: usize) -> usize {
        match (symbol, self.max_zero_run) {
            (0, Some(_)) => run + 1,
            _ => 0,
        }
    }

    // table[pos][ones_left][run]: completions of positions pos.. .
    fn fill(&mut self) {
        let runs = self.runs();
        self.table = vec![0; (self.length + 1) * (self.ones + 1) * runs];
        for run in 0..runs {
            let i = self.idx(self.length, 0, run);
            self.table[i] = 1;
        }
        for pos in (0..self.length).rev() {
            for ones_left in 0..=self.ones {
                for run in 0..runs {
                    let mut c: u128 = 0;
                    if self.allowed(pos, 0, run) {
                        c = c.saturating_add(self.table[self.idx(pos + 1, ones_left, self.next_run(0, run))]);
                    }
                    if ones_left > 0 && self.allowed(pos, 1, run) {
                        c = c.saturating_add(self.table[self.idx(pos + 1, ones_left - 1, 0)]);
                    }
                    let i = self.idx(pos, ones_left, run);
                    self.table[i] = c;
                }
            }
        }
    }

    pub fn count(&self) -> u128 {
        self.table[self.idx(0, self.ones, 0)]
    }

    pub fn satisfies(&self, word: &[Symbol]) -> bool {
        if word.len() != self.length || word.iter().filter(|&&s| s == 1).count() != self.ones {
            return false;
        }
        let mut run = 0;
        for (pos, &s) in word.iter().enumerate() {
            if s > 1 || !self.allowed(pos, s, run) {
                return false;
            }
            run = self.next_run(s, run);
        }
        true
    }

    pub fn unrank(&self, index: u128) -> Result<Word> {
        let count = self.count();
        if index >= count {
            return Err(Error::IndexOutOfRange { index, count });
        }
        let mut rest = index;
        let (mut ones_left, mut run) = (self.ones, 0);
        let mut out = Vec::with_capacity(self.length);
        for pos in 0..self.length {
            let zeros = if self.allowed(pos, 0, run) {
                self.table[self.idx(pos + 1, ones_left, self.next_run(0, run))]
            } else {
                0
            };
            if rest < zeros {
                out.push(0);
                run = self.next_run(0, run);
            } else {
                rest -= zeros;
                out.push(1);
                ones_left -= 1;
                run = 0;
            }
        }
        Ok(Word(out))
    }

    pub fn rank(&self, word: &[Symbol]) -> Result<u128> {
        if !self.satisfies(word) {
            return Err(Error::ConstraintViolated(format!("{} is not a codeword", Word::from(word))));
        }
        let (mut ones_left, mut run) = (self.ones, 0);
        let mut index: u128 = 0;
        for (pos, &s) in word.iter().enumerate() {
            if s == 1 {
                if self.allowed(pos, 0, run) {
                    let zeros = self.table[self.idx(pos + 1, ones_left, self.next_run(0, run))];
                    index = index
                        .checked_add(zeros)
                        .filter(|&i| i < u128::MAX)
                        .ok_or(Error::IndexOutOfRange {
                            index: u128::MAX,
                            count: u128::MAX,
                        })?;
                }
                ones_left -= 1;
                run = 0;
            } else {
                run = self.next_run(0, run);
            }
        }
        Ok(index)
    }
}
