//! Subshifts of finite type, compiled to an essential vertex shift.
//!
//! A forbidden-word list of maximal length `m + 1` is recoded as a vertex
//! shift on admissible `m`-words (the higher-block presentation); adjacency
//! matrix input is the `m = 1` case. Vertices that cannot be continued in
//! both directions are pruned, so every vertex occurs in a bi-infinite point
//! and path counts are exact language counts.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::symbolic::word::{contains_factor, Symbol, Word};

#[derive(Clone, Debug)]
pub struct Sft {
    alphabet: usize,
    forbidden: Vec<Word>,
    memory: usize,
    vertices: Vec<Word>,
    index: HashMap<Word, usize>,
    succ: Vec<Vec<usize>>,
}

impl Sft {
    pub fn from_forbidden(alphabet: usize, forbidden: Vec<Word>) -> Result<Self> {
        if alphabet == 0 || alphabet > usize::from(Symbol::MAX) {
            return Err(Error::Parse(format!("bad alphabet size {alphabet}")));
        }
        for w in &forbidden {
            w.check_alphabet(alphabet)?;
            if w.is_empty() {
                return Err(Error::Parse("empty forbidden word".into()));
            }
        }
        let memory = forbidden.iter().map(|w| w.len()).max().unwrap_or(1).saturating_sub(1).max(1);
        let clean = |w: &[Symbol]| !forbidden.iter().any(|f| contains_factor(w, f));

        let mut vertices = Vec::new();
        let mut buf = vec![0 as Symbol; memory];
        enumerate_words(alphabet, &mut buf, 0, &mut |w| {
            if clean(w) {
                vertices.push(Word::from(w));
            }
        });
        let index: HashMap<Word, usize> =
            vertices.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut succ = vec![Vec::new(); vertices.len()];
        for (i, v) in vertices.iter().enumerate() {
            for a in 0..alphabet as Symbol {
                let mut ext = v.0.clone();
                ext.push(a);
                if clean(&ext) {
                    if let Some(&j) = index.get(&ext[1..]) {
                        succ[i].push(j);
                    }
                }
            }
        }
        let mut sft = Self {
            alphabet,
            forbidden,
            memory,
            vertices,
            index,
            succ,
        };
        sft.prune();
        Ok(sft)
    }

    /// Memory-1 shift from a 0/1 transition matrix over the alphabet.
    pub fn from_adjacency(matrix: &[Vec<u8>]) -> Result<Self> {
        let n = matrix.len();
        let mut forbidden = Vec::new();
        for (a, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse("adjacency matrix is not square".into()));
            }
            for (b, &e) in row.iter().enumerate() {
                match e {
                    0 => forbidden.push(Word(vec![a as Symbol, b as Symbol])),
                    1 => {}
                    _ => return Err(Error::Parse("adjacency entries must be 0 or 1".into())),
                }
            }
        }
        let mut sft = Self::from_forbidden(n, forbidden)?;
        sft.memory = 1;
        Ok(sft)
    }

    pub fn full_shift(alphabet: usize) -> Self {
        Self::from_forbidden(alphabet, Vec::new()).expect("full shift")
    }

    /// Binary shift forbidding `11`.
    pub fn golden_mean() -> Self {
        Self::from_forbidden(2, vec![Word(vec![1, 1])]).expect("golden mean shift")
    }

    fn prune(&mut self) {
        let n = self.vertices.len();
        let mut alive = vec![true; n];
        loop {
            let mut indeg = vec![0usize; n];
            for i in (0..n).filter(|&i| alive[i]) {
                for &j in &self.succ[i] {
                    if alive[j] {
                        indeg[j] += 1;
                    }
                }
            }
            let mut changed = false;
            for i in 0..n {
                let outdeg = self.succ[i].iter().filter(|&&j| alive[j]).count();
                if alive[i] && (indeg[i] == 0 || outdeg == 0) {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let remap: Vec<Option<usize>> = {
            let mut next = 0;
            alive
                .iter()
                .map(|&a| {
                    a.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let vertices: Vec<Word> = self
            .vertices
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(v, _)| v.clone())
            .collect();
        let succ = (0..n)
            .filter(|&i| alive[i])
            .map(|i| self.succ[i].iter().filter_map(|&j| remap[j]).collect())
            .collect();
        self.index = vertices.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        self.vertices = vertices;
        self.succ = succ;
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn forbidden(&self) -> &[Word] {
        &self.forbidden
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn vertices(&self) -> &[Word] {
        &self.vertices
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// 0/1 transfer matrix of the vertex shift.
    pub fn transfer_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.vertices.len();
        let mut a = vec![vec![0u64; n]; n];
        for (i, s) in self.succ.iter().enumerate() {
            for &j in s {
                a[i][j] = 1;
            }
        }
        a
    }

    pub fn admissible(&self, word: &[Symbol]) -> bool {
        let m = self.memory;
        if word.len() < m {
            return self.vertices.iter().any(|v| v.starts_with(word));
        }
        let mut prev: Option<usize> = None;
        for window in word.windows(m) {
            let Some(&v) = self.index.get(window) else {
                return false;
            };
            if let Some(p) = prev {
                if !self.succ[p].contains(&v) {
                    return false;
                }
            }
            prev = Some(v);
        }
        true
    }

    pub fn language(&self, n: usize) -> Vec<Word> {
        let m = self.memory;
        if n < m {
            let set: BTreeSet<Word> =
                self.vertices.iter().map(|v| Word::from(&v[..n])).collect();
            return set.into_iter().collect();
        }
        let mut out = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let mut word = v.0.clone();
            self.extend_paths(i, n - m, &mut word, &mut out);
        }
        out.sort();
        out
    }

    fn extend_paths(&self, v: usize, remaining: usize, word: &mut Vec<Symbol>, out: &mut Vec<Word>) {
        if remaining == 0 {
            out.push(Word(word.clone()));
            return;
        }
        for &j in &self.succ[v] {
            word.push(*self.vertices[j].last().expect("nonempty vertex"));
            self.extend_paths(j, remaining - 1, word, out);
            word.pop();
        }
    }

    /// `|language(n)|` through matrix powers (sum of entries of `A^(n−m)`).
    pub fn count_words(&self, n: usize) -> u128 {
        let m = self.memory;
        if n < m {
            return self.language(n).len() as u128;
        }
        let nv = self.vertices.len();
        let mut counts = vec![1u128; nv];
        for _ in 0..(n - m) {
            let mut next = vec![0u128; nv];
            for i in 0..nv {
                next[i] = self.succ[i].iter().map(|&j| counts[j]).sum();
            }
            counts = next;
        }
        counts.iter().sum()
    }

    /// Perron root of the transfer matrix, by power iteration on `A + I`
    /// (the shift makes imprimitive components converge).
    pub fn perron_root(&self) -> Result<f64> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(Error::EmptySubshift);
        }
        let mut v = vec![1.0f64; n];
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let mut w = v.clone();
            for i in 0..n {
                w[i] += self.succ[i].iter().map(|&j| v[j]).sum::<f64>();
            }
            let norm: f64 = w.iter().sum();
            let next = norm / v.iter().sum::<f64>() - 1.0;
            for x in &mut w {
                *x /= norm;
            }
            v = w;
            if (next - lambda).abs() < 1e-15 * next.abs().max(1.0) {
                return Ok(next);
            }
            lambda = next;
        }
        Ok(lambda)
    }

    /// Points with `σⁿx = x`, one per closed walk of length `n`.
    pub fn periodic_words(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut path = Vec::with_capacity(n);
        for start in 0..self.vertices.len() {
            path.clear();
            path.push(start);
            self.closed_walks(start, n, &mut path, &mut out);
        }
        out.sort();
        out
    }

    fn closed_walks(&self, start: usize, n: usize, path: &mut Vec<usize>, out: &mut Vec<Word>) {
        let here = *path.last().expect("nonempty path");
        if path.len() == n {
            if self.succ[here].contains(&start) {
                out.push(Word(path.iter().map(|&v| self.vertices[v][0]).collect()));
            }
            return;
        }
        for &j in &self.succ[here] {
            path.push(j);
            self.closed_walks(start, n, path, out);
            path.pop();
        }
    }

    /// `trace(Aⁿ)`.
    pub fn trace_power(&self, n: usize) -> u128 {
        let nv = self.vertices.len();
        let mut total = 0u128;
        for start in 0..nv {
            let mut counts = vec![0u128; nv];
            counts[start] = 1;
            for _ in 0..n {
                let mut next = vec![0u128; nv];
                for i in 0..nv {
                    if counts[i] > 0 {
                        for &j in &self.succ[i] {
                            next[j] += counts[i];
                        }
                    }
                }
                counts = next;
            }
            total += counts[start];
        }
        total
    }
}

/// Calls `f` on every word of length `buf.len()` in lexicographic order.
pub(crate) fn enumerate_words(alphabet: usize, buf: &mut [Symbol], pos: usize, f: &mut impl FnMut(&[Symbol])) {
    if pos == buf.len() {
        f(buf);
        return;
    }
    for a in 0..alphabet as Symbol {
        buf[pos] = a;
        enumerate_words(alphabet, buf, pos + 1, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_counts_are_fibonacci() {
        let g = Sft::golden_mean();
        let fib = [2u128, 3, 5, 8, 13, 21, 34, 55];
        for (n, &f) in (1..=8).zip(&fib) {
            assert_eq!(g.language(n).len() as u128, f);
            assert_eq!(g.count_words(n), f);
        }
    }

    #[test]
    fn higher_block_compilation() {
        // Forbid 000 and 111: memory 2, vertices are the four 2-words.
        let s = Sft::from_forbidden(2, vec!["000".parse().unwrap(), "111".parse().unwrap()]).unwrap();
        assert_eq!(s.memory(), 2);
        assert_eq!(s.vertices().len(), 4);
        assert!(s.admissible(&[0, 0, 1, 1, 0]));
        assert!(!s.admissible(&[0, 1, 1, 1]));
        assert_eq!(s.periodic_words(1).len(), 0);
        assert_eq!(s.trace_power(2), s.periodic_words(2).len() as u128);
    }

    #[test]
    fn pruning_removes_dead_ends() {
        // 1 can only be followed by 2 and 2 by nothing: only 0^∞ survives.
        let s = Sft::from_adjacency(&[vec![1, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        assert_eq!(s.vertices().len(), 1);
        assert!(!s.admissible(&[0, 1]));
        assert!((s.perron_root().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_shift_has_no_perron_root() {
        let s = Sft::from_adjacency(&[vec![0, 1], vec![0, 0]]).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.perron_root(), Err(Error::EmptySubshift));
    }
}
