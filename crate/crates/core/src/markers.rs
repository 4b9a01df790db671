//! Single-word Rokhlin markers with exact, scan-based certificates.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::quadratic::QuadraticReal;
use crate::symbolic::{occurrences, Subshift, Symbol, Word};

/// Occurrence statistics of a word across texts covering every admissible
/// word of a fixed length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnSpectrum {
    pub word: Word,
    pub depth: usize,
    /// Least gap between occurrence starts. `None` when no scanned word has
    /// two occurrences, so the least gap is at least `depth - len + 1`.
    pub min_return: Option<usize>,
    /// Largest gap between consecutive occurrence starts, `None` meaning
    /// unbounded (some scanned word omits `word`).
    pub max_gap: Option<usize>,
    /// Length of the longest admissible word avoiding `word`, if below `depth`.
    pub longest_avoiding: Option<usize>,
    /// Gap value to number of times it was seen.
    pub gaps: BTreeMap<usize, u64>,
    pub words_scanned: usize,
}

impl ReturnSpectrum {
    /// Every point meets the cylinder within `coverage + 1` shifts.
    pub fn coverage(&self) -> Option<usize> {
        self.longest_avoiding.map(|l| l + 1 - self.word.len())
    }

    /// Exact lower bound on the gap between occurrence starts.
    pub fn min_return_bound(&self) -> usize {
        let window = self.depth + 1 - self.word.len();
        self.min_return.map_or(window, |m| m.min(window))
    }
}

/// Occurrence positions of one word, grouped by text.
type Hits = Vec<(usize, Vec<usize>)>;

/// Statistics of `word` from its occurrences in cover texts of `depth`.
///
/// Gaps and avoiding runs are read off the texts directly; a finite
/// `longest_avoiding` is only reported when it is at most `depth - 2`, so
/// every consecutive pair of occurrences fits inside a scanned window.
fn tally(word: Word, depth: usize, texts: &[Word], hits: &Hits) -> ReturnSpectrum {
    let l = word.len();
    let mut min_return: Option<usize> = None;
    let mut avoid = 0usize;
    let mut unbounded = hits.len() < texts.len();
    let mut gaps = BTreeMap::new();
    for (t, occ) in hits {
        let (first, last) = (occ[0], occ[occ.len() - 1]);
        avoid = avoid.max(first + l - 1).max(texts[*t].len() - last - 1);
        for pair in occ.windows(2) {
            let g = pair[1] - pair[0];
            min_return = Some(min_return.map_or(g, |m| m.min(g)));
            avoid = avoid.max(g + l - 2);
            *gaps.entry(g).or_insert(0) += 1;
        }
    }
    unbounded |= avoid + 1 >= depth;
    let longest_avoiding = (!unbounded).then_some(avoid);
    ReturnSpectrum {
        word,
        depth,
        min_return,
        max_gap: longest_avoiding.map(|a| a + 2 - l),
        longest_avoiding,
        gaps,
        words_scanned: texts.len(),
    }
}

fn scan(word: &Word, depth: usize, texts: &[Word]) -> ReturnSpectrum {
    let hits: Hits = texts
        .iter()
        .enumerate()
        .map(|(t, text)| (t, occurrences(text, word)))
        .filter(|(_, occ)| !occ.is_empty())
        .collect();
    tally(word.clone(), depth, texts, &hits)
}

/// Every length-`l` factor of the texts with its occurrences, sorted by word.
fn factor_index(texts: &[Word], l: usize) -> Vec<(Word, Hits)> {
    const BASE: u64 = 0x9e37_79b9_7f4a_7c15;
    let top = BASE.wrapping_pow(l as u32);
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut groups: Vec<(&[Symbol], Hits)> = Vec::new();
    for (t, text) in texts.iter().enumerate() {
        if text.len() < l {
            continue;
        }
        let mut h = 0u64;
        for (i, &s) in text.iter().enumerate() {
            h = h.wrapping_mul(BASE).wrapping_add(u64::from(s) + 1);
            if i >= l {
                h = h.wrapping_sub(top.wrapping_mul(u64::from(text[i - l]) + 1));
            }
            if i + 1 < l {
                continue;
            }
            let pos = i + 1 - l;
            let factor = &text[pos..pos + l];
            let bucket = buckets.entry(h).or_default();
            let g = match bucket.iter().find(|&&g| groups[g].0 == factor) {
                Some(&g) => g,
                None => {
                    groups.push((factor, Vec::new()));
                    bucket.push(groups.len() - 1);
                    groups.len() - 1
                }
            };
            let hits = &mut groups[g].1;
            match hits.last_mut() {
                Some((last, occ)) if *last == t => occ.push(pos),
                _ => hits.push((t, vec![pos])),
            }
        }
    }
    groups.sort_by(|a, b| a.0.cmp(b.0));
    groups.into_iter().map(|(w, h)| (Word::from(w), h)).collect()
}

fn sorted_language(subshift: &Subshift, n: usize) -> Result<Vec<Word>> {
    let mut words = subshift.language(n)?;
    words.sort();
    Ok(words)
}

/// Gaps between consecutive occurrences of `w` over all admissible words of
/// length `depth`.
///
/// A finite `max_gap` is a certificate: every admissible word of length
/// `longest_avoiding + 1` is a factor of some scanned word and so contains `w`.
pub fn return_spectrum(subshift: &Subshift, w: &Word, depth: usize) -> Result<ReturnSpectrum> {
    if w.is_empty() || depth < w.len() {
        return Err(Error::DepthExceeded {
            requested: w.len(),
            certified: depth,
        });
    }
    if !subshift.admissible(w)? {
        return Err(Error::Inadmissible(w.clone()));
    }
    Ok(scan(w, depth, &subshift.cover(depth)?))
}

/// Certificate attached to a marker set `U_n = [w]_0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCertificate {
    /// Words of this length were scanned to prove that `U_n, ..., σ^{n-1} U_n`
    /// are pairwise disjoint.
    pub disjointness_depth: usize,
    /// `σ^0 U_n ∪ ... ∪ σ^K U_n` covers the space.
    pub coverage: usize,
    pub scan_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub word: Word,
    pub n: usize,
    pub min_return: usize,
    pub max_gap: usize,
    /// Observed return times of the marker word.
    pub return_times: Vec<usize>,
    pub certificate: MarkerCertificate,
}

impl MarkerSet {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("marker sets serialize")
    }

    /// Re-checks both halves of the certificate by direct language scans.
    pub fn verify(&self, subshift: &Subshift) -> Result<bool> {
        let l = self.word.len();
        let disjoint = sorted_language(subshift, self.n - 1 + l)?.iter().all(|text| {
            let occ = occurrences(text, &self.word);
            occ.len() < 2
        });
        let covered = sorted_language(subshift, self.certificate.coverage + l)?
            .iter()
            .all(|text| text.contains_factor(&self.word));
        Ok(disjoint && covered)
    }

    /// `μ(U_n) ≤ 1/n`, exactly.
    pub fn kac_bound_holds(&self, measure: &dyn Measure) -> Result<bool> {
        let mass = measure.cylinder_mass(&self.word)?;
        let bound = QuadraticReal::from_ratio(1, self.n as i64);
        Ok(mass.try_cmp(&bound)?.is_le())
    }
}

/// Smallest lexicographically-first marker word separating `n` shifts, or
/// `NoMarkerFound` (with a periodic witness of period below `n` if one
/// exists).
pub fn build_marker(subshift: &Subshift, n: usize, max_word_len: usize, depth: usize) -> Result<MarkerSet> {
    build_marker_with(subshift, n, max_word_len, depth, |_| true)
}

/// As [`build_marker`], skipping certified candidates rejected by `accept`.
pub fn build_marker_with(
    subshift: &Subshift,
    n: usize,
    max_word_len: usize,
    depth: usize,
    mut accept: impl FnMut(&MarkerSet) -> bool,
) -> Result<MarkerSet> {
    let n = n.max(1);
    for period in 1..n {
        if let Some(p) = subshift.periodic_points(period).first() {
            return Err(Error::NoMarkerFound {
                max_word_len,
                depth,
                witness: Some(p.canonical_orbit_word()),
            });
        }
    }
    let texts = subshift.cover(depth)?;
    for l in 1..=max_word_len.min(depth) {
        if depth < n - 1 + l {
            break;
        }
        for (w, hits) in factor_index(&texts, l) {
            let spec = tally(w, depth, &texts, &hits);
            let (Some(max_gap), Some(coverage)) = (spec.max_gap, spec.coverage()) else {
                continue;
            };
            if spec.min_return_bound() < n {
                continue;
            }
            let marker = MarkerSet {
                min_return: spec.min_return_bound(),
                max_gap,
                return_times: spec.gaps.keys().copied().collect(),
                certificate: MarkerCertificate {
                    disjointness_depth: n - 1 + l,
                    coverage,
                    scan_depth: depth,
                },
                word: spec.word,
                n,
            };
            if accept(&marker) {
                return Ok(marker);
            }
        }
    }
    Err(Error::NoMarkerFound {
        max_word_len,
        depth,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{MarkovMeasure, SturmianMeasure};
    use crate::symbolic::Sturmian;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn full_shift_spectrum() {
        let s = return_spectrum(&Subshift::full_shift(2), &w("0"), 10).unwrap();
        assert_eq!(s.min_return, Some(1));
        assert_eq!(s.max_gap, None);
    }

    #[test]
    fn golden_mean_spectrum() {
        let s = return_spectrum(&Subshift::golden_mean(), &w("1"), 10).unwrap();
        assert_eq!(s.min_return, Some(2));
        assert_eq!(s.max_gap, None);
    }

    #[test]
    fn sturmian_length_three_factor() {
        let sys = Subshift::silver_sturmian();
        let lang = sys.language(3).unwrap();
        for f in &lang {
            let s = return_spectrum(&sys, f, 50).unwrap();
            assert!(s.min_return_bound() >= 2, "{f}");
            assert!(s.max_gap.is_some(), "{f}");
        }
    }

    #[test]
    fn rejects_inadmissible_and_short_depth() {
        let gm = Subshift::golden_mean();
        assert!(matches!(return_spectrum(&gm, &w("11"), 10), Err(Error::Inadmissible(_))));
        assert!(matches!(return_spectrum(&gm, &w("101"), 2), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn gap_of_isolated_ones() {
        // In the silver Sturmian system 1s are isolated and 0-runs have
        // length 1 or 2, so returns to [1] take 2 or 3 steps.
        let s = return_spectrum(&Subshift::silver_sturmian(), &w("1"), 60).unwrap();
        assert_eq!(s.gaps.keys().copied().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(s.max_gap, Some(3));
        assert_eq!(s.coverage(), Some(2));
    }

    #[test]
    fn full_shift_has_fixed_point_witness() {
        match build_marker(&Subshift::full_shift(2), 3, 8, 12) {
            Err(Error::NoMarkerFound { witness, .. }) => assert_eq!(witness, Some(w("0"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sturmian_marker_n5() {
        let sys = Subshift::silver_sturmian();
        let m = build_marker(&sys, 5, 20, 100).unwrap();
        assert!(m.min_return >= 5);
        assert!(m.certificate.coverage <= m.max_gap);
        assert!(m.verify(&sys).unwrap());
        let mu = SturmianMeasure::new(Sturmian::silver());
        assert!(m.kac_bound_holds(&mu).unwrap());
        let back: MarkerSet = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn separation_one_is_vacuous() {
        let m = build_marker(&Subshift::silver_sturmian(), 1, 4, 30).unwrap();
        assert_eq!(m.word, w("0"));
    }

    #[test]
    fn golden_mean_has_no_marker_beyond_fixed_point() {
        // 0^∞ is a fixed point of the golden mean shift.
        assert!(matches!(
            build_marker(&Subshift::golden_mean(), 2, 6, 12),
            Err(Error::NoMarkerFound { witness: Some(_), .. })
        ));
        // With n = 1 the word "0" is syndetic and trivially separated.
        let m = build_marker(&Subshift::golden_mean(), 1, 6, 12).unwrap();
        assert_eq!(m.word, w("0"));
        let parry = MarkovMeasure::parry(&crate::symbolic::Sft::golden_mean()).unwrap();
        assert!(m.kac_bound_holds(&parry).unwrap());
    }
}
