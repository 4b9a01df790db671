use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadratic::QuadraticReal;
use crate::suspension::{FlowPoint, SuspensionFlow};
use crate::symbolic::{Cylinder, CylinderMeet, Symbol, Word};

/// The points `(σⁱx, offset)` with `σⁱx` in `cylinder`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionPiece {
    pub cylinder: Cylinder,
    pub offset: QuadraticReal,
}

impl SectionPiece {
    pub fn new(cylinder: Cylinder, offset: QuadraticReal) -> Self {
        Self { cylinder, offset }
    }
}

/// A finite union of pieces, indexed for return-time queries.
#[derive(Clone, Debug)]
pub struct CrossSection {
    pieces: Vec<SectionPiece>,
    validity_depth: usize,
    // (anchor, length) -> word -> piece indices sorted by offset
    index: Vec<((i64, usize), HashMap<Word, Vec<usize>>)>,
    lo: i64,
    hi: i64,
}

/// Result of [`CrossSection::certify_global`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalityCertificate {
    pub depth: usize,
    /// Every admissible `depth`-word places some piece at a base coordinate
    /// `≤ max_base_steps`; `None` if some word has no piece at all.
    pub max_base_steps: Option<usize>,
    /// Upper bound on first-hit times of orbits starting at height 0.
    pub max_hit_time: Option<f64>,
}

impl GlobalityCertificate {
    pub fn is_global(&self) -> bool {
        self.max_base_steps.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct ReturnHit {
    pub time: QuadraticReal,
    pub landing: FlowPoint,
    pub piece: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub piece: usize,
    pub count: usize,
    pub min: String,
    pub max: String,
}

impl CrossSection {
    pub fn new(pieces: Vec<SectionPiece>, validity_depth: usize) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::PreconditionFailed("cross-section has no pieces".into()));
        }
        let mut groups: BTreeMap<(i64, usize), HashMap<Word, Vec<usize>>> = BTreeMap::new();
        for (i, p) in pieces.iter().enumerate() {
            groups
                .entry((p.cylinder.anchor, p.cylinder.word.len()))
                .or_default()
                .entry(p.cylinder.word.clone())
                .or_default()
                .push(i);
        }
        for g in groups.values_mut() {
            for ids in g.values_mut() {
                ids.sort_by(|&a, &b| {
                    pieces[a]
                        .offset
                        .partial_cmp(&pieces[b].offset)
                        .unwrap_or(Ordering::Equal)
                });
            }
        }
        let lo = pieces.iter().map(|p| p.cylinder.anchor).min().unwrap_or(0);
        let hi = pieces.iter().map(|p| p.cylinder.end()).max().unwrap_or(0);
        Ok(Self {
            pieces,
            validity_depth,
            index: groups.into_iter().collect(),
            lo,
            hi,
        })
    }

    /// The base section `X × {0}`.
    pub fn base(alphabet: usize) -> Self {
        let pieces = (0..alphabet)
            .map(|s| SectionPiece::new(Cylinder::at_zero(Word(vec![s as Symbol])), QuadraticReal::zero()))
            .collect();
        Self::new(pieces, 1).expect("nonempty alphabet")
    }

    pub fn pieces(&self) -> &[SectionPiece] {
        &self.pieces
    }

    pub fn validity_depth(&self) -> usize {
        self.validity_depth
    }

    /// Admissible words on `[lo, hi)` compatible with `cylinder`.
    fn extensions(flow: &SuspensionFlow, lo: i64, hi: i64, cylinders: &[&Cylinder]) -> Result<Vec<Word>> {
        let words = flow.base().language((hi - lo) as usize)?;
        Ok(words
            .into_iter()
            .filter(|w| {
                cylinders.iter().all(|c| {
                    let s = (c.anchor - lo) as usize;
                    &w[s..s + c.word.len()] == c.word.as_slice()
                })
            })
            .collect())
    }

    /// Exact checks: `0 ≤ offset < r` on every piece, and pieces with equal
    /// offsets have disjoint cylinders.
    pub fn validate(&self, flow: &SuspensionFlow) -> Result<()> {
        let m = flow.roof().radius() as i64;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.offset.is_negative() {
                return Err(Error::PreconditionFailed(format!("piece {i} has negative offset")));
            }
            let c = &p.cylinder;
            let roofs: Vec<QuadraticReal> = if c.anchor <= -m && c.end() > m {
                let at = (-c.anchor) as usize;
                vec![flow.roof().at_offset(&c.word, at)?.clone()]
            } else {
                let lo = c.anchor.min(-m);
                let hi = c.end().max(m + 1);
                Self::extensions(flow, lo, hi, &[c])?
                    .iter()
                    .map(|w| flow.roof().at_offset(w, (-lo) as usize).cloned())
                    .collect::<Result<_>>()?
            };
            if roofs.iter().any(|r| &p.offset >= r) {
                return Err(Error::PreconditionFailed(format!(
                    "piece {i} offset {} reaches the roof",
                    p.offset
                )));
            }
        }
        let mut by_offset: HashMap<&QuadraticReal, Vec<usize>> = HashMap::new();
        for (i, p) in self.pieces.iter().enumerate() {
            by_offset.entry(&p.offset).or_default().push(i);
        }
        for ids in by_offset.values() {
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    let (ci, cj) = (&self.pieces[i].cylinder, &self.pieces[j].cylinder);
                    let overlap = match ci.meet(cj) {
                        CylinderMeet::Disjoint => false,
                        CylinderMeet::Merged(c) => flow.base().admissible(&c.word)?,
                        CylinderMeet::Gapped => {
                            let lo = ci.anchor.min(cj.anchor);
                            let hi = ci.end().max(cj.end());
                            !Self::extensions(flow, lo, hi, &[ci, cj])?.is_empty()
                        }
                    };
                    if overlap {
                        return Err(Error::PreconditionFailed(format!(
                            "pieces {i} and {j} overlap at offset {}",
                            self.pieces[i].offset
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Pieces placed by `window` (which starts at base coordinate `start`)
    /// at coordinate `k`, as piece indices sorted by offset.
    fn hits_at<'a>(&'a self, window: &[Symbol], start: i64, k: i64) -> impl Iterator<Item = usize> + 'a {
        let mut found: Vec<usize> = Vec::new();
        for ((anchor, len), words) in &self.index {
            let s = k + anchor - start;
            if s < 0 || s as usize + len > window.len() {
                continue;
            }
            if let Some(ids) = words.get(&window[s as usize..s as usize + len]) {
                found.extend(ids);
            }
        }
        found.sort_by(|&a, &b| {
            self.pieces[a]
                .offset
                .partial_cmp(&self.pieces[b].offset)
                .unwrap_or(Ordering::Equal)
        });
        found.into_iter()
    }

    /// Exhaustive check that every admissible `depth`-word meets the section.
    pub fn certify_global(&self, flow: &SuspensionFlow, depth: usize) -> Result<GlobalityCertificate> {
        let m = flow.roof().radius() as i64;
        let mut worst_steps = 0usize;
        let mut worst_time = 0.0f64;
        for w in flow.base().language(depth)? {
            let mut found = None;
            for k in 0..depth as i64 {
                if self.hits_at(&w, 0, k).next().is_some() {
                    found = Some(k);
                    break;
                }
            }
            let Some(k) = found else {
                return Ok(GlobalityCertificate {
                    depth,
                    max_base_steps: None,
                    max_hit_time: None,
                });
            };
            worst_steps = worst_steps.max(k as usize);
            // Time to reach the hit from height 0, bounded by the roofs
            // through coordinate k.
            let mut t = 0.0;
            for i in 0..=k {
                t += if i >= m && i + m < depth as i64 {
                    flow.roof().at_offset(&w, i as usize)?.to_f64()
                } else {
                    flow.roof().max_value().to_f64()
                };
            }
            worst_time = worst_time.max(t);
        }
        Ok(GlobalityCertificate {
            depth,
            max_base_steps: Some(worst_steps),
            max_hit_time: Some(worst_time),
        })
    }

    /// First `t > 0` with `Φ_t(p)` in the section.
    pub fn return_to_section(&self, flow: &SuspensionFlow, p: &FlowPoint, max_returns: usize) -> Result<ReturnHit> {
        const CHUNK: i64 = 256;
        let m = flow.roof().radius() as i64;
        let (lo, hi) = (self.lo.min(-m), self.hi.max(m + 1));
        let mut elapsed = -p.height.clone();
        let mut window = Word::default();
        let mut window_start = i64::MIN;
        for k in p.index..=p.index + max_returns as i64 {
            if window_start == i64::MIN || k + hi > window_start + window.len() as i64 {
                window_start = k + lo;
                window = p.point.block(window_start, k + hi + CHUNK)?;
            }
            for id in self.hits_at(&window, window_start, k) {
                let piece = &self.pieces[id];
                if k == p.index && piece.offset <= p.height {
                    continue;
                }
                let time = elapsed.try_add(&piece.offset)?;
                return Ok(ReturnHit {
                    time,
                    landing: FlowPoint {
                        point: p.point.clone(),
                        index: k,
                        height: piece.offset.clone(),
                    },
                    piece: id,
                });
            }
            let r0 = (k - m - window_start) as usize;
            elapsed = elapsed.try_add(flow.roof().value(&window[r0..r0 + 2 * m as usize + 1])?)?;
        }
        Err(Error::NotHit { max_returns })
    }

    /// Successive returns starting from `p`.
    pub fn returns(
        &self,
        flow: &SuspensionFlow,
        p: &FlowPoint,
        count: usize,
        max_returns: usize,
    ) -> Result<Vec<ReturnHit>> {
        let mut out = Vec::with_capacity(count);
        let mut here = p.clone();
        for _ in 0..count {
            let hit = self.return_to_section(flow, &here, max_returns)?;
            here = hit.landing.clone();
            out.push(hit);
        }
        Ok(out)
    }

    /// Return times grouped by departure piece, along the orbit of `p`.
    pub fn spectrum(
        &self,
        flow: &SuspensionFlow,
        p: &FlowPoint,
        count: usize,
        max_returns: usize,
    ) -> Result<Vec<SpectrumRow>> {
        let first = self.return_to_section(flow, p, max_returns)?;
        let mut stats: BTreeMap<usize, (usize, QuadraticReal, QuadraticReal)> = BTreeMap::new();
        let mut from = first.piece;
        for hit in self.returns(flow, &first.landing, count, max_returns)? {
            let e = stats
                .entry(from)
                .or_insert_with(|| (0, hit.time.clone(), hit.time.clone()));
            e.0 += 1;
            e.1 = QuadraticReal::min_of(&e.1, &hit.time);
            e.2 = QuadraticReal::max_of(&e.2, &hit.time);
            from = hit.piece;
        }
        Ok(stats
            .into_iter()
            .map(|(piece, (count, min, max))| SpectrumRow {
                piece,
                count,
                min: min.to_string(),
                max: max.to_string(),
            })
            .collect())
    }
}

/// Named atoms partitioning the pieces of a section.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TowerPartition {
    pub names: Vec<String>,
    pub label_of_piece: Vec<usize>,
}

impl TowerPartition {
    pub fn new(section: &CrossSection, names: Vec<String>, label_of_piece: Vec<usize>) -> Result<Self> {
        if label_of_piece.len() != section.pieces().len() {
            return Err(Error::PreconditionFailed("every piece needs exactly one label".into()));
        }
        if label_of_piece.iter().any(|&l| l >= names.len()) {
            return Err(Error::PreconditionFailed("label out of range".into()));
        }
        Ok(Self { names, label_of_piece })
    }

    pub fn label(&self, piece: usize) -> &str {
        &self.names[self.label_of_piece[piece]]
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::suspension::Roof;
    use crate::symbolic::{PeriodicPoint, SharedPoint, Sturmian, SturmianPoint, Subshift};

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    #[test]
    fn base_section_returns_after_roof() {
        let roof = Roof::symbolwise(vec![q("1"), q("√2")]).unwrap();
        let flow = SuspensionFlow::new(Subshift::full_shift(2), roof).unwrap();
        let s = CrossSection::base(2);
        s.validate(&flow).unwrap();
        let x: SharedPoint = Arc::new(PeriodicPoint::new("011".parse().unwrap()).unwrap());
        let p = flow.point(x, 1, q("0")).unwrap();
        let hit = s.return_to_section(&flow, &p, 10).unwrap();
        assert_eq!(hit.time, q("√2"));
        assert_eq!(hit.landing.index, 2);
        let off = flow.point(p.point.clone(), 1, q("1/3")).unwrap();
        assert_eq!(s.return_to_section(&flow, &off, 10).unwrap().time, q("-1/3+√2"));
    }

    #[test]
    fn pieces_with_anchors_and_offsets() {
        let roof = Roof::constant(2, q("2")).unwrap();
        let flow = SuspensionFlow::new(Subshift::golden_mean(), roof).unwrap();
        let pieces = vec![
            SectionPiece::new(Cylinder::new(-1, "10".parse().unwrap()), q("1/2")),
            SectionPiece::new(Cylinder::new(0, "00".parse().unwrap()), q("1")),
            SectionPiece::new(Cylinder::new(0, "1".parse().unwrap()), q("0")),
        ];
        let s = CrossSection::new(pieces, 4).unwrap();
        s.validate(&flow).unwrap();
        let cert = s.certify_global(&flow, 6).unwrap();
        assert!(cert.is_global());
        let x: SharedPoint = Arc::new(PeriodicPoint::new("0010".parse().unwrap()).unwrap());
        let p = flow.point(x, 0, q("0")).unwrap();
        let hits = s.returns(&flow, &p, 3, 10).unwrap();
        let times: Vec<_> = hits.iter().map(|h| h.time.clone()).collect();
        assert_eq!(times, vec![q("1"), q("3"), q("5/2")]);
        assert_eq!(hits.iter().map(|h| h.piece).collect::<Vec<_>>(), vec![1, 2, 0]);
    }

    #[test]
    fn overlapping_pieces_are_rejected() {
        let flow = SuspensionFlow::new(Subshift::full_shift(2), Roof::constant(2, q("1")).unwrap()).unwrap();
        let overlapping = CrossSection::new(
            vec![
                SectionPiece::new(Cylinder::new(0, "0".parse().unwrap()), q("1/2")),
                SectionPiece::new(Cylinder::new(2, "1".parse().unwrap()), q("1/2")),
            ],
            3,
        )
        .unwrap();
        assert!(overlapping.validate(&flow).is_err());
        let too_high = CrossSection::new(
            vec![SectionPiece::new(Cylinder::at_zero("0".parse().unwrap()), q("1"))],
            1,
        )
        .unwrap();
        assert!(too_high.validate(&flow).is_err());
    }

    #[test]
    fn non_global_section_is_detected() {
        let flow = SuspensionFlow::new(Subshift::full_shift(2), Roof::constant(2, q("1")).unwrap()).unwrap();
        let s = CrossSection::new(vec![SectionPiece::new(Cylinder::at_zero("11".parse().unwrap()), q("0"))], 2)
            .unwrap();
        assert!(!s.certify_global(&flow, 8).unwrap().is_global());
        let x: SharedPoint = Arc::new(PeriodicPoint::new("0".parse().unwrap()).unwrap());
        let p = flow.point(x, 0, q("0")).unwrap();
        assert_eq!(
            s.return_to_section(&flow, &p, 50).unwrap_err(),
            Error::NotHit { max_returns: 50 }
        );
    }

    #[test]
    fn sturmian_section_spectrum() {
        let st = Sturmian::silver();
        let roof = Roof::symbolwise(vec![q("1"), q("√2")]).unwrap();
        let flow = SuspensionFlow::new(Subshift::Sturmian(st.clone()), roof).unwrap();
        let s = CrossSection::new(vec![SectionPiece::new(Cylinder::at_zero("1".parse().unwrap()), q("1/2"))], 1)
            .unwrap();
        s.validate(&flow).unwrap();
        let x: SharedPoint = Arc::new(SturmianPoint::new(st, q("1/5")));
        let p = flow.point(x, 0, q("0")).unwrap();
        let rows = s.spectrum(&flow, &p, 200, 100).unwrap();
        assert_eq!(rows.len(), 1);
        // Between consecutive 1s there are one or two 0s.
        assert_eq!(rows[0].min, q("1+√2").to_string());
        assert_eq!(rows[0].max, q("2+√2").to_string());
    }
}
