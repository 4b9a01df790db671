//! Three-letter tower names of the time-`p` map of a recoded flow, and the
//! decoder that reads the `Z`-itinerary back out of them.
//!
//! The section is `S' = S ∪ φ_α 𝔔` over the recoded subshift `Z`, where
//! `𝔓` is the base of the `p`-roof symbol `1`, `𝔔` the base of symbol `0`
//! and `α = q − p`. A sample at height `h` above a `Z`-symbol is labelled
//! `P` over a `1`, `Q` over a `0` with `h < α`, and `A` otherwise.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadratic::QuadraticReal;
use crate::recode::{recode_dep, RecodeKind, RecodeOptions, RecodedFlow, ZPoint};
use crate::suspension::SuspensionFlow;
use crate::symbolic::{PointOracle, SharedPoint, Subshift, SturmianPoint, Symbol, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    /// Tower over `𝔓`.
    P,
    /// Tower over `𝔔`, below height `α`.
    Q,
    /// Tower over `φ_α 𝔔`.
    A,
}

impl Label {
    pub fn as_char(self) -> char {
        match self {
            Label::P => 'P',
            Label::Q => 'Q',
            Label::A => 'A',
        }
    }
}

/// Labels of `φ_{kt} 𝒳` for `k ∈ [−2n, 2n]`; index `2n` is time zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Name {
    pub letters: Vec<Label>,
}

impl Name {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Every `Q` is immediately followed by `A` (a trailing `Q` is allowed).
    pub fn succession_holds(&self) -> bool {
        self.letters
            .windows(2)
            .all(|w| w[0] != Label::Q || w[1] == Label::A)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.letters.iter().try_for_each(|l| write!(f, "{}", l.as_char()))
    }
}

impl FromStr for Name {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'P' => Ok(Label::P),
                'Q' => Ok(Label::Q),
                'A' => Ok(Label::A),
                other => Err(Error::Parse(format!("bad name letter {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { letters })
    }
}

/// Intervals `[vq − up, vq − up + α) ∩ [0, q)` for `u < m`, `v ≤ u + 1`:
/// the heights `s` for which `u` steps of `p` land `β ∈ [0, α)` past a
/// multiple of `q`.
fn landing_intervals(p: &QuadraticReal, q: &QuadraticReal, m: usize) -> Vec<(QuadraticReal, QuadraticReal)> {
    let alpha = q - p;
    let mut out = Vec::new();
    for u in 0..m as i64 {
        for v in 0..=u + 1 {
            let lo = &q.mul_int(v) - &p.mul_int(u);
            let hi = &lo + &alpha;
            let lo = if lo.is_negative() { QuadraticReal::zero() } else { lo };
            let hi = if &hi > q { q.clone() } else { hi };
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("one field"));
    out
}

/// Whether every `s ∈ [0, q)` admits `0 ≤ u < m`, `0 ≤ v ≤ u+1` with
/// `s + up = vq + β`, `0 ≤ β < α`, decided by exact interval coverage.
pub fn m_sufficient(p: &QuadraticReal, q: &QuadraticReal, m: usize) -> bool {
    let mut reach = QuadraticReal::zero();
    for (lo, hi) in landing_intervals(p, q, m) {
        if lo > reach {
            return false;
        }
        if hi > reach {
            reach = hi;
        }
    }
    &reach >= q
}

/// Direct check of the landing condition at one height.
pub fn lands(p: &QuadraticReal, q: &QuadraticReal, m: usize, s: &QuadraticReal) -> Result<bool> {
    let alpha = q - p;
    for u in 0..m as i64 {
        let x = s.try_add(&p.mul_int(u))?;
        let v = x.try_div(q)?.floor();
        let Some(v) = num_traits::ToPrimitive::to_i64(&v) else { continue };
        let beta = x.try_sub(&q.mul_int(v))?;
        if v <= u + 1 && beta < alpha {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Endpoints in `[0, q)` of the landing intervals for `m`.
pub fn landing_breakpoints(p: &QuadraticReal, q: &QuadraticReal, m: usize) -> Vec<QuadraticReal> {
    let mut pts: Vec<_> = landing_intervals(p, q, m)
        .into_iter()
        .flat_map(|(lo, hi)| [lo, hi])
        .filter(|s| s < q)
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("one field"));
    pts.dedup();
    pts
}

/// Least `M ≥ 2` satisfying [`m_sufficient`], searched up to `cap`.
pub fn minimal_m(p: &QuadraticReal, q: &QuadraticReal, cap: usize) -> Option<usize> {
    (2..=cap).find(|&m| m_sufficient(p, q, m))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub recovered: Word,
    pub truth: Word,
    pub matched: bool,
}

/// The time-`p` map of a dep-recoded flow with its three towers.
#[derive(Clone, Debug)]
pub struct GeneratorModel {
    dep: RecodedFlow,
    t: QuadraticReal,
    alpha: QuadraticReal,
    m: usize,
    k: usize,
}

impl GeneratorModel {
    /// Recodes `flow` with `δ = α = q − p` and the least sufficient `M`.
    pub fn new(flow: &SuspensionFlow, p: &QuadraticReal, q: &QuadraticReal, opts: &RecodeOptions) -> Result<Self> {
        let alpha = q.try_sub(p)?;
        if !alpha.is_positive() || &alpha >= p {
            return Err(Error::PreconditionFailed("α = q − p must lie in (0, p)".into()));
        }
        let m = minimal_m(p, q, 256)
            .ok_or_else(|| Error::PreconditionFailed("no M ≤ 256 covers every height in [0, q)".into()))?;
        Self::from_recoded(recode_dep(flow, p, q, m, &alpha, opts)?)
    }

    pub fn from_recoded(dep: RecodedFlow) -> Result<Self> {
        let RecodeKind::Dep { m, k } = dep.kind() else {
            return Err(Error::PreconditionFailed("a dep recoding is required".into()));
        };
        let (p, q) = (dep.p().clone(), dep.q().clone());
        let alpha = q.try_sub(&p)?;
        if !alpha.is_positive() || alpha >= p {
            return Err(Error::PreconditionFailed("α = q − p must lie in (0, p)".into()));
        }
        if dep.delta() > &alpha {
            return Err(Error::PreconditionFailed("the recoding must use δ ≤ α".into()));
        }
        if !m_sufficient(&p, &q, m) {
            return Err(Error::PreconditionFailed(format!("M = {m} does not cover every height in [0, q)")));
        }
        Ok(Self {
            dep,
            t: p,
            alpha,
            m,
            k,
        })
    }

    pub fn recoded(&self) -> &RecodedFlow {
        &self.dep
    }

    pub fn t(&self) -> &QuadraticReal {
        &self.t
    }

    pub fn alpha(&self) -> &QuadraticReal {
        &self.alpha
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn label(&self, symbol: Symbol, height: &QuadraticReal) -> Label {
        match symbol {
            1 => Label::P,
            _ if height < &self.alpha => Label::Q,
            _ => Label::A,
        }
    }

    /// Tower labels of `φ_{kt} 𝒳`, `k ∈ [−2n, 2n]`, by exact walking along
    /// the roof of `Z`.
    pub fn name_of(&self, x: &ZPoint, n: usize) -> Result<Name> {
        let span = 2 * n as i64;
        // Roofs are at least `t`, so each step crosses at most one symbol.
        let (lo, hi) = (x.index - span - 1, x.index + span + 2);
        let (symbols, roofs) = x.point.segment(lo, hi)?;
        let here = (x.index - lo) as usize;
        let mut letters = vec![Label::P; 4 * n + 1];
        let (mut j, mut h) = (here, x.height.clone());
        for k in 0..=2 * n {
            letters[2 * n + k] = self.label(symbols[j], &h);
            h = h.try_add(&self.t)?;
            while h >= roofs[j] {
                h = h.try_sub(&roofs[j])?;
                j += 1;
            }
        }
        let (mut j, mut h) = (here, x.height.clone());
        for k in 1..=2 * n {
            h = h.try_sub(&self.t)?;
            while h.is_negative() {
                j -= 1;
                h = h.try_add(&roofs[j])?;
            }
            letters[2 * n - k] = self.label(symbols[j], &h);
        }
        Ok(Name { letters })
    }

    pub fn find_marking_subwords(&self, name: &Name) -> Vec<(usize, usize)> {
        find_marking_subwords(&name.letters, self.k)
    }

    pub fn decode_name(&self, name: &Name) -> Result<Word> {
        decode_name(&name.letters, self.k)
    }

    /// Decodes the name of `x` and checks that `x[−n, n]` is a factor.
    pub fn round_trip(&self, x: &ZPoint, n: usize) -> Result<RoundTrip> {
        let recovered = self.decode_name(&self.name_of(x, n)?)?;
        let truth = x.point.block(x.index - n as i64, x.index + n as i64 + 1)?;
        let matched = recovered.contains_factor(&truth);
        Ok(RoundTrip {
            recovered,
            truth,
            matched,
        })
    }

    /// Seeded flow points of the recoded flow, as images of base flow points.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<ZPoint>> {
        let flow = self.dep.flow();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases = seeded_base_points(flow.base(), rng.gen(), count)?;
        bases
            .into_iter()
            .map(|b| {
                let index = rng.gen_range(-1000..1000);
                let roof = flow.roof_at(b.as_ref(), index)?;
                let height = roof.try_mul(&QuadraticReal::from_ratio(rng.gen_range(0..1000), 1000))?;
                self.dep.encode(&flow.point(b, index, height)?)
            })
            .collect()
    }
}

/// Seeded points of a subshift: uniformly drawn rational phases for
/// Sturmian systems.
pub fn seeded_base_points(base: &Subshift, seed: u64, count: usize) -> Result<Vec<SharedPoint>> {
    let Subshift::Sturmian(s) = base else {
        return Err(Error::Unsupported("seeded points are only drawn for Sturmian bases".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let phase = QuadraticReal::from_ratio(rng.gen_range(0..1_000_000), 1_000_000);
            Arc::new(SturmianPoint::new(s.clone(), phase)) as SharedPoint
        })
        .collect())
}

/// `(start, end)` of each `P T_1 … T_j P` between consecutive `P`s with
/// `K` or `K+1` letters `A`; `end` is the closing `P`.
pub fn find_marking_subwords(letters: &[Label], k: usize) -> Vec<(usize, usize)> {
    let ps: Vec<usize> = letters
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == Label::P)
        .map(|(i, _)| i)
        .collect();
    ps.windows(2)
        .filter(|w| {
            let a = letters[w[0] + 1..w[1]].iter().filter(|&&l| l == Label::A).count();
            a == k || a == k + 1
        })
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Letterwise rule: `P ↦ 1`, `A ↦ 0`, `Q` deleted.
pub fn translate(letters: &[Label]) -> Word {
    Word(
        letters
            .iter()
            .filter_map(|l| match l {
                Label::P => Some(1),
                Label::A => Some(0),
                Label::Q => None,
            })
            .collect(),
    )
}

/// Recovers the `Z`-word read by a name.
///
/// Marking subwords become `10^K1` and the rest is translated letterwise.
/// Runs before the first and after the last `P` are dropped when they hold
/// at most `K + 1` letters `A`, since they may be cut-off marker runs whose
/// long return was sampled twice.
pub fn decode_name(letters: &[Label], k: usize) -> Result<Word> {
    let marks = find_marking_subwords(letters, k);
    if marks.is_empty() {
        return Err(Error::NoMarkersFound(letters.len()));
    }
    let first = letters.iter().position(|&l| l == Label::P).expect("markers have P");
    let last = letters.iter().rposition(|&l| l == Label::P).expect("markers have P");
    let a_count = |s: &[Label]| s.iter().filter(|&&l| l == Label::A).count();
    let start = if a_count(&letters[..first]) <= k + 1 { first } else { 0 };
    let end = if a_count(&letters[last + 1..]) <= k + 1 { last + 1 } else { letters.len() };

    let mut out = translate(&letters[start..first]).into_inner();
    let mut i = first;
    let mut marks = marks.into_iter().peekable();
    while i < last {
        match marks.peek() {
            Some(&(s, e)) if s == i => {
                out.push(1);
                out.extend(std::iter::repeat_n(0, k));
                i = e;
                marks.next();
            }
            _ => {
                out.extend(translate(&letters[i..i + 1]).iter());
                i += 1;
            }
        }
    }
    out.extend(translate(&letters[last..end]).iter());
    Ok(Word(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::Roof;

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    fn name(s: &str) -> Vec<Label> {
        s.parse::<Name>().unwrap().letters
    }

    fn model() -> GeneratorModel {
        let flow = SuspensionFlow::new(Subshift::silver_sturmian(), Roof::constant(2, q("√2")).unwrap()).unwrap();
        GeneratorModel::new(&flow, &q("1"), &q("√2"), &RecodeOptions::default()).unwrap()
    }

    #[test]
    fn m_for_one_and_root_two() {
        let (p, r) = (q("1"), q("√2"));
        assert_eq!(minimal_m(&p, &r, 50), Some(4));
        assert!(!m_sufficient(&p, &r, 3));
        for m in [4, 6] {
            for s in landing_breakpoints(&p, &r, m) {
                assert!(lands(&p, &r, m, &s).unwrap(), "s = {s}, M = {m}");
            }
        }
        // Three steps reach only [0, 3α); heights in [3α, q) are missed.
        assert!(lands(&p, &r, 3, &q("1")).unwrap());
        assert!(!lands(&p, &r, 3, &q("13/10")).unwrap());
        assert!(!lands(&p, &r, 3, &q("3√2-3")).unwrap());
    }

    #[test]
    fn letterwise_translation() {
        assert_eq!(translate(&name("PQAP")).to_string(), "101");
        assert_eq!(translate(&name("APQA")).to_string(), "010");
    }

    #[test]
    fn worked_example() {
        let n = name("AAAAAAPQAAAPAPQAPAAAAAAPAAAAP");
        assert_eq!(find_marking_subwords(&n, 3), vec![(6, 11), (23, 28)]);
        assert_eq!(decode_name(&n, 3).unwrap().to_string(), "00000010001010100000010001");
    }

    #[test]
    fn marker_alone_and_missing_markers() {
        assert_eq!(decode_name(&name("PQAAAAP"), 3).unwrap().to_string(), "10001");
        assert_eq!(decode_name(&name("PAAAP"), 3).unwrap().to_string(), "10001");
        assert!(find_marking_subwords(&name("PAPAAP"), 3).is_empty());
        assert!(matches!(decode_name(&name("PAPAAP"), 3), Err(Error::NoMarkersFound(6))));
    }

    #[test]
    fn names_on_the_recoded_flow() {
        let m = model();
        assert_eq!(m.m(), 4);
        let k = m.k();
        for x in m.sample(3, 25).unwrap() {
            let n = m.name_of(&x, 50).unwrap();
            assert_eq!(n.len(), 201);
            assert!(n.succession_holds(), "{n}");
            let marks = m.find_marking_subwords(&n);
            for w in marks.windows(2) {
                assert!(w[1].0 - w[0].1 >= m.m() + k, "{n}");
            }
            let rt = m.round_trip(&x, 50).unwrap();
            assert!(rt.matched, "{n}");
            assert!(rt.recovered.len() + 2 * (k + 2) >= n.len().div_ceil(2));
        }
    }

    #[test]
    fn shift_compatibility_and_monotone_recovery() {
        let m = model();
        for (i, x) in m.sample(5, 6).unwrap().into_iter().enumerate() {
            let n = 30;
            let big = m.name_of(&x, n).unwrap();
            // Advance by t along the Z-suspension.
            let (_, roofs) = x.point.segment(x.index, x.index + 1).unwrap();
            let mut y = x.clone();
            y.height = y.height.try_add(m.t()).unwrap();
            if y.height >= roofs[0] {
                y.height = y.height.try_sub(&roofs[0]).unwrap();
                y.index += 1;
            }
            let small = m.name_of(&y, n - 1).unwrap();
            assert_eq!(small.letters[..], big.letters[3..big.len() - 1], "point {i}");
            let a = m.round_trip(&x, n).unwrap().recovered;
            let b = m.round_trip(&x, n + 1).unwrap().recovered;
            assert!(b.contains_factor(&a));
        }
    }

    #[test]
    fn base_of_p_tower_is_named_p() {
        let m = model();
        let mut x = m.sample(2, 1).unwrap().pop().unwrap();
        while x.point.block(x.index, x.index + 1).unwrap()[0] != 1 {
            x.index += 1;
        }
        x.height = QuadraticReal::zero();
        assert_eq!(m.name_of(&x, 10).unwrap().letters[20], Label::P);
    }

    #[test]
    fn short_window_has_no_markers() {
        let m = model();
        let x = m.sample(1, 1).unwrap().pop().unwrap();
        assert!(matches!(m.round_trip(&x, 1), Err(Error::NoMarkersFound(_))));
    }
}
