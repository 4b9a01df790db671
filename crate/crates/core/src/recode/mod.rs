//! Re-encoding a symbolic flow over marker towers so that its roof takes
//! prescribed values.
//!
//! A marker word `w` cuts every base orbit into return blocks. The base
//! word around one return (the *atom key*) fixes the flow time `T` until
//! the next marker. That time is subdivided into steps of length `p` and
//! `q` plus a small remainder, and the order of the steps encodes the key.
//! The resulting section lives in the original flow; its itinerary is the
//! recoded subshift `Z`.

mod balanced;
mod bog;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use balanced::BalancedCode;
pub use bog::{bog_target, recode_bog, BogAtom, BogReport, BogSection};

use crate::error::{Error, Result};
use crate::markers::{build_marker, build_marker_with, MarkerSet};
use crate::quadratic::QuadraticReal;
use crate::suspension::{CrossSection, FlowPoint, SectionPiece, SuspensionFlow};
use crate::symbolic::{occurrences, Cylinder, Generated, PointOracle, SharedPoint, Symbol, Word};

/// Result of the gap function `D(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DGap {
    /// `x - (kp + lq)`, minimal over admissible pairs.
    Value { value: QuadraticReal, k: u64, l: u64 },
    NoAdmissiblePair,
}

fn check_pq(p: &QuadraticReal, q: &QuadraticReal) -> Result<()> {
    if !p.is_positive() || !q.is_positive() {
        return Err(Error::PreconditionFailed("p and q must be positive".into()));
    }
    if !QuadraticReal::rationally_independent(p, q) {
        return Err(Error::PreconditionFailed(format!(
            "rational independence violated: p = {p}, q = {q}"
        )));
    }
    Ok(())
}

fn to_u64(x: num_bigint::BigInt) -> u64 {
    x.to_u64().unwrap_or(0)
}

/// All `(k, l, x - kp - lq)` with `kp + lq ≤ x`, `l ≥ 1` and `k` in the
/// range given for `l`.
fn pairs_below(
    x: &QuadraticReal,
    p: &QuadraticReal,
    q: &QuadraticReal,
    k_range: impl Fn(u64) -> Option<(u64, u64)>,
) -> Result<Vec<(u64, u64, QuadraticReal)>> {
    let mut out = Vec::new();
    let mut l = 1u64;
    loop {
        let rest = x.try_sub(&q.mul_int(l as i64))?;
        if rest.is_negative() {
            break;
        }
        if let Some((lo, hi)) = k_range(l) {
            let fit = to_u64(rest.try_div(p)?.floor());
            for k in lo..=hi.min(fit) {
                out.push((k, l, rest.try_sub(&p.mul_int(k as i64))?));
            }
        }
        l += 1;
    }
    Ok(out)
}

/// Smallest `k` with `k (1 + ε) ≥ l`.
fn ratio_floor(l: u64, epsilon: &QuadraticReal) -> Result<u64> {
    let one_eps = QuadraticReal::one().try_add(epsilon)?;
    Ok(to_u64(QuadraticReal::from_int(l as i64).try_div(&one_eps)?.ceil()))
}

/// `D(x) = min { x - (kp + lq) ≥ 0 : l ≥ 1, 1/(1+ε) ≤ k/l ≤ 1 }`.
pub fn d_gap(x: &QuadraticReal, p: &QuadraticReal, q: &QuadraticReal, epsilon: &QuadraticReal) -> Result<DGap> {
    check_pq(p, q)?;
    if !epsilon.is_positive() {
        return Err(Error::PreconditionFailed("epsilon must be positive".into()));
    }
    let mut best: Option<(u64, u64, QuadraticReal)> = None;
    let mut l = 1u64;
    loop {
        let rest = x.try_sub(&q.mul_int(l as i64))?;
        if rest.is_negative() {
            break;
        }
        let k_min = ratio_floor(l, epsilon)?;
        let k = l.min(to_u64(rest.try_div(p)?.floor()));
        if k >= k_min {
            let gap = rest.try_sub(&p.mul_int(k as i64))?;
            if best.as_ref().is_none_or(|b| gap < b.2) {
                best = Some((k, l, gap));
            }
        }
        l += 1;
    }
    Ok(match best {
        Some((k, l, value)) => DGap::Value { value, k, l },
        None => DGap::NoAdmissiblePair,
    })
}

/// Which roof values the recoded flow uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecodeKind {
    /// Alphabet `{0, 1, 2}`: `[1] ↦ p`, `[0] ↦ q`, `[2] ↦ (0, δ)`.
    Dex,
    /// Alphabet `{0, 1}`: `[1] ↦ p`, `[0] ↦ [q, q + δ]`, blocks end with
    /// `0^L 1 0^K`.
    Dep {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "K")]
        k: usize,
    },
}

impl RecodeKind {
    pub fn alphabet(&self) -> usize {
        match self {
            RecodeKind::Dex => 3,
            RecodeKind::Dep { .. } => 2,
        }
    }

    /// For `Dep`, the pattern `0^{M+K} 1 0^K 1` whose last symbol starts a block.
    pub fn marking_pattern(&self) -> Option<Word> {
        match *self {
            RecodeKind::Dex => None,
            RecodeKind::Dep { m, k } => {
                let mut w = vec![0; m + k];
                w.push(1);
                w.extend(std::iter::repeat_n(0, k));
                w.push(1);
                Some(Word(w))
            }
        }
    }
}

/// One marker return: the base word around it and its scheduled Z-block.
#[derive(Clone, Debug)]
pub struct Atom {
    /// Base word `x[-left, g + right)` for a marker occurrence at 0.
    pub key: Word,
    pub return_len: usize,
    /// `prefix[i] = r(x_0) + … + r(x_{i-1})`, for `i ≤ g`.
    pub prefix: Vec<QuadraticReal>,
    pub k: usize,
    pub l: usize,
    pub remainder: QuadraticReal,
    pub rank: u128,
    pub block: Word,
    /// Return time of each Z-symbol of the block.
    pub steps: Vec<QuadraticReal>,
}

impl Atom {
    pub fn return_time(&self) -> &QuadraticReal {
        &self.prefix[self.return_len]
    }

    /// `t_j`: flow time from the marker to the `j`-th section point.
    pub fn schedule(&self) -> Vec<QuadraticReal> {
        let mut t = vec![QuadraticReal::zero()];
        for s in &self.steps[..self.steps.len() - 1] {
            let next = t.last().expect("nonempty") + s;
            t.push(next);
        }
        t
    }

    fn base_segment(&self, left: usize) -> &[Symbol] {
        &self.key[left..left + self.return_len]
    }
}

/// Marker returns and their codes, shared by all recoded points.
#[derive(Debug)]
pub struct Codebook {
    pub kind: RecodeKind,
    pub p: QuadraticReal,
    pub q: QuadraticReal,
    pub marker: Word,
    pub max_gap: usize,
    pub left: usize,
    pub right: usize,
    pub atoms: Vec<Atom>,
    by_key: HashMap<Word, usize>,
    by_block: HashMap<Word, usize>,
}

impl Codebook {
    fn new(
        kind: RecodeKind,
        p: QuadraticReal,
        q: QuadraticReal,
        marker: &MarkerSet,
        left: usize,
        right: usize,
        atoms: Vec<Atom>,
    ) -> Self {
        let by_key = atoms.iter().enumerate().map(|(i, a)| (a.key.clone(), i)).collect();
        let by_block = atoms.iter().enumerate().map(|(i, a)| (a.block.clone(), i)).collect();
        Self {
            kind,
            p,
            q,
            marker: marker.word.clone(),
            max_gap: marker.max_gap,
            left,
            right,
            atoms,
            by_key,
            by_block,
        }
    }

    fn l(&self) -> usize {
        self.marker.len()
    }

    /// Last marker occurrence starting at or before `i`.
    fn marker_at_or_before(&self, x: &dyn PointOracle, i: i64) -> Result<i64> {
        let start = i + 1 - self.max_gap as i64;
        let text = x.block(start, i + self.l() as i64)?;
        occurrences(&text, &self.marker)
            .last()
            .map(|&o| start + o as i64)
            .ok_or_else(|| Error::Inadmissible(text.clone()))
    }

    /// Atom index and return length of the marker occurrence at `mk`.
    fn atom_at(&self, x: &dyn PointOracle, mk: i64) -> Result<usize> {
        let (left, right) = (self.left as i64, self.right as i64);
        let text = x.block(mk - left, mk + self.max_gap as i64 + right.max(self.l() as i64))?;
        let g = occurrences(&text[self.left + 1..], &self.marker)
            .first()
            .map(|&o| o + 1)
            .ok_or_else(|| Error::Inadmissible(text.clone()))?;
        let key = &text[..self.left + g + self.right];
        self.by_key
            .get(key)
            .copied()
            .ok_or_else(|| Error::Inadmissible(Word::from(key)))
    }

    /// Start positions of blocks inside a Z-window.
    fn block_starts(&self, window: &[Symbol]) -> Vec<usize> {
        match self.kind.marking_pattern() {
            None => window
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == 2)
                .map(|(i, _)| i + 1)
                .collect(),
            Some(pattern) => occurrences(window, &pattern)
                .into_iter()
                .map(|o| o + pattern.len() - 1)
                .collect(),
        }
    }

    fn block_len(&self, atom: usize) -> i64 {
        self.atoms[atom].block.len() as i64
    }
}

/// A point of the recoded subshift `Z`, computed lazily from a base point.
///
/// Z-coordinate 0 is the first symbol of the block of the marker
/// occurrence at base coordinate `origin`.
#[derive(Clone)]
pub struct RecodedPoint {
    book: Arc<Codebook>,
    base: SharedPoint,
    origin: i64,
}

impl fmt::Debug for RecodedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RecodedPoint").field("origin", &self.origin).finish()
    }
}

impl RecodedPoint {
    pub fn base(&self) -> &SharedPoint {
        &self.base
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// `(z_start, marker, atom)` for consecutive blocks covering `[start, end)`.
    fn blocks(&self, start: i64, end: i64) -> Result<Vec<(i64, i64, usize)>> {
        let book = &self.book;
        let x = self.base.as_ref();
        let (mut z, mut mk) = (0i64, self.origin);
        while z > start {
            mk = book.marker_at_or_before(x, mk - 1)?;
            z -= book.block_len(book.atom_at(x, mk)?);
        }
        let mut out = Vec::new();
        while z < end {
            let a = book.atom_at(x, mk)?;
            out.push((z, mk, a));
            z += book.block_len(a);
            mk += book.atoms[a].return_len as i64;
        }
        Ok(out)
    }

    /// Z-symbols and roof values `r'` on `[start, end)`.
    pub fn segment(&self, start: i64, end: i64) -> Result<(Word, Vec<QuadraticReal>)> {
        let mut symbols = Vec::new();
        let mut roofs = Vec::new();
        let blocks = self.blocks(start, end)?;
        let first = blocks.first().map_or(start, |b| b.0);
        for &(_, _, a) in &blocks {
            symbols.extend_from_slice(&self.book.atoms[a].block);
            roofs.extend_from_slice(&self.book.atoms[a].steps);
        }
        let (s, e) = ((start - first) as usize, (end - first) as usize);
        Ok((Word(symbols[s..e].to_vec()), roofs[s..e].to_vec()))
    }
}

impl PointOracle for RecodedPoint {
    fn block(&self, start: i64, end: i64) -> Result<Word> {
        if end <= start {
            return Ok(Word::default());
        }
        Ok(self.segment(start, end)?.0)
    }
}

/// A point `(z, index, height)` of the recoded suspension.
#[derive(Clone, Debug)]
pub struct ZPoint {
    pub point: Arc<RecodedPoint>,
    pub index: i64,
    pub height: QuadraticReal,
}

/// Section return-time classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnClass {
    P,
    Q,
    Remainder,
}

impl fmt::Display for ReturnClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReturnClass::P => "p",
            ReturnClass::Q => "q",
            ReturnClass::Remainder => "remainder",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Census {
    pub returns: usize,
    pub counts: BTreeMap<ReturnClass, usize>,
    /// Return times outside every class; zero for a correct construction.
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OcapRow {
    pub symbol: Symbol,
    /// Largest frequency seen over the sampled orbit segments.
    pub observed: f64,
    /// Largest frequency inside a single block: an upper bound for `ocap`.
    pub block_bound: f64,
}

/// Tunables for the marker search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecodeOptions {
    /// Marker separation `n`; defaults to a value derived from the parameters.
    pub separation: Option<usize>,
    pub max_word_len: usize,
    pub marker_depth: usize,
    /// Length of the words listed for `Z`.
    pub z_window: usize,
}

impl Default for RecodeOptions {
    fn default() -> Self {
        Self {
            separation: None,
            max_word_len: 600,
            marker_depth: 1600,
            z_window: 400,
        }
    }
}

/// Key, return length and roof prefix sums for each marker return.
struct RawAtom {
    key: Word,
    g: usize,
    prefix: Vec<QuadraticReal>,
}

fn raw_atoms(
    flow: &SuspensionFlow,
    marker: &MarkerSet,
    left: usize,
    right: usize,
    cover: &[Word],
) -> Result<Vec<RawAtom>> {
    let mut keys = BTreeSet::new();
    for key in marker_keys(cover, &marker.word, left, right) {
        keys.insert(Word::from(key.1));
    }
    keys.into_iter()
        .map(|key| {
            let g = occurrences(&key[left + 1..], &marker.word)[0] + 1;
            let mut prefix = vec![QuadraticReal::zero()];
            for i in 0..g {
                let next = prefix[i].try_add(flow.roof().at_offset(&key, left + i)?)?;
                prefix.push(next);
            }
            Ok(RawAtom { key, g, prefix })
        })
        .collect()
}

/// `(text, key)` for each marker return inside the texts whose key, with
/// `left` and `right` symbols of context, fits in the text. Keys of one
/// text come in orbit order.
fn marker_keys<'a>(
    texts: &'a [Word],
    marker: &'a [Symbol],
    left: usize,
    right: usize,
) -> impl Iterator<Item = (usize, &'a [Symbol])> + 'a {
    texts.iter().enumerate().flat_map(move |(t, u)| {
        let occ = occurrences(u, marker);
        let keys: Vec<_> = occ
            .windows(2)
            .filter(|p| p[0] >= left && p[1] + right <= u.len())
            .map(|p| (t, &u[p[0] - left..p[1] + right]))
            .collect();
        keys
    })
}

/// Cover texts deep enough to hold every marker return with its context.
fn cover_for(flow: &SuspensionFlow, marker: &MarkerSet, left: usize, right: usize, cached: &[Word]) -> Result<Vec<Word>> {
    let len = left + marker.max_gap + right;
    match cached.first() {
        Some(t) if t.len() >= len && cached.len() == 1 => Ok(cached.to_vec()),
        _ => flow.base().cover(len),
    }
}

fn key_margins(flow: &SuspensionFlow, marker: &MarkerSet) -> (usize, usize) {
    let m = flow.roof().radius();
    (m, m.max(marker.word.len()))
}

/// Section pieces for atoms with the given schedules.
fn pieces_for(
    atoms: &[(&Word, &[QuadraticReal], Vec<QuadraticReal>)],
    left: usize,
) -> Result<(Vec<SectionPiece>, Vec<(usize, usize)>)> {
    let mut pieces = Vec::new();
    let mut info = Vec::new();
    for (a, (key, prefix, times)) in atoms.iter().enumerate() {
        for (j, t) in times.iter().enumerate() {
            let ib = prefix.partition_point(|s| s <= t) - 1;
            pieces.push(SectionPiece::new(
                Cylinder::new(-((left + ib) as i64), (*key).clone()),
                t.try_sub(&prefix[ib])?,
            ));
            info.push((a, j));
        }
    }
    Ok((pieces, info))
}

fn entropy_check(flow: &SuspensionFlow, p: &QuadraticReal, q: &QuadraticReal) -> Result<()> {
    let h = flow.base().topological_entropy(16)?.value / flow.roof().min_value().to_f64();
    let bound = 2.0 * std::f64::consts::LN_2 / (p.to_f64() + q.to_f64());
    if h >= bound {
        return Err(Error::PreconditionFailed(format!(
            "flow entropy bound {h:.6} is not below 2log2/(p+q) = {bound:.6}"
        )));
    }
    Ok(())
}

fn schedule_dex(
    raw: &[RawAtom],
    p: &QuadraticReal,
    q: &QuadraticReal,
    epsilon: &QuadraticReal,
    delta: &QuadraticReal,
    words_n: usize,
    memo: &mut Memo,
) -> Result<Vec<Atom>> {
    let mut chosen = Vec::new();
    for a in raw {
        let t = &a.prefix[a.g];
        let best = match memo.get(&(t.clone(), 0)) {
            Some(b) => b.clone(),
            None => {
                let pairs = pairs_below(t, p, q, |l| {
                    let lo = ratio_floor(l, epsilon).ok()?.max(1);
                    (lo <= l).then_some((lo, l))
                })?;
                let b = pairs
                    .into_iter()
                    .filter(|c| c.2.is_positive())
                    .min_by(|a, b| a.2.partial_cmp(&b.2).expect("one field"))
                    .filter(|c| &c.2 < delta);
                memo.insert((t.clone(), 0), b.clone());
                b
            }
        };
        let best = best.ok_or_else(|| {
                Error::InfeasibleSchedule(format!("no pair (k, l) leaves a remainder in (0, δ) for return time {t}"))
            })?;
        chosen.push((best.0 as usize, best.1 as usize, best.2));
    }
    let classes = classes_of(raw, &chosen);
    let mut atoms = Vec::new();
    for (a, (k, l, beta)) in raw.iter().zip(chosen) {
        let code = BalancedCode::balanced(k);
        let members = classes[&(k, l)].len();
        check_capacity(k, l, members.max(words_n), code.count())?;
        let rank = classes[&(k, l)].iter().position(|w| *w == &a.key).expect("member") as u128;
        let mut block = code.unrank(rank)?.into_inner();
        block.extend(std::iter::repeat_n(0, l - k));
        block.push(2);
        let steps = block
            .iter()
            .map(|&s| match s {
                1 => p.clone(),
                0 => q.clone(),
                _ => beta.clone(),
            })
            .collect();
        atoms.push(Atom {
            key: a.key.clone(),
            return_len: a.g,
            prefix: a.prefix.clone(),
            k,
            l,
            remainder: beta,
            rank,
            block: Word(block),
            steps,
        });
    }
    Ok(atoms)
}

fn classes_of<'a>(
    raw: &'a [RawAtom],
    chosen: &[(usize, usize, QuadraticReal)],
) -> BTreeMap<(usize, usize), Vec<&'a Word>> {
    let mut classes: BTreeMap<(usize, usize), Vec<&Word>> = BTreeMap::new();
    for (a, c) in raw.iter().zip(chosen) {
        classes.entry((c.0, c.1)).or_default().push(&a.key);
    }
    for v in classes.values_mut() {
        v.sort();
    }
    classes
}

fn check_capacity(k: usize, l: usize, atoms: usize, capacity: u128) -> Result<()> {
    if atoms as u128 > capacity {
        return Err(Error::CapacityExceeded {
            k: k as u64,
            l: l as u64,
            atoms,
            capacity,
        });
    }
    Ok(())
}

const MAX_ZERO_RUN: usize = 64;

/// Best `(k, l, remainder)` per return time (and zero-run bound), shared
/// across marker candidates.
type Memo = HashMap<(QuadraticReal, usize), Option<(u64, u64, QuadraticReal)>>;

fn schedule_dep(
    raw: &[RawAtom],
    p: &QuadraticReal,
    q: &QuadraticReal,
    m: usize,
    delta: &QuadraticReal,
    words_n: usize,
    memo: &mut Memo,
) -> Result<(usize, Vec<Atom>)> {
    let mut last_err = None;
    for kk in 2..=MAX_ZERO_RUN {
        let mut chosen = Vec::new();
        for a in raw {
            let t = &a.prefix[a.g];
            let best = match memo.get(&(t.clone(), kk)) {
                Some(b) => b.clone(),
                None => {
                    let pairs = pairs_below(t, p, q, |l| {
                        let hi = (l as usize).checked_sub(1 + m + 2 * kk)?;
                        (hi >= 3).then_some((3, hi as u64))
                    })?;
                    let b = pairs
                        .into_iter()
                        .filter(|c| c.2.is_positive() && &c.2 <= delta)
                        .max_by_key(|c| c.0);
                    memo.insert((t.clone(), kk), b.clone());
                    b
                }
            };
            match best {
                Some(c) => chosen.push((c.0 as usize, c.1 as usize, c.2)),
                None => {
                    return Err(last_err.unwrap_or_else(|| {
                        Error::InfeasibleSchedule(format!(
                            "return time {t} admits no block with remainder in (0, δ] and K = {kk}"
                        ))
                    }))
                }
            }
        }
        let classes = classes_of(raw, &chosen);
        let fits = classes.iter().try_for_each(|(&(k, l), members)| {
            let code = BalancedCode::new(2 * k, k - 1, true, Some(kk));
            check_capacity(k, l, members.len().max(words_n), code.count())
        });
        if let Err(e) = fits {
            last_err = Some(e);
            continue;
        }
        let mut atoms = Vec::new();
        for (a, (k, l, beta)) in raw.iter().zip(chosen) {
            let code = BalancedCode::new(2 * k, k - 1, true, Some(kk));
            let rank = classes[&(k, l)].iter().position(|w| *w == &a.key).expect("member") as u128;
            let mut block = code.unrank(rank)?.into_inner();
            let tail = l - k - 1 - kk;
            block.extend(std::iter::repeat_n(0, tail));
            block.push(1);
            block.extend(std::iter::repeat_n(0, kk));
            let last = block.len() - 1;
            let steps = block
                .iter()
                .enumerate()
                .map(|(i, &s)| match (s, i == last) {
                    (1, _) => p.clone(),
                    (_, false) => q.clone(),
                    (_, true) => q + &beta,
                })
                .collect();
            atoms.push(Atom {
                key: a.key.clone(),
                return_len: a.g,
                prefix: a.prefix.clone(),
                k,
                l,
                remainder: beta,
                rank,
                block: Word(block),
                steps,
            });
        }
        return Ok((kk, atoms));
    }
    Err(last_err.unwrap_or_else(|| Error::InfeasibleSchedule("no zero-run bound fits".into())))
}

enum Plan {
    Dex { epsilon: QuadraticReal },
    Dep { m: usize },
}

fn search(
    flow: &SuspensionFlow,
    p: &QuadraticReal,
    q: &QuadraticReal,
    delta: &QuadraticReal,
    plan: &Plan,
    opts: &RecodeOptions,
    n: usize,
) -> Result<(MarkerSet, RecodeKind, Vec<Atom>)> {
    let words_n = flow.base().count_words(n)?.min(usize::MAX as u128) as usize;
    let cover = flow.base().cover(opts.marker_depth)?;
    let mut memo = Memo::new();
    let mut attempt = |marker: &MarkerSet| -> Result<(RecodeKind, Vec<Atom>)> {
        let (left, right) = key_margins(flow, marker);
        let texts = cover_for(flow, marker, left, right, &cover)?;
        let raw = raw_atoms(flow, marker, left, right, &texts)?;
        match plan {
            Plan::Dex { epsilon } => Ok((
                RecodeKind::Dex,
                schedule_dex(&raw, p, q, epsilon, delta, words_n, &mut memo)?,
            )),
            Plan::Dep { m } => {
                let (k, atoms) = schedule_dep(&raw, p, q, *m, delta, words_n, &mut memo)?;
                Ok((RecodeKind::Dep { m: *m, k }, atoms))
            }
        }
    };
    let mut last_err = None;
    let mut chosen = None;
    let found = build_marker_with(flow.base(), n, opts.max_word_len, opts.marker_depth, |m| {
        match attempt(m) {
            Ok(r) => {
                chosen = Some(r);
                true
            }
            Err(e) => {
                last_err = Some(e);
                false
            }
        }
    });
    match found {
        Ok(marker) => {
            let (kind, atoms) = chosen.expect("accepted marker");
            Ok((marker, kind, atoms))
        }
        Err(Error::NoMarkerFound { .. }) if last_err.is_some() => Err(last_err.expect("checked")),
        Err(Error::NoMarkerFound {
            max_word_len,
            depth,
            witness,
        }) => Err(Error::MarkerUnavailable(format!(
            "no marker of separation {n} up to length {max_word_len} at depth {depth}{}",
            witness.map(|w| format!(" (periodic witness {w})")).unwrap_or_default()
        ))),
        Err(e) => Err(e),
    }
}

/// A flow together with a section whose return times take the prescribed
/// values, and the recoded subshift `Z` of its itineraries.
#[derive(Clone, Debug)]
pub struct RecodedFlow {
    flow: SuspensionFlow,
    book: Arc<Codebook>,
    marker: MarkerSet,
    separation: usize,
    delta: QuadraticReal,
    epsilon: Option<QuadraticReal>,
    section: CrossSection,
    piece_info: Vec<(usize, usize)>,
    z: Generated,
}

impl RecodedFlow {
    fn assemble(
        flow: &SuspensionFlow,
        marker: MarkerSet,
        kind: RecodeKind,
        atoms: Vec<Atom>,
        p: &QuadraticReal,
        q: &QuadraticReal,
        delta: &QuadraticReal,
        epsilon: Option<QuadraticReal>,
        separation: usize,
        z_window: usize,
    ) -> Result<Self> {
        let (left, right) = key_margins(flow, &marker);
        let schedules: Vec<_> = atoms.iter().map(|a| (&a.key, a.prefix.as_slice(), a.schedule())).collect();
        let (pieces, piece_info) = pieces_for(&schedules, left)?;
        let section = CrossSection::new(pieces, left + marker.max_gap + right)?;
        let book = Arc::new(Codebook::new(kind, p.clone(), q.clone(), &marker, left, right, atoms));
        let z = z_language(flow, &book, z_window)?;
        Ok(Self {
            flow: flow.clone(),
            book,
            marker,
            separation,
            delta: delta.clone(),
            epsilon,
            section,
            piece_info,
            z,
        })
    }

    pub fn kind(&self) -> RecodeKind {
        self.book.kind
    }

    pub fn p(&self) -> &QuadraticReal {
        &self.book.p
    }

    pub fn q(&self) -> &QuadraticReal {
        &self.book.q
    }

    pub fn delta(&self) -> &QuadraticReal {
        &self.delta
    }

    pub fn epsilon(&self) -> Option<&QuadraticReal> {
        self.epsilon.as_ref()
    }

    pub fn separation(&self) -> usize {
        self.separation
    }

    pub fn marker(&self) -> &MarkerSet {
        &self.marker
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.book.atoms
    }

    pub fn flow(&self) -> &SuspensionFlow {
        &self.flow
    }

    pub fn section(&self) -> &CrossSection {
        &self.section
    }

    /// The recoded subshift, listed by its words of length `z_window`.
    pub fn z(&self) -> &Generated {
        &self.z
    }

    /// Z-symbol carried by a section piece.
    pub fn piece_symbol(&self, piece: usize) -> Symbol {
        let (a, j) = self.piece_info[piece];
        self.book.atoms[a].block[j]
    }

    /// `[1] ↦ p`, `[0] ↦ q`, and the remainder class, by exact comparison.
    pub fn classify(&self, t: &QuadraticReal) -> Option<ReturnClass> {
        let (p, q) = (self.p(), self.q());
        if t == p {
            return Some(ReturnClass::P);
        }
        if t == q {
            return Some(ReturnClass::Q);
        }
        let ok = match self.kind() {
            RecodeKind::Dex => t.is_positive() && t < &self.delta,
            RecodeKind::Dep { .. } => t > q && t <= &(q + &self.delta),
        };
        ok.then_some(ReturnClass::Remainder)
    }

    /// Classifies `count` successive section returns along the orbit of `p`.
    pub fn census(&self, p: &FlowPoint, count: usize) -> Result<Census> {
        let first = self.section.return_to_section(&self.flow, p, self.marker.max_gap + 1)?;
        let hits = self
            .section
            .returns(&self.flow, &first.landing, count, self.marker.max_gap + 1)?;
        let mut counts = BTreeMap::new();
        let mut violations = 0;
        for h in &hits {
            match self.classify(&h.time) {
                Some(c) => *counts.entry(c).or_insert(0) += 1,
                None => violations += 1,
            }
        }
        Ok(Census {
            returns: hits.len(),
            counts,
            violations,
        })
    }

    /// Z-point whose coordinate 0 starts the block of the marker at `origin`.
    pub fn z_point(&self, base: SharedPoint, origin: i64) -> RecodedPoint {
        RecodedPoint {
            book: self.book.clone(),
            base,
            origin,
        }
    }

    /// Z-point whose block containing base coordinate `i` starts at 0.
    pub fn z_point_at(&self, base: SharedPoint, i: i64) -> Result<RecodedPoint> {
        let origin = self.book.marker_at_or_before(base.as_ref(), i)?;
        Ok(self.z_point(base, origin))
    }

    /// The recoded image of a flow point.
    pub fn encode(&self, p: &FlowPoint) -> Result<ZPoint> {
        let z = self.z_point_at(p.point.clone(), p.index)?;
        let a = &self.book.atoms[self.book.atom_at(p.point.as_ref(), z.origin)?];
        let tau = a.prefix[(p.index - z.origin) as usize].try_add(&p.height)?;
        let schedule = a.schedule();
        let j = schedule.partition_point(|t| t <= &tau) - 1;
        Ok(ZPoint {
            height: tau.try_sub(&schedule[j])?,
            index: j as i64,
            point: Arc::new(z),
        })
    }

    /// Z-window of the given radius around the image of `p`, and its height.
    pub fn encode_window(&self, p: &FlowPoint, radius: usize) -> Result<(Word, QuadraticReal)> {
        let z = self.encode(p)?;
        let r = radius as i64;
        Ok((z.point.block(z.index - r, z.index + r + 1)?, z.height))
    }

    /// Inverse of [`encode_window`](Self::encode_window): the base block of
    /// radius `base_radius` around the decoded point, and its height.
    pub fn decode(&self, window: &[Symbol], height: &QuadraticReal, base_radius: usize) -> Result<(Word, QuadraticReal)> {
        let book = &self.book;
        let center = window.len() / 2;
        let starts = book.block_starts(window);
        let mut base = Vec::new();
        let mut located = None;
        for pair in starts.windows(2) {
            let (s, e) = (pair[0], pair[1]);
            let a = *book
                .by_block
                .get(&window[s..e])
                .ok_or_else(|| Error::Inadmissible(Word::from(&window[s..e])))?;
            let atom = &book.atoms[a];
            if (s..e).contains(&center) {
                let tau = atom.schedule()[center - s].try_add(height)?;
                let ib = atom.prefix.partition_point(|t| t <= &tau) - 1;
                located = Some((base.len() + ib, tau.try_sub(&atom.prefix[ib])?));
            }
            base.extend_from_slice(atom.base_segment(book.left));
        }
        let (c, h) = located.ok_or(Error::HorizonExceeded {
            start: 0,
            end: window.len() as i64,
        })?;
        if c < base_radius || c + base_radius >= base.len() {
            return Err(Error::HorizonExceeded {
                start: c as i64 - base_radius as i64,
                end: (c + base_radius) as i64,
            });
        }
        Ok((Word(base[c - base_radius..=c + base_radius].to_vec()), h))
    }

    /// Observed symbol frequencies of `Z` over `[0, horizon)` for each base
    /// point, against the per-block bound.
    pub fn ocap_estimates(&self, points: &[SharedPoint], horizon: usize) -> Result<Vec<OcapRow>> {
        let alphabet = self.kind().alphabet();
        let mut observed = vec![0.0f64; alphabet];
        for x in points {
            let z = self.z_point_at(x.clone(), 0)?.block(0, horizon as i64)?;
            for (s, o) in observed.iter_mut().enumerate() {
                let f = z.iter().filter(|&&c| c as usize == s).count() as f64 / horizon as f64;
                *o = o.max(f);
            }
        }
        Ok((0..alphabet)
            .map(|s| OcapRow {
                symbol: s as Symbol,
                observed: observed[s],
                block_bound: self
                    .atoms()
                    .iter()
                    .map(|a| a.block.iter().filter(|&&c| c as usize == s).count() as f64 / a.block.len() as f64)
                    .fold(0.0, f64::max),
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        let atoms = self
            .atoms()
            .iter()
            .map(|a| AtomJson {
                key: a.key.clone(),
                return_len: a.return_len,
                return_time: a.return_time().to_string(),
                k: a.k,
                l: a.l,
                remainder: a.remainder.to_string(),
                rank: a.rank.to_string(),
                block: a.block.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&RecodedJson {
            code: self.kind(),
            p: self.p().to_string(),
            q: self.q().to_string(),
            delta: self.delta.to_string(),
            epsilon: self.epsilon.as_ref().map(|e| e.to_string()),
            separation: self.separation,
            marker: &self.marker,
            key_left: self.book.left,
            key_right: self.book.right,
            atoms,
        })
        .expect("recoded flows serialize")
    }
}

#[derive(Serialize)]
struct AtomJson {
    key: Word,
    return_len: usize,
    return_time: String,
    k: usize,
    l: usize,
    remainder: String,
    rank: String,
    block: Word,
}

#[derive(Serialize)]
struct RecodedJson<'a> {
    code: RecodeKind,
    p: String,
    q: String,
    delta: String,
    epsilon: Option<String>,
    separation: usize,
    marker: &'a MarkerSet,
    key_left: usize,
    key_right: usize,
    atoms: Vec<AtomJson>,
}

/// Every length-`window` word of `Z`, by encoding all base words long
/// enough to contain any such window.
fn z_language(flow: &SuspensionFlow, book: &Codebook, window: usize) -> Result<Generated> {
    let min_block = book.atoms.iter().map(|a| a.block.len()).min().unwrap_or(1);
    let blocks = window.div_ceil(min_block) + 2;
    let depth = blocks * book.max_gap + book.left + book.right + book.l();
    let texts = flow.base().cover(depth)?;
    let mut words = HashSet::new();
    let mut z: Vec<Symbol> = Vec::new();
    let mut current = None;
    for (t, key) in marker_keys(&texts, &book.marker, book.left, book.right) {
        if current != Some(t) {
            words.extend(z.windows(window).map(Word::from));
            z.clear();
            current = Some(t);
        }
        let a = book.by_key.get(key).ok_or_else(|| Error::Inadmissible(Word::from(key)))?;
        z.extend_from_slice(&book.atoms[*a].block);
    }
    words.extend(z.windows(window).map(Word::from));
    Generated::new(book.kind.alphabet(), window, words)
}

/// A three-valued roof: returns exactly `p`, exactly `q`, or in `(0, δ)`.
pub fn recode_dex(
    flow: &SuspensionFlow,
    p: &QuadraticReal,
    q: &QuadraticReal,
    epsilon: &QuadraticReal,
    delta: &QuadraticReal,
    opts: &RecodeOptions,
) -> Result<RecodedFlow> {
    check_pq(p, q)?;
    if !epsilon.is_positive() {
        return Err(Error::PreconditionFailed("epsilon must be positive".into()));
    }
    if !delta.is_positive() || delta >= p || delta >= q {
        return Err(Error::PreconditionFailed("δ must lie in (0, min(p, q))".into()));
    }
    entropy_check(flow, p, q)?;
    let n = opts
        .separation
        .unwrap_or_else(|| to_u64(QuadraticReal::one().try_div(epsilon).map(|x| x.floor()).unwrap_or_default()) as usize + 1);
    let plan = Plan::Dex {
        epsilon: epsilon.clone(),
    };
    let (marker, kind, atoms) = search(flow, p, q, delta, &plan, opts, n)?;
    RecodedFlow::assemble(flow, marker, kind, atoms, p, q, delta, Some(epsilon.clone()), n, opts.z_window)
}

/// A binary recoding with roof `p` on `[1]`, in `[q, q + δ]` on `[0]`, and
/// the marker returns flagged by `0^{M+K} 1 0^K 1`.
pub fn recode_dep(
    flow: &SuspensionFlow,
    p: &QuadraticReal,
    q: &QuadraticReal,
    m: usize,
    delta: &QuadraticReal,
    opts: &RecodeOptions,
) -> Result<RecodedFlow> {
    check_pq(p, q)?;
    if p >= q {
        return Err(Error::PreconditionFailed("p < q is required".into()));
    }
    if m < 2 {
        return Err(Error::PreconditionFailed("M ≥ 2 is required".into()));
    }
    if !delta.is_positive() {
        return Err(Error::PreconditionFailed("δ must be positive".into()));
    }
    entropy_check(flow, p, q)?;
    let n = opts.separation.unwrap_or(2);
    let (marker, kind, atoms) = search(flow, p, q, delta, &Plan::Dep { m }, opts, n)?;
    RecodedFlow::assemble(flow, marker, kind, atoms, p, q, delta, None, n, opts.z_window)
}

/// Whether some marker is available at all (used to tell missing markers
/// from infeasible schedules).
pub(crate) fn marker_exists(flow: &SuspensionFlow, n: usize, opts: &RecodeOptions) -> bool {
    build_marker(flow.base(), n, opts.max_word_len, opts.marker_depth).is_ok()
}
