use std::collections::HashSet;

use num_traits::ToPrimitive;
use serde::Serialize;

use super::{cover_for, marker_keys, key_margins, marker_exists, pieces_for, raw_atoms, RawAtom, RecodeOptions};
use crate::error::{Error, Result};
use crate::markers::{build_marker_with, MarkerSet};
use crate::quadratic::QuadraticReal;
use crate::suspension::{CrossSection, SuspensionFlow};
use crate::symbolic::Word;

/// One marker return subdivided into `k` short and `l` long steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BogAtom {
    pub key: Word,
    pub return_len: usize,
    pub return_time: String,
    pub k: u64,
    pub l: u64,
    /// Length of the final step.
    pub last: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BogReport {
    pub target: String,
    pub epsilon: String,
    /// Step denominator `N > 3/ε`; steps are `c/N` and `(c+1)/N`.
    pub denominator: u64,
    pub c: u64,
    pub min_return: f64,
    pub max_return: f64,
    /// Every return time `t` satisfies `|t - a| < 2ε`, exactly.
    pub within_two_epsilon: bool,
    pub itinerary_length: usize,
    pub itinerary_words: usize,
    /// `(1/m) log |L_m|` of the itinerary over section pieces.
    pub itinerary_entropy: f64,
}

/// Section with nearly constant return time, before any re-embedding into
/// the binary full shift.
#[derive(Clone, Debug)]
pub struct BogSection {
    pub section: CrossSection,
    pub marker: MarkerSet,
    pub atoms: Vec<BogAtom>,
    pub report: BogReport,
}

/// Rational approximation of `log 2 / h + ε` (to within `1e-9`).
pub fn bog_target(h_top: f64, epsilon: &QuadraticReal) -> Result<QuadraticReal> {
    if h_top <= 0.0 || !h_top.is_finite() {
        return Err(Error::PreconditionFailed(
            "h_top must be positive and finite; pass the target directly".into(),
        ));
    }
    let a = (std::f64::consts::LN_2 / h_top * 1e9).ceil() as i64;
    QuadraticReal::from_ratio(a, 1_000_000_000).try_add(epsilon)
}

struct Plan {
    n_den: u64,
    c: u64,
}

impl Plan {
    fn step(&self, long: bool) -> QuadraticReal {
        QuadraticReal::from_ratio((self.c + u64::from(long)) as i64, self.n_den as i64)
    }

    /// `(k, l)` with `k c + l (c+1) = round(N T)`, if representable.
    fn split(&self, t: &QuadraticReal) -> Result<Option<(u64, u64)>> {
        let scaled = t.mul_int(self.n_den as i64).try_add(&QuadraticReal::from_ratio(1, 2))?;
        let Some(m) = scaled.floor().to_u64() else {
            return Ok(None);
        };
        let l = m % self.c;
        let Some(k) = m.checked_sub(l * (self.c + 1)).map(|r| r / self.c) else {
            return Ok(None);
        };
        Ok((k + l > 0).then_some((k, l)))
    }

    fn schedule(&self, a: &RawAtom) -> Result<Option<(u64, u64, Vec<QuadraticReal>)>> {
        let t = &a.prefix[a.g];
        let Some((k, l)) = self.split(t)? else {
            return Ok(None);
        };
        let mut times = vec![QuadraticReal::zero()];
        for j in 1..(k + l) {
            let prev = times.last().expect("nonempty");
            times.push(prev.try_add(&self.step(j > k))?);
        }
        if times.last().expect("nonempty") >= t {
            return Ok(None);
        }
        Ok(Some((k, l, times)))
    }
}

/// Marker-tower section whose return times are all within `2ε` of `target`.
pub fn recode_bog(
    flow: &SuspensionFlow,
    epsilon: &QuadraticReal,
    target: &QuadraticReal,
    itinerary_length: usize,
    opts: &RecodeOptions,
) -> Result<BogSection> {
    if !epsilon.is_positive() || epsilon >= &QuadraticReal::from_ratio(1, 2) {
        return Err(Error::PreconditionFailed("ε must lie in (0, 1/2)".into()));
    }
    let n_den = QuadraticReal::from_int(3).try_div(epsilon)?.floor().to_u64().unwrap_or(0) + 1;
    let c = target.mul_int(n_den as i64).floor().to_u64().unwrap_or(0);
    if c == 0 {
        return Err(Error::PreconditionFailed("target return time is too small".into()));
    }
    let plan = Plan { n_den, c };
    // Every integer above c² - c - 1 is a sum of c's and (c+1)'s.
    let frobenius = (c * c).saturating_sub(c + 1) as f64;
    let separation = opts.separation.unwrap_or_else(|| {
        let r = flow.roof().min_value().to_f64();
        (frobenius / (n_den as f64 * r)).floor() as usize + 1
    });

    let cover = flow.base().cover(opts.marker_depth)?;
    let feasible = |m: &MarkerSet| -> Result<Option<Vec<(RawAtom, u64, u64, Vec<QuadraticReal>)>>> {
        let (left, right) = key_margins(flow, m);
        let mut out = Vec::new();
        let texts = cover_for(flow, m, left, right, &cover)?;
        for a in raw_atoms(flow, m, left, right, &texts)? {
            match plan.schedule(&a)? {
                Some((k, l, times)) => out.push((a, k, l, times)),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    };
    let marker = build_marker_with(flow.base(), separation, opts.max_word_len, opts.marker_depth, |m| {
        matches!(feasible(m), Ok(Some(_)))
    })
    .map_err(|e| match e {
        Error::NoMarkerFound { .. } if marker_exists(flow, separation, opts) => Error::InfeasibleSchedule(format!(
            "no marker return time is a sum of steps {c}/{n_den} and {}/{n_den}",
            c + 1
        )),
        Error::NoMarkerFound { .. } => Error::MarkerUnavailable(format!("no marker of separation {separation}")),
        e => e,
    })?;
    let scheduled = feasible(&marker)?.expect("accepted marker");

    let (left, right) = key_margins(flow, &marker);
    let two_eps = epsilon.mul_int(2);
    let mut within = true;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut atoms = Vec::new();
    for (a, k, l, times) in &scheduled {
        let t = &a.prefix[a.g];
        let last = t.try_sub(times.last().expect("nonempty"))?;
        let mut returns: Vec<QuadraticReal> = times.windows(2).map(|w| &w[1] - &w[0]).collect();
        returns.push(last.clone());
        for r in &returns {
            within &= r.try_sub(target)?.abs() < two_eps;
            lo = lo.min(r.to_f64());
            hi = hi.max(r.to_f64());
        }
        atoms.push(BogAtom {
            key: a.key.clone(),
            return_len: a.g,
            return_time: t.to_string(),
            k: *k,
            l: *l,
            last: last.to_string(),
        });
    }

    let schedules: Vec<_> = scheduled
        .iter()
        .map(|(a, _, _, times)| (&a.key, a.prefix.as_slice(), times.clone()))
        .collect();
    let (pieces, _) = pieces_for(&schedules, left)?;
    let section = CrossSection::new(pieces, left + marker.max_gap + right)?;

    // Itinerary words over piece labels, from every base word long enough.
    let first_piece: Vec<u32> = scheduled
        .iter()
        .scan(0u32, |acc, s| {
            let start = *acc;
            *acc += s.3.len() as u32;
            Some(start)
        })
        .collect();
    let index: std::collections::HashMap<&Word, usize> =
        scheduled.iter().enumerate().map(|(i, s)| (&s.0.key, i)).collect();
    let min_pieces = scheduled.iter().map(|s| s.3.len()).min().unwrap_or(1);
    let depth = (itinerary_length.div_ceil(min_pieces) + 2) * marker.max_gap + left + right + marker.word.len();
    let mut words: HashSet<Vec<u32>> = HashSet::new();
    let texts = flow.base().cover(depth)?;
    let mut seq = Vec::new();
    let mut current = None;
    for (t, key) in marker_keys(&texts, &marker.word, left, right) {
        if current != Some(t) {
            words.extend(seq.windows(itinerary_length).map(<[u32]>::to_vec));
            seq.clear();
            current = Some(t);
        }
        let a = index[&Word::from(key)];
        seq.extend((0..scheduled[a].3.len() as u32).map(|j| first_piece[a] + j));
    }
    words.extend(seq.windows(itinerary_length).map(<[u32]>::to_vec));
    let itinerary_entropy = (words.len().max(1) as f64).ln() / itinerary_length as f64;

    Ok(BogSection {
        section,
        marker,
        atoms,
        report: BogReport {
            target: target.to_string(),
            epsilon: epsilon.to_string(),
            denominator: n_den,
            c,
            min_return: lo,
            max_return: hi,
            within_two_epsilon: within,
            itinerary_length,
            itinerary_words: words.len(),
            itinerary_entropy,
        },
    })
}
