use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{integrate_locally_constant, Measure};
use crate::quadratic::QuadraticReal;
use crate::suspension::Roof;
use crate::symbolic::{PointOracle, Subshift, SturmianPoint, Symbol, Word};

/// Finite-horizon orbit capacity of a union of 0-anchored cylinders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitCapacity {
    pub horizon: usize,
    /// Largest occupation frequency over length-`horizon` orbit segments
    /// (exact maximum when `upper_exact`, sampled otherwise).
    pub upper: f64,
    pub upper_exact: bool,
    /// Largest mass of the set under a periodic measure found.
    pub lower: f64,
    pub witness: Option<Word>,
}

fn hits(e: &[Word], text: &[Symbol], i: usize) -> bool {
    e.iter().any(|w| text[i..].starts_with(w))
}

/// `ocap(E)` estimates: an exact max-plus path computation over the
/// language for subshifts of finite type, exhaustive enumeration when the
/// language at the horizon is small, seeded phase sampling for Sturmian
/// systems; the lower witness is the best periodic measure of period at
/// most `max_period`.
pub fn orbit_capacity(
    base: &Subshift,
    e: &[Word],
    horizon: usize,
    samples: usize,
    seed: u64,
    max_period: usize,
) -> Result<OrbitCapacity> {
    if e.is_empty() || horizon == 0 {
        return Ok(OrbitCapacity {
            horizon,
            upper: 0.0,
            upper_exact: true,
            lower: 0.0,
            witness: None,
        });
    }
    for w in e {
        w.check_alphabet(base.alphabet_size())?;
    }
    let longest = e.iter().map(|w| w.len()).max().unwrap_or(1);

    let (best, exact) = match base {
        Subshift::Sft(sft) => {
            let k = longest.max(sft.memory()).max(1);
            (max_plus_occupation(base, e, k, horizon)?, true)
        }
        Subshift::Sturmian(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = 0usize;
            for _ in 0..samples.max(1) {
                let phase = QuadraticReal::from_ratio(rng.gen_range(0..1_000_000), 1_000_000);
                let text = SturmianPoint::new(s.clone(), phase).block(0, (horizon + longest) as i64)?;
                best = best.max((0..horizon).filter(|&i| hits(e, &text, i)).count());
            }
            (best, false)
        }
        _ => {
            let words = base.language(horizon + longest - 1)?;
            let best = words
                .iter()
                .map(|t| (0..horizon).filter(|&i| hits(e, t, i)).count())
                .max()
                .unwrap_or(0);
            (best, true)
        }
    };

    let mut lower = 0.0;
    let mut witness = None;
    for n in 1..=max_period {
        for p in base.periodic_points(n) {
            let text = p.block(0, (n + longest) as i64)?;
            let freq = (0..n).filter(|&i| hits(e, &text, i)).count() as f64 / n as f64;
            if freq > lower {
                lower = freq;
                witness = Some(p.canonical_orbit_word());
            }
        }
    }
    Ok(OrbitCapacity {
        horizon,
        upper: best as f64 / horizon as f64,
        upper_exact: exact,
        lower,
        witness,
    })
}

/// Maximum number of positions in `[0, horizon)` at which an `E`-word
/// starts, over admissible words, by dynamic programming on `k`-blocks.
fn max_plus_occupation(base: &Subshift, e: &[Word], k: usize, horizon: usize) -> Result<usize> {
    let states = base.language(k)?;
    let index: HashMap<&Word, usize> = states.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for w in base.language(k + 1)? {
        if let (Some(&a), Some(&b)) = (index.get(&Word::from(&w[..k])), index.get(&Word::from(&w[1..]))) {
            succ[a].push(b);
        }
    }
    let reward: Vec<usize> = states.iter().map(|s| usize::from(hits(e, s, 0))).collect();
    // best[s]: largest reward of a path of the current length starting at s.
    let mut best: Vec<Option<usize>> = reward.iter().map(|&r| Some(r)).collect();
    for _ in 1..horizon {
        best = (0..states.len())
            .map(|s| {
                succ[s]
                    .iter()
                    .filter_map(|&t| best[t])
                    .max()
                    .map(|b| b + reward[s])
            })
            .collect();
    }
    best.into_iter().flatten().max().ok_or(Error::EmptySubshift)
}

/// Mass of the slab `[B] × [c, c + h)` under the measure induced on the
/// suspension by `μ`: `Σ_w μ(w)·|[c, c+h) ∩ [0, r(w))| / ∫r dμ`.
pub fn theta_slab_mass(
    measure: &dyn Measure,
    roof: &Roof,
    b: &[Symbol],
    c: &QuadraticReal,
    h: &QuadraticReal,
) -> Result<QuadraticReal> {
    let m = roof.radius();
    let integral = integrate_locally_constant(measure, 2 * m + 1, |w| roof.value(w).cloned())?;
    let len = m + b.len().max(m + 1);
    let top = c.try_add(h)?;
    let mut total = QuadraticReal::zero();
    let mut stack = vec![Vec::new()];
    while let Some(word) = stack.pop() {
        if measure.cylinder_mass_f64(&word)? <= 0.0 {
            continue;
        }
        if word.len() == len {
            let r = roof.at_offset(&word, m)?;
            let hi = QuadraticReal::min_of(&top, r);
            let overlap = hi.try_sub(c)?;
            if overlap.is_positive() {
                total = total.try_add(&measure.cylinder_mass(&word)?.try_mul(&overlap)?)?;
            }
            continue;
        }
        let pos = word.len();
        for a in 0..measure.alphabet_size() as Symbol {
            if pos >= m && pos < m + b.len() && b[pos - m] != a {
                continue;
            }
            let mut next = word.clone();
            next.push(a);
            stack.push(next);
        }
    }
    total.try_div(&integral)
}
