use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{plogp, MarkovMeasure, Measure};
use crate::quadratic::QuadraticReal;
use crate::suspension::{CrossSection, Roof, SectionPiece, SuspensionFlow};
use crate::symbolic::{Cylinder, SharedPoint, Subshift, Symbol, Word};

/// `h(μ) / ∫r dμ`.
pub fn abramov_entropy(h_base: f64, roof_integral: f64) -> Result<f64> {
    if roof_integral <= 0.0 {
        return Err(Error::PreconditionFailed("roof integral must be positive".into()));
    }
    Ok(h_base / roof_integral)
}

/// Labels of the base partition by the 0-coordinate: `label[x_0]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePartition {
    labels: Vec<u8>,
}

impl BasePartition {
    pub fn new(labels: Vec<u8>) -> Self {
        Self { labels }
    }

    /// One atom per symbol.
    pub fn coordinate(alphabet: usize) -> Self {
        Self::new((0..alphabet as u8).collect())
    }

    pub fn label(&self, s: Symbol) -> u8 {
        self.labels[s as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TowerEntropy {
    pub n: usize,
    pub h_n: f64,
    pub h_n_minus_1: f64,
    /// `H_n / n` per time-δ step.
    pub per_step: f64,
    /// `H_n − H_{n−1}` per time-δ step; the primary estimate.
    pub conditional: f64,
    /// `conditional / δ`, the flow-entropy estimate.
    pub flow_entropy: f64,
    /// `(H_n / n) / δ`.
    pub flow_entropy_per_step: f64,
}

struct TowerWalk<'a> {
    measure: &'a dyn Measure,
    levels: HashMap<Word, u64>,
    radius: usize,
    partition: &'a BasePartition,
    n: usize,
    out: HashMap<Vec<u8>, f64>,
}

impl TowerWalk<'_> {
    /// `word` covers base coordinates `[−m, pos + m]`; the walk stands at
    /// base coordinate `pos`, tower level `level`.
    fn step(&mut self, word: &mut Vec<Symbol>, pos: usize, level: u64, prob: f64, labels: &mut Vec<u8>) -> Result<()> {
        let m = self.radius;
        let here = word[pos + m];
        labels.push(if level == 0 { 1 + self.partition.label(here) } else { 0 });
        if labels.len() == self.n {
            *self.out.entry(labels.clone()).or_default() += prob;
            labels.pop();
            return Ok(());
        }
        let top = self.levels[&word[pos..pos + 2 * m + 1]];
        if level + 1 < top {
            self.step(word, pos, level + 1, prob, labels)?;
        } else {
            let base = self.measure.cylinder_mass_f64(word)?;
            for s in 0..self.measure.alphabet_size() as Symbol {
                word.push(s);
                let mass = self.measure.cylinder_mass_f64(word)?;
                if mass > 0.0 {
                    self.step(word, pos + 1, 0, prob * mass / base, labels)?;
                }
                word.pop();
            }
        }
        labels.pop();
        Ok(())
    }
}

/// Entropy of the time-δ map of the discrete tower over `(μ, r)` with
/// respect to `{X_r ∖ (X × [0, δ))} ∪ {B × [0, δ) : B ∈ P}`, computed from
/// the exact distribution of length-`n` itineraries.
pub fn time_delta_tower_entropy(
    measure: &dyn Measure,
    roof: &Roof,
    delta: &QuadraticReal,
    partition: &BasePartition,
    n: usize,
) -> Result<TowerEntropy> {
    if n < 2 {
        return Err(Error::PreconditionFailed("itinerary length must be at least 2".into()));
    }
    let levels = roof.levels(delta)?;
    let m = roof.radius();
    let starts = measure.block_distribution(2 * m + 1)?;
    let mean_levels: f64 = starts
        .iter()
        .map(|(w, mu)| {
            levels
                .get(w)
                .map(|&c| mu * c as f64)
                .ok_or_else(|| Error::Inadmissible(w.clone()))
        })
        .sum::<Result<f64>>()?;
    let mut walk = TowerWalk {
        measure,
        levels,
        radius: m,
        partition,
        n,
        out: HashMap::new(),
    };
    for (w, mu) in &starts {
        let top = walk.levels[w];
        for level in 0..top {
            let mut word = w.0.clone();
            walk.step(&mut word, 0, level, mu / mean_levels, &mut Vec::with_capacity(n))?;
        }
    }
    let mut prefixes: HashMap<&[u8], f64> = HashMap::new();
    for (k, v) in &walk.out {
        *prefixes.entry(&k[..n - 1]).or_default() += v;
    }
    let h_n: f64 = walk.out.values().map(|&p| plogp(p)).sum();
    let h_prev: f64 = prefixes.values().map(|&p| plogp(p)).sum();
    let d = delta.to_f64();
    Ok(TowerEntropy {
        n,
        h_n,
        h_n_minus_1: h_prev,
        per_step: h_n / n as f64,
        conditional: h_n - h_prev,
        flow_entropy: (h_n - h_prev) / d,
        flow_entropy_per_step: h_n / n as f64 / d,
    })
}

/// First-passage kernel `F[a][b][t−1] = P(first return to A at time t, in
/// state b | start in a)` for a Markov chain and a set `A` of states,
/// truncated once the unreturned mass drops below `tail`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnDistribution {
    pub states: Vec<usize>,
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub truncation_mass: f64,
}

impl ReturnDistribution {
    pub fn horizon(&self) -> usize {
        self.kernel.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    /// `P(τ = t | a)` for `t = 1 ..= horizon`.
    pub fn return_time_law(&self, a: usize) -> Vec<f64> {
        let h = self.horizon();
        (0..h)
            .map(|t| self.kernel[a].iter().map(|row| row[t]).sum())
            .collect()
    }
}

pub fn first_return_distribution(markov: &MarkovMeasure, in_a: &[bool], tail: f64) -> Result<ReturnDistribution> {
    const MAX_HORIZON: usize = 1 << 16;
    let p = markov.transition_f64();
    let ns = p.len();
    let states: Vec<usize> = (0..ns).filter(|&s| in_a[s]).collect();
    if states.is_empty() {
        return Err(Error::PreconditionFailed("the inducing set is empty".into()));
    }
    let mut kernel = vec![vec![Vec::new(); states.len()]; states.len()];
    let mut vs: Vec<Vec<f64>> = states.iter().map(|&a| p[a].clone()).collect();
    let mut remaining = 1.0f64;
    for _ in 0..MAX_HORIZON {
        for (ai, v) in vs.iter().enumerate() {
            for (bi, &b) in states.iter().enumerate() {
                kernel[ai][bi].push(v[b]);
            }
        }
        remaining = 0.0;
        for v in vs.iter_mut() {
            let mut next = vec![0.0; ns];
            for s in (0..ns).filter(|&s| !in_a[s]) {
                if v[s] > 0.0 {
                    for (t, &pst) in p[s].iter().enumerate() {
                        next[t] += v[s] * pst;
                    }
                }
            }
            remaining = remaining.max((0..ns).filter(|&s| !in_a[s]).map(|s| v[s]).sum());
            *v = next;
        }
        if remaining < tail {
            break;
        }
    }
    if remaining >= tail {
        return Err(Error::InsufficientData(format!(
            "return-time tail {remaining:e} above {tail:e} after {MAX_HORIZON} steps"
        )));
    }
    Ok(ReturnDistribution {
        states,
        kernel,
        truncation_mass: remaining,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InducedCheck {
    pub n: usize,
    pub measure_of_a: f64,
    /// `μ(A)·(1/n)·H` of induced itineraries refined by return times.
    pub lhs: f64,
    /// `(1/n)·H` of ambient itineraries for `P ∪ {X ∖ A}`.
    pub rhs: f64,
    pub gap: f64,
    /// Conditional-entropy versions of both sides.
    pub lhs_conditional: f64,
    pub rhs_conditional: f64,
    pub truncation_mass: f64,
}

/// Both sides of `ν(A)·h(ν_A, f_A, P ∨ R_A) = h(ν, f, P̄)` at block length
/// `n`, for a Markov chain and `A` a union of 1-cylinders.
///
/// `labels[s]` is the atom of `P` containing `[s]` for `s ∈ A` and `None`
/// outside `A`. The induced side uses that `(a_i, τ_i)` is a Markov chain
/// when `P` separates the states of `A`; coarser `P` is rejected.
pub fn induced_entropy_identity_check(markov: &MarkovMeasure, labels: &[Option<u8>], n: usize) -> Result<InducedCheck> {
    let ns = markov.states();
    if labels.len() != ns || n == 0 {
        return Err(Error::PreconditionFailed("one label slot per state, n ≥ 1".into()));
    }
    let in_a: Vec<bool> = labels.iter().map(Option::is_some).collect();
    let a_labels: Vec<u8> = labels.iter().flatten().copied().collect();
    let mut seen = a_labels.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != a_labels.len() {
        return Err(Error::Unsupported(
            "the induced itinerary is computed exactly only when P separates the states of A".into(),
        ));
    }
    let pi = markov.stationary_f64();
    let mu_a: f64 = (0..ns).filter(|&s| in_a[s]).map(|s| pi[s]).sum();
    if mu_a <= 0.0 {
        return Err(Error::PreconditionFailed("μ(A) must be positive".into()));
    }
    let tail = 2f64.powi(-30);
    let rd = first_return_distribution(markov, &in_a, tail)?;
    let k = rd.states.len();
    let laws: Vec<Vec<f64>> = (0..k).map(|a| rd.return_time_law(a)).collect();

    // H(Y_0) with Y_0 = (a, τ).
    let mut h0 = 0.0;
    let mut h_cond = 0.0;
    for a in 0..k {
        let pa = pi[rd.states[a]] / mu_a;
        for (t, &pt) in laws[a].iter().enumerate() {
            let joint = pa * pt;
            if joint <= 0.0 {
                continue;
            }
            h0 += plogp(joint);
            // Y_1 = (b, τ') given (a, t): P(b | a, t)·P(τ' | b).
            let mut hy = 0.0;
            for b in 0..k {
                let pb = rd.kernel[a][b][t] / pt;
                if pb <= 0.0 {
                    continue;
                }
                for &pt2 in &laws[b] {
                    hy += plogp(pb * pt2);
                }
            }
            h_cond += joint * hy;
        }
    }
    let lhs = mu_a * (h0 + (n as f64 - 1.0) * h_cond) / n as f64;
    let lhs_conditional = mu_a * h_cond;

    let ambient: Vec<u8> = labels.iter().map(|l| l.map_or(0, |x| x + 1)).collect();
    let (h_n, h_prev) = hidden_block_entropies(markov, &ambient, n);
    let rhs = h_n / n as f64;
    Ok(InducedCheck {
        n,
        measure_of_a: mu_a,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        lhs_conditional,
        rhs_conditional: h_n - h_prev,
        truncation_mass: rd.truncation_mass,
    })
}

/// `(H_n, H_{n−1})` of the label process `label(X_i)` of a Markov chain,
/// by forward enumeration of label sequences.
fn hidden_block_entropies(markov: &MarkovMeasure, label: &[u8], n: usize) -> (f64, f64) {
    let p = markov.transition_f64();
    let pi = markov.stationary_f64();
    let ns = pi.len();
    let mut distinct: Vec<u8> = label.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut h = vec![0.0f64; n + 1];
    let mut stack: Vec<(usize, Vec<f64>)> = distinct
        .iter()
        .map(|&l| (1, (0..ns).map(|s| if label[s] == l { pi[s] } else { 0.0 }).collect()))
        .collect();
    while let Some((len, alpha)) = stack.pop() {
        let mass: f64 = alpha.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        h[len] += plogp(mass);
        if len == n {
            continue;
        }
        let mut next = vec![0.0; ns];
        for (s, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                for (t, &pst) in p[s].iter().enumerate() {
                    next[t] += a * pst;
                }
            }
        }
        for &l in &distinct {
            let part: Vec<f64> = (0..ns).map(|s| if label[s] == l { next[s] } else { 0.0 }).collect();
            stack.push((len + 1, part));
        }
    }
    (h[n], h[n - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KacCheck {
    pub returns: usize,
    pub simulated_mean: f64,
    /// `Σ t·P(τ = t)` over the truncated first-return law.
    pub exact_mean: f64,
    pub reciprocal_measure: f64,
    pub truncation_mass: f64,
}

/// Mean return time to `A = ⋃_{s ∈ a_symbols} [s]` along a seeded Markov
/// orbit, measured through the unit-roof suspension with exact times, next
/// to the truncated-chain value and `1/μ(A)`.
pub fn kac_check(markov: &MarkovMeasure, a_symbols: &[Symbol], returns: usize, seed: u64) -> Result<KacCheck> {
    let ns = markov.states();
    let mut in_a = vec![false; ns];
    for &s in a_symbols {
        *in_a
            .get_mut(s as usize)
            .ok_or(Error::SymbolOutOfRange { symbol: s, alphabet: ns })? = true;
    }
    let pi = markov.stationary_f64();
    let mu_a: f64 = (0..ns).filter(|&s| in_a[s]).map(|s| pi[s]).sum();
    let rd = first_return_distribution(markov, &in_a, 2f64.powi(-30))?;
    let exact_mean: f64 = (0..rd.states.len())
        .map(|a| {
            let w = pi[rd.states[a]] / mu_a;
            w * rd
                .return_time_law(a)
                .iter()
                .enumerate()
                .map(|(t, &p)| (t + 1) as f64 * p)
                .sum::<f64>()
        })
        .sum();

    let flow = SuspensionFlow::new(Subshift::full_shift(ns), Roof::constant(ns, QuadraticReal::one())?)?;
    let section = CrossSection::new(
        a_symbols
            .iter()
            .map(|&s| SectionPiece::new(Cylinder::at_zero(Word(vec![s])), QuadraticReal::zero()))
            .collect(),
        1,
    )?;
    let mut len = ((returns as f64 / mu_a.max(1e-9)) * 1.5) as usize + 10_000;
    let hits = loop {
        let path: SharedPoint = Arc::new(markov.sample_path(0, len, seed));
        let start = flow.point(path, 0, QuadraticReal::zero())?;
        let attempt = section
            .return_to_section(&flow, &start, len)
            .and_then(|first| section.returns(&flow, &first.landing, returns, len));
        match attempt {
            Ok(h) => break h,
            Err(Error::HorizonExceeded { .. }) | Err(Error::NotHit { .. }) if len < 1 << 30 => len *= 2,
            Err(e) => return Err(e),
        }
    };
    let total: QuadraticReal = hits.iter().map(|h| &h.time).sum();
    Ok(KacCheck {
        returns,
        simulated_mean: total.to_f64() / returns as f64,
        exact_mean,
        reciprocal_measure: 1.0 / mu_a,
        truncation_mass: rd.truncation_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{block_entropy, SturmianMeasure};
    use crate::symbolic::{Sft, Sturmian};

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    #[test]
    fn abramov_values() {
        let ln2 = 2f64.ln();
        assert_eq!(abramov_entropy(ln2, 2.0).unwrap(), ln2 / 2.0);
        assert_eq!(abramov_entropy(0.0, 1.7).unwrap(), 0.0);
        assert!((abramov_entropy(ln2, 1.5).unwrap() - 2.0 * ln2 / 3.0).abs() < 1e-15);
        assert!(abramov_entropy(ln2, 0.0).is_err());
    }

    #[test]
    fn unit_tower_is_the_base() {
        let m = MarkovMeasure::parry(&Sft::golden_mean()).unwrap();
        let roof = Roof::constant(2, q("1/2")).unwrap();
        let t = time_delta_tower_entropy(&m, &roof, &q("1/2"), &BasePartition::coordinate(2), 8).unwrap();
        assert!((t.per_step - block_entropy(&m, 8).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn doubled_roof_halves_entropy() {
        let m = MarkovMeasure::uniform_bernoulli(2);
        let roof = Roof::constant(2, q("2")).unwrap();
        let t = time_delta_tower_entropy(&m, &roof, &q("1"), &BasePartition::coordinate(2), 14).unwrap();
        assert!((t.flow_entropy - 2f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn incommensurable_roof_is_rejected() {
        let m = MarkovMeasure::uniform_bernoulli(2);
        let roof = Roof::constant(2, q("√2")).unwrap();
        assert!(matches!(
            time_delta_tower_entropy(&m, &roof, &q("1"), &BasePartition::coordinate(2), 4),
            Err(Error::IncommensurableRoof { .. })
        ));
    }

    #[test]
    fn sturmian_tower_entropy_is_small_and_decreasing() {
        let m = SturmianMeasure::new(Sturmian::silver());
        let roof = Roof::symbolwise(vec![q("1"), q("2")]).unwrap();
        let p = BasePartition::coordinate(2);
        let mut prev = f64::INFINITY;
        for n in [6, 9, 12] {
            let t = time_delta_tower_entropy(&m, &roof, &q("1"), &p, n).unwrap();
            assert!(t.conditional <= prev + 1e-12);
            prev = t.conditional;
        }
        assert!(prev <= 0.15, "{prev}");
    }

    #[test]
    fn geometric_return_times() {
        let m = MarkovMeasure::uniform_bernoulli(2);
        let rd = first_return_distribution(&m, &[true, false], 2f64.powi(-30)).unwrap();
        let law = rd.return_time_law(0);
        assert_eq!(law[0], 0.5);
        assert_eq!(law[3], 1.0 / 16.0);
        assert!(rd.truncation_mass < 2f64.powi(-30));
    }

    #[test]
    fn induced_identity_bernoulli() {
        let m = MarkovMeasure::uniform_bernoulli(2);
        let c = induced_entropy_identity_check(&m, &[Some(0), None], 10).unwrap();
        assert!(c.gap < 1e-6, "{c:?}");
        assert!((c.rhs - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn induced_identity_parry() {
        let m = MarkovMeasure::parry(&Sft::golden_mean()).unwrap();
        let c10 = induced_entropy_identity_check(&m, &[Some(0), None], 10).unwrap();
        let c14 = induced_entropy_identity_check(&m, &[Some(0), None], 14).unwrap();
        assert!(c10.gap < 0.05);
        assert!(c14.gap <= c10.gap);
        assert!((c14.lhs_conditional - c14.rhs_conditional).abs() < 1e-6);
        let whole = induced_entropy_identity_check(&m, &[Some(0), Some(1)], 6).unwrap();
        assert!((whole.lhs - whole.rhs).abs() < 1e-9);
        assert!(matches!(
            induced_entropy_identity_check(&m, &[Some(0), Some(0)], 6),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn kac_small_run() {
        let m = MarkovMeasure::uniform_bernoulli(2);
        let k = kac_check(&m, &[0], 5_000, 1).unwrap();
        assert!((k.exact_mean - 2.0).abs() < 1e-6);
        assert!((k.simulated_mean - 2.0).abs() < 0.1);
        assert_eq!(k, kac_check(&m, &[0], 5_000, 1).unwrap());
    }
}
