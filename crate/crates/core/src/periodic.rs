//! Periodic orbit census, global periodic growth and the functions `p_k`
//! evaluated at periodic measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{d_distance, DMetricConfig, EmpiricalMeasure};
use crate::quadratic::QuadraticReal;
use crate::suspension::SuspensionFlow;
use crate::symbolic::{PeriodicPoint, Subshift, Word};

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    /// Least rotation of the minimal-period word.
    pub word: Word,
    pub minimal_period: usize,
    /// Period under the flow: the roof summed over one period (equal to
    /// `minimal_period` for a bare subshift).
    pub flow_period: QuadraticReal,
    pub measure: EmpiricalMeasure,
}

/// All periodic orbits of base period at most `max_period`.
#[derive(Clone, Debug)]
pub struct PeriodicCensus {
    pub alphabet: usize,
    pub max_period: usize,
    /// Sorted by minimal period, then word.
    pub orbits: Vec<PeriodicOrbit>,
    /// `#Fix(σⁿ)` at index `n - 1`.
    pub fixed_counts: Vec<u128>,
    /// `trace(Aⁿ)` for SFTs, at index `n - 1`.
    pub trace_counts: Option<Vec<u128>>,
    /// Flow periods are certified complete up to this value.
    pub flow_horizon: QuadraticReal,
}

impl PeriodicCensus {
    pub fn of_subshift(subshift: &Subshift, max_period: usize) -> Result<Self> {
        Self::build(subshift, max_period, |w| Ok(QuadraticReal::from_int(w.len() as i64)))
            .map(|mut c| {
                c.flow_horizon = QuadraticReal::from_int(max_period as i64);
                c
            })
    }

    /// Periodic orbits of the suspension flow, with `t(γ)` the roof sum.
    pub fn of_flow(flow: &SuspensionFlow, max_period: usize) -> Result<Self> {
        let roof = flow.roof();
        let mut census = Self::build(flow.base(), max_period, |w| {
            let p = PeriodicPoint::new(w.clone())?;
            flow.roof_sum(&p, 0, w.len() as i64)
        })?;
        census.flow_horizon = roof.min_value().mul_int(max_period as i64);
        Ok(census)
    }

    fn build(
        subshift: &Subshift,
        max_period: usize,
        flow_period: impl Fn(&Word) -> Result<QuadraticReal>,
    ) -> Result<Self> {
        let alphabet = subshift.alphabet_size();
        let mut orbits = Vec::new();
        let mut fixed_counts = Vec::with_capacity(max_period);
        for n in 1..=max_period {
            let points = subshift.periodic_points(n);
            fixed_counts.push(points.len() as u128);
            let mut seen = BTreeMap::new();
            for p in points.into_iter().filter(|p| p.minimal_period() == n) {
                seen.entry(p.canonical_orbit_word()).or_insert(p);
            }
            for (word, _) in seen {
                let point = PeriodicPoint::new(word.clone())?;
                orbits.push(PeriodicOrbit {
                    flow_period: flow_period(&word)?,
                    measure: EmpiricalMeasure::periodic(alphabet, point)?,
                    minimal_period: n,
                    word,
                });
            }
        }
        let trace_counts = match subshift {
            Subshift::Sft(s) => Some((1..=max_period).map(|n| s.trace_power(n)).collect()),
            _ => None,
        };
        Ok(Self {
            alphabet,
            max_period,
            orbits,
            fixed_counts,
            trace_counts,
            flow_horizon: QuadraticReal::zero(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn fix_count(&self, n: usize) -> Option<u128> {
        self.fixed_counts.get(n.checked_sub(1)?).copied()
    }

    /// Whether `#Fix(σⁿ)` agrees with `trace(Aⁿ)` wherever both are known.
    pub fn trace_consistent(&self) -> bool {
        self.trace_counts.as_ref().is_none_or(|t| t == &self.fixed_counts)
    }

    /// Each orbit word has exactly its recorded minimal period.
    pub fn periods_consistent(&self) -> bool {
        self.orbits
            .iter()
            .all(|o| {
                o.word.len() == o.minimal_period
                    && PeriodicPoint::new(o.word.clone()).is_ok_and(|p| p.minimal_period() == o.minimal_period)
            })
    }
}

/// Periodic growth read off a census.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicGrowth {
    /// `max_{n ≤ N} (1/n) log #Fix(σⁿ)`: the supremum over the horizon.
    pub sup: f64,
    /// Period at which `sup` is attained.
    pub sup_at: usize,
    /// `(1/N) log #Fix(σᴺ)`, the growth rate at the horizon.
    pub rate: f64,
    /// `max_t (1/t) log #{γ : t(γ) ≤ t}` over flow periods within the
    /// certified horizon.
    pub orbit_sup: f64,
    pub horizon: usize,
    /// Always set: values are lower bounds of the suprema over all periods.
    pub horizon_limited: bool,
}

pub fn global_periodic_growth(census: &PeriodicCensus) -> PeriodicGrowth {
    let mut sup = 0.0f64;
    let mut sup_at = 0;
    for (i, &c) in census.fixed_counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let v = (c as f64).ln() / (i + 1) as f64;
        if v > sup {
            sup = v;
            sup_at = i + 1;
        }
    }
    let rate = match census.fixed_counts.last() {
        Some(&c) if c > 0 => (c as f64).ln() / census.max_period as f64,
        _ => 0.0,
    };
    let mut periods: Vec<&QuadraticReal> = census
        .orbits
        .iter()
        .map(|o| &o.flow_period)
        .filter(|t| *t <= &census.flow_horizon)
        .collect();
    periods.sort_by(|a, b| a.partial_cmp(b).expect("one field"));
    let mut orbit_sup = 0.0f64;
    for (i, t) in periods.iter().enumerate() {
        // Count every orbit with period ≤ t, ties included.
        if periods.get(i + 1) == Some(t) {
            continue;
        }
        orbit_sup = orbit_sup.max(((i + 1) as f64).ln() / t.to_f64());
    }
    PeriodicGrowth {
        sup,
        sup_at,
        rate,
        orbit_sup,
        horizon: census.max_period,
        horizon_limited: true,
    }
}

/// What `p_k` counts near `ν_γ` when distinct orbits share a measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PkCount {
    /// Periodic orbits `γ'`.
    #[default]
    Orbits,
    /// Periodic measures `ν_{γ'}`, merged when their truncated `D` is zero.
    Measures,
}

/// Pairwise truncated `D` between the census measures.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    pub config: DMetricConfig,
    exact: Vec<Vec<QuadraticReal>>,
}

impl DistanceTable {
    pub fn new(census: &PeriodicCensus, config: DMetricConfig) -> Result<Self> {
        let n = census.orbits.len();
        let mut exact = vec![vec![QuadraticReal::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = d_distance(&census.orbits[i].measure, &census.orbits[j].measure, &config)?.exact;
                exact[i][j] = d.clone();
                exact[j][i] = d;
            }
        }
        Ok(Self { config, exact })
    }

    pub fn get(&self, i: usize, j: usize) -> &QuadraticReal {
        &self.exact[i][j]
    }

    /// Least positive distance between distinct census measures.
    pub fn min_positive(&self) -> Option<QuadraticReal> {
        self.exact
            .iter()
            .flatten()
            .filter(|d| d.is_positive())
            .min_by(|a, b| a.partial_cmp(b).expect("one field"))
            .cloned()
    }
}

/// `(1/t(γ)) log #{γ' : D(ν_γ', ν_γ) < ε, t(γ') ≤ t(γ)}` for the census orbit
/// at `index`.
pub fn pk(
    census: &PeriodicCensus,
    table: &DistanceTable,
    index: usize,
    epsilon: &QuadraticReal,
    count: PkCount,
) -> Result<f64> {
    let gamma = census
        .orbits
        .get(index)
        .ok_or_else(|| Error::PreconditionFailed(format!("no census orbit {index}")))?;
    if gamma.flow_period > census.flow_horizon {
        return Err(Error::PreconditionFailed(format!(
            "t(γ) = {} exceeds the census horizon {}",
            gamma.flow_period, census.flow_horizon
        )));
    }
    let near: Vec<usize> = (0..census.orbits.len())
        .filter(|&j| census.orbits[j].flow_period <= gamma.flow_period && table.get(index, j) < epsilon)
        .collect();
    let n = match count {
        PkCount::Orbits => near.len(),
        PkCount::Measures => {
            let mut reps: Vec<usize> = Vec::new();
            for &j in &near {
                if !reps.iter().any(|&r| table.get(r, j).is_zero()) {
                    reps.push(j);
                }
            }
            reps.len()
        }
    };
    Ok((n as f64).ln() / gamma.flow_period.to_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct U1Row {
    pub orbit: Word,
    pub period: usize,
    pub flow_period: f64,
    /// `p_k(ν_γ)` for each `ε_k`.
    pub pk: Vec<f64>,
    /// `max {p_k(ν_γ') : D(ν_γ', ν_γ) < ε_k}` over the census.
    pub envelope: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct U1Table {
    pub epsilons: Vec<String>,
    pub rows: Vec<U1Row>,
    /// The envelope ranges over census measures only.
    pub census_limited: bool,
}

impl U1Table {
    /// Largest last-envelope value: the census estimate of `sup u_1`.
    pub fn u1_max(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.envelope.last().copied())
            .fold(0.0, f64::max)
    }
}

/// `p_k` and its census envelope at every orbit within the flow horizon.
pub fn u1_estimate(
    census: &PeriodicCensus,
    epsilons: &[QuadraticReal],
    config: DMetricConfig,
    count: PkCount,
) -> Result<U1Table> {
    if epsilons.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::PreconditionFailed("ε_k must be nonincreasing".into()));
    }
    let table = DistanceTable::new(census, config)?;
    let inside: Vec<usize> = (0..census.orbits.len())
        .filter(|&i| census.orbits[i].flow_period <= census.flow_horizon)
        .collect();
    let mut values = vec![Vec::with_capacity(epsilons.len()); census.orbits.len()];
    for &i in &inside {
        for e in epsilons {
            values[i].push(pk(census, &table, i, e, count)?);
        }
    }
    let rows = inside
        .iter()
        .map(|&i| {
            let envelope = epsilons
                .iter()
                .enumerate()
                .map(|(k, e)| {
                    inside
                        .iter()
                        .filter(|&&j| j == i || table.get(i, j) < e)
                        .map(|&j| values[j][k])
                        .fold(0.0, f64::max)
                })
                .collect();
            let o = &census.orbits[i];
            U1Row {
                orbit: o.word.clone(),
                period: o.minimal_period,
                flow_period: o.flow_period.to_f64(),
                pk: values[i].clone(),
                envelope,
            }
        })
        .collect();
    Ok(U1Table {
        epsilons: epsilons.iter().map(|e| e.to_string()).collect(),
        rows,
        census_limited: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::Roof;

    fn q(s: &str) -> QuadraticReal {
        s.parse().unwrap()
    }

    fn lucas(n: usize) -> u128 {
        let (mut a, mut b) = (2u128, 1u128);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    fn index_of(c: &PeriodicCensus, w: &str) -> usize {
        c.orbits.iter().position(|o| o.word.to_string() == w).unwrap()
    }

    #[test]
    fn golden_mean_census() {
        let c = PeriodicCensus::of_subshift(&Subshift::golden_mean(), 12).unwrap();
        for n in 1..=12 {
            assert_eq!(c.fix_count(n), Some(lucas(n)), "n = {n}");
        }
        assert!(c.trace_consistent() && c.periods_consistent());
        let g = global_periodic_growth(&c);
        let log_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((g.rate - log_phi).abs() < 0.05);
        // The supremum sits at n = 2, where #Fix = 3.
        assert_eq!(g.sup_at, 2);
        assert!((g.sup - 3f64.ln() / 2.0).abs() < 1e-12);
        assert!(g.orbit_sup <= g.sup);
    }

    #[test]
    fn full_shift_growth_is_log_two() {
        let c = PeriodicCensus::of_subshift(&Subshift::full_shift(2), 8).unwrap();
        let g = global_periodic_growth(&c);
        assert!((g.sup - 2f64.ln()).abs() < 1e-12 && (g.rate - 2f64.ln()).abs() < 1e-12);
        assert_eq!(g.sup_at, 1);
        assert!((g.orbit_sup - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sturmian_census_is_empty() {
        let c = PeriodicCensus::of_subshift(&Subshift::silver_sturmian(), 10).unwrap();
        assert!(c.is_empty());
        assert_eq!(global_periodic_growth(&c).sup, 0.0);
        let t = u1_estimate(&c, &[q("1/2")], DMetricConfig::new(8), PkCount::Orbits).unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn pk_examples() {
        let cfg = DMetricConfig::new(10);
        let gm = PeriodicCensus::of_subshift(&Subshift::golden_mean(), 8).unwrap();
        let table = DistanceTable::new(&gm, cfg).unwrap();
        let i = index_of(&gm, "01");
        assert_eq!(pk(&gm, &table, i, &q("1/1000"), PkCount::Orbits).unwrap(), 0.0);
        let fs = PeriodicCensus::of_subshift(&Subshift::full_shift(2), 6).unwrap();
        let table = DistanceTable::new(&fs, cfg).unwrap();
        let z = index_of(&fs, "0");
        assert!((pk(&fs, &table, z, &q("10"), PkCount::Orbits).unwrap() - 2f64.ln()).abs() < 1e-12);
        let below = table.min_positive().unwrap();
        for j in 0..fs.orbits.len() {
            assert_eq!(pk(&fs, &table, j, &below, PkCount::Measures).unwrap(), 0.0);
        }
    }

    #[test]
    fn pk_is_monotone_and_vanishes_at_the_fixed_point() {
        let fs = PeriodicCensus::of_subshift(&Subshift::full_shift(2), 8).unwrap();
        let eps: Vec<QuadraticReal> = (0..10).map(|k| QuadraticReal::from_ratio(1, 1 << k)).collect();
        let t = u1_estimate(&fs, &eps, DMetricConfig::new(12), PkCount::Orbits).unwrap();
        let growth = global_periodic_growth(&fs).orbit_sup;
        for r in &t.rows {
            assert!(r.pk.windows(2).all(|w| w[1] <= w[0]), "{r:?}");
            assert!(r.pk.iter().all(|&v| v <= growth + 1e-12));
            assert!(r.envelope.iter().zip(&r.pk).all(|(e, p)| e >= p));
        }
        let zero = t.rows.iter().find(|r| r.orbit.to_string() == "0").unwrap();
        assert!(zero.pk[0] > 0.0);
        let k0 = zero.pk.iter().position(|&v| v == 0.0).unwrap();
        assert!(zero.pk[k0..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flow_convention_rescales_periods() {
        let base = Subshift::golden_mean();
        let sub = PeriodicCensus::of_subshift(&base, 8).unwrap();
        let unit = PeriodicCensus::of_flow(&SuspensionFlow::new(base.clone(), Roof::constant(2, q("1")).unwrap()).unwrap(), 8).unwrap();
        let two = PeriodicCensus::of_flow(&SuspensionFlow::new(base, Roof::constant(2, q("2")).unwrap()).unwrap(), 8).unwrap();
        let cfg = DMetricConfig::new(10);
        let eps = [q("1/2"), q("1/8"), q("1/64")];
        let a = u1_estimate(&sub, &eps, cfg, PkCount::Orbits).unwrap();
        let b = u1_estimate(&unit, &eps, cfg, PkCount::Orbits).unwrap();
        let c = u1_estimate(&two, &eps, cfg, PkCount::Orbits).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.rows.iter().zip(&c.rows) {
            assert_eq!(y.flow_period, 2.0 * x.flow_period);
            for (u, v) in x.pk.iter().zip(&y.pk) {
                assert!((u / 2.0 - v).abs() < 1e-12);
            }
        }
        assert!((global_periodic_growth(&two).orbit_sup * 2.0 - global_periodic_growth(&sub).orbit_sup).abs() < 1e-12);
    }
}
