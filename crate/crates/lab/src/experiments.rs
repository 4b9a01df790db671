use std::collections::BTreeMap;

use symflow::generator::{seeded_base_points, GeneratorModel};
use symflow::markers::build_marker;
use symflow::measures::{integrate_locally_constant, Measure};
use symflow::periodic::{global_periodic_growth, PeriodicCensus};
use symflow::recode::{recode_dep, recode_dex, RecodeKind, RecodeOptions, RecodedFlow, ReturnClass};
use symflow::suspension::{
    abramov_entropy, induced_entropy_identity_check, kac_check, orbit_capacity, time_delta_tower_entropy,
    BasePartition, SuspensionFlow,
};
use symflow::QuadraticReal;

use crate::config::{quadratic, required, words, Loaded, System};
use crate::table::Table;
use crate::Failure;

pub type Runner = fn(&mut Loaded, u64) -> Result<Table, Failure>;

pub const EXPERIMENTS: [(&str, Runner); 10] = [
    ("entropy", entropy),
    ("marker", marker),
    ("recode-dex", dex),
    ("recode-dep", dep),
    ("generator-roundtrip", generator_roundtrip),
    ("ocap", ocap),
    ("abramov-check", abramov_check),
    ("induced-check", induced_check),
    ("kac-check", kac),
    ("periodic", periodic),
];

fn f(x: f64) -> String {
    format!("{x:.12}")
}

fn entropy(cx: &mut Loaded, _seed: u64) -> Result<Table, Failure> {
    let n = cx.config.params.n.unwrap_or(20);
    let base = cx.subshift()?;
    let mut t = Table::new(&["method", "horizon", "entropy"]);
    let top = base.topological_entropy(n)?;
    if top.exact {
        t.push(["perron".into(), String::new(), f(top.value)]);
    }
    let count = base.count_words(n)?;
    if count == 0 {
        return Err(symflow::Error::EmptySubshift.into());
    }
    t.push(["block".into(), n.to_string(), f((count as f64).ln() / n as f64)]);
    Ok(t)
}

fn marker(cx: &mut Loaded, _seed: u64) -> Result<Table, Failure> {
    let params = &cx.config.params;
    let n = required("n", &params.n)?;
    let (len, depth) = (params.max_word_len.unwrap_or(64), params.depth.unwrap_or(100));
    let base = cx.subshift()?;
    let m = build_marker(&base, n, len, depth)?;
    let verified = m.verify(&base)?;
    let mut t = Table::new(&["field", "value"]);
    t.push(["word".to_string(), m.word.to_string()]);
    t.push(["n".to_string(), m.n.to_string()]);
    t.push(["min_return".to_string(), m.min_return.to_string()]);
    t.push(["max_gap".to_string(), m.max_gap.to_string()]);
    t.push(["disjointness_depth".to_string(), m.certificate.disjointness_depth.to_string()]);
    t.push(["coverage".to_string(), m.certificate.coverage.to_string()]);
    t.push(["scan_depth".to_string(), m.certificate.scan_depth.to_string()]);
    t.push(["verified".to_string(), verified.to_string()]);
    Ok(t)
}

fn options(cx: &Loaded) -> RecodeOptions {
    let p = &cx.config.params;
    let d = RecodeOptions::default();
    RecodeOptions {
        separation: p.separation,
        max_word_len: p.max_word_len.unwrap_or(d.max_word_len),
        marker_depth: p.marker_depth.unwrap_or(d.marker_depth),
        z_window: p.window.unwrap_or(d.z_window),
    }
}

struct RecodeParams {
    p: QuadraticReal,
    q: QuadraticReal,
    delta: QuadraticReal,
    horizon: usize,
    count: usize,
}

fn recode_params(cx: &Loaded) -> Result<RecodeParams, Failure> {
    let ps = &cx.config.params;
    Ok(RecodeParams {
        p: quadratic("p", &required("p", &ps.p)?)?,
        q: quadratic("q", &required("q", &ps.q)?)?,
        delta: quadratic("delta", &required("delta", &ps.delta)?)?,
        horizon: ps.horizon.unwrap_or(10_000),
        count: ps.count.unwrap_or(4),
    })
}

/// Summary rows shared by both recodings: marker, return census over
/// seeded orbits and observed orbit capacities.
fn recode_rows(t: &mut Table, flow: &SuspensionFlow, rec: &RecodedFlow, rp: &RecodeParams, seed: u64) -> Result<(), Failure> {
    t.push(["marker", "length", &rec.marker().len().to_string()]);
    t.push(["marker", "separation", &rec.separation().to_string()]);
    t.push(["marker", "max_gap", &rec.marker().max_gap.to_string()]);
    for (i, a) in rec.atoms().iter().enumerate() {
        let label = format!("atom{i}");
        t.push(["atom_return".to_string(), label.clone(), a.return_time().to_string()]);
        t.push(["atom_k".to_string(), label.clone(), a.k.to_string()]);
        t.push(["atom_l".to_string(), label, a.l.to_string()]);
    }
    let points = seeded_base_points(flow.base(), seed, rp.count)?;
    let mut counts: BTreeMap<ReturnClass, usize> = BTreeMap::new();
    let (mut returns, mut violations) = (0, 0);
    for x in &points {
        let c = rec.census(&flow.point(x.clone(), 0, QuadraticReal::zero())?, rp.horizon)?;
        for (k, v) in c.counts {
            *counts.entry(k).or_default() += v;
        }
        returns += c.returns;
        violations += c.violations;
    }
    t.push(["census", "returns", &returns.to_string()]);
    for (k, v) in counts {
        t.push(["census".to_string(), k.to_string(), v.to_string()]);
    }
    t.push(["census", "violations", &violations.to_string()]);
    for row in rec.ocap_estimates(&points, rp.horizon)? {
        t.push(["ocap_observed".to_string(), row.symbol.to_string(), f(row.observed)]);
        t.push(["ocap_block_bound".to_string(), row.symbol.to_string(), f(row.block_bound)]);
    }
    Ok(())
}

fn dex(cx: &mut Loaded, seed: u64) -> Result<Table, Failure> {
    let rp = recode_params(cx)?;
    let eps = quadratic("epsilon", &required("epsilon", &cx.config.params.epsilon)?)?;
    let opts = options(cx);
    let flow = cx.flow()?;
    let rec = recode_dex(&flow, &rp.p, &rp.q, &eps, &rp.delta, &opts)?;
    let mut t = Table::new(&["metric", "label", "value"]);
    recode_rows(&mut t, &flow, &rec, &rp, seed)?;
    Ok(t)
}

fn dep(cx: &mut Loaded, seed: u64) -> Result<Table, Failure> {
    let rp = recode_params(cx)?;
    let m = required("M", &cx.config.params.m)?;
    let opts = options(cx);
    let flow = cx.flow()?;
    let rec = recode_dep(&flow, &rp.p, &rp.q, m, &rp.delta, &opts)?;
    let RecodeKind::Dep { k, .. } = rec.kind() else {
        unreachable!("dep recoding")
    };
    let pattern = rec.kind().marking_pattern().expect("dep pattern");
    let mut t = Table::new(&["metric", "label", "value"]);
    t.push(["code", "M", &m.to_string()]);
    t.push(["code", "K", &k.to_string()]);
    t.push(["code", "pattern", &pattern.to_string()]);
    let windows = rec.z().table();
    let marked = windows.iter().filter(|w| w.contains_factor(&pattern)).count();
    t.push(["z_windows", "length", &opts.z_window.to_string()]);
    t.push(["z_windows", "total", &windows.len().to_string()]);
    t.push(["z_windows", "with_pattern", &marked.to_string()]);
    let bad = rec
        .atoms()
        .iter()
        .filter(|a| {
            let w = &a.block[..2 * a.k];
            w[0] != 1 || w[w.len() - 1] != 1 || w.windows(k).any(|r| r.iter().all(|&s| s == 0))
        })
        .count();
    t.push(["scheduling_words", "total", &rec.atoms().len().to_string()]);
    t.push(["scheduling_words", "violations", &bad.to_string()]);
    recode_rows(&mut t, &flow, &rec, &rp, seed)?;
    Ok(t)
}

fn generator_roundtrip(cx: &mut Loaded, seed: u64) -> Result<Table, Failure> {
    let ps = &cx.config.params;
    let p = quadratic("p", &required("p", &ps.p)?)?;
    let q = quadratic("q", &required("q", &ps.q)?)?;
    let (n, count) = (ps.n.unwrap_or(50), ps.count.unwrap_or(100));
    let opts = options(cx);
    let flow = cx.flow()?;
    let model = GeneratorModel::new(&flow, &p, &q, &opts)?;
    let mut t = Table::new(&["seed", "n", "match", "recoveredLen"]);
    for x in model.sample(seed, count)? {
        let rt = model.round_trip(&x, n)?;
        t.push([seed.to_string(), n.to_string(), rt.matched.to_string(), rt.recovered.len().to_string()]);
    }
    Ok(t)
}

fn ocap(cx: &mut Loaded, seed: u64) -> Result<Table, Failure> {
    let ps = &cx.config.params;
    let e = words("words", &required("words", &ps.words)?)?;
    let horizon = ps.horizon.unwrap_or(1000);
    let (samples, max_period) = (ps.samples.unwrap_or(64), ps.max_period.unwrap_or(8));
    let base = cx.subshift()?;
    let cap = orbit_capacity(&base, &e, horizon, samples, seed, max_period)?;
    let mut t = Table::new(&["metric", "field", "value"]);
    t.push_fields("ocap", &cap);
    Ok(t)
}

fn abramov_check(cx: &mut Loaded, _seed: u64) -> Result<Table, Failure> {
    let ps = &cx.config.params;
    let delta = quadratic("delta", &required("delta", &ps.delta)?)?;
    let n = ps.n.unwrap_or(14);
    let flow = cx.flow()?;
    let measure = cx.measure(Some(flow.base()))?;
    let roof = flow.roof();
    let integral =
        integrate_locally_constant(&measure, 2 * roof.radius() + 1, |w| roof.value(w).cloned())?.to_f64();
    let h = measure.entropy_rate();
    let formula = abramov_entropy(h, integral)?;
    let tower = time_delta_tower_entropy(
        &measure,
        roof,
        &delta,
        &BasePartition::coordinate(measure.alphabet_size()),
        n,
    )?;
    let (lo, hi) = (h / integral, (h + 3f64.ln()) / integral);
    let mut t = Table::new(&["metric", "field", "value"]);
    t.push(["base", "entropy", &f(h)]);
    t.push(["base", "roof_integral", &f(integral)]);
    t.push(["abramov", "flow_entropy", &f(formula)]);
    t.push_fields("tower", &tower);
    t.push(["check", "gap", &f((tower.flow_entropy - formula).abs())]);
    t.push(["check", "sandwich_lower", &f(lo)]);
    t.push(["check", "sandwich_upper", &f(hi)]);
    let within = lo - 1e-12 <= tower.flow_entropy && tower.flow_entropy <= hi + 1e-12;
    t.push(["check", "sandwich_margin", &f((tower.flow_entropy - lo).min(hi - tower.flow_entropy))]);
    t.push(["check", "within_sandwich", &within.to_string()]);
    Ok(t)
}

fn induced_check(cx: &mut Loaded, _seed: u64) -> Result<Table, Failure> {
    let ps = &cx.config.params;
    let ns = ps.n_values.clone().unwrap_or_else(|| vec![ps.n.unwrap_or(10)]);
    let labels = ps.labels.clone();
    let base = match cx.config.system {
        Some(_) => Some(cx.subshift()?),
        None => None,
    };
    let markov = cx.measure(base.as_ref())?;
    let labels = labels.unwrap_or_else(|| (0..markov.states()).map(|s| (s == 0).then_some(0)).collect());
    let mut t = Table::new(&["n", "measure_of_a", "lhs", "rhs", "gap", "lhs_conditional", "rhs_conditional"]);
    for n in ns {
        let c = induced_entropy_identity_check(&markov, &labels, n)?;
        t.push([
            n.to_string(),
            f(c.measure_of_a),
            f(c.lhs),
            f(c.rhs),
            f(c.gap),
            f(c.lhs_conditional),
            f(c.rhs_conditional),
        ]);
    }
    Ok(t)
}

fn kac(cx: &mut Loaded, seed: u64) -> Result<Table, Failure> {
    let ps = &cx.config.params;
    let a = ps.a_symbols.clone().unwrap_or_else(|| vec![0]);
    let returns = ps.count.unwrap_or(100_000);
    let base = match cx.config.system {
        Some(_) => Some(cx.subshift()?),
        None => None,
    };
    let markov = cx.measure(base.as_ref())?;
    let c = kac_check(&markov, &a, returns, seed)?;
    let mut t = Table::new(&["metric", "field", "value"]);
    t.push_fields("kac", &c);
    Ok(t)
}

fn periodic(cx: &mut Loaded, _seed: u64) -> Result<Table, Failure> {
    let max_period = cx.config.params.max_period.unwrap_or(12);
    let census = match cx.system()? {
        System::Subshift(s) => PeriodicCensus::of_subshift(&s, max_period)?,
        System::Flow(flow) => PeriodicCensus::of_flow(&flow, max_period)?,
    };
    let mut t = Table::new(&["metric", "n", "value"]);
    for (i, c) in census.fixed_counts.iter().enumerate() {
        t.push(["fixed_points".to_string(), (i + 1).to_string(), c.to_string()]);
    }
    for n in 1..=max_period {
        let orbits = census.orbits.iter().filter(|o| o.minimal_period == n).count();
        t.push(["orbits".to_string(), n.to_string(), orbits.to_string()]);
    }
    t.push(["census_empty".to_string(), String::new(), census.is_empty().to_string()]);
    if !census.is_empty() {
        let g = global_periodic_growth(&census);
        t.push(["growth_sup".to_string(), g.sup_at.to_string(), f(g.sup)]);
        t.push(["growth_rate".to_string(), g.horizon.to_string(), f(g.rate)]);
        t.push(["orbit_growth_sup".to_string(), String::new(), f(g.orbit_sup)]);
    }
    Ok(t)
}
