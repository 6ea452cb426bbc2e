//! The release gate behind `verify`: twelve criteria, each run at full scale
//! from fixed seeds and held to a wall-clock budget.
//!
//! Reduced scale (`quick`) halves every replication count and widens each
//! limit on a Monte Carlo mean by `√2`, the growth of its standard error.
//! Deterministic checks and fitted slopes keep their limits.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use serde_json::{json, Value};

use super::{csv_bytes, run, sweep, ExperimentConfig, Row};
use crate::curvature::CurvatureState;
use crate::error::{Error, Result};
use crate::games::{
    monotonicity_probe, newsvendor_ma_beta, newsvendor_ma_hessian_check, parse_instance, pm_beta, GameKind,
    PortfolioParams, Prices,
};
use crate::geometry::{project_euclidean, project_quadratic, FeasibleSet, JointAction};
use crate::learners::{ma_round, Algorithm, GradientSignal, Learner};
use crate::metrics::nash_oracle;
use crate::schedules::{geometric_max_stats, stream, substream};

/// Criterion ids, names and budgets in run order.
pub const CRITERIA: [(u8, &str, u64); 12] = [
    (1, "geometric-max bounds", 5),
    (2, "MA-OGD known-beta rate", 120),
    (3, "MA-AdaOGD last-iterate order", 900),
    (4, "AdaOGD regret order", 600),
    (5, "ONS regret on portfolio", 300),
    (6, "AdaONS regret order", 600),
    (7, "MA-ONS / MA-AdaONS gap order", 600),
    (8, "single-retailer newsvendor", 180),
    (9, "newsvendor signal unbiasedness", 5),
    (10, "oracle equivalences", 30),
    (11, "curvature probes", 60),
    (12, "decentralization and determinism", 30),
];

/// Price relatives of a two-period cycle in which cash and four risky
/// assets alternate between doubling and halving. No asset dominates, so
/// the best rebalanced portfolio is interior and the learner is pushed
/// back and forth every round.
pub fn cycling_prices() -> Prices {
    Prices::Cycle(vec![vec![1.0, 2.0, 0.5, 2.0, 0.5], vec![1.0, 0.5, 2.0, 0.5, 2.0]])
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {:<34} {:>8.2}s / {:>4}s  {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

#[derive(Clone, Copy, Debug)]
struct Scale {
    quick: bool,
}

impl Scale {
    fn seeds(self, n: u64) -> u64 {
        if self.quick {
            n.div_ceil(2)
        } else {
            n
        }
    }

    /// An upper limit on a sample mean.
    fn upper(self, limit: f64) -> f64 {
        if self.quick {
            limit * SQRT_2
        } else {
            limit
        }
    }
}

struct Check {
    passed: bool,
    detail: String,
}

/// Runs one criterion. Errors count as failures.
pub fn run_criterion(id: u8, quick: bool) -> Outcome {
    let (_, name, budget) = CRITERIA
        .iter()
        .copied()
        .find(|c| c.0 == id)
        .unwrap_or((id, "unknown criterion", 0));
    let s = Scale { quick };
    let start = Instant::now();
    let result = match id {
        1 => geometric_max(),
        2 => known_beta_rate(s),
        3 => adaogd_last_iterate(s),
        4 => adaogd_regret(s),
        5 => ons_regret(),
        6 => adaons_regret(s),
        7 => gap_order(s),
        8 => single_retailer(s),
        9 => newsvendor_unbiased(),
        10 => oracle_equivalences(),
        11 => curvature_probes(),
        12 => decentralization(),
        _ => Err(Error::contract(format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget);
    let (mut passed, mut detail) = match result {
        Ok(c) => (c.passed, c.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        passed = false;
        detail.push_str("; over budget");
    }
    Outcome {
        id,
        name,
        passed,
        detail,
        elapsed,
        budget,
    }
}

/// Runs every criterion in order, calling `report` after each.
pub fn run_suite(quick: bool, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|(id, ..)| {
            let o = run_criterion(*id, quick);
            report(&o);
            o
        })
        .collect()
}

fn config(v: Value) -> Result<ExperimentConfig> {
    ExperimentConfig::from_value(&v, None)
}

/// `mean/<metric>` by round.
fn means(rows: &[Row], metric: &str) -> BTreeMap<u64, f64> {
    let key = format!("mean/{metric}");
    rows.iter()
        .filter(|r| r.seed < 0 && r.metric == key)
        .map(|r| (r.t, r.value))
        .collect()
}

fn mean_at(rows: &[Row], metric: &str, t: u64) -> Result<f64> {
    means(rows, metric)
        .get(&t)
        .copied()
        .ok_or_else(|| Error::contract(format!("no mean/{metric} at t = {t}")))
}

fn slope(rows: &[Row], metric: &str) -> Result<f64> {
    let key = format!("slope/{metric}");
    rows.iter()
        .find(|r| r.metric == key)
        .map(|r| r.value)
        .ok_or_else(|| Error::contract(format!("no {key} row")))
}

fn power_instance(sigma: f64) -> Value {
    json!({
        "game": "power_management",
        "params": {"gain": [[2.0, 1.0], [1.0, 2.0]], "r_star": [0.5, 0.5], "thermal": [1.0, 1.0], "upper": [1.0, 1.0]},
        "noise": {"sigma": sigma}
    })
}

fn two_retailers() -> Value {
    json!({"game": "newsvendor_ma", "params": {"price": 2.0, "costs": [1.0, 1.0], "x_bar": [1.0, 1.0]}})
}

fn single_retailer_instance() -> Value {
    json!({"game": "newsvendor_sa", "params": {"price": 2.0, "cost": 1.0, "demand": {"uniform": {"upper": 100.0}}}})
}

fn portfolio_instance() -> Value {
    json!({"game": "portfolio_stream", "params": {"dim": 5, "prices": cycling_prices()}})
}

const DECADES: [u64; 3] = [1_000, 10_000, 100_000];

fn geometric_max() -> Result<Check> {
    let mut passed = true;
    let mut parts = Vec::new();
    let mut k = 0;
    for p0 in [0.2, 0.5] {
        for n in [10u64, 1_000] {
            let stats = geometric_max_stats(p0, n, 10_000, &mut substream(1, k), &[])?;
            k += 1;
            let hi = (1.0 + (n as f64).ln()) / p0;
            passed &= (1.0..=hi).contains(&stats.mean);
            parts.push(format!("p0={p0} n={n}: {:.3} in [1, {:.3}]", stats.mean, hi));
        }
    }
    Ok(Check {
        passed,
        detail: parts.join("; "),
    })
}

fn known_beta_rate(s: Scale) -> Result<Check> {
    let horizon = 10_000;
    let cfg = config(json!({
        "game": power_instance(0.1), "learners": "ogd", "horizon": horizon,
        "replications": s.seeds(50), "start": [0.0, 0.0], "metrics": ["distance"]
    }))?;
    let beta = cfg
        .game
        .strong_monotonicity()
        .ok_or_else(|| Error::contract("power game without a beta"))?;
    let env = cfg.game.environment(horizon)?;
    let g2 = cfg
        .game
        .second_moment_bound(&env, 10_000, &mut substream(cfg.seed, stream::ORACLE))?;
    let bound = 4.0 * g2 / (beta * beta * horizon as f64);
    let mean = mean_at(&run(&cfg)?, "distance", horizon)?;
    let limit = s.upper(bound);
    Ok(Check {
        passed: mean <= limit,
        detail: format!("mean distance {mean:.3e} <= 4G^2/(beta^2 T) = {limit:.3e} (beta {beta:.3}, G^2 {g2:.3})"),
    })
}

fn adaogd_last_iterate(s: Scale) -> Result<Check> {
    let cfg = config(json!({
        "game": power_instance(0.1), "learners": "ada_ogd", "horizons": DECADES,
        "replications": s.seeds(20), "start": [0.0, 0.0], "metrics": ["distance"]
    }))?;
    let rows = sweep(&cfg)?;
    let fit = slope(&rows, "distance")?;
    let ratio = mean_at(&rows, "distance", 1_000)? / mean_at(&rows, "distance", 100_000)?;
    let min_ratio = 10.0 / if s.quick { SQRT_2 } else { 1.0 };
    Ok(Check {
        passed: (-1.35..=-0.70).contains(&fit) && ratio >= min_ratio,
        detail: format!("slope {fit:.3} in [-1.35, -0.70]; D(1e3)/D(1e5) = {ratio:.1} >= {min_ratio:.2}"),
    })
}

fn adaogd_regret(s: Scale) -> Result<Check> {
    let cfg = config(json!({
        "game": {"game": "quadratic_stream",
                 "params": {"dim": 5, "beta": 1.0, "targets": {"uniform": {"low": -0.5, "high": 0.5, "seed": 11}}},
                 "noise": {"sigma": 0.5}},
        "learners": "ada_ogd", "horizons": DECADES, "replications": s.seeds(20), "metrics": ["regret"]
    }))?;
    let rows = sweep(&cfg)?;
    let r = means(&rows, "regret");
    let norm = |t: u64| r[&t] / (t as f64).ln().powi(2);
    let growth = norm(100_000) / norm(1_000);
    let per_round = r[&100_000] / 1e5;
    let limit = s.upper(2.0);
    Ok(Check {
        passed: growth <= limit && per_round <= 0.01,
        detail: format!(
            "R/ln^2 T: {:.3} -> {:.3} -> {:.3} (x{growth:.2} <= {limit:.2}); R/T at 1e5 = {per_round:.2e} <= 0.01",
            norm(1_000),
            norm(10_000),
            norm(100_000)
        ),
    })
}

fn ons_regret() -> Result<Check> {
    let d = 5.0;
    let g = PortfolioParams {
        dim: 5,
        prices: cycling_prices(),
    }
    .gradient_bound();
    let params = json!({"g": g, "d": SQRT_2, "alpha": 1.0});

    let cfg = config(json!({
        "game": portfolio_instance(), "learners": "ons", "learner_params": params,
        "horizon": 100_000, "metrics": ["qf"]
    }))?;
    let rows = run(&cfg)?;
    // (seed, t, agent) -> (qf_sum, qf_bound)
    let mut pairs: BTreeMap<_, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.seed >= 0) {
        if let Some(agent) = r.metric.strip_prefix("qf_sum") {
            pairs.entry((r.seed, r.t, agent)).or_default().0 = Some(r.value);
        } else if let Some(agent) = r.metric.strip_prefix("qf_bound") {
            pairs.entry((r.seed, r.t, agent)).or_default().1 = Some(r.value);
        }
    }
    let violations = pairs
        .values()
        .filter(|(sum, bound)| !matches!((sum, bound), (Some(s), Some(b)) if s <= b))
        .count();
    let qf_ok = !pairs.is_empty() && violations == 0;

    let cfg = config(json!({
        "game": portfolio_instance(), "learners": "ons", "learner_params": params,
        "horizons": DECADES, "metrics": ["regret"]
    }))?;
    let r = means(&sweep(&cfg)?, "regret");
    let norm: Vec<f64> = DECADES.iter().map(|t| r[t] / (d * (*t as f64).ln())).collect();
    let limit = 1.2 * norm[0];
    let ratio_ok = norm.iter().all(|v| *v <= limit);
    Ok(Check {
        passed: qf_ok && ratio_ok,
        detail: format!(
            "(a) qf_sum <= qf_bound at {} of {} logged rounds; (b) R/(d ln T): {:.3} -> {:.3} -> {:.3}, limit {limit:.3}",
            pairs.len() - violations,
            pairs.len(),
            norm[0],
            norm[1],
            norm[2]
        ),
    })
}

fn adaons_regret(s: Scale) -> Result<Check> {
    let d = 5.0;
    let cfg = config(json!({
        "game": portfolio_instance(), "learners": "ada_ons", "horizons": DECADES,
        "replications": s.seeds(20), "metrics": ["regret"]
    }))?;
    let r = means(&sweep(&cfg)?, "regret");
    let norm = |t: u64| r[&t] / (d * (t as f64).ln().powi(2));
    let growth = norm(100_000) / norm(1_000);
    let limit = s.upper(2.0);
    Ok(Check {
        passed: growth <= limit,
        detail: format!(
            "R/(d ln^2 T): {:.4} -> {:.4} -> {:.4} (x{growth:.2} <= {limit:.2})",
            norm(1_000),
            norm(10_000),
            norm(100_000)
        ),
    })
}

fn gap_order(s: Scale) -> Result<Check> {
    let game = json!({"game": "rank_one", "params": {"a": [[0.6, 0.8], [1.0, -0.5]], "b": [0.5, -0.3]}});
    let mut passed = true;
    let mut parts = Vec::new();
    for (learner, reps) in [("ons", 1), ("ada_ons", s.seeds(5))] {
        let cfg = config(json!({
            "game": game, "learners": learner, "horizons": DECADES, "replications": reps, "metrics": ["gap"]
        }))?;
        let fit = slope(&sweep(&cfg)?, "gap")?;
        passed &= fit <= -0.70;
        parts.push(format!("{learner} slope {fit:.3}"));
    }
    Ok(Check {
        passed,
        detail: format!("{} (limit -0.70)", parts.join(", ")),
    })
}

/// Critical fractile of U[0, 100] at (p − c)/p = 1/2.
const NEWSVENDOR_OPTIMUM: f64 = 50.0;

fn single_retailer(s: Scale) -> Result<Check> {
    let horizon = 100_000;
    let cfg = config(json!({
        "game": single_retailer_instance(), "learners": "ada_ogd", "horizon": horizon,
        "replications": s.seeds(20), "metrics": ["distance"]
    }))?;
    let x_star = nash_oracle(&cfg.game, &mut substream(cfg.seed, stream::ORACLE))?
        .point()
        .map(|p| p[0])
        .ok_or_else(|| Error::contract("no equilibrium for the newsvendor"))?;
    let mean = mean_at(&run(&cfg)?, "distance", horizon)?;
    let limit = s.upper(4.0);
    Ok(Check {
        passed: (x_star - NEWSVENDOR_OPTIMUM).abs() <= 1e-6 && mean <= limit,
        detail: format!("mean (x_T - x*)^2 = {mean:.3} <= {limit:.2}; solver x* = {x_star:.6} vs 50"),
    })
}

fn newsvendor_unbiased() -> Result<Check> {
    let game = parse_instance(&single_retailer_instance(), "")?;
    let env = game.environment(1)?;
    let x = JointAction::single(vec![30.0]);
    let mut rng = substream(9, stream::ORACLE);
    let n = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let g = game.oracle(&env, &x, 1, &mut rng)?[0].vector[0];
        sum += g;
        sum_sq += g * g;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let se = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0) / nf).sqrt();
    // p·F(30) − p + c with F(30) = 0.3.
    let expected = 2.0 * 0.3 - 2.0 + 1.0;
    let z = (mean - expected) / se;
    Ok(Check {
        passed: z.abs() <= 4.0,
        detail: format!("mean {mean:.5} vs {expected:.1} ({z:+.2} SE, limit 4)"),
    })
}

fn oracle_equivalences() -> Result<Check> {
    let a = quadratic_vs_grid()?;
    let b = simplex_vs_enumeration()?;
    let c = rank_one_vs_inverse()?;
    Ok(Check {
        passed: a <= 1e-6 && b <= 1e-10 && c <= 1e-8,
        detail: format!(
            "(a) grid objective gap {a:.2e} <= 1e-6; (b) simplex error {b:.2e} <= 1e-10; (c) inverse error {c:.2e} <= 1e-8"
        ),
    })
}

/// Worst `f(project_quadratic) − min_grid f` over random 2-d boxes.
fn quadratic_vs_grid() -> Result<f64> {
    const N: usize = 1001;
    let mut rng = substream(10, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let lower: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.2..2.0)).collect();
        let set = FeasibleSet::new_box(lower.clone(), upper.clone())?;
        let mut curvature = CurvatureState::new(2)?;
        for _ in 0..rng.random_range(0..5) {
            let g: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            curvature.rank_one_update(&g);
        }
        let anchor = set.sample(&mut rng);
        let gradient: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eta = rng.random_range(0.2..2.0);
        let m = curvature.matrix();
        let f = |x0: f64, x1: f64| {
            let (d0, d1) = (x0 - anchor[0], x1 - anchor[1]);
            d0 * gradient[0]
                + d1 * gradient[1]
                + 0.5 * eta * (m[(0, 0)] * d0 * d0 + 2.0 * m[(0, 1)] * d0 * d1 + m[(1, 1)] * d1 * d1)
        };
        let x = project_quadratic(&set, &anchor, &gradient, eta, &curvature)?;
        if !set.contains(&x, 1e-12) {
            return Ok(f64::INFINITY);
        }
        let step = |k: usize, i: usize| lower[i] + (upper[i] - lower[i]) * k as f64 / (N - 1) as f64;
        let mut grid_min = f64::INFINITY;
        for i in 0..N {
            let x0 = step(i, 0);
            for j in 0..N {
                grid_min = grid_min.min(f(x0, step(j, 1)));
            }
        }
        worst = worst.max(f(x[0], x[1]) - grid_min);
    }
    Ok(worst)
}

/// Projection onto the simplex by trying every support: on support `S` the
/// candidate is `y_S − θ` with `θ` fixing the sum at one; the nearest
/// feasible candidate is the projection.
fn simplex_by_enumeration(y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let theta = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; d];
        for &i in &support {
            x[i] = y[i] - theta;
        }
        if x.iter().any(|v| *v < 0.0) {
            continue;
        }
        let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        if dist < best.0 {
            best = (dist, x);
        }
    }
    best.1
}

fn simplex_vs_enumeration() -> Result<f64> {
    let mut rng = substream(10, 1);
    let mut worst: f64 = 0.0;
    for k in 0..300 {
        let d = 1 + k % 6;
        let set = FeasibleSet::new_simplex(d)?;
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fast = project_euclidean(&set, &y)?;
        let slow = simplex_by_enumeration(&y);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn rank_one_vs_inverse() -> Result<f64> {
    let mut rng = substream(10, 2);
    let mut worst: f64 = 0.0;
    for d in 1..=8 {
        for _ in 0..5 {
            let mut c = CurvatureState::new(d)?;
            for _ in 0..100 {
                let g: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                c.rank_one_update(&g);
            }
            let direct = c
                .matrix()
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::contract("curvature matrix is singular"))?;
            worst = worst.max((c.inverse() - direct).amax());
        }
    }
    Ok(worst)
}

/// Result of the curvature probes for one set of claimed constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeOutcome {
    pub power_min_ratio: f64,
    pub newsvendor_min_ratio: f64,
    pub hessian_min_eigenvalue: f64,
    pub passed: bool,
}

/// Probes the two-link power game with `beta_pm` and the two-retailer game
/// with `beta_nv` over `pairs` pairs each, and checks the retailer Hessian
/// bound at `points` points.
pub fn check_probes(beta_pm: f64, beta_nv: f64, pairs: usize, points: usize) -> Result<ProbeOutcome> {
    let pm = parse_instance(&power_instance(0.0), "")?;
    let nv = parse_instance(&two_retailers(), "")?;
    let pm_report = monotonicity_probe(&pm, beta_pm, pairs, &mut substream(11, 0))?;
    let nv_report = monotonicity_probe(&nv, beta_nv, pairs, &mut substream(11, 1))?;
    let GameKind::NewsvendorMa(params) = &nv.kind else {
        return Err(Error::contract("expected the multi-retailer game"));
    };
    let hessian = newsvendor_ma_hessian_check(params, points, &mut substream(11, 2));
    Ok(ProbeOutcome {
        power_min_ratio: pm_report.min_ratio,
        newsvendor_min_ratio: nv_report.min_ratio,
        hessian_min_eigenvalue: hessian.min_eigenvalue,
        passed: pm_report.passed && nv_report.passed && hessian.passed,
    })
}

fn curvature_probes() -> Result<Check> {
    let beta_pm = pm_beta(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[0.5, 0.5]).beta;
    let beta_nv = newsvendor_ma_beta(2.0, &[1.0, 1.0]);
    let o = check_probes(beta_pm, beta_nv, 10_000, 1_000)?;
    Ok(Check {
        passed: o.passed,
        detail: format!(
            "power min ratio {:.4} >= {beta_pm:.4}; newsvendor min ratio {:.4} >= {beta_nv:.4}; Hessian min eig {:.4}",
            o.power_min_ratio, o.newsvendor_min_ratio, o.hessian_min_eigenvalue
        ),
    })
}

/// Bitwise checks that an agent's trajectory depends only on its own
/// signals and generator, plus byte-identical CSV across reruns and
/// thread counts.
fn decentralization() -> Result<Check> {
    let agent_ok = agent_independence()?;
    let cfg = config(json!({
        "game": power_instance(0.1), "learners": "ada_ogd", "horizon": 2_000,
        "replications": 8, "metrics": ["action", "distance"]
    }))?;
    let in_pool = |threads: usize| -> Result<Vec<u8>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::contract(e.to_string()))?;
        pool.install(|| csv_bytes(&run(&cfg)?))
    };
    let first = in_pool(1)?;
    let csv_ok = first == in_pool(1)? && first == in_pool(4)?;
    Ok(Check {
        passed: agent_ok && csv_ok,
        detail: format!("agent independence {agent_ok}; byte-identical CSV {csv_ok} ({} bytes)", first.len()),
    })
}

fn agent_independence() -> Result<bool> {
    let game = parse_instance(&power_instance(0.1), "")?;
    let sets = game.agent_sets()?;
    let horizon = 500;
    let env = game.environment(horizon)?;
    let make = |alg: Algorithm, i: usize, seed: u64| {
        Learner::new(alg, sets[i].clone(), vec![0.0], horizon, None, substream(seed, i as u64))
    };

    // Reference: both agents learn together against the real oracle.
    let mut pair = vec![make(Algorithm::AdaOgd, 0, 7)?, make(Algorithm::AdaOgd, 1, 7)?];
    let mut oracle_rng = substream(7, stream::ORACLE);
    let mut signals: Vec<Vec<GradientSignal>> = Vec::new();
    let mut reference = Vec::new();
    for t in 1..=horizon {
        let x = ma_round(&mut pair, |x| {
            let s = game.oracle(&env, x, t, &mut oracle_rng)?;
            signals.push(s.clone());
            Ok(s)
        })?;
        reference.push(x.block(0).to_vec());
    }

    // Agent 0 replays its signals beside a differently seeded partner that
    // receives unrelated signals.
    let mut other = vec![make(Algorithm::AdaOgd, 0, 7)?, make(Algorithm::AdaOgd, 1, 99)?];
    let mut noise = substream(99, stream::ORACLE);
    let mut solo = make(Algorithm::AdaOgd, 0, 7)?;
    for (t, s) in signals.iter().enumerate() {
        let partner = GradientSignal::noisy(vec![noise.random_range(-1.0..1.0)]);
        let x = ma_round(&mut other, |_| Ok(vec![s[0].clone(), partner]))?;
        let alone = solo.step(&s[0])?.to_vec();
        let same = |a: &[f64]| a.iter().zip(&reference[t]).all(|(p, q)| p.to_bits() == q.to_bits());
        if !same(x.block(0)) || !same(&alone) {
            return Ok(false);
        }
    }
    Ok(true)
}
