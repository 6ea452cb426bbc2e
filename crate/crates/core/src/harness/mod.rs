//! Seeded experiment runs, sweeps over horizons, CSV output and the
//! acceptance suite behind `verify`.
//!
//! Replication `r` draws its own seed from substream `(master_seed, r)`;
//! agent `i` then uses substream `(replication_seed, i)` and the gradient
//! oracle uses [`stream::ORACLE`]. Adding replications never changes the
//! earlier ones, and rows are sorted by `(seed, t)` after the parallel
//! workers finish, so output is byte-identical across runs.

pub mod acceptance;
pub mod config;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, GapSettings, LearnerParams, Metric};

use crate::curvature::qf_bound;
use crate::error::{Error, Result};
use crate::games::{Environment, GameSpec};
use crate::geometry::{dist_sq, JointAction};
use crate::learners::{joint_action, ma_round, Algorithm, KnownParams, Learner};
use crate::metrics::{best_in_hindsight, fit_rate, gap_estimate, nash_oracle, GroundTruth, RunningMean};
use crate::schedules::{stream, substream};

/// Samples used for the `G²` report when `G` must be derived.
const G_SAMPLES: usize = 10_000;
/// A fitted rate above this (after normalizing regret by `T`) is flagged.
const NONCONVERGENT_SLOPE: f64 = -0.1;

/// One CSV record. Summary rows use `seed = −1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub seed: i64,
    pub t: u64,
    pub metric: String,
    pub value: f64,
}

/// Logged rounds `{1, 2, 4, …} ∪ {T}`.
pub fn log_grid(horizon: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(2))
        .take_while(|t| *t < horizon)
        .collect();
    grid.push(horizon);
    grid
}

/// Everything a replication shares: environment, ground truths and the
/// resolved learner parameters for one horizon.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub game: GameSpec,
    pub learners: Vec<Algorithm>,
    pub horizon: u64,
    pub env: Environment,
    pub start: Vec<f64>,
    pub known: Option<KnownParams>,
    /// Bound on signal norms used by the `qf` metric.
    pub g_bound: Option<f64>,
    /// Hindsight optimum over the horizon, when regret is requested.
    pub hindsight: Option<Vec<f64>>,
    /// Equilibrium, when distance is requested.
    pub nash: Option<Vec<f64>>,
    pub metrics: Vec<Metric>,
    pub gap: GapSettings,
    pub seed: u64,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, horizon: u64) -> Result<Self> {
        let game = cfg.game.clone();
        let env = game.environment(horizon)?;
        let set = game.joint_set()?;
        let mut rng = substream(cfg.seed, stream::ORACLE);
        let start = cfg.start.clone().unwrap_or_else(|| set.center());
        let p = cfg.learner_params;

        let needs_ons = cfg.learners.contains(&Algorithm::Ons);
        let needs_g = needs_ons || cfg.metrics.contains(&Metric::Qf);
        let g_bound = match (p.g, needs_g) {
            (Some(g), _) => Some(g),
            (None, true) => Some(game.second_moment_bound(&env, G_SAMPLES, &mut rng)?.sqrt()),
            (None, false) => None,
        };
        let known = if cfg.learners.contains(&Algorithm::Ogd) {
            let beta = p.beta.or_else(|| game.strong_monotonicity()).ok_or_else(|| {
                Error::config("learner_params.beta", format!("{} has no β calculator; set it", game.name()))
            })?;
            Some(KnownParams::Beta(beta))
        } else if needs_ons {
            let alpha = p.alpha.or_else(|| game.exp_concavity()).ok_or_else(|| {
                Error::config("learner_params.alpha", format!("{} has no α calculator; set it", game.name()))
            })?;
            Some(KnownParams::Ons {
                g: g_bound.expect("computed above"),
                d: p.d.unwrap_or_else(|| set.diameter()),
                alpha,
            })
        } else {
            None
        };
        if cfg.learners.contains(&Algorithm::Ogd) && needs_ons {
            return Err(Error::config("learners", "mixing OGD and ONS agents is not supported"));
        }

        let hindsight = if cfg.metrics.contains(&Metric::Regret) {
            match best_in_hindsight(env.distinct_costs(horizon), &set)? {
                GroundTruth::BestFixedAction { point, .. } => Some(point),
                _ => None,
            }
        } else {
            None
        };
        let nash = if cfg.metrics.contains(&Metric::Distance) {
            nash_oracle(&game, &mut rng)?.point().map(<[f64]>::to_vec)
        } else {
            None
        };
        Ok(Prepared {
            game,
            learners: cfg.learners.clone(),
            horizon,
            env,
            start,
            known,
            g_bound,
            hindsight,
            nash,
            metrics: cfg.metrics.clone(),
            gap: cfg.gap,
            seed: cfg.seed,
        })
    }

    fn wants(&self, m: Metric) -> bool {
        self.metrics.contains(&m)
    }

    /// Runs replication `r` and returns its rows. With `final_only` the
    /// grid metrics are logged at `t = T` only and actions are skipped.
    pub fn replicate(&self, r: u64, final_only: bool) -> Result<Vec<Row>> {
        let rep_seed: u64 = substream(self.seed, r).random();
        let sets = self.game.agent_sets()?;
        let sizes: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
        let start = JointAction::with_sizes(self.start.clone(), &sizes)?;
        let mut learners = sets
            .into_iter()
            .enumerate()
            .map(|(i, set)| {
                Learner::new(
                    self.learners[i],
                    set,
                    start.block(i).to_vec(),
                    self.horizon,
                    self.known,
                    substream(rep_seed, i as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut oracle_rng = substream(rep_seed, stream::ORACLE);
        let mut probe_rng = substream(rep_seed, stream::PROBE);
        let seed = r as i64;
        let mut rows = Vec::new();
        let push = |rows: &mut Vec<Row>, t: u64, metric: String, value: f64| {
            rows.push(Row { seed, t, metric, value });
        };
        let log_actions = self.wants(Metric::Action) && !final_only;
        if log_actions {
            for (k, v) in start.coords().iter().enumerate() {
                push(&mut rows, 0, format!("action[{k}]"), *v);
            }
        }
        let grid = if final_only { vec![self.horizon] } else { log_grid(self.horizon) };
        let mut next_log = grid.iter().copied().peekable();
        let mut regret = 0.0;
        let mut average = RunningMean::default();
        for t in 1..=self.horizon {
            let played = joint_action(&learners);
            if let Some(x_star) = &self.hindsight {
                let cost = self
                    .env
                    .cost(t)
                    .ok_or_else(|| Error::contract(format!("no cost for round {t}")))?;
                regret += cost.value(played.coords()) - cost.value(x_star);
            }
            if self.wants(Metric::Gap) {
                average.push(played.coords());
            }
            let next = ma_round(&mut learners, |x| self.game.oracle(&self.env, x, t, &mut oracle_rng))?;
            if log_actions {
                for (k, v) in next.coords().iter().enumerate() {
                    push(&mut rows, t, format!("action[{k}]"), *v);
                }
            }
            if next_log.peek() != Some(&t) {
                continue;
            }
            next_log.next();
            for m in &self.metrics {
                match m {
                    Metric::Action => {}
                    Metric::Regret => push(&mut rows, t, "regret".into(), regret),
                    Metric::Distance => {
                        let x_star = self.nash.as_ref().expect("prepared with distance");
                        push(&mut rows, t, "distance".into(), dist_sq(next.coords(), x_star));
                    }
                    Metric::Gap => {
                        let g = gap_estimate(&average.mean(), &self.game, self.gap.starts, self.gap.iters, &mut probe_rng)?;
                        push(&mut rows, t, "gap".into(), g);
                    }
                    Metric::GapLast => {
                        let g = gap_estimate(next.coords(), &self.game, self.gap.starts, self.gap.iters, &mut probe_rng)?;
                        push(&mut rows, t, "gap_last".into(), g);
                    }
                    Metric::Qf => {
                        let g = self.g_bound.expect("prepared with qf");
                        for (i, l) in learners.iter().enumerate() {
                            if let Some(c) = l.curvature() {
                                push(&mut rows, t, format!("qf_sum[{i}]"), c.qf_sum());
                                push(&mut rows, t, format!("qf_bound[{i}]"), qf_bound(c.dim(), t, g));
                            }
                        }
                    }
                }
            }
        }
        Ok(rows)
    }
}

/// Sorts rows by `(seed, t)`, keeping insertion order within a key.
fn sort_rows(rows: &mut [Row]) {
    rows.sort_by_key(|r| (r.seed, r.t));
}

/// Mean and standard error across seeds for every `(t, metric)` except
/// per-round actions.
pub fn summarize(rows: &[Row]) -> Vec<Row> {
    let mut groups: BTreeMap<(u64, &str), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.seed >= 0 && !r.metric.starts_with("action")) {
        groups.entry((r.t, r.metric.as_str())).or_default().push(r.value);
    }
    let mut out = Vec::new();
    for ((t, metric), values) in groups {
        let (mean, stderr) = mean_stderr(&values);
        out.push(Row { seed: -1, t, metric: format!("mean/{metric}"), value: mean });
        if let Some(se) = stderr {
            out.push(Row { seed: -1, t, metric: format!("stderr/{metric}"), value: se });
        }
    }
    out
}

/// Sample mean and, for two or more values, the standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Executes `cfg` at its `horizon`: per-replication rows followed by the
/// summary block.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let horizon = cfg
        .horizon
        .ok_or_else(|| Error::config("horizon", "run needs a horizon"))?;
    let prep = Prepared::new(cfg, horizon)?;
    let per_rep = (0..cfg.replications)
        .into_par_iter()
        .map(|r| prep.replicate(r, false))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<Row> = per_rep.into_iter().flatten().collect();
    sort_rows(&mut rows);
    let summary = summarize(&rows);
    rows.extend(summary);
    Ok(rows)
}

/// Runs every horizon in `cfg.horizons`, logging final values only, then
/// appends the summary and one `slope/` and `nonconvergent/` row per
/// metric.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let mut horizons = cfg.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.len() < 3 {
        return Err(Error::config("horizons", "sweep needs at least three distinct horizons"));
    }
    let preps = horizons
        .iter()
        .map(|&t| Prepared::new(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..preps.len())
        .flat_map(|h| (0..cfg.replications).map(move |r| (h, r)))
        .collect();
    let per_job = jobs
        .into_par_iter()
        .map(|(h, r)| preps[h].replicate(r, true))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<Row> = per_job.into_iter().flatten().collect();
    sort_rows(&mut rows);
    let summary = summarize(&rows);
    let slopes = slope_rows(&summary);
    rows.extend(summary);
    rows.extend(slopes);
    Ok(rows)
}

/// Fits `ln(mean)` against `ln(T)` for every summarized metric. Regret is
/// normalized by `T` before flagging, so a no-regret run is never flagged.
pub fn slope_rows(summary: &[Row]) -> Vec<Row> {
    let mut series: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in summary {
        if let Some(metric) = r.metric.strip_prefix("mean/") {
            let e = series.entry(metric).or_default();
            e.0.push(r.t as f64);
            e.1.push(r.value);
        }
    }
    let mut out = Vec::new();
    for (metric, (ts, means)) in series {
        let slope = fit_rate(&ts, &means).unwrap_or(f64::NAN);
        let normalized = if metric == "regret" { slope - 1.0 } else { slope };
        let flagged = !(normalized <= NONCONVERGENT_SLOPE);
        out.push(Row { seed: -1, t: 0, metric: format!("slope/{metric}"), value: slope });
        out.push(Row {
            seed: -1,
            t: 0,
            metric: format!("nonconvergent/{metric}"),
            value: if flagged { 1.0 } else { 0.0 },
        });
    }
    out
}

/// Writes `seed,t,metric,value` with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "t", "metric", "value"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.t.to_string(),
            r.metric.clone(),
            format!("{:.16e}", r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The CSV as a byte vector.
pub fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}
