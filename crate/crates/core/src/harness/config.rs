//! Experiment configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::games::{parse_instance, GameSpec, NoiseModel};
use crate::learners::Algorithm;

/// What a run records. `Action` is logged every round; the others on the
/// geometric grid `{1, 2, 4, …} ∪ {T}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Coordinates of the iterate after `t` updates, `t = 0..=T`.
    Action,
    /// Cumulative regret against the horizon-`T` hindsight optimum.
    Regret,
    /// `‖xᵗ − x⋆‖²` to the Nash equilibrium.
    Distance,
    /// Estimated gap of the time-averaged played action.
    Gap,
    /// Estimated gap of the last iterate (diagnostic only).
    GapLast,
    /// Per-agent `Σ gᵀA⁻¹g` and its logarithmic bound (Newton learners).
    Qf,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Action => "action",
            Metric::Regret => "regret",
            Metric::Distance => "distance",
            Metric::Gap => "gap",
            Metric::GapLast => "gap_last",
            Metric::Qf => "qf",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "action" => Metric::Action,
            "regret" => Metric::Regret,
            "distance" => Metric::Distance,
            "gap" => Metric::Gap,
            "gap_last" => Metric::GapLast,
            "qf" => Metric::Qf,
            other => return Err(Error::config("metrics", format!("unknown metric {other:?}"))),
        })
    }
}

/// Known curvature parameters shared by every agent. Missing values are
/// derived from the game's calculators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerParams {
    pub beta: Option<f64>,
    pub g: Option<f64>,
    pub d: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSettings {
    #[serde(default = "default_gap_starts")]
    pub starts: usize,
    #[serde(default = "default_gap_iters")]
    pub iters: usize,
}

fn default_gap_starts() -> usize {
    8
}

fn default_gap_iters() -> usize {
    100
}

impl Default for GapSettings {
    fn default() -> Self {
        GapSettings {
            starts: default_gap_starts(),
            iters: default_gap_iters(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    game: Value,
    learners: Value,
    #[serde(default)]
    learner_params: LearnerParams,
    horizon: Option<u64>,
    horizons: Option<Vec<u64>>,
    #[serde(default = "default_replications")]
    replications: u64,
    #[serde(default)]
    seed: u64,
    noise_sigma: Option<f64>,
    start: Option<Vec<f64>>,
    output: Option<PathBuf>,
    metrics: Vec<String>,
    #[serde(default)]
    gap: GapSettings,
}

fn default_replications() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    /// One algorithm per agent.
    pub learners: Vec<Algorithm>,
    pub learner_params: LearnerParams,
    /// Horizon for `run`.
    pub horizon: Option<u64>,
    /// Horizon grid for `sweep`.
    pub horizons: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
    /// Initial joint action; the center of the joint set when absent.
    pub start: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub gap: GapSettings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?;
        Self::from_value(&value, path.parent())
    }

    /// Parses a config. A string `game` is a path to an instance file,
    /// resolved against `base` when relative.
    pub fn from_value(value: &Value, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = serde_json::from_value(value.clone()).map_err(|e| {
            let msg = e.to_string();
            let key = unknown_field(&msg).unwrap_or_else(|| "config".to_string());
            Error::config(key, msg)
        })?;
        let mut game = match &raw.game {
            Value::String(p) => {
                let path = base.map_or_else(|| PathBuf::from(p), |b| b.join(p));
                crate::games::load_instance(&path).map_err(|e| prefix(e, "game"))?
            }
            v => parse_instance(v, "game")?,
        };
        if let Some(sigma) = raw.noise_sigma {
            game.noise = NoiseModel::gaussian(sigma).map_err(|_| Error::config("noise_sigma", "must be finite and ≥ 0"))?;
            game.validate().map_err(|e| prefix(e, "noise_sigma"))?;
        }
        let n = game.num_agents();
        let learners = match &raw.learners {
            Value::String(s) => vec![s.parse::<Algorithm>()?; n],
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .ok_or_else(|| Error::config("learners", "entries must be strings"))?
                        .parse::<Algorithm>()
                })
                .collect::<Result<_>>()?,
            _ => return Err(Error::config("learners", "expected a name or a list of names")),
        };
        if learners.len() != n {
            return Err(Error::config(
                "learners",
                format!("{} learners for a game with {n} agents", learners.len()),
            ));
        }
        if learners.iter().any(|a| a.is_newton()) && !game.signals_exact() {
            return Err(Error::config("learners", "ONS-family learners need exact gradients (a noiseless game)"));
        }
        let metrics = raw.metrics.iter().map(|m| m.parse()).collect::<Result<Vec<Metric>>>()?;
        if metrics.is_empty() {
            return Err(Error::config("metrics", "select at least one metric"));
        }
        let cfg = ExperimentConfig {
            game,
            learners,
            learner_params: raw.learner_params,
            horizon: raw.horizon,
            horizons: raw.horizons.unwrap_or_default(),
            replications: raw.replications,
            seed: raw.seed,
            start: raw.start,
            output: raw.output,
            metrics,
            gap: raw.gap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == Some(0) || self.horizons.contains(&0) {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        let p = &self.learner_params;
        for (key, v) in [("beta", p.beta), ("g", p.g), ("d", p.d), ("alpha", p.alpha)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(format!("learner_params.{key}"), "must be positive"));
                }
            }
        }
        let set = self.game.joint_set()?;
        if let Some(x) = &self.start {
            if x.len() != set.dim() || !set.contains(x, 1e-12) {
                return Err(Error::config("start", "must be a feasible joint action"));
            }
        }
        for m in &self.metrics {
            let ok = match m {
                Metric::Regret => self.game.is_stream(),
                Metric::Distance => {
                    self.game.strong_monotonicity().is_some() && self.game.field(&set.center()).is_ok()
                }
                Metric::Gap | Metric::GapLast => self.game.field(&set.center()).is_ok(),
                Metric::Qf => self.learners.iter().any(|a| a.is_newton()),
                Metric::Action => true,
            };
            if !ok {
                return Err(Error::config(
                    "metrics",
                    format!("{} is not available for {} with these learners", m.name(), self.game.name()),
                ));
            }
        }
        Ok(())
    }
}

fn unknown_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn prefix(e: Error, key: &str) -> Error {
    match e {
        Error::Config { key: k, message } if !key.is_empty() => Error::Config {
            key: format!("{key}.{k}"),
            message,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "game": {"game": "quadratic_stream", "params": {"dim": 1, "beta": 1.0,
                     "targets": {"cycle": [[0.2], [0.8]]}}},
            "learners": "ada_ogd",
            "horizon": 10,
            "metrics": ["action", "regret"]
        })
    }

    fn key_of(v: Value) -> String {
        match ExperimentConfig::from_value(&v, None) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_value(&base(), None).unwrap();
        assert_eq!(c.learners, vec![Algorithm::AdaOgd]);
        assert_eq!(c.replications, 1);
        assert_eq!(c.metrics, vec![Metric::Action, Metric::Regret]);
    }

    #[test]
    fn offending_keys_are_named() {
        let mut v = base();
        v["horizn"] = json!(5);
        assert_eq!(key_of(v), "horizn");
        let mut v = base();
        v["learners"] = json!("sgd");
        assert_eq!(key_of(v), "learners");
        let mut v = base();
        v["metrics"] = json!(["distance"]);
        assert_eq!(key_of(v), "metrics");
        let mut v = base();
        v["replications"] = json!(0);
        assert_eq!(key_of(v), "replications");
        let mut v = base();
        v["game"]["params"]["beta"] = json!(-1.0);
        assert!(key_of(v).starts_with("game."));
        let mut v = base();
        v["learner_params"] = json!({"beta": 1.0, "gamma": 2.0});
        assert_eq!(key_of(v), "gamma");
    }

    #[test]
    fn newton_learners_need_exact_gradients() {
        let mut v = base();
        v["learners"] = json!("ada_ons");
        v["noise_sigma"] = json!(0.1);
        assert_eq!(key_of(v), "learners");
    }
}
