//! Game instances, gradient oracles and curvature calculators.
//!
//! A [`GameSpec`] pairs a [`GameKind`] with a [`NoiseModel`]. Static games
//! (power control, multi-retailer newsvendor, the rank-one exp-concave game)
//! expose a deterministic field `v(x)`; streams expose one [`CostFn`] per
//! round through an [`Environment`].

mod instance;
pub mod newsvendor;
pub mod power;
pub mod probes;
pub mod rank_one;
pub mod streams;

use rand::Rng;
use rand_distr::{Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, FeasibleSet, JointAction};
use crate::learners::GradientSignal;

pub use newsvendor::{
    ma_demand_cdf, newsvendor_ma_beta, newsvendor_signal, sample_ma_demand, Demand, NewsvendorMaParams,
    NewsvendorSaParams,
};
pub use power::{pm_beta, BetaReport, PowerParams};
pub use probes::{ec_probe, monotonicity_probe, newsvendor_ma_hessian_check, ProbeReport};
pub use rank_one::RankOneParams;
pub use streams::{CostFn, LinearRegressionParams, PortfolioParams, Prices, QuadraticParams, Targets};

/// Membership slack accepted for oracle queries.
const QUERY_TOL: f64 = 1e-9;

/// Which game is played.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", content = "params", rename_all = "snake_case")]
pub enum GameKind {
    QuadraticStream(QuadraticParams),
    LinearRegressionStream(LinearRegressionParams),
    PortfolioStream(PortfolioParams),
    PowerManagement(PowerParams),
    NewsvendorSa(NewsvendorSaParams),
    NewsvendorMa(NewsvendorMaParams),
    RankOne(RankOneParams),
}

/// Additive gradient noise.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::config("noise.sigma", format!("must be finite and non-negative, got {sigma}")));
        }
        Ok(if sigma == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::Gaussian { sigma }
        })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => *sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub kind: GameKind,
    pub noise: NoiseModel,
}

/// The cost sequence a stream game presents over a horizon.
#[derive(Clone, Debug, PartialEq)]
pub enum Environment {
    /// Static games have no per-round cost.
    Static,
    /// The same cost every round.
    Stationary(CostFn),
    Rounds(Vec<CostFn>),
}

impl Environment {
    /// The cost of round `t` (1-based).
    pub fn cost(&self, t: u64) -> Option<&CostFn> {
        match self {
            Environment::Static => None,
            Environment::Stationary(c) => Some(c),
            Environment::Rounds(v) => v.get((t as usize).checked_sub(1)?),
        }
    }

    /// The first `horizon` costs as a slice, or the single stationary cost.
    pub fn distinct_costs(&self, horizon: u64) -> &[CostFn] {
        match self {
            Environment::Static => &[],
            Environment::Stationary(c) => std::slice::from_ref(c),
            Environment::Rounds(v) => &v[..(horizon as usize).min(v.len())],
        }
    }
}

impl GameSpec {
    pub fn new(kind: GameKind, noise: NoiseModel) -> Result<Self> {
        let spec = GameSpec { kind, noise };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless(kind: GameKind) -> Result<Self> {
        Self::new(kind, NoiseModel::None)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            GameKind::QuadraticStream(p) => p.validate(),
            GameKind::LinearRegressionStream(p) => p.validate(),
            GameKind::PortfolioStream(p) => p.validate(),
            GameKind::PowerManagement(p) => p.validate(),
            GameKind::NewsvendorSa(p) => p.validate(),
            GameKind::NewsvendorMa(p) => p.validate(),
            GameKind::RankOne(p) => p.validate(),
        }?;
        NoiseModel::gaussian(self.noise.sigma())?;
        if self.is_newsvendor() && self.noise != NoiseModel::None {
            return Err(Error::config(
                "noise",
                "newsvendor feedback is already random; additive noise is not supported",
            ));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GameKind::QuadraticStream(_) => "quadratic_stream",
            GameKind::LinearRegressionStream(_) => "linear_regression_stream",
            GameKind::PortfolioStream(_) => "portfolio_stream",
            GameKind::PowerManagement(_) => "power_management",
            GameKind::NewsvendorSa(_) => "newsvendor_sa",
            GameKind::NewsvendorMa(_) => "newsvendor_ma",
            GameKind::RankOne(_) => "rank_one",
        }
    }

    fn is_newsvendor(&self) -> bool {
        matches!(self.kind, GameKind::NewsvendorSa(_) | GameKind::NewsvendorMa(_))
    }

    /// True for games whose losses change every round.
    pub fn is_stream(&self) -> bool {
        matches!(
            self.kind,
            GameKind::QuadraticStream(_)
                | GameKind::LinearRegressionStream(_)
                | GameKind::PortfolioStream(_)
                | GameKind::NewsvendorSa(_)
        )
    }

    /// Whether oracle signals equal the true gradient.
    pub fn signals_exact(&self) -> bool {
        !self.is_newsvendor() && self.noise == NoiseModel::None
    }

    pub fn agent_sets(&self) -> Result<Vec<FeasibleSet>> {
        Ok(match &self.kind {
            GameKind::QuadraticStream(p) => vec![FeasibleSet::cube(p.dim, p.low, p.high)?],
            GameKind::LinearRegressionStream(p) => vec![FeasibleSet::new_ball(vec![0.0; p.dim], p.radius)?],
            GameKind::PortfolioStream(p) => vec![FeasibleSet::new_simplex(p.dim)?],
            GameKind::PowerManagement(p) => p
                .upper_bounds()
                .into_iter()
                .map(|u| FeasibleSet::new_box(vec![0.0], vec![u]))
                .collect::<Result<_>>()?,
            GameKind::NewsvendorSa(p) => vec![FeasibleSet::new_box(vec![0.0], vec![p.x_bar()?])?],
            GameKind::NewsvendorMa(p) => p
                .x_bar
                .iter()
                .map(|u| FeasibleSet::new_box(vec![0.0], vec![*u]))
                .collect::<Result<_>>()?,
            GameKind::RankOne(p) => p
                .dims()
                .into_iter()
                .map(|d| FeasibleSet::new_ball(vec![0.0; d], p.radius))
                .collect::<Result<_>>()?,
        })
    }

    pub fn num_agents(&self) -> usize {
        match &self.kind {
            GameKind::PowerManagement(p) => p.n(),
            GameKind::NewsvendorMa(p) => p.costs.len(),
            GameKind::RankOne(p) => p.a.len(),
            _ => 1,
        }
    }

    /// The product of the agents' sets (or the single agent's set).
    pub fn joint_set(&self) -> Result<FeasibleSet> {
        let mut sets = self.agent_sets()?;
        if sets.len() == 1 {
            Ok(sets.pop().unwrap())
        } else {
            FeasibleSet::new_product(sets)
        }
    }

    pub fn block_sizes(&self) -> Result<Vec<usize>> {
        Ok(self.agent_sets()?.iter().map(FeasibleSet::dim).collect())
    }

    pub fn environment(&self, horizon: u64) -> Result<Environment> {
        Ok(match &self.kind {
            GameKind::QuadraticStream(p) => match p.fixed_target() {
                Some(t) => Environment::Stationary(CostFn::Quadratic { beta: p.beta, target: t.to_vec() }),
                None => Environment::Rounds(p.costs(horizon)),
            },
            GameKind::LinearRegressionStream(p) => Environment::Rounds(p.costs(horizon)),
            GameKind::PortfolioStream(p) => Environment::Rounds(p.costs(horizon)),
            GameKind::NewsvendorSa(p) => Environment::Stationary(CostFn::Newsvendor {
                price: p.price,
                cost: p.cost,
                demand: p.demand.clone(),
            }),
            _ => Environment::Static,
        })
    }

    /// The deterministic field `v(x)` for games that have one (static games
    /// and constant streams). Does not check membership.
    pub fn field(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            GameKind::PowerManagement(p) => Ok(p.field(x)),
            GameKind::NewsvendorMa(p) => Ok(p.field(x)),
            GameKind::RankOne(p) => Ok(p.field(x)),
            GameKind::NewsvendorSa(p) => Ok(vec![newsvendor::expected_gradient(p.price, p.cost, &p.demand, x[0])]),
            GameKind::QuadraticStream(p) if p.fixed_target().is_some() => {
                let t = p.fixed_target().unwrap();
                Ok(x.iter().zip(t).map(|(a, b)| p.beta * (a - b)).collect())
            }
            _ => Err(Error::contract(format!("{} has no time-invariant gradient field", self.name()))),
        }
    }

    /// One round of feedback at joint action `x`. `env` must come from
    /// [`environment`](Self::environment) and `rng` supplies noise and
    /// demand draws.
    pub fn oracle<R: Rng + ?Sized>(
        &self,
        env: &Environment,
        x: &JointAction,
        t: u64,
        rng: &mut R,
    ) -> Result<Vec<GradientSignal>> {
        let set = self.joint_set()?;
        if !set.contains(x.coords(), QUERY_TOL) {
            return Err(Error::contract(format!("oracle queried at infeasible point {:?}", x.coords())));
        }
        let coords = x.coords();
        match &self.kind {
            GameKind::NewsvendorSa(p) => {
                let d = p.demand.sample(rng);
                Ok(vec![GradientSignal::noisy(vec![newsvendor_signal(p.price, p.cost, coords[0], d)])])
            }
            GameKind::NewsvendorMa(p) => {
                let total: f64 = coords.iter().sum();
                coords
                    .iter()
                    .zip(&p.costs)
                    .map(|(xi, ci)| {
                        let d = sample_ma_demand(total - xi, rng.sample(Open01))?;
                        Ok(GradientSignal::noisy(vec![newsvendor_signal(p.price, *ci, *xi, d)]))
                    })
                    .collect()
            }
            _ => {
                let mut g = if self.is_stream() {
                    env.cost(t)
                        .ok_or_else(|| Error::contract(format!("round {t} is outside the environment")))?
                        .gradient(coords)
                } else {
                    self.field(coords)?
                };
                let exact = match self.noise {
                    NoiseModel::None => true,
                    NoiseModel::Gaussian { sigma } => {
                        let normal = Normal::new(0.0, sigma).expect("validated sigma");
                        for gi in g.iter_mut() {
                            *gi += normal.sample(rng);
                        }
                        false
                    }
                };
                let sizes = x.block_sizes();
                let mut offset = 0;
                Ok(sizes
                    .into_iter()
                    .map(|s| {
                        let block = g[offset..offset + s].to_vec();
                        offset += s;
                        GradientSignal { vector: block, exact }
                    })
                    .collect())
            }
        }
    }

    /// A bound `G²` on the signal's second moment: `(1.1·sup‖v‖)² + dσ²`,
    /// with the supremum estimated from `samples` random points plus the
    /// vertices of box-shaped sets. Newsvendor signals are bounded exactly.
    pub fn second_moment_bound<R: Rng + ?Sized>(&self, env: &Environment, samples: usize, rng: &mut R) -> Result<f64> {
        match &self.kind {
            GameKind::NewsvendorSa(p) => return Ok(p.cost.max(p.price - p.cost).powi(2)),
            GameKind::NewsvendorMa(p) => {
                return Ok(p.costs.iter().map(|c| c.max(p.price - c).powi(2)).sum());
            }
            _ => {}
        }
        let set = self.joint_set()?;
        let d = set.dim();
        let rounds: u64 = match env {
            Environment::Rounds(v) => v.len() as u64,
            _ => 1,
        };
        let eval = |x: &[f64], rng: &mut R| -> Result<f64> {
            let g = if self.is_stream() {
                let t = rng.random_range(1..=rounds);
                env.cost(t).expect("round in range").gradient(x)
            } else {
                self.field(x)?
            };
            Ok(norm(&g))
        };
        let mut sup: f64 = 0.0;
        for v in box_vertices(&set) {
            sup = sup.max(eval(&v, rng)?);
        }
        for _ in 0..samples {
            let x = set.sample(rng);
            sup = sup.max(eval(&x, rng)?);
        }
        let sigma = self.noise.sigma();
        Ok((1.1 * sup).powi(2) + d as f64 * sigma * sigma)
    }

    /// Strong-monotonicity constant from the instance's calculator.
    pub fn strong_monotonicity(&self) -> Option<f64> {
        match &self.kind {
            GameKind::PowerManagement(p) => Some(p.beta().beta),
            GameKind::NewsvendorMa(p) => Some(p.beta()),
            GameKind::QuadraticStream(p) => Some(p.beta),
            GameKind::NewsvendorSa(p) => {
                let x_bar = p.x_bar().ok()?;
                // Infimum of the density over [0, x̄] times the price.
                let density = p.demand.pdf(0.0).min(p.demand.pdf(x_bar));
                Some(p.price * density)
            }
            _ => None,
        }
    }

    /// Exp-concavity constant, where the instance defines one.
    pub fn exp_concavity(&self) -> Option<f64> {
        match &self.kind {
            GameKind::RankOne(p) => Some(p.alpha()),
            GameKind::PortfolioStream(_) => Some(1.0),
            _ => None,
        }
    }
}

/// Vertices of a box or of a product of boxes; empty for other sets or when
/// there would be more than 2¹⁶ of them.
pub fn box_vertices(set: &FeasibleSet) -> Vec<Vec<f64>> {
    fn bounds(set: &FeasibleSet, out: &mut Vec<(f64, f64)>) -> bool {
        match set {
            FeasibleSet::Box { lower, upper } => {
                out.extend(lower.iter().copied().zip(upper.iter().copied()));
                true
            }
            FeasibleSet::Product(fs) => fs.iter().all(|f| bounds(f, out)),
            _ => false,
        }
    }
    let mut b = Vec::new();
    if !bounds(set, &mut b) || b.len() > 16 {
        return Vec::new();
    }
    (0..1u32 << b.len())
        .map(|mask| {
            b.iter()
                .enumerate()
                .map(|(i, (l, u))| if mask & (1 << i) != 0 { *u } else { *l })
                .collect()
        })
        .collect()
}

pub use instance::{load_instance, parse_instance};

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn two_link_power(sigma: f64) -> GameSpec {
        GameSpec::new(
            GameKind::PowerManagement(PowerParams {
                gain: vec![vec![2.0, 1.0], vec![1.0, 2.0]],
                r_star: vec![0.5, 0.5],
                thermal: vec![1.0, 1.0],
                upper: None,
            }),
            NoiseModel::gaussian(sigma).unwrap(),
        )
        .unwrap()
    }

    pub fn two_retailers() -> GameSpec {
        GameSpec::noiseless(GameKind::NewsvendorMa(NewsvendorMaParams {
            price: 2.0,
            costs: vec![1.0, 1.0],
            x_bar: vec![1.0, 1.0],
        }))
        .unwrap()
    }

    pub fn single_retailer() -> GameSpec {
        GameSpec::noiseless(GameKind::NewsvendorSa(NewsvendorSaParams {
            price: 2.0,
            cost: 1.0,
            demand: Demand::Uniform { upper: 100.0 },
            x_bar: None,
        }))
        .unwrap()
    }
}
