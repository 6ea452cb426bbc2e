//! Single-agent cost streams and their per-round cost functions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::newsvendor::{expected_cost, expected_gradient, Demand};
use crate::error::{Error, Result};
use crate::geometry::dot;

/// One round's loss `fₜ`.
#[derive(Clone, Debug, PartialEq)]
pub enum CostFn {
    /// `(β/2)‖x − θ‖²`.
    Quadratic { beta: f64, target: Vec<f64> },
    /// `(aᵀx − b)²`.
    LeastSquares { a: Vec<f64>, b: f64 },
    /// `−ln(aᵀx)`.
    LogWealth { a: Vec<f64> },
    /// Expected lost-sales newsvendor cost of ordering `x`.
    Newsvendor { price: f64, cost: f64, demand: Demand },
}

impl CostFn {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            CostFn::Quadratic { beta, target } => {
                0.5 * beta * x.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            CostFn::LeastSquares { a, b } => (dot(a, x) - b).powi(2),
            CostFn::LogWealth { a } => -dot(a, x).ln(),
            CostFn::Newsvendor { price, cost, demand } => expected_cost(*price, *cost, demand, x[0]),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CostFn::Quadratic { beta, target } => x.iter().zip(target).map(|(a, b)| beta * (a - b)).collect(),
            CostFn::LeastSquares { a, b } => {
                let r = 2.0 * (dot(a, x) - b);
                a.iter().map(|ai| r * ai).collect()
            }
            CostFn::LogWealth { a } => {
                let w = dot(a, x);
                a.iter().map(|ai| -ai / w).collect()
            }
            CostFn::Newsvendor { price, cost, demand } => vec![expected_gradient(*price, *cost, demand, x[0])],
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        match self {
            CostFn::Quadratic { beta, .. } => DMatrix::identity(d, d) * *beta,
            CostFn::LeastSquares { a, .. } => DMatrix::from_fn(d, d, |i, j| 2.0 * a[i] * a[j]),
            CostFn::LogWealth { a } => {
                let w2 = dot(a, x).powi(2);
                DMatrix::from_fn(d, d, |i, j| a[i] * a[j] / w2)
            }
            CostFn::Newsvendor { price, demand, .. } => DMatrix::from_element(1, 1, price * demand.pdf(x[0])),
        }
    }
}

/// How the quadratic stream picks its targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Targets {
    /// Round `t` uses entry `(t − 1) mod len`.
    Cycle(Vec<Vec<f64>>),
    /// I.i.d. uniform on `[low, high]^d` from a fixed seed.
    Uniform { low: f64, high: f64, seed: u64 },
}

fn default_low() -> f64 {
    -1.0
}

fn default_high() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    1.0
}

fn default_label_noise() -> f64 {
    0.1
}

fn default_price_low() -> f64 {
    0.5
}

fn default_price_high() -> f64 {
    2.0
}

/// `fₜ(x) = (β/2)‖x − θₜ‖²` on the cube `[low, high]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub dim: usize,
    pub beta: f64,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    pub targets: Targets,
}

impl QuadraticParams {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config("params.beta", "must be positive"));
        }
        if !(self.low.is_finite() && self.high.is_finite() && self.low <= self.high) {
            return Err(Error::config("params.low", "need finite low ≤ high"));
        }
        match &self.targets {
            Targets::Cycle(list) => {
                if list.is_empty() || list.iter().any(|t| t.len() != self.dim || t.iter().any(|v| !v.is_finite())) {
                    return Err(Error::config(
                        "params.targets.cycle",
                        format!("needs at least one finite target of dimension {}", self.dim),
                    ));
                }
            }
            Targets::Uniform { low, high, .. } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::config("params.targets.uniform", "need finite low ≤ high"));
                }
            }
        }
        Ok(())
    }

    pub fn costs(&self, horizon: u64) -> Vec<CostFn> {
        let make = |target| CostFn::Quadratic { beta: self.beta, target };
        match &self.targets {
            Targets::Cycle(list) => (0..horizon as usize).map(|t| make(list[t % list.len()].clone())).collect(),
            Targets::Uniform { low, high, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..horizon)
                    .map(|_| make((0..self.dim).map(|_| low + (high - low) * rng.random::<f64>()).collect()))
                    .collect()
            }
        }
    }

    /// The target when the stream is constant.
    pub fn fixed_target(&self) -> Option<&[f64]> {
        match &self.targets {
            Targets::Cycle(list) if list.len() == 1 => Some(&list[0]),
            _ => None,
        }
    }
}

/// `fₜ(x) = (aₜᵀx − bₜ)²` over a centered ball, with `aₜ` uniform in the
/// unit cube and `bₜ = aₜᵀw + noise` for a hidden `w` inside the ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRegressionParams {
    pub dim: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub seed: u64,
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
}

impl LinearRegressionParams {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("params.radius", "must be positive"));
        }
        if !(self.label_noise.is_finite() && self.label_noise >= 0.0) {
            return Err(Error::config("params.label_noise", "must be non-negative"));
        }
        Ok(())
    }

    pub fn costs(&self, horizon: u64) -> Vec<CostFn> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let scale = 0.5 * self.radius / (self.dim as f64).sqrt();
        let w: Vec<f64> = (0..self.dim).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
        (0..horizon)
            .map(|_| {
                let a: Vec<f64> = (0..self.dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                let b = dot(&a, &w) + self.label_noise * (2.0 * rng.random::<f64>() - 1.0);
                CostFn::LeastSquares { a, b }
            })
            .collect()
    }
}

/// How portfolio price relatives are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Prices {
    /// I.i.d. log-uniform on `[low, high]` per asset from a fixed seed.
    LogUniform {
        #[serde(default = "default_price_low")]
        low: f64,
        #[serde(default = "default_price_high")]
        high: f64,
        seed: u64,
    },
    /// Round `t` uses entry `(t − 1) mod len`.
    Cycle(Vec<Vec<f64>>),
}

/// Log-wealth losses `−ln(aₜᵀx)` on the simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioParams {
    pub dim: usize,
    pub prices: Prices,
}

impl PortfolioParams {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        match &self.prices {
            Prices::LogUniform { low, high, .. } => {
                if !(*low > 0.0 && high.is_finite() && low <= high) {
                    return Err(Error::config("params.prices", "price relatives need 0 < low ≤ high"));
                }
            }
            Prices::Cycle(rows) => {
                if rows.is_empty() {
                    return Err(Error::config("params.prices", "the cycle needs at least one entry"));
                }
                for row in rows {
                    if row.len() != self.dim || row.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        return Err(Error::config(
                            "params.prices",
                            format!("each entry needs {} positive price relatives", self.dim),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn costs(&self, horizon: u64) -> Vec<CostFn> {
        match &self.prices {
            Prices::LogUniform { low, high, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (lo, hi) = (low.ln(), high.ln());
                (0..horizon)
                    .map(|_| CostFn::LogWealth {
                        a: (0..self.dim).map(|_| (lo + (hi - lo) * rng.random::<f64>()).exp()).collect(),
                    })
                    .collect()
            }
            Prices::Cycle(rows) => (0..horizon as usize)
                .map(|t| CostFn::LogWealth { a: rows[t % rows.len()].clone() })
                .collect(),
        }
    }

    /// `sup ‖a/(aᵀx)‖` over the simplex and all price vectors the stream
    /// can produce: `‖a‖/minᵢ aᵢ`, or `√d·high/low` for log-uniform prices.
    pub fn gradient_bound(&self) -> f64 {
        match &self.prices {
            Prices::LogUniform { low, high, .. } => (self.dim as f64).sqrt() * high / low,
            Prices::Cycle(rows) => rows
                .iter()
                .map(|a| dot(a, a).sqrt() / a.iter().copied().fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::config("params.dim", "must be at least 1"))
    } else {
        Ok(())
    }
}
