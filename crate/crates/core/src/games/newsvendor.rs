//! Lost-sales newsvendor: one retailer facing an exogenous demand, or many
//! retailers whose demands depend on each other's stock.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Demand distribution of the single-retailer model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Demand {
    /// Uniform on `[0, upper]`.
    Uniform { upper: f64 },
    /// Exponential with the given rate.
    Exponential { rate: f64 },
}

impl Demand {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match self {
            Demand::Uniform { upper } => ("demand.uniform.upper", *upper),
            Demand::Exponential { rate } => ("demand.exponential.rate", *rate),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::config(name, format!("must be positive, got {v}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Demand::Uniform { upper } => (x / upper).clamp(0.0, 1.0),
            Demand::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Demand::Uniform { upper } => {
                if (0.0..=upper).contains(&x) {
                    1.0 / upper
                } else {
                    0.0
                }
            }
            Demand::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Demand::Uniform { upper } => 0.5 * upper,
            Demand::Exponential { rate } => 1.0 / rate,
        }
    }

    /// `E[max(0, D − x)]`.
    pub fn expected_shortfall(&self, x: f64) -> f64 {
        match *self {
            Demand::Uniform { upper } => {
                if x <= 0.0 {
                    0.5 * upper - x
                } else if x >= upper {
                    0.0
                } else {
                    (upper - x).powi(2) / (2.0 * upper)
                }
            }
            Demand::Exponential { rate } => {
                if x <= 0.0 {
                    1.0 / rate - x
                } else {
                    (-rate * x).exp() / rate
                }
            }
        }
    }

    /// `E[max(0, x − D)] = x − E[D] + E[max(0, D − x)]`.
    pub fn expected_overage(&self, x: f64) -> f64 {
        match *self {
            Demand::Uniform { upper } if (0.0..=upper).contains(&x) => x * x / (2.0 * upper),
            _ => x - self.mean() + self.expected_shortfall(x),
        }
    }

    /// Inverse-CDF draw from a uniform `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Demand::Uniform { upper } => u * upper,
            Demand::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.sample(Open01))
    }
}

/// Censored-demand feedback: `c` when sales fell short of the order
/// (`d < x`), `c − p` otherwise. A tie `d = x` is indistinguishable from a
/// stockout, so it takes the second branch.
pub fn newsvendor_signal(price: f64, cost: f64, order: f64, demand: f64) -> f64 {
    let sales = order.min(demand);
    if sales < order {
        cost
    } else {
        cost - price
    }
}

/// Expected cost `(p − c)E(D − x)⁺ + c·E(x − D)⁺`.
pub fn expected_cost(price: f64, cost: f64, demand: &Demand, x: f64) -> f64 {
    (price - cost) * demand.expected_shortfall(x) + cost * demand.expected_overage(x)
}

/// Derivative of [`expected_cost`]: `p·F(x) − p + c`.
pub fn expected_gradient(price: f64, cost: f64, demand: &Demand, x: f64) -> f64 {
    price * demand.cdf(x) - price + cost
}

/// Draws retailer `i`'s demand when the others stock `s` units in total,
/// from `P(D ≤ z) = 1 − (1 + s)/(1 + z + s)²`. The distribution has an atom
/// of mass `s/(1 + s)` at zero.
pub fn sample_ma_demand(others: f64, u: f64) -> Result<f64> {
    if !(others >= 0.0 && others.is_finite()) {
        return Err(Error::contract(format!("competitor stock must be non-negative, got {others}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::contract(format!("uniform draw must lie in (0, 1), got {u}")));
    }
    let base = 1.0 + others;
    Ok(((base / (1.0 - u)).sqrt() - base).max(0.0))
}

/// `P(D ≤ z)` for the multi-retailer demand.
pub fn ma_demand_cdf(others: f64, z: f64) -> f64 {
    if z < 0.0 {
        0.0
    } else {
        1.0 - (1.0 + others) / (1.0 + z + others).powi(2)
    }
}

/// Strong-monotonicity constant `p/(1 + Σx̄)³` of the multi-retailer game.
pub fn newsvendor_ma_beta(price: f64, x_bar: &[f64]) -> f64 {
    price / (1.0 + x_bar.iter().sum::<f64>()).powi(3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsvendorSaParams {
    pub price: f64,
    pub cost: f64,
    pub demand: Demand,
    /// Order cap; defaults to the upper end of a uniform demand.
    #[serde(default)]
    pub x_bar: Option<f64>,
}

impl NewsvendorSaParams {
    pub fn validate(&self) -> Result<()> {
        check_price_cost(self.price, &[self.cost])?;
        self.demand.validate()?;
        let x_bar = self.x_bar()?;
        if !(x_bar.is_finite() && x_bar > 0.0) {
            return Err(Error::config("params.x_bar", format!("must be positive, got {x_bar}")));
        }
        Ok(())
    }

    pub fn x_bar(&self) -> Result<f64> {
        match (self.x_bar, &self.demand) {
            (Some(x), _) => Ok(x),
            (None, Demand::Uniform { upper }) => Ok(*upper),
            (None, _) => Err(Error::config("params.x_bar", "required for non-uniform demand")),
        }
    }

    /// Critical-fractile optimum `F⁻¹((p − c)/p)`, clamped to `[0, x̄]`.
    pub fn optimal_order(&self) -> Result<f64> {
        let q = (self.price - self.cost) / self.price;
        let x = if q <= 0.0 { 0.0 } else { self.demand.quantile(q) };
        Ok(x.clamp(0.0, self.x_bar()?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsvendorMaParams {
    pub price: f64,
    pub costs: Vec<f64>,
    pub x_bar: Vec<f64>,
}

impl NewsvendorMaParams {
    pub fn validate(&self) -> Result<()> {
        check_price_cost(self.price, &self.costs)?;
        if self.x_bar.len() != self.costs.len() {
            return Err(Error::config(
                "params.x_bar",
                format!("expected {} entries, got {}", self.costs.len(), self.x_bar.len()),
            ));
        }
        if self.x_bar.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::config("params.x_bar", "entries must be positive"));
        }
        Ok(())
    }

    /// `vᵢ(x) = cᵢ − p(1 + s₋ᵢ)/(1 + Σx)²`.
    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        let total: f64 = x.iter().sum();
        let denom = (1.0 + total).powi(2);
        self.costs
            .iter()
            .zip(x)
            .map(|(c, xi)| c - self.price * (1.0 + total - xi) / denom)
            .collect()
    }

    pub fn beta(&self) -> f64 {
        newsvendor_ma_beta(self.price, &self.x_bar)
    }
}

fn check_price_cost(price: f64, costs: &[f64]) -> Result<()> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::config("params.price", format!("must be positive, got {price}")));
    }
    if costs.is_empty() {
        return Err(Error::config("params.costs", "at least one retailer is required"));
    }
    for c in costs {
        if !(*c > 0.0 && *c <= price) {
            return Err(Error::config("params.cost", format!("unit cost {c} must lie in (0, price]")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::substream;

    #[test]
    fn signal_branches() {
        assert_eq!(newsvendor_signal(2.0, 1.0, 5.0, 3.0), 1.0);
        assert_eq!(newsvendor_signal(2.0, 1.0, 5.0, 7.0), -1.0);
        assert_eq!(newsvendor_signal(2.0, 1.0, 5.0, 5.0), -1.0);
    }

    #[test]
    fn ma_demand_inverse_cdf() {
        let z = sample_ma_demand(0.0, 0.75).unwrap();
        assert!((z - 1.0).abs() < 1e-15);
        assert!((ma_demand_cdf(0.0, z) - 0.75).abs() < 1e-15);
        assert_eq!(sample_ma_demand(1.0, 0.4).unwrap(), 0.0);
        let z = sample_ma_demand(1.0, 0.875).unwrap();
        assert!((z - 2.0).abs() < 1e-12);
        assert!((ma_demand_cdf(1.0, 2.0) - 0.875).abs() < 1e-15);
        assert!(sample_ma_demand(1.0, 0.0).is_err());
        assert!(sample_ma_demand(1.0, 1.0).is_err());
        assert!(sample_ma_demand(-1.0, 0.5).is_err());
    }

    #[test]
    fn ma_demand_empirical_cdf() {
        let mut rng = substream(4, 0);
        let s = 0.7;
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_ma_demand(s, rng.sample(Open01)).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        // Kolmogorov distance, evaluated on both sides of every jump.
        let mut sup: f64 = 0.0;
        for (k, z) in draws.iter().enumerate() {
            let f = ma_demand_cdf(s, *z);
            sup = sup.max((f - k as f64 / n as f64).abs());
            sup = sup.max((f - (k + 1) as f64 / n as f64).abs());
        }
        // The atom at zero contributes a flat stretch: compare its mass too.
        let zeros = draws.iter().filter(|z| **z == 0.0).count() as f64 / n as f64;
        assert!((zeros - s / (1.0 + s)).abs() <= 0.005);
        let positive_sup = draws
            .iter()
            .enumerate()
            .filter(|(_, z)| **z > 0.0)
            .map(|(k, z)| (ma_demand_cdf(s, *z) - (k + 1) as f64 / n as f64).abs())
            .fold(0.0, f64::max);
        assert!(positive_sup <= 0.005, "sup {positive_sup} (raw {sup})");
    }

    #[test]
    fn ma_beta_examples() {
        assert!((newsvendor_ma_beta(2.0, &[1.0, 1.0]) - 2.0 / 27.0).abs() < 1e-15);
        assert_eq!(newsvendor_ma_beta(3.0, &[0.0, 0.0]), 3.0);
        let a = newsvendor_ma_beta(1.0, &[0.5, 0.5]);
        let b = newsvendor_ma_beta(1.0, &[1.5, 1.5]);
        // (1 + 1)³ / (1 + 3)³ = 1/8.
        assert!((b / a - 0.125).abs() < 1e-15);
    }

    #[test]
    fn uniform_cost_closed_forms_match_integration() {
        let demand = Demand::Uniform { upper: 100.0 };
        for &x in &[0.0, 12.5, 50.0, 99.0, 100.0] {
            // Midpoint rule on E(D − x)⁺ and E(x − D)⁺.
            let n = 200_000;
            let h = 100.0 / n as f64;
            let (mut short, mut over) = (0.0, 0.0);
            for k in 0..n {
                let d = (k as f64 + 0.5) * h;
                short += (d - x).max(0.0) * h / 100.0;
                over += (x - d).max(0.0) * h / 100.0;
            }
            assert!((demand.expected_shortfall(x) - short).abs() < 1e-6);
            assert!((demand.expected_overage(x) - over).abs() < 1e-6);
        }
    }

    #[test]
    fn critical_fractile_minimizes_expected_cost() {
        let params = NewsvendorSaParams {
            price: 2.0,
            cost: 1.0,
            demand: Demand::Uniform { upper: 100.0 },
            x_bar: None,
        };
        assert_eq!(params.optimal_order().unwrap(), 50.0);
        let grid = (0..=100_000)
            .map(|k| k as f64 / 1000.0)
            .min_by(|a, b| {
                expected_cost(2.0, 1.0, &params.demand, *a).total_cmp(&expected_cost(2.0, 1.0, &params.demand, *b))
            })
            .unwrap();
        assert!((grid - 50.0).abs() < 1e-3);
        assert_eq!(expected_gradient(2.0, 1.0, &params.demand, 50.0), 0.0);
    }

    #[test]
    fn exponential_gradient_is_derivative_of_cost() {
        let demand = Demand::Exponential { rate: 0.3 };
        for &x in &[0.1, 1.0, 4.0] {
            let h = 1e-5;
            let fd = (expected_cost(3.0, 1.0, &demand, x + h) - expected_cost(3.0, 1.0, &demand, x - h)) / (2.0 * h);
            assert!((fd - expected_gradient(3.0, 1.0, &demand, x)).abs() < 1e-8);
        }
    }

    #[test]
    fn parameter_validation() {
        let bad = NewsvendorSaParams {
            price: 1.0,
            cost: 2.0,
            demand: Demand::Uniform { upper: 10.0 },
            x_bar: None,
        };
        assert!(bad.validate().is_err());
        let exp_no_cap = NewsvendorSaParams {
            price: 2.0,
            cost: 1.0,
            demand: Demand::Exponential { rate: 1.0 },
            x_bar: None,
        };
        assert!(exp_no_cap.validate().is_err());
        let ma = NewsvendorMaParams {
            price: 2.0,
            costs: vec![1.0, 1.0],
            x_bar: vec![1.0],
        };
        assert!(ma.validate().is_err());
    }
}
