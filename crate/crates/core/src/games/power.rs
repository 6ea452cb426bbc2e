//! Target-rate power control over interfering links.
//!
//! Link `i` transmits at power `aᵢ ∈ [0, āᵢ]` and wants to hit a target rate
//! `rᵢ⋆`. With gain matrix `G` and thermal noise `η`, its gradient is
//! `vᵢ(a) = aᵢ − rᵢ⋆(Σ_{j≠i} Gᵢⱼaⱼ + ηᵢ)/Gᵢᵢ`, i.e. `v(a) = (I − W)a − b`
//! with `Wᵢⱼ = rᵢ⋆Gᵢⱼ/Gᵢᵢ` off the diagonal and `bᵢ = rᵢ⋆ηᵢ/Gᵢᵢ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerParams {
    /// Channel gains, row `i` holding `Gᵢⱼ`.
    pub gain: Vec<Vec<f64>>,
    pub r_star: Vec<f64>,
    pub thermal: Vec<f64>,
    /// Per-link power caps. Defaults to `max(2aᵢ⋆, 1)` from the interior
    /// equilibrium so that the cap never binds at equilibrium.
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
}

/// Result of the strong-monotonicity calculator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaReport {
    pub beta: f64,
    /// False when `beta ≤ 0`, i.e. the game is not strongly monotone.
    pub strongly_monotone: bool,
}

impl PowerParams {
    pub fn n(&self) -> usize {
        self.r_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::config("params.r_star", "at least one link is required"));
        }
        if self.gain.len() != n || self.gain.iter().any(|row| row.len() != n) {
            return Err(Error::config("params.gain", format!("must be a {n}×{n} matrix")));
        }
        if self.thermal.len() != n {
            return Err(Error::config("params.thermal", format!("expected {n} entries")));
        }
        for (i, row) in self.gain.iter().enumerate() {
            if !(row[i] > 0.0) || row.iter().any(|g| !g.is_finite()) {
                return Err(Error::config("params.gain", "diagonal gains must be positive and all entries finite"));
            }
        }
        if self.r_star.iter().chain(&self.thermal).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config("params.r_star", "target rates and thermal noise must be non-negative"));
        }
        if let Some(upper) = &self.upper {
            if upper.len() != n || upper.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
                return Err(Error::config("params.upper", format!("expected {n} positive caps")));
            }
        }
        Ok(())
    }

    /// The interference matrix `W`.
    pub fn interference(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                self.r_star[i] * self.gain[i][j] / self.gain[i][i]
            }
        })
    }

    pub fn offset(&self) -> DVector<f64> {
        DVector::from_fn(self.n(), |i, _| self.r_star[i] * self.thermal[i] / self.gain[i][i])
    }

    pub fn field(&self, a: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let interference: f64 = (0..n).filter(|&j| j != i).map(|j| self.gain[i][j] * a[j]).sum();
                a[i] - self.r_star[i] * (interference + self.thermal[i]) / self.gain[i][i]
            })
            .collect()
    }

    /// Solution of `(I − W)a = b`, ignoring the box.
    pub fn unconstrained_equilibrium(&self) -> Option<Vec<f64>> {
        let n = self.n();
        let m = DMatrix::identity(n, n) - self.interference();
        m.lu().solve(&self.offset()).map(|a| a.iter().copied().collect())
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        if let Some(u) = &self.upper {
            return u.clone();
        }
        match self.unconstrained_equilibrium() {
            Some(a) => a.iter().map(|ai| (2.0 * ai).max(1.0)).collect(),
            None => vec![1.0; self.n()],
        }
    }

    pub fn beta(&self) -> BetaReport {
        pm_beta(&self.gain, &self.r_star)
    }
}

/// `λ_min(I − ½(W + Wᵀ))`.
pub fn pm_beta(gain: &[Vec<f64>], r_star: &[f64]) -> BetaReport {
    let n = r_star.len();
    let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { r_star[i] * gain[i][j] / gain[i][i] });
    let sym = DMatrix::identity(n, n) - (&w + w.transpose()) * 0.5;
    let beta = SymmetricEigen::new(sym).eigenvalues.min();
    BetaReport {
        beta,
        strongly_monotone: beta > 0.0,
    }
}
