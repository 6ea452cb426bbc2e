//! An exp-concave game built from rank-one quadratics.
//!
//! Agent `i` picks `xᵢ` in a centered ball and pays `uᵢ(x) = ½(aᵢᵀxᵢ − bᵢ)²`,
//! so `vᵢ(x) = (aᵢᵀxᵢ − bᵢ)aᵢ`. Each loss is exp-concave but only weakly
//! convex, which makes it a natural test bed for Newton-type learners: the
//! set of equilibria is the affine slice `{aᵢᵀxᵢ = bᵢ}` and no strong
//! monotonicity holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm};

fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankOneParams {
    /// One direction `aᵢ` per agent; its length fixes the agent's dimension.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

impl RankOneParams {
    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() {
            return Err(Error::config("params.a", "at least one agent is required"));
        }
        if self.b.len() != self.a.len() {
            return Err(Error::config("params.b", format!("expected {} entries", self.a.len())));
        }
        for ai in &self.a {
            if ai.is_empty() || ai.iter().any(|v| !v.is_finite()) || norm(ai) == 0.0 {
                return Err(Error::config("params.a", "directions must be non-empty, finite and non-zero"));
            }
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("params.b", "entries must be finite"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("params.radius", "must be positive"));
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.a.iter().map(Vec::len).collect()
    }

    pub fn field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        let mut offset = 0;
        for (ai, bi) in self.a.iter().zip(&self.b) {
            let xi = &x[offset..offset + ai.len()];
            let r = dot(ai, xi) - bi;
            out.extend(ai.iter().map(|v| r * v));
            offset += ai.len();
        }
        out
    }

    /// Per-agent exp-concavity: `½z²` is `α`-exp-concave on `|z| ≤ Z` for
    /// `α = 1/Z²`, with `Z = ‖aᵢ‖r + |bᵢ|`. Returns the smallest over agents.
    pub fn alpha(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(ai, bi)| (norm(ai) * self.radius + bi.abs()).powi(-2))
            .fold(f64::INFINITY, f64::min)
    }

    /// `sup ‖v‖` over the product of balls.
    pub fn gradient_bound(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(ai, bi)| {
                let n = norm(ai);
                (n * (n * self.radius + bi.abs())).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Exact `sup_x (x̂ − x)ᵀv(x)`. Each agent's term depends on `xᵢ` only
    /// through `z = aᵢᵀxᵢ ∈ [−‖aᵢ‖r, ‖aᵢ‖r]`, giving `max_z (ĉ − z)(z − bᵢ)`
    /// with `ĉ = aᵢᵀx̂ᵢ`.
    pub fn gap(&self, x_hat: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut offset = 0;
        for (ai, bi) in self.a.iter().zip(&self.b) {
            let c = dot(ai, &x_hat[offset..offset + ai.len()]);
            let bound = norm(ai) * self.radius;
            let z = (0.5 * (c + bi)).clamp(-bound, bound);
            total += (c - z) * (z - bi);
            offset += ai.len();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> RankOneParams {
        RankOneParams {
            a: vec![vec![0.6, 0.8], vec![1.0, -1.0]],
            b: vec![0.3, -0.2],
            radius: 1.0,
        }
    }

    #[test]
    fn gap_matches_dense_grid() {
        let g = toy();
        let x_hat = [0.1, 0.5, -0.4, 0.2];
        // Each agent's term is maximized independently; grid the unit disc.
        let n = 1000;
        let mut best = [f64::NEG_INFINITY; 2];
        for i in 0..=n {
            for j in 0..=n {
                let p = [-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64];
                if p[0] * p[0] + p[1] * p[1] > 1.0 {
                    continue;
                }
                for (k, best_k) in best.iter_mut().enumerate() {
                    let mut x = x_hat.to_vec();
                    x[2 * k..2 * k + 2].copy_from_slice(&p);
                    let v = g.field(&x);
                    let val = (x_hat[2 * k] - p[0]) * v[2 * k] + (x_hat[2 * k + 1] - p[1]) * v[2 * k + 1];
                    *best_k = best_k.max(val);
                }
            }
        }
        assert!((g.gap(&x_hat) - (best[0] + best[1])).abs() < 1e-3);
    }

    #[test]
    fn gap_vanishes_on_the_equilibrium_slice() {
        let g = toy();
        let x = [0.18, 0.24, -0.1, 0.1];
        assert!(g.field(&x).iter().all(|v| v.abs() < 1e-15));
        assert!(g.gap(&x).abs() < 1e-15);
    }

    #[test]
    fn constants() {
        let g = toy();
        // Z = 1 + 0.3 and √2 + 0.2.
        assert!((g.alpha() - (2f64.sqrt() + 0.2).powi(-2)).abs() < 1e-15);
        assert!(g.gradient_bound() > 0.0);
    }
}
