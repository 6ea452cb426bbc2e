//! Sampling checks of the curvature constants a game claims.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::{box_vertices, GameSpec, NewsvendorMaParams};
use crate::error::Result;
use crate::geometry::{dist_sq, dot, norm, FeasibleSet};

/// Absolute slack allowed in every sampled inequality.
pub const PROBE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeReport {
    pub pairs: usize,
    /// Smallest observed `⟨x′ − x, v(x′) − v(x)⟩ / q(x, x′)`, where `q` is
    /// `‖x′ − x‖²` for monotonicity and the rank-one quadratic form for
    /// exp-concavity.
    pub min_ratio: f64,
    /// Smallest observed `lhs − claim·q`.
    pub min_margin: f64,
    pub passed: bool,
}

/// Draws pairs of feasible points: half uniform, a quarter anchored at a
/// vertex when the set is a box, and a quarter of nearby points.
fn sample_pair<R: Rng + ?Sized>(set: &FeasibleSet, vertices: &[Vec<f64>], k: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let x = set.sample(rng);
    let y = match k % 4 {
        1 if !vertices.is_empty() => vertices[rng.random_range(0..vertices.len())].clone(),
        2 => {
            let z = set.sample(rng);
            let s = 1e-2 * (0.1 + 0.9 * rng.random::<f64>());
            x.iter().zip(&z).map(|(a, b)| a + s * (b - a)).collect()
        }
        _ => set.sample(rng),
    };
    (x, y)
}

/// Checks `⟨x′ − x, v(x′) − v(x)⟩ ≥ β‖x′ − x‖²` on sampled feasible pairs.
pub fn monotonicity_probe<R: Rng + ?Sized>(
    game: &GameSpec,
    beta_claim: f64,
    pairs: usize,
    rng: &mut R,
) -> Result<ProbeReport> {
    let set = game.joint_set()?;
    let vertices = box_vertices(&set);
    let mut min_ratio = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut counted = 0;
    for k in 0..pairs {
        let (x, y) = sample_pair(&set, &vertices, k, rng);
        let d2 = dist_sq(&x, &y);
        if d2 == 0.0 {
            continue;
        }
        let vx = game.field(&x)?;
        let vy = game.field(&y)?;
        let lhs: f64 = y.iter().zip(&x).zip(vy.iter().zip(&vx)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
        min_ratio = min_ratio.min(lhs / d2);
        min_margin = min_margin.min(lhs - beta_claim * d2);
        counted += 1;
    }
    Ok(ProbeReport {
        pairs: counted,
        min_ratio,
        min_margin,
        passed: min_margin >= -PROBE_SLACK,
    })
}

/// Checks the exp-concave game inequality
/// `⟨x′ − x, v(x′) − v(x)⟩ ≥ ¼·min{1/(4GD), α}·Σᵢ δᵢᵀ(vᵢ(x′)vᵢ(x′)ᵀ + vᵢ(x)vᵢ(x)ᵀ)δᵢ`
/// with `δ = x′ − x`, on sampled feasible pairs.
pub fn ec_probe<R: Rng + ?Sized>(
    game: &GameSpec,
    alpha_claim: f64,
    g_bound: f64,
    diameter: f64,
    pairs: usize,
    rng: &mut R,
) -> Result<ProbeReport> {
    let set = game.joint_set()?;
    let sizes = game.block_sizes()?;
    let vertices = box_vertices(&set);
    let coeff = 0.25 * (1.0 / (4.0 * g_bound * diameter)).min(alpha_claim);
    let mut min_ratio = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for k in 0..pairs {
        let (x, y) = sample_pair(&set, &vertices, k, rng);
        let vx = game.field(&x)?;
        let vy = game.field(&y)?;
        let delta: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let lhs: f64 = delta.iter().zip(vy.iter().zip(&vx)).map(|(d, (a, b))| d * (a - b)).sum();
        let mut q = 0.0;
        let mut offset = 0;
        for s in &sizes {
            let r = offset..offset + s;
            let di = &delta[r.clone()];
            q += dot(di, &vy[r.clone()]).powi(2) + dot(di, &vx[r]).powi(2);
            offset += s;
        }
        if q > 0.0 {
            min_ratio = min_ratio.min(lhs / q);
        }
        min_margin = min_margin.min(lhs - coeff * q);
    }
    Ok(ProbeReport {
        pairs,
        min_ratio,
        min_margin,
        passed: min_margin >= -PROBE_SLACK,
    })
}

/// Central-difference Jacobian `J[i][j] = ∂vᵢ/∂xⱼ` with step
/// `h = 1e−5·(1 + ‖x‖)`.
pub fn jacobian_fd<F: Fn(&[f64]) -> Vec<f64>>(field: F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h = 1e-5 * (1.0 + norm(x));
    let mut j = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[col] += h;
        minus[col] -= h;
        let (vp, vm) = (field(&plus), field(&minus));
        for row in 0..n {
            j[(row, col)] = (vp[row] - vm[row]) / (2.0 * h);
        }
    }
    j
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianReport {
    pub points: usize,
    pub min_eigenvalue: f64,
    pub bound: f64,
    pub passed: bool,
}

/// At sampled feasible points, the symmetrized finite-difference Jacobian of
/// the multi-retailer field has smallest eigenvalue at least
/// `p/(1 + Σx̄)³ − 1e−6`.
pub fn newsvendor_ma_hessian_check<R: Rng + ?Sized>(
    params: &NewsvendorMaParams,
    points: usize,
    rng: &mut R,
) -> HessianReport {
    let bound = params.beta();
    let mut min_eig = f64::INFINITY;
    for _ in 0..points {
        let x: Vec<f64> = params.x_bar.iter().map(|u| u * rng.random::<f64>()).collect();
        let j = jacobian_fd(|z| params.field(z), &x);
        let sym = (&j + j.transpose()) * 0.5;
        min_eig = min_eig.min(SymmetricEigen::new(sym).eigenvalues.min());
    }
    HessianReport {
        points,
        min_eigenvalue: min_eig,
        bound,
        passed: min_eig >= bound - 1e-6,
    }
}
