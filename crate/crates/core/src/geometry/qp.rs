//! Solvers for `min_{x ∈ C} ½(x − y)ᵀH(x − y)` with `H` symmetric positive
//! definite.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{dist, project_unchecked, FeasibleSet};
use crate::error::{Error, Result};

/// Iteration budget shared by the active-set and projected-gradient solvers.
pub const QP_MAX_ITERS: usize = 10_000;
/// Target accuracy of the iterative solvers.
pub const QP_TOL: f64 = 1e-10;

pub(crate) fn minimize_metric_distance(
    set: &FeasibleSet,
    h: &DMatrix<f64>,
    y: &[f64],
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    match set {
        FeasibleSet::Box { lower, upper } => active_set(h, y, lower, upper, false, start),
        FeasibleSet::Simplex { dim } => {
            let lower = vec![0.0; *dim];
            let upper = vec![f64::INFINITY; *dim];
            active_set(h, y, &lower, &upper, true, start)
        }
        FeasibleSet::Ball { center, radius } => Ok(ball(h, y, center, *radius)),
        FeasibleSet::Product(factors) => {
            let ranges = set.factor_ranges();
            if is_block_diagonal(h, &ranges) {
                let mut out = Vec::with_capacity(y.len());
                for (f, r) in factors.iter().zip(ranges) {
                    let block = h.view((r.start, r.start), (r.len(), r.len())).into_owned();
                    out.extend(minimize_metric_distance(
                        f,
                        &block,
                        &y[r.clone()],
                        start[r].to_vec(),
                    )?);
                }
                Ok(out)
            } else {
                projected_gradient(set, h, y, start)
            }
        }
    }
}

fn is_block_diagonal(h: &DMatrix<f64>, ranges: &[std::ops::Range<usize>]) -> bool {
    let block_of = |i: usize| ranges.iter().position(|r| r.contains(&i)).unwrap();
    (0..h.nrows()).all(|i| (0..h.ncols()).all(|j| block_of(i) == block_of(j) || h[(i, j)] == 0.0))
}

/// Primal active-set method for bound constraints plus an optional
/// `Σx = 1` equality. `start` must be feasible.
fn active_set(
    h: &DMatrix<f64>,
    y: &[f64],
    lower: &[f64],
    upper: &[f64],
    sum_to_one: bool,
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    let d = y.len();
    let mut x = start;
    // 0 = free, -1 = at lower bound, +1 = at upper bound.
    let mut state: Vec<i8> = (0..d)
        .map(|i| {
            if x[i] <= lower[i] {
                x[i] = lower[i];
                -1
            } else if x[i] >= upper[i] {
                x[i] = upper[i];
                1
            } else {
                0
            }
        })
        .collect();
    if sum_to_one && state.iter().all(|s| *s != 0) {
        // Cannot happen for a feasible simplex point, but keep one free.
        let i = (0..d).max_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap();
        state[i] = 0;
    }
    let scale = 1.0 + h.amax();
    // After an unblocked step the iterate already minimizes over the current
    // face; recomputing the step would only return rounding noise.
    let mut on_face_minimum = false;

    for _ in 0..QP_MAX_ITERS {
        let xv = DVector::from_column_slice(&x);
        let yv = DVector::from_column_slice(y);
        let grad = h * (&xv - &yv);
        let free: Vec<usize> = (0..d).filter(|&i| state[i] == 0).collect();
        let (step, lambda) = equality_step(h, &grad, &free, sum_to_one)?;

        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if on_face_minimum || step_norm <= 1e-14 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            on_face_minimum = false;
            // Multipliers of the active bounds; the most negative one leaves.
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..d {
                let mu = match state[i] {
                    -1 => grad[i] + lambda,
                    1 => -(grad[i] + lambda),
                    _ => continue,
                };
                if lower[i] == upper[i] {
                    continue;
                }
                if mu < -1e-13 * scale && worst.is_none_or(|(_, w)| mu < w) {
                    worst = Some((i, mu));
                }
            }
            match worst {
                None => return Ok(x),
                Some((i, _)) => state[i] = 0,
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, &i) in free.iter().enumerate() {
            let p = step[k];
            let limit = if p < 0.0 {
                (lower[i] - x[i]) / p
            } else if p > 0.0 {
                (upper[i] - x[i]) / p
            } else {
                continue;
            };
            if limit < alpha {
                alpha = limit.max(0.0);
                blocking = Some((i, if p < 0.0 { -1 } else { 1 }));
            }
        }
        for (k, &i) in free.iter().enumerate() {
            x[i] += alpha * step[k];
        }
        if let Some((i, side)) = blocking {
            state[i] = side;
            x[i] = if side < 0 { lower[i] } else { upper[i] };
        } else {
            on_face_minimum = true;
        }
        if sum_to_one {
            // Keep the equality exact against rounding drift.
            let drift = x.iter().sum::<f64>() - 1.0;
            let free_now: Vec<usize> = (0..d).filter(|&i| state[i] == 0).collect();
            if !free_now.is_empty() {
                let share = drift / free_now.len() as f64;
                for i in free_now {
                    x[i] = (x[i] - share).max(lower[i]);
                }
            }
        }
    }
    Err(Error::Solver {
        solver: "active-set QP",
        residual: f64::NAN,
        iterations: QP_MAX_ITERS,
        best: x,
    })
}

/// Newton step on the free coordinates, holding the active ones fixed.
/// Returns the step and the equality multiplier (zero without equality).
fn equality_step(
    h: &DMatrix<f64>,
    grad: &DVector<f64>,
    free: &[usize],
    sum_to_one: bool,
) -> Result<(Vec<f64>, f64)> {
    let nf = free.len();
    if nf == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let n = nf + usize::from(sum_to_one);
    let mut kkt = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = h[(i, j)];
        }
        rhs[a] = -grad[i];
        if sum_to_one {
            kkt[(a, nf)] = 1.0;
            kkt[(nf, a)] = 1.0;
        }
    }
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::contract("singular KKT system in quadratic projection"))?;
    let lambda = if sum_to_one { sol[nf] } else { 0.0 };
    Ok((sol.rows(0, nf).iter().copied().collect(), lambda))
}

/// Ball-constrained case. The minimizer is `x(μ) = (H + μI)⁻¹(Hy + μc)`
/// for the unique `μ ≥ 0` with `‖x(μ) − c‖ = r`; in the eigenbasis of `H`
/// the distance is a monotone scalar function of `μ`.
fn ball(h: &DMatrix<f64>, y: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    if dist(y, center) <= radius {
        return y.to_vec();
    }
    let eig = SymmetricEigen::new(h.clone());
    let z = eig.eigenvectors.transpose() * DVector::from_iterator(y.len(), y.iter().zip(center).map(|(a, c)| a - c));
    let lam = &eig.eigenvalues;
    let radius_at = |mu: f64| {
        z.iter()
            .zip(lam.iter())
            .map(|(zi, li)| (li / (li + mu) * zi).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut lo = 0.0;
    let mut hi = lam.max().max(1.0);
    while radius_at(hi) > radius {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radius_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    let scaled = DVector::from_iterator(z.len(), z.iter().zip(lam.iter()).map(|(zi, li)| li / (li + mu) * zi));
    let offset = &eig.eigenvectors * scaled;
    let len = offset.norm();
    let s = if len > radius { radius / len } else { 1.0 };
    center.iter().zip(offset.iter()).map(|(c, o)| c + s * o).collect()
}

/// Accelerated projected gradient with adaptive restart for products whose
/// metric couples factors. Stops once the gradient mapping `G` certifies
/// `f(x⁺) − f⋆ ≤ ‖G‖²/(2μ) ≤ QP_TOL`, with `μ` the smallest eigenvalue of `H`.
fn projected_gradient(set: &FeasibleSet, h: &DMatrix<f64>, y: &[f64], start: Vec<f64>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    let (mu, lipschitz) = (eig.min(), eig.max());
    let step = 1.0 / lipschitz;
    let yv = DVector::from_column_slice(y);
    let objective = |x: &DVector<f64>| {
        let r = x - &yv;
        0.5 * r.dot(&(h * &r))
    };
    let prox_step = |x: &DVector<f64>| {
        let g = h * (x - &yv);
        let trial: Vec<f64> = (x - g * step).iter().copied().collect();
        DVector::from_vec(project_unchecked(set, &trial))
    };
    let mut x = DVector::from_vec(start);
    let mut momentum = x.clone();
    let mut t = 1.0f64;
    let mut certificate = f64::INFINITY;
    for _ in 0..QP_MAX_ITERS {
        let plain = prox_step(&x);
        let mapping = (&plain - &x).norm() / step;
        certificate = mapping * mapping / (2.0 * mu);
        if certificate <= QP_TOL {
            return Ok(plain.iter().copied().collect());
        }
        let next = prox_step(&momentum);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if objective(&next) > objective(&x) {
            momentum = x.clone();
            t = 1.0;
            continue;
        }
        momentum = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
    }
    Err(Error::Solver {
        solver: "projected gradient",
        residual: certificate,
        iterations: QP_MAX_ITERS,
        best: x.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_active_set_matches_vertex_enumeration() {
        // 2-d box: check every face candidate by hand.
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.5, 1.5, 2.0]);
        let y = [2.0, -1.0];
        let x = active_set(&h, &y, &[0.0, 0.0], &[1.0, 1.0], false, vec![0.5, 0.5]).unwrap();
        let obj = |a: f64, b: f64| {
            let r = [a - y[0], b - y[1]];
            0.5 * (2.0 * r[0] * r[0] + 3.0 * r[0] * r[1] + 2.0 * r[1] * r[1])
        };
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                best = best.min(obj(i as f64 / 400.0, j as f64 / 400.0));
            }
        }
        assert!(obj(x[0], x[1]) <= best + 1e-12);
    }

    #[test]
    fn ball_solution_lies_on_sphere_with_aligned_gradient() {
        let h = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
        let y = [2.0, 1.0];
        let x = ball(&h, &y, &[0.0, 0.0], 1.0);
        assert!(((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs() < 1e-12);
        // KKT: H(y − x) is parallel to x with a non-negative factor.
        let g = &h * DVector::from_vec(vec![y[0] - x[0], y[1] - x[1]]);
        let cross = g[0] * x[1] - g[1] * x[0];
        assert!(cross.abs() < 1e-9);
        assert!(g[0] * x[0] + g[1] * x[1] > 0.0);
    }

    #[test]
    fn far_target_on_simplex_terminates_at_kkt_point() {
        // A far-away target makes the recomputed face step pure rounding
        // noise; the solver must still stop.
        let a = DMatrix::from_row_slice(5, 5, &[
            0.023075878757530196, 0.018914654719287043, 0.004728663679821761, 0.018914654719287043, 0.004728663679821761,
            0.018914654719287043, 0.05144786083646076, 0.009457327359643521, 0.037829309438574085, 0.009457327359643521,
            0.004728663679821761, 0.009457327359643521, 0.015982883237797556, 0.009457327359643521, 0.0023643318399108803,
            0.018914654719287043, 0.037829309438574085, 0.009457327359643521, 0.05144786083646076, 0.009457327359643521,
            0.004728663679821761, 0.009457327359643521, 0.0023643318399108803, 0.009457327359643521, 0.015982883237797556,
        ]);
        let y = [8.254396586628781, 16.308793173257552, 4.227198293314393, 16.308793173257552, 4.22719829331439];
        let x = active_set(&a, &y, &[0.0; 5], &[f64::INFINITY; 5], true, vec![0.2; 5]).unwrap();
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = &a * DVector::from_iterator(5, x.iter().zip(&y).map(|(p, q)| p - q));
        let lam = (0..5).filter(|&i| x[i] > 0.0).map(|i| g[i]).fold(f64::INFINITY, f64::min);
        for i in 0..5 {
            if x[i] > 0.0 {
                assert!((g[i] - lam).abs() < 1e-12);
            } else {
                assert!(g[i] >= lam - 1e-12);
            }
        }
    }
}
