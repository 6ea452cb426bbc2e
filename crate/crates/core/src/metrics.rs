//! Regret, distance to equilibrium, the gap function and rate fits, with
//! the ground-truth solvers they are measured against.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::games::probes::jacobian_fd;
use crate::games::{box_vertices, CostFn, GameKind, GameSpec};
use crate::geometry::{dist_sq, dot, norm, project_euclidean, qp, FeasibleSet, JointAction};

/// Residual target for the ground-truth solvers.
pub const TOL_GT: f64 = 1e-10;
/// Accepted violation of the sampled variational inequality at a computed
/// equilibrium.
pub const VI_TOL: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 200;
const FALLBACK_MAX_ITERS: usize = 200_000;
const PGD_MAX_ITERS: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum GroundTruth {
    /// Minimizer of the summed costs and the minimal sum.
    BestFixedAction { point: Vec<f64>, value: f64 },
    /// Equilibrium and its sampled variational-inequality residual.
    NashEquilibrium { point: Vec<f64>, residual: f64 },
    None,
}

impl GroundTruth {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            GroundTruth::BestFixedAction { point, .. } | GroundTruth::NashEquilibrium { point, .. } => Some(point),
            GroundTruth::None => None,
        }
    }
}

fn sum_value(costs: &[CostFn], x: &[f64]) -> f64 {
    costs.iter().map(|c| c.value(x)).sum()
}

/// Distinct costs with multiplicities, when a stream repeats a handful of
/// losses (cyclic streams). `None` once more than `MAX_DISTINCT` appear.
fn collapse(costs: &[CostFn]) -> Option<Vec<(&CostFn, f64)>> {
    const MAX_DISTINCT: usize = 64;
    let mut out: Vec<(&CostFn, f64)> = Vec::new();
    for c in costs {
        if let Some((_, w)) = out.iter_mut().find(|(d, _)| *d == c) {
            *w += 1.0;
        } else if out.len() < MAX_DISTINCT {
            out.push((c, 1.0));
        } else {
            return None;
        }
    }
    Some(out)
}

/// `argmin_{x ∈ set} Σₜ fₜ(x)`.
///
/// Quadratic streams with a common curvature are solved in closed form as
/// the projection of the mean target. Everything else goes through projected
/// Newton with an Armijo line search, stopping once the unit-step gradient
/// mapping of the average cost is at most [`TOL_GT`].
pub fn best_in_hindsight(costs: &[CostFn], set: &FeasibleSet) -> Result<GroundTruth> {
    if costs.is_empty() {
        return Err(Error::contract("best_in_hindsight needs at least one cost"));
    }
    let d = set.dim();
    if let Some(beta) = common_quadratic_beta(costs) {
        let mut mean = vec![0.0; d];
        for c in costs {
            if let CostFn::Quadratic { target, .. } = c {
                for (m, t) in mean.iter_mut().zip(target) {
                    *m += t;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= costs.len() as f64);
        let _ = beta;
        let point = project_euclidean(set, &mean)?;
        let value = sum_value(costs, &point);
        return Ok(GroundTruth::BestFixedAction { point, value });
    }
    let weighted: Vec<(&CostFn, f64)> = collapse(costs).unwrap_or_else(|| costs.iter().map(|c| (c, 1.0)).collect());
    let point = projected_newton(&weighted, set)?;
    let value = sum_value(costs, &point);
    Ok(GroundTruth::BestFixedAction { point, value })
}

fn common_quadratic_beta(costs: &[CostFn]) -> Option<f64> {
    let first = match &costs[0] {
        CostFn::Quadratic { beta, .. } => *beta,
        _ => return None,
    };
    costs
        .iter()
        .all(|c| matches!(c, CostFn::Quadratic { beta, .. } if *beta == first))
        .then_some(first)
}

fn average_derivatives(costs: &[(&CostFn, f64)], x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut h = DMatrix::zeros(d, d);
    for (c, w) in costs {
        for (gi, ci) in g.iter_mut().zip(c.gradient(x)) {
            *gi += w * ci;
        }
        h += c.hessian(x) * *w;
    }
    let n: f64 = costs.iter().map(|(_, w)| w).sum();
    g.iter_mut().for_each(|v| *v /= n);
    (g, h / n)
}

fn average_gradient(costs: &[(&CostFn, f64)], x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut n = 0.0;
    for (c, w) in costs {
        for (gi, ci) in g.iter_mut().zip(c.gradient(x)) {
            *gi += w * ci;
        }
        n += w;
    }
    g.iter_mut().for_each(|v| *v /= n);
    g
}

fn gradient_mapping(set: &FeasibleSet, x: &[f64], g: &[f64]) -> Result<f64> {
    let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = project_euclidean(set, &y)?;
    Ok(dist_sq(x, &p).sqrt())
}

fn projected_newton(costs: &[(&CostFn, f64)], set: &FeasibleSet) -> Result<Vec<f64>> {
    let n: f64 = costs.iter().map(|(_, w)| w).sum();
    let avg = |x: &[f64]| costs.iter().map(|(c, w)| w * c.value(x)).sum::<f64>() / n;
    let mut x = set.center();
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let (g, mut h) = average_derivatives(costs, &x);
        residual = gradient_mapping(set, &x, &g)?;
        if residual <= TOL_GT {
            return Ok(x);
        }
        // The summed Hessian may be singular (non-unique minimizers).
        let ridge = 1e-9 * (1.0 + h.trace() / x.len() as f64);
        for i in 0..x.len() {
            h[(i, i)] += ridge;
        }
        let step = match h.clone().cholesky() {
            Some(chol) => chol.solve(&DVector::from_column_slice(&g)),
            None => break,
        };
        let y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
        let Ok(z) = qp::minimize_metric_distance(set, &h, &y, x.clone()) else {
            break;
        };
        let dir: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope = dot(&g, &dir);
        let f0 = avg(&x);
        if slope.abs() <= 1e-13 * (1.0 + f0.abs()) {
            // The predicted decrease is below the objective's rounding
            // level; line search cannot see it, so take the full step.
            x = z;
            continue;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, p)| a + t * p).collect();
            if avg(&trial) <= f0 + 1e-4 * t * slope {
                x = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Projected-gradient fallback with backtracking on the step size.
    let mut step = 1.0;
    for _ in 0..PGD_MAX_ITERS {
        let g = average_gradient(costs, &x);
        residual = gradient_mapping(set, &x, &g)?;
        if residual <= TOL_GT {
            return Ok(x);
        }
        let f0 = avg(&x);
        loop {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let z = project_euclidean(set, &y)?;
            let moved = dist_sq(&z, &x);
            if avg(&z) <= f0 - 0.5 / step * moved || step < 1e-16 {
                x = z;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
    }
    Err(Error::Solver {
        solver: "best-in-hindsight",
        residual,
        iterations: NEWTON_MAX_ITERS + PGD_MAX_ITERS,
        best: x,
    })
}

/// Cumulative regret `Σ_{s≤t} fₛ(xˢ) − Σ_{s≤t} fₛ(x⋆)` for every prefix,
/// where `costs[t]` is the cost played against `actions[t]` and `x_star`
/// is the full-horizon comparator.
pub fn regret(costs: &[&CostFn], actions: &[Vec<f64>], x_star: &[f64]) -> Result<Vec<f64>> {
    if costs.len() != actions.len() {
        return Err(Error::contract(format!(
            "{} costs for {} actions",
            costs.len(),
            actions.len()
        )));
    }
    let mut acc = 0.0;
    Ok(costs
        .iter()
        .zip(actions)
        .map(|(c, x)| {
            acc += c.value(x) - c.value(x_star);
            acc
        })
        .collect())
}

/// `‖xᵗ − x⋆‖²` for each action.
pub fn last_iterate_distance(actions: &[JointAction], x_star: &[f64]) -> Vec<f64> {
    actions.iter().map(|a| dist_sq(a.coords(), x_star)).collect()
}

/// Computes the equilibrium of a strongly monotone game.
///
/// Power control first tries the interior solution of `(I − W)a = b`. The
/// fallback for every game with a deterministic field is an extragradient
/// iteration with step `1/(2L)`, `L` estimated from sampled Jacobians, run
/// until the natural residual `‖x − P(x − v(x))‖` is at most `1e−12`. The
/// reported residual is `max (x⋆ − x)ᵀv(x⋆)` over sampled feasible `x`.
pub fn nash_oracle<R: Rng + ?Sized>(game: &GameSpec, rng: &mut R) -> Result<GroundTruth> {
    let set = game.joint_set()?;
    if let Some(beta) = game.strong_monotonicity() {
        if beta <= 0.0 {
            return Err(Error::contract("game is not strongly monotone; the equilibrium may not be unique"));
        }
    } else {
        return Err(Error::contract(format!("{} has no strong-monotonicity constant", game.name())));
    }
    let candidate = match &game.kind {
        GameKind::PowerManagement(p) => p
            .unconstrained_equilibrium()
            .filter(|a| set.contains(a, 0.0) && natural_residual(game, &set, a).is_ok_and(|r| r <= 1e-12)),
        _ => None,
    };
    let point = match candidate {
        Some(a) => a,
        None => extragradient(game, &set, rng)?,
    };
    let residual = vi_residual(game, &set, &point, 10_000, rng)?;
    if residual > VI_TOL {
        return Err(Error::Solver {
            solver: "nash oracle",
            residual,
            iterations: FALLBACK_MAX_ITERS,
            best: point,
        });
    }
    Ok(GroundTruth::NashEquilibrium { point, residual })
}

fn natural_residual(game: &GameSpec, set: &FeasibleSet, x: &[f64]) -> Result<f64> {
    let v = game.field(x)?;
    gradient_mapping(set, x, &v)
}

/// `max(0, max_x (x⋆ − x)ᵀv(x⋆))` over sampled feasible points and box
/// vertices.
pub fn vi_residual<R: Rng + ?Sized>(
    game: &GameSpec,
    set: &FeasibleSet,
    x_star: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let v = game.field(x_star)?;
    let mut worst: f64 = 0.0;
    let mut check = |x: &[f64]| {
        let val: f64 = x_star.iter().zip(x).zip(&v).map(|((a, b), vi)| (a - b) * vi).sum();
        worst = worst.max(val);
    };
    for vert in box_vertices(set) {
        check(&vert);
    }
    for _ in 0..samples {
        check(&set.sample(rng));
    }
    Ok(worst)
}

fn extragradient<R: Rng + ?Sized>(game: &GameSpec, set: &FeasibleSet, rng: &mut R) -> Result<Vec<f64>> {
    let mut lipschitz: f64 = 0.0;
    let mut probes: Vec<Vec<f64>> = box_vertices(set);
    probes.extend((0..200).map(|_| set.sample(rng)));
    for p in &probes {
        let j = jacobian_fd(|z| game.field(z).expect("field checked by caller"), p);
        lipschitz = lipschitz.max(j.svd(false, false).singular_values.max());
    }
    let gamma = 1.0 / (2.0 * 1.2 * lipschitz.max(1e-12));
    let mut x = set.center();
    let mut residual = f64::INFINITY;
    for _ in 0..FALLBACK_MAX_ITERS {
        let v = game.field(&x)?;
        residual = gradient_mapping(set, &x, &v)?;
        if residual <= 1e-12 {
            return Ok(x);
        }
        let half: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - gamma * b).collect();
        let y = project_euclidean(set, &half)?;
        let vy = game.field(&y)?;
        let full: Vec<f64> = x.iter().zip(&vy).map(|(a, b)| a - gamma * b).collect();
        x = project_euclidean(set, &full)?;
    }
    Err(Error::Solver {
        solver: "extragradient",
        residual,
        iterations: FALLBACK_MAX_ITERS,
        best: x,
    })
}

/// A lower estimate of `gap(x̂) = sup_x (x̂ − x)ᵀv(x)`.
///
/// Takes the best of `x = x̂` (value 0), `starts` random feasible points, and
/// projected gradient ascent from each of those points (plus `x̂` and the box
/// vertices) for `iters` iterations, using central finite differences with
/// `h = 1e−5·(1 + ‖x‖)`. Never negative.
pub fn gap_estimate<R: Rng + ?Sized>(
    x_hat: &[f64],
    game: &GameSpec,
    starts: usize,
    iters: usize,
    rng: &mut R,
) -> Result<f64> {
    let set = game.joint_set()?;
    let phi = |x: &[f64]| -> Result<f64> {
        let v = game.field(x)?;
        Ok(x_hat.iter().zip(x).zip(&v).map(|((a, b), vi)| (a - b) * vi).sum())
    };
    let mut best: f64 = 0.0;
    let mut seeds: Vec<Vec<f64>> = vec![x_hat.to_vec()];
    seeds.extend(box_vertices(&set));
    seeds.extend((0..starts).map(|_| set.sample(rng)));
    for start in seeds {
        let mut x = start;
        let mut fx = phi(&x)?;
        best = best.max(fx);
        let mut step = 1.0;
        for _ in 0..iters {
            let h = 1e-5 * (1.0 + norm(&x));
            let grad: Vec<f64> = (0..x.len())
                .map(|i| {
                    let mut p = x.clone();
                    let mut m = x.clone();
                    p[i] += h;
                    m[i] -= h;
                    Ok((phi(&p)? - phi(&m)?) / (2.0 * h))
                })
                .collect::<Result<_>>()?;
            let mut moved = false;
            while step > 1e-14 {
                let y: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
                let z = project_euclidean(&set, &y)?;
                let fz = phi(&z)?;
                if fz > fx {
                    x = z;
                    fx = fz;
                    step *= 1.5;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.max(fx);
    }
    Ok(best.max(0.0))
}

/// Least-squares slope of `ln(mean)` against `ln(T)`.
pub fn fit_rate(horizons: &[f64], means: &[f64]) -> Result<f64> {
    if horizons.len() != means.len() || horizons.len() < 3 {
        return Err(Error::contract("fit_rate needs at least three (T, mean) pairs"));
    }
    if horizons.iter().chain(means).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::contract("fit_rate needs positive finite values"));
    }
    let xs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::contract("fit_rate needs at least two distinct horizons"));
    }
    Ok(sxy / sxx)
}

/// Running average `x̄ᵗ = (1/t)Σ_{s≤t} xˢ`, updated in place.
#[derive(Clone, Debug, Default)]
pub struct RunningMean {
    sum: Vec<f64>,
    count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: &[f64]) {
        if self.sum.is_empty() {
            self.sum = vec![0.0; x.len()];
        }
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count.max(1) as f64).collect()
    }
}
