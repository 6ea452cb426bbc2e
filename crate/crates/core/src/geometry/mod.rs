//! Feasible sets, diameters, and projections.
//!
//! Every learner in this crate keeps its iterate inside a [`FeasibleSet`].
//! Two projections are provided:
//!
//! * [`project_euclidean`] returns the closest feasible point in the
//!   ordinary Euclidean norm. It is exact for every variant.
//! * [`project_quadratic`] solves the Newton-step subproblem
//!   `min (x - anchor)ᵀg + (η/2)(x - anchor)ᵀA(x - anchor)` over the set,
//!   where `A` is the curvature matrix kept by an ONS-type learner.

pub(crate) mod qp;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureState;
use crate::error::{Error, Result};

pub use qp::{QP_MAX_ITERS, QP_TOL};

/// Membership tolerance used by [`FeasibleSet::contains`] callers that
/// check iterates produced by the projections.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// A closed convex action region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FeasibleSet {
    /// Axis-aligned box `lower ≤ x ≤ upper`. `lower == upper` in a
    /// coordinate pins it to a single value.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Probability simplex `{x ≥ 0, Σx = 1}` in `dim` coordinates.
    Simplex { dim: usize },
    /// Cartesian product; coordinates are concatenated in factor order.
    Product(Vec<FeasibleSet>),
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = FeasibleSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn new_simplex(dim: usize) -> Result<Self> {
        let set = FeasibleSet::Simplex { dim };
        set.validate()?;
        Ok(set)
    }

    pub fn new_product(factors: Vec<FeasibleSet>) -> Result<Self> {
        let set = FeasibleSet::Product(factors);
        set.validate()?;
        Ok(set)
    }

    /// Checks the structural invariants. Deserialized sets should be
    /// validated before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::contract(format!(
                        "box bounds must be non-empty and of equal length (got {} and {})",
                        lower.len(),
                        upper.len()
                    )));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !l.is_finite() || !u.is_finite() {
                        return Err(Error::contract(format!("box bound {i} is not finite")));
                    }
                    if l > u {
                        return Err(Error::contract(format!(
                            "box lower bound exceeds upper bound at coordinate {i} ({l} > {u})"
                        )));
                    }
                }
                Ok(())
            }
            FeasibleSet::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::contract("ball center must be a non-empty finite vector"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::contract(format!("ball radius must be positive, got {radius}")));
                }
                Ok(())
            }
            FeasibleSet::Simplex { dim } => {
                if *dim == 0 {
                    return Err(Error::contract("simplex dimension must be at least 1"));
                }
                Ok(())
            }
            FeasibleSet::Product(factors) => {
                if factors.is_empty() {
                    return Err(Error::contract("product set needs at least one factor"));
                }
                factors.iter().try_for_each(FeasibleSet::validate)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Product(factors) => factors.iter().map(FeasibleSet::dim).sum(),
        }
    }

    /// Largest Euclidean distance between two members.
    ///
    /// Box: `‖upper − lower‖`; ball: `2r`; simplex: `√2` (distance between
    /// two vertices, `0` for the one-point simplex in one coordinate);
    /// product: root of the sum of squared factor diameters.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::Simplex { dim } => {
                if *dim >= 2 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            }
            FeasibleSet::Product(factors) => factors
                .iter()
                .map(|f| f.diameter().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            FeasibleSet::Ball { center, radius } => dist(x, center) <= radius + tol,
            FeasibleSet::Simplex { .. } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol * x.len() as f64
            }
            FeasibleSet::Product(factors) => {
                let mut offset = 0;
                factors.iter().all(|f| {
                    let d = f.dim();
                    let ok = f.contains(&x[offset..offset + d], tol);
                    offset += d;
                    ok
                })
            }
        }
    }

    /// A canonical interior-most point: box midpoint, ball center, simplex
    /// barycenter.
    pub fn center(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
            FeasibleSet::Product(factors) => factors.iter().flat_map(FeasibleSet::center).collect(),
        }
    }

    /// Draws a point uniformly from the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let d = center.len();
                let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                center
                    .iter()
                    .zip(&dir)
                    .map(|(c, u)| c + r * u / norm)
                    .collect()
            }
            FeasibleSet::Simplex { dim } => {
                let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
            FeasibleSet::Product(factors) => factors.iter().flat_map(|f| f.sample(rng)).collect(),
        }
    }

    /// Coordinate ranges of the factors of a product (a single range for
    /// any other variant).
    pub fn factor_ranges(&self) -> Vec<std::ops::Range<usize>> {
        match self {
            FeasibleSet::Product(factors) => {
                let mut offset = 0;
                factors
                    .iter()
                    .map(|f| {
                        let r = offset..offset + f.dim();
                        offset = r.end;
                        r
                    })
                    .collect()
            }
            _ => vec![0..self.dim()],
        }
    }
}

/// Euclidean projection onto `set`.
pub fn project_euclidean(set: &FeasibleSet, y: &[f64]) -> Result<Vec<f64>> {
    check_dim(set, y.len())?;
    Ok(project_unchecked(set, y))
}

fn project_unchecked(set: &FeasibleSet, y: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::Box { lower, upper } => y
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect(),
        FeasibleSet::Ball { center, radius } => {
            let d = dist(y, center);
            if d <= *radius {
                y.to_vec()
            } else {
                let s = radius / d;
                y.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
            }
        }
        FeasibleSet::Simplex { .. } => project_simplex(y),
        FeasibleSet::Product(factors) => {
            let mut out = Vec::with_capacity(y.len());
            let mut offset = 0;
            for f in factors {
                let d = f.dim();
                out.extend(project_unchecked(f, &y[offset..offset + d]));
                offset += d;
            }
            out
        }
    }
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Solves `argmin_{x ∈ set} (x − anchor)ᵀgradient + (eta/2)(x − anchor)ᵀA(x − anchor)`.
///
/// When `A` is a multiple of the identity this reduces to a Euclidean
/// projection of the plain gradient step and is computed that way. Boxes and
/// simplices use an exact primal active-set method, balls a scalar search on
/// the KKT multiplier, and products either split into per-factor problems
/// (block-diagonal `A`) or fall back to accelerated projected gradient in
/// the `A`-metric.
pub fn project_quadratic(
    set: &FeasibleSet,
    anchor: &[f64],
    gradient: &[f64],
    eta: f64,
    curvature: &CurvatureState,
) -> Result<Vec<f64>> {
    let d = set.dim();
    check_dim(set, anchor.len())?;
    check_dim(set, gradient.len())?;
    if curvature.dim() != d {
        return Err(Error::contract(format!(
            "curvature dimension {} does not match set dimension {d}",
            curvature.dim()
        )));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::contract(format!("prox weight must be positive, got {eta}")));
    }

    if let Some(scale) = scalar_multiple_of_identity(curvature.matrix()) {
        let step = eta * scale;
        let y: Vec<f64> = anchor
            .iter()
            .zip(gradient)
            .map(|(a, g)| a - g / step)
            .collect();
        return Ok(project_unchecked(set, &y));
    }

    // Unconstrained minimizer y = anchor − A⁻¹g/η; the objective equals
    // ½(x − y)ᵀ(ηA)(x − y) up to a constant.
    let a_inv_g = curvature.solve(gradient);
    let y: Vec<f64> = anchor
        .iter()
        .zip(&a_inv_g)
        .map(|(a, s)| a - s / eta)
        .collect();
    let h = curvature.matrix() * eta;
    let start = project_unchecked(set, anchor);
    qp::minimize_metric_distance(set, &h, &y, start)
}

fn scalar_multiple_of_identity(a: &DMatrix<f64>) -> Option<f64> {
    let s = a[(0, 0)];
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let expected = if i == j { s } else { 0.0 };
            if a[(i, j)] != expected {
                return None;
            }
        }
    }
    Some(s)
}

fn check_dim(set: &FeasibleSet, len: usize) -> Result<()> {
    if set.dim() != len {
        return Err(Error::contract(format!(
            "dimension mismatch: set has dimension {}, vector has {len}",
            set.dim()
        )));
    }
    Ok(())
}

/// A real vector partitioned into one contiguous block per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAction {
    coords: Vec<f64>,
    offsets: Vec<usize>,
}

impl JointAction {
    /// Builds a joint action from per-agent blocks.
    pub fn from_blocks<I, B>(blocks: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[f64]>,
    {
        let mut coords = Vec::new();
        let mut offsets = vec![0];
        for b in blocks {
            coords.extend_from_slice(b.as_ref());
            offsets.push(coords.len());
        }
        JointAction { coords, offsets }
    }

    /// A single-block action, as used by single-agent learners.
    pub fn single(coords: Vec<f64>) -> Self {
        let n = coords.len();
        JointAction {
            coords,
            offsets: vec![0, n],
        }
    }

    /// Splits `coords` using the given block sizes.
    pub fn with_sizes(coords: Vec<f64>, sizes: &[usize]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        if *offsets.last().unwrap() != coords.len() {
            return Err(Error::contract(format!(
                "block sizes sum to {} but the vector has {} coordinates",
                offsets.last().unwrap(),
                coords.len()
            )));
        }
        Ok(JointAction { coords, offsets })
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.coords[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force simplex projection: for every support set, solve the
    /// equality-constrained problem in closed form and keep the feasible
    /// candidate with the smallest distance.
    fn simplex_oracle(y: &[f64]) -> Vec<f64> {
        let d = y.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << d) {
            let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            let shift = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut x = vec![0.0; d];
            for &i in &support {
                x[i] = y[i] - shift;
            }
            if x.iter().all(|v| *v >= -1e-15) {
                let dd = dist_sq(&x, y);
                if best.as_ref().is_none_or(|(b, _)| dd < *b) {
                    best = Some((dd, x));
                }
            }
        }
        best.unwrap().1
    }

    #[test]
    fn box_projection_clamps() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(project_euclidean(&set, &[1.5, -0.2]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let set = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = project_euclidean(&set, &[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn simplex_projection_matches_enumeration() {
        let y = [0.9, 0.3, -0.2];
        let oracle = simplex_oracle(&y);
        assert!(dist(&oracle, &[0.8, 0.2, 0.0]) < 1e-12);
        let p = project_euclidean(&FeasibleSet::new_simplex(3).unwrap(), &y).unwrap();
        assert!(dist(&p, &[0.8, 0.2, 0.0]) < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_error() {
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        assert!(matches!(project_euclidean(&set, &[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn diameters() {
        assert!((FeasibleSet::cube(3, 0.0, 1.0).unwrap().diameter() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(FeasibleSet::new_ball(vec![0.0], 2.0).unwrap().diameter(), 4.0);
        // Vertex-pair enumeration for the 5-simplex.
        let d = 5;
        let mut best: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut ei = vec![0.0; d];
                let mut ej = vec![0.0; d];
                ei[i] = 1.0;
                ej[j] = 1.0;
                best = best.max(dist(&ei, &ej));
            }
        }
        assert!((FeasibleSet::new_simplex(d).unwrap().diameter() - best).abs() < 1e-15);
        let prod = FeasibleSet::new_product(vec![
            FeasibleSet::cube(1, 0.0, 3.0).unwrap(),
            FeasibleSet::new_ball(vec![0.0], 2.0).unwrap(),
        ])
        .unwrap();
        assert!((prod.diameter() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(FeasibleSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::new_ball(vec![0.0], 0.0).is_err());
        assert!(FeasibleSet::new_simplex(0).is_err());
        assert!(FeasibleSet::new_product(vec![]).is_err());
    }

    #[test]
    fn degenerate_box_projects_to_its_point() {
        let set = FeasibleSet::new_box(vec![0.5, 0.0], vec![0.5, 1.0]).unwrap();
        assert_eq!(project_euclidean(&set, &[3.0, 0.25]).unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn quadratic_projection_identity_reduces_to_euclidean() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let c = CurvatureState::new(2).unwrap();
        let x = project_quadratic(&set, &[0.0, 0.0], &[2.0, 0.0], 2.0, &c).unwrap();
        assert_eq!(x, vec![-1.0, 0.0]);
    }

    #[test]
    fn quadratic_projection_one_dimensional_boundary() {
        // A = 2, η = 0.5, g = 1 gives the unconstrained optimum −1 on the
        // boundary of [−1, 1]; check against a dense grid.
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let mut c = CurvatureState::new(1).unwrap();
        c.rank_one_update(&[1.0]);
        let x = project_quadratic(&set, &[0.0], &[1.0], 0.5, &c).unwrap();
        let obj = |z: f64| z + 0.25 * 2.0 * z * z;
        let grid_best = (0..=100_000)
            .map(|k| -1.0 + 2.0 * k as f64 / 100_000.0)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        assert!((x[0] + 1.0).abs() < 1e-12);
        assert!((x[0] - grid_best).abs() < 1e-4);
    }

    #[test]
    fn quadratic_projection_unconstrained_is_newton_step() {
        let set = FeasibleSet::cube(3, -1e6, 1e6).unwrap();
        let mut c = CurvatureState::new(3).unwrap();
        c.rank_one_update(&[1.0, 2.0, -0.5]);
        c.rank_one_update(&[0.3, -1.0, 0.7]);
        let anchor = [0.1, -0.2, 0.3];
        let g = [0.5, -1.5, 2.0];
        let eta = 0.7;
        let x = project_quadratic(&set, &anchor, &g, eta, &c).unwrap();
        let step = c.solve(&g);
        for i in 0..3 {
            assert!((x[i] - (anchor[i] - step[i] / eta)).abs() < 1e-10);
        }
    }

    fn random_curvature(rng: &mut ChaCha8Rng, d: usize, updates: usize) -> CurvatureState {
        let mut c = CurvatureState::new(d).unwrap();
        for _ in 0..updates {
            let g: Vec<f64> = (0..d).map(|_| 3.0 * (rng.random::<f64>() - 0.5)).collect();
            c.rank_one_update(&g);
        }
        c
    }

    /// KKT-based optimality check for the quadratic subproblem: the value at
    /// the returned point must not exceed the value at many feasible probes.
    fn assert_quadratic_optimal(set: &FeasibleSet, rng: &mut ChaCha8Rng) {
        let d = set.dim();
        let c = random_curvature(rng, d, 4);
        let anchor = set.sample(rng);
        let g: Vec<f64> = (0..d).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
        let eta = 0.2 + rng.random::<f64>();
        let x = project_quadratic(set, &anchor, &g, eta, &c).unwrap();
        assert!(set.contains(&x, 1e-10), "{x:?} infeasible for {set:?}");
        let obj = |z: &[f64]| {
            let diff: Vec<f64> = z.iter().zip(&anchor).map(|(a, b)| a - b).collect();
            let ad = c.matrix() * nalgebra::DVector::from_column_slice(&diff);
            dot(&diff, &g) + 0.5 * eta * dot(&diff, ad.as_slice())
        };
        let fx = obj(&x);
        for _ in 0..2000 {
            let z = set.sample(rng);
            // also probe points on segments towards x
            let lam = rng.random::<f64>();
            let w: Vec<f64> = z.iter().zip(&x).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            assert!(fx <= obj(&z) + 1e-9);
            assert!(fx <= obj(&w) + 1e-9);
        }
    }

    #[test]
    fn quadratic_projection_is_optimal_on_every_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = [
            FeasibleSet::cube(3, -0.5, 0.5).unwrap(),
            FeasibleSet::new_ball(vec![0.2, -0.1, 0.0], 0.7).unwrap(),
            FeasibleSet::new_simplex(4).unwrap(),
            FeasibleSet::new_product(vec![
                FeasibleSet::cube(1, 0.0, 1.0).unwrap(),
                FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap(),
            ])
            .unwrap(),
        ];
        for set in &sets {
            for _ in 0..20 {
                assert_quadratic_optimal(set, &mut rng);
            }
        }
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        let boxed = (1usize..5).prop_flat_map(|d| {
            (prop::collection::vec(-2.0f64..0.0, d), prop::collection::vec(0.0f64..2.0, d))
                .prop_map(|(l, u)| FeasibleSet::Box { lower: l, upper: u })
        });
        let ball = (1usize..5).prop_flat_map(|d| {
            (prop::collection::vec(-1.0f64..1.0, d), 0.1f64..2.0)
                .prop_map(|(c, r)| FeasibleSet::Ball { center: c, radius: r })
        });
        let simplex = (1usize..7).prop_map(|dim| FeasibleSet::Simplex { dim });
        prop_oneof![boxed, ball, simplex]
    }

    proptest! {
        #[test]
        fn projection_is_feasible_idempotent_nonexpansive(
            set in arb_set(),
            seed in any::<u64>(),
        ) {
            let d = set.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = (0..d).map(|_| 6.0 * (rng.random::<f64>() - 0.5)).collect();
            let z: Vec<f64> = (0..d).map(|_| 6.0 * (rng.random::<f64>() - 0.5)).collect();
            let py = project_euclidean(&set, &y).unwrap();
            let pz = project_euclidean(&set, &z).unwrap();
            prop_assert!(set.contains(&py, FEASIBILITY_TOL));
            let ppy = project_euclidean(&set, &py).unwrap();
            prop_assert!(dist(&ppy, &py) <= 1e-12);
            prop_assert!(dist(&py, &pz) <= dist(&y, &z) + 1e-12);
        }

        #[test]
        fn simplex_projection_agrees_with_support_enumeration(
            y in prop::collection::vec(-2.0f64..2.0, 1..7)
        ) {
            let p = project_euclidean(&FeasibleSet::Simplex { dim: y.len() }, &y).unwrap();
            prop_assert!(dist(&p, &simplex_oracle(&y)) <= 1e-10);
        }

        #[test]
        fn identity_curvature_matches_gradient_step(
            set in arb_set(),
            seed in any::<u64>(),
            eta in 0.1f64..5.0,
        ) {
            let d = set.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let anchor = set.sample(&mut rng);
            let g: Vec<f64> = (0..d).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
            let c = CurvatureState::new(d).unwrap();
            let x = project_quadratic(&set, &anchor, &g, eta, &c).unwrap();
            let y: Vec<f64> = anchor.iter().zip(&g).map(|(a, gi)| a - gi / eta).collect();
            prop_assert!(dist(&x, &project_euclidean(&set, &y).unwrap()) <= 1e-10);
        }
    }
}
