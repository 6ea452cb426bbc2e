//! The ONS curvature matrix `A`, kept together with its inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of rank-one updates between full re-inversions of `A`.
pub const REFRESH_EVERY: u64 = 1000;

/// `A = I + Σ ggᵀ` with a maintained inverse and the running sum
/// `Σ gᵀ(A⁺)⁻¹g`, where `A⁺` is the matrix right after the update that
/// added `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureState {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    update_count: u64,
    qf_sum: f64,
}

impl CurvatureState {
    /// Starts from the identity.
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::contract("curvature dimension must be at least 1"));
        }
        Ok(CurvatureState {
            a: DMatrix::identity(d, d),
            a_inv: DMatrix::identity(d, d),
            update_count: 0,
            qf_sum: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn qf_sum(&self) -> f64 {
        self.qf_sum
    }

    /// `A⁻¹v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        (&self.a_inv * DVector::from_column_slice(v)).iter().copied().collect()
    }

    /// `A ← A + ggᵀ`, updating the inverse with Sherman–Morrison.
    ///
    /// # Panics
    ///
    /// Panics if `g` does not have dimension [`dim`](Self::dim).
    pub fn rank_one_update(&mut self, g: &[f64]) {
        assert_eq!(g.len(), self.dim(), "gradient dimension mismatch");
        self.update_count += 1;
        if g.iter().all(|v| *v == 0.0) {
            return;
        }
        let gv = DVector::from_column_slice(g);
        let w = &self.a_inv * &gv;
        let u = gv.dot(&w);
        self.a.ger(1.0, &gv, &gv, 1.0);
        self.a_inv.ger(-1.0 / (1.0 + u), &w, &w, 1.0);
        // gᵀ(A + ggᵀ)⁻¹g = u − u²/(1 + u) = u/(1 + u).
        self.qf_sum += u / (1.0 + u);
        if self.update_count.is_multiple_of(REFRESH_EVERY) {
            self.refresh();
        }
    }

    fn refresh(&mut self) {
        // A ⪰ I, so Cholesky cannot fail on an honestly maintained matrix.
        let sym = (&self.a + self.a.transpose()) * 0.5;
        if let Some(chol) = sym.cholesky() {
            self.a_inv = chol.inverse();
        }
    }

    /// Whether the telescoped sum respects `d·ln(T·G² + 1)` for a trajectory
    /// of `t` updates with gradient norms at most `g_bound`.
    pub fn qf_bound_check(&self, t: u64, g_bound: f64) -> bool {
        self.qf_sum <= qf_bound(self.dim(), t, g_bound) + 1e-9
    }
}

/// `d·ln(T·G² + 1)`.
pub fn qf_bound(d: usize, t: u64, g_bound: f64) -> f64 {
    d as f64 * (t as f64 * g_bound * g_bound + 1.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn starts_at_identity() {
        let c = CurvatureState::new(2).unwrap();
        assert_eq!(c.matrix(), &DMatrix::identity(2, 2));
        assert_eq!(c.matrix() * c.inverse(), DMatrix::identity(2, 2));
        assert_eq!(c.update_count(), 0);
        assert_eq!(c.qf_sum(), 0.0);
        assert!(matches!(CurvatureState::new(0), Err(Error::Contract(_))));
    }

    #[test]
    fn unit_vector_update() {
        let mut c = CurvatureState::new(2).unwrap();
        c.rank_one_update(&[1.0, 0.0]);
        assert_eq!(c.inverse(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn diagonal_direction_matches_direct_inverse() {
        let mut c = CurvatureState::new(2).unwrap();
        c.rank_one_update(&[1.0, 1.0]);
        // [[2,1],[1,2]]⁻¹ = (1/3)[[2,−1],[−1,2]].
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) / 3.0;
        assert!(max_abs(&(c.inverse() - expected)) < 1e-15);
    }

    #[test]
    fn zero_gradient_only_counts() {
        let mut c = CurvatureState::new(3).unwrap();
        let before = c.clone();
        c.rank_one_update(&[0.0; 3]);
        assert_eq!(c.matrix(), before.matrix());
        assert_eq!(c.inverse(), before.inverse());
        assert_eq!(c.qf_sum(), 0.0);
        assert_eq!(c.update_count(), 1);
    }

    #[test]
    fn qf_bound_examples() {
        let c = CurvatureState::new(1).unwrap();
        assert!(c.qf_bound_check(0, 1.0));

        let mut c = CurvatureState::new(1).unwrap();
        c.rank_one_update(&[1.0]);
        assert!((c.qf_sum() - 0.5).abs() < 1e-15);
        assert!(c.qf_bound_check(1, 1.0));

        // Harmonic oracle: after T unit updates the sum is Σ 1/(t+1).
        let mut c = CurvatureState::new(1).unwrap();
        let t = 5000u64;
        for _ in 0..t {
            c.rank_one_update(&[1.0]);
        }
        let harmonic: f64 = (1..=t).map(|k| 1.0 / (k as f64 + 1.0)).sum();
        assert!((c.qf_sum() - harmonic).abs() < 1e-9);
        assert!(c.qf_bound_check(t, 1.0));
    }

    proptest! {
        #[test]
        fn inverse_tracks_direct_inversion(
            d in 1usize..9,
            grads in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 8), 1..120),
        ) {
            let mut c = CurvatureState::new(d).unwrap();
            let mut prev_qf = 0.0;
            let mut g_max: f64 = 0.0;
            for g in &grads {
                c.rank_one_update(&g[..d]);
                prop_assert!(c.qf_sum() >= prev_qf);
                prev_qf = c.qf_sum();
                g_max = g_max.max(g[..d].iter().map(|v| v * v).sum::<f64>().sqrt());
            }
            let direct = c.matrix().clone().try_inverse().unwrap();
            prop_assert!(max_abs(&(c.inverse() - direct)) <= 1e-8);
            let id = DMatrix::identity(d, d);
            prop_assert!(max_abs(&(c.matrix() * c.inverse() - id)) <= 1e-8);
            let min_eig = c.matrix().clone().symmetric_eigenvalues().min();
            prop_assert!(min_eig >= 1.0 - 1e-9);
            prop_assert!(c.qf_bound_check(grads.len() as u64, g_max));
        }
    }
}
