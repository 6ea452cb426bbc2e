//! Geometric sampling and the prox-weight rules.
//!
//! Every learner minimizes `(x − xᵗ)ᵀξ + (η/2)‖x − xᵗ‖²` (or its
//! `A`-weighted version), so the weight `η` multiplies the quadratic term and
//! the effective gradient step is `1/η`. The adaptive rules replace unknown
//! curvature constants with the running maximum of i.i.d. geometric draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};

/// Draws from `Geometric(p0)` on `{1, 2, …}` by inverting the CDF.
pub fn sample_geometric<R: Rng + ?Sized>(p0: f64, rng: &mut R) -> Result<u64> {
    check_p0(p0)?;
    Ok(sample_unchecked(p0, rng))
}

fn sample_unchecked<R: Rng + ?Sized>(p0: f64, rng: &mut R) -> u64 {
    if p0 == 1.0 {
        return 1;
    }
    let u: f64 = rng.sample(Open01);
    let k = (u.ln() / (-p0).ln_1p()).ceil();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        (k as u64).max(1)
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if p0 > 0.0 && p0 <= 1.0 {
        Ok(())
    } else {
        Err(Error::contract(format!("geometric parameter must lie in (0, 1], got {p0}")))
    }
}

/// `1/ln(T + 10)`.
pub fn default_p0(horizon: u64) -> f64 {
    1.0 / (horizon as f64 + 10.0).ln()
}

/// The running maximum of geometric draws that drives the adaptive rules.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMaxState {
    p0: f64,
    running_max: u64,
    samples_drawn: u64,
}

impl GeometricMaxState {
    pub fn new(p0: f64) -> Result<Self> {
        check_p0(p0)?;
        Ok(GeometricMaxState {
            p0,
            running_max: 0,
            samples_drawn: 0,
        })
    }

    /// Builds a state as if the draws seen so far had maximum `running_max`.
    pub fn with_max(p0: f64, running_max: u64) -> Result<Self> {
        let mut s = Self::new(p0)?;
        s.running_max = running_max;
        s.samples_drawn = u64::from(running_max > 0);
        Ok(s)
    }

    /// Draws one sample, folds it into the maximum and returns it.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let m = sample_unchecked(self.p0, rng);
        self.running_max = self.running_max.max(m);
        self.samples_drawn += 1;
        m
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn running_max(&self) -> u64 {
        self.running_max
    }

    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn
    }

    fn require_sample(&self) -> Result<()> {
        if self.running_max == 0 {
            Err(Error::contract("adaptive weight requested before any geometric sample"))
        } else {
            Ok(())
        }
    }
}

/// `(t + 1)/√(1 + max M)`.
pub fn adaogd_weight(t: u64, state: &GeometricMaxState) -> Result<f64> {
    state.require_sample()?;
    Ok((t as f64 + 1.0) / (1.0 + state.running_max as f64).sqrt())
}

/// `1/√(1 + max M)`.
pub fn adaons_weight(state: &GeometricMaxState) -> Result<f64> {
    state.require_sample()?;
    Ok(1.0 / (1.0 + state.running_max as f64).sqrt())
}

/// `β(t + 1)`.
pub fn ogd_weight(beta: f64, t: u64) -> f64 {
    beta * (t as f64 + 1.0)
}

/// `½·min{1/(4GD), α}`.
pub fn ons_weight(g: f64, d: f64, alpha: f64) -> f64 {
    0.5 * (1.0 / (4.0 * g * d)).min(alpha)
}

/// Which weight a learner uses in its prox step.
#[derive(Clone, Debug, PartialEq)]
pub enum ProxWeightRule {
    OgdKnownBeta { beta: f64 },
    AdaOgd(GeometricMaxState),
    OnsKnownParams { g: f64, d: f64, alpha: f64 },
    AdaOns(GeometricMaxState),
}

impl ProxWeightRule {
    pub fn ogd(beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        Ok(ProxWeightRule::OgdKnownBeta { beta })
    }

    pub fn ons(g: f64, d: f64, alpha: f64) -> Result<Self> {
        positive("G", g)?;
        positive("D", d)?;
        positive("alpha", alpha)?;
        Ok(ProxWeightRule::OnsKnownParams { g, d, alpha })
    }

    /// Weight `ηᵗ⁺¹` used after observing the round-`t` signal. Adaptive
    /// rules draw their round-`t` geometric sample here.
    pub fn next_weight<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<f64> {
        match self {
            ProxWeightRule::OgdKnownBeta { beta } => Ok(ogd_weight(*beta, t)),
            ProxWeightRule::OnsKnownParams { g, d, alpha } => Ok(ons_weight(*g, *d, *alpha)),
            ProxWeightRule::AdaOgd(state) => {
                state.draw(rng);
                adaogd_weight(t, state)
            }
            ProxWeightRule::AdaOns(state) => {
                state.draw(rng);
                adaons_weight(state)
            }
        }
    }

    pub fn geometric_state(&self) -> Option<&GeometricMaxState> {
        match self {
            ProxWeightRule::AdaOgd(s) | ProxWeightRule::AdaOns(s) => Some(s),
            _ => None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::contract(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Monte Carlo summary of `max{M¹, …, Mⁿ}` for i.i.d. `Geometric(p0)` draws.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMaxStats {
    pub mean: f64,
    pub stderr: f64,
    /// `tail_counts[k]` counts trials whose maximum was `≤ thresholds[k]`.
    pub tail_counts: Vec<u64>,
}

pub fn geometric_max_stats<R: Rng + ?Sized>(
    p0: f64,
    n: u64,
    trials: u64,
    rng: &mut R,
    thresholds: &[f64],
) -> Result<GeometricMaxStats> {
    check_p0(p0)?;
    if n == 0 || trials == 0 {
        return Err(Error::contract("geometric_max_stats needs n ≥ 1 and trials ≥ 1"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut tail_counts = vec![0; thresholds.len()];
    for _ in 0..trials {
        let mut state = GeometricMaxState::new(p0)?;
        for _ in 0..n {
            state.draw(rng);
        }
        let m = state.running_max as f64;
        sum += m;
        sum_sq += m * m;
        for (count, x) in tail_counts.iter_mut().zip(thresholds) {
            if m <= *x {
                *count += 1;
            }
        }
    }
    let k = trials as f64;
    let mean = sum / k;
    let var = if trials > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(GeometricMaxStats {
        mean,
        stderr: (var / k).sqrt(),
        tail_counts,
    })
}

/// Substream indices for the roles inside one replication. Agent `i` uses
/// stream `i`.
pub mod stream {
    pub const ORACLE: u64 = u64::MAX - 1;
    pub const ENVIRONMENT: u64 = u64::MAX - 2;
    pub const PROBE: u64 = u64::MAX - 3;
}

/// The generator for `stream` within replication seed `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p0_one_is_degenerate() {
        let mut rng = substream(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_geometric(1.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn invalid_p0_is_rejected() {
        let mut rng = substream(1, 0);
        assert!(sample_geometric(0.0, &mut rng).is_err());
        assert!(sample_geometric(1.5, &mut rng).is_err());
        assert!(GeometricMaxState::new(-0.1).is_err());
    }

    #[test]
    fn pmf_and_mean_match() {
        let mut rng = substream(7, 0);
        let n = 1_000_000;
        let mut twos = 0u64;
        for _ in 0..n {
            if sample_geometric(0.5, &mut rng).unwrap() == 2 {
                twos += 1;
            }
        }
        // P(M = 2) = 0.25; 5 standard errors of a Bernoulli(0.25) mean.
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((twos as f64 / n as f64 - 0.25).abs() < 5.0 * se);

        let mean = (0..n).map(|_| sample_geometric(0.2, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        assert!((4.98..=5.02).contains(&mean), "mean {mean}");
    }

    #[test]
    fn default_p0_values() {
        assert!((default_p0(1) - 1.0 / 11f64.ln()).abs() < 1e-15);
        assert!((default_p0(1) - 0.41703).abs() < 1e-5);
        let t = (10f64.exp() - 10.0).round() as u64;
        assert!((default_p0(t) - 0.1).abs() < 1e-5);
        assert!(default_p0(1000) < default_p0(100));
    }

    #[test]
    fn weight_formulas() {
        let s3 = GeometricMaxState::with_max(0.5, 3).unwrap();
        let s1 = GeometricMaxState::with_max(0.5, 1).unwrap();
        assert_eq!(adaogd_weight(1, &s3).unwrap(), 1.0);
        assert!((adaogd_weight(9, &s1).unwrap() - 10.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(adaons_weight(&s3).unwrap(), 0.5);
        assert!((adaons_weight(&s1).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ogd_weight(0.75, 1), 1.5);
        assert_eq!(ogd_weight(1.0, 99), 100.0);
        assert_eq!(1.0 / ogd_weight(0.5, 1), 1.0);
        assert_eq!(ons_weight(1.0, 1.0, 10.0), 0.125);
        assert!((ons_weight(0.5, 0.5, 0.1) - 0.05).abs() < 1e-15);
        assert_eq!(ons_weight(2.0, 3.0, 1e12), 1.0 / 48.0);

        let empty = GeometricMaxState::new(0.5).unwrap();
        assert!(adaogd_weight(1, &empty).is_err());
        assert!(adaons_weight(&empty).is_err());
    }

    #[test]
    fn max_stats_within_bounds() {
        let mut rng = substream(3, 0);
        let s = geometric_max_stats(1.0, 17, 100, &mut rng, &[]).unwrap();
        assert_eq!(s.mean, 1.0);
        let s = geometric_max_stats(0.2, 1, 100_000, &mut rng, &[]).unwrap();
        assert!((s.mean - 5.0).abs() < 4.0 * s.stderr);
        let s = geometric_max_stats(0.2, 1000, 2000, &mut rng, &[]).unwrap();
        assert!(s.mean >= 1.0 && s.mean <= (1.0 + 1000f64.ln()) / 0.2);
    }

    #[test]
    fn replay_is_deterministic() {
        let a: Vec<u64> = {
            let mut r = substream(42, 3);
            (0..50).map(|_| sample_geometric(0.3, &mut r).unwrap()).collect()
        };
        let b: Vec<u64> = {
            let mut r = substream(42, 3);
            (0..50).map(|_| sample_geometric(0.3, &mut r).unwrap()).collect()
        };
        assert_eq!(a, b);
        let mut other = substream(42, 4);
        let c: Vec<u64> = (0..50).map(|_| sample_geometric(0.3, &mut other).unwrap()).collect();
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn adaptive_weights_along_sample_paths(seed in any::<u64>(), p0 in 0.05f64..1.0, rounds in 1u64..300) {
            let mut rng = substream(seed, 0);
            let mut ogd = ProxWeightRule::AdaOgd(GeometricMaxState::new(p0).unwrap());
            let mut ons = ProxWeightRule::AdaOns(GeometricMaxState::new(p0).unwrap());
            let mut prev_eta = 1.0; // η¹ plays no role; the first increment is from t = 1.
            let mut prev_ons = f64::INFINITY;
            let mut prev_max = 0;
            for t in 1..=rounds {
                let eta = ogd.next_weight(t, &mut rng).unwrap();
                let m = ogd.geometric_state().unwrap().running_max();
                prop_assert!(m >= prev_max && m >= 1);
                if t > 1 {
                    prop_assert!(eta - prev_eta <= 1.0 / (1.0 + m as f64).sqrt() + 1e-12);
                }
                prev_eta = eta;
                prev_max = m;
                let w = ons.next_weight(t, &mut rng).unwrap();
                prop_assert!(w <= prev_ons);
                prev_ons = w;
            }
        }
    }
}
