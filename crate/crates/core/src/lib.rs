//! Adaptive no-regret learning for online convex optimization and monotone
//! games.
//!
//! The crate provides four learners behind one [`Learner`] type:
//!
//! * OGD with a known strong-monotonicity constant `β`;
//! * ONS with known gradient bound, diameter and exp-concavity;
//! * AdaOGD and AdaONS, which replace those constants with the running
//!   maximum of geometric draws and need no tuning.
//!
//! A single learner minimizes regret on a stream of losses. Several learners
//! stepped together by [`ma_round`] play a game, each seeing only its own
//! gradient. [`games`] holds the instance catalog and gradient oracles,
//! [`metrics`] the ground-truth solvers, and [`harness`] the seeded
//! experiment runner behind the `noregret` binary.
//!
//! ```
//! use noregret::{Algorithm, FeasibleSet, GradientSignal, Learner};
//! use noregret::schedules::substream;
//!
//! let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
//! let mut l = Learner::new(Algorithm::AdaOgd, set, vec![0.0, 0.0], 500, None, substream(0, 0)).unwrap();
//! for _ in 0..500 {
//!     let g: Vec<f64> = l.action().iter().map(|x| x - 0.5).collect();
//!     l.step(&GradientSignal::exact(g)).unwrap();
//! }
//! assert!(l.action().iter().all(|x| (x - 0.5).abs() < 1e-3));
//! ```
//!
//! The guide under `book/` walks through each layer with runnable examples.

pub mod curvature;
pub mod error;
pub mod games;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod schedules;

pub use error::{Error, Result};
pub use games::GameSpec;
pub use geometry::{FeasibleSet, JointAction};
pub use learners::{ma_round, Algorithm, GradientSignal, KnownParams, Learner};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/schedules.md")]
    mod schedules {}
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
