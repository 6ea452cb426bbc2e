//! OGD, AdaOGD, ONS and AdaONS behind one round interface.
//!
//! A [`Learner`] holds one agent's action, feasible set, weight rule,
//! optional curvature matrix and random stream. Multi-agent play is just a
//! vector of learners driven by [`ma_round`]: each agent sees only its own
//! block of the joint gradient, so the update is decentralized by
//! construction.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureState;
use crate::error::{Error, Result};
use crate::geometry::{project_euclidean, project_quadratic, FeasibleSet, JointAction, FEASIBILITY_TOL};
use crate::schedules::{default_p0, GeometricMaxState, ProxWeightRule};

/// Tolerance for accepting a user-supplied starting point.
const START_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ogd,
    AdaOgd,
    Ons,
    AdaOns,
}

impl Algorithm {
    pub fn is_newton(self) -> bool {
        matches!(self, Algorithm::Ons | Algorithm::AdaOns)
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Algorithm::AdaOgd | Algorithm::AdaOns)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ogd => "ogd",
            Algorithm::AdaOgd => "ada_ogd",
            Algorithm::Ons => "ons",
            Algorithm::AdaOns => "ada_ons",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ogd" => Ok(Algorithm::Ogd),
            "ada_ogd" | "adaogd" => Ok(Algorithm::AdaOgd),
            "ons" => Ok(Algorithm::Ons),
            "ada_ons" | "adaons" => Ok(Algorithm::AdaOns),
            _ => Err(Error::config(
                "learners",
                format!("unknown learner `{s}` (expected ogd, ada_ogd, ons or ada_ons)"),
            )),
        }
    }
}

/// Constants the non-adaptive learners need up front.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KnownParams {
    Beta(f64),
    Ons { g: f64, d: f64, alpha: f64 },
}

/// One agent's feedback for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSignal {
    pub vector: Vec<f64>,
    /// True when the oracle returned the exact gradient.
    pub exact: bool,
}

impl GradientSignal {
    pub fn exact(vector: Vec<f64>) -> Self {
        GradientSignal { vector, exact: true }
    }

    pub fn noisy(vector: Vec<f64>) -> Self {
        GradientSignal { vector, exact: false }
    }
}

#[derive(Clone, Debug)]
pub struct Learner {
    algorithm: Algorithm,
    set: FeasibleSet,
    action: Vec<f64>,
    rule: ProxWeightRule,
    curvature: Option<CurvatureState>,
    round: u64,
    rng: ChaCha8Rng,
}

impl Learner {
    /// Creates a learner at `x1` for a run of `horizon` rounds.
    ///
    /// Non-adaptive algorithms require `known`: `Beta` for OGD, `Ons` for
    /// ONS. Adaptive ones ignore it and start their geometric state with
    /// `p0 = 1/ln(horizon + 10)`.
    pub fn new(
        algorithm: Algorithm,
        set: FeasibleSet,
        x1: Vec<f64>,
        horizon: u64,
        known: Option<KnownParams>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        set.validate()?;
        if horizon == 0 {
            return Err(Error::contract("horizon must be at least 1"));
        }
        if !set.contains(&x1, START_TOL) {
            return Err(Error::contract(format!("initial point {x1:?} is not in the feasible set")));
        }
        let x1 = project_euclidean(&set, &x1)?;
        let rule = match (algorithm, known) {
            (Algorithm::Ogd, Some(KnownParams::Beta(beta))) => ProxWeightRule::ogd(beta)?,
            (Algorithm::Ogd, _) => {
                return Err(Error::config("learner_params.beta", "OGD needs the strong-monotonicity constant beta"))
            }
            (Algorithm::Ons, Some(KnownParams::Ons { g, d, alpha })) => ProxWeightRule::ons(g, d, alpha)?,
            (Algorithm::Ons, _) => {
                return Err(Error::config("learner_params", "ONS needs G, D and alpha"));
            }
            (Algorithm::AdaOgd, _) => ProxWeightRule::AdaOgd(GeometricMaxState::new(default_p0(horizon))?),
            (Algorithm::AdaOns, _) => ProxWeightRule::AdaOns(GeometricMaxState::new(default_p0(horizon))?),
        };
        let curvature = if algorithm.is_newton() {
            Some(CurvatureState::new(set.dim())?)
        } else {
            None
        };
        Ok(Learner {
            algorithm,
            set,
            action: x1,
            rule,
            curvature,
            round: 1,
            rng,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn action(&self) -> &[f64] {
        &self.action
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn rule(&self) -> &ProxWeightRule {
        &self.rule
    }

    pub fn curvature(&self) -> Option<&CurvatureState> {
        self.curvature.as_ref()
    }

    /// The round whose action is currently held (starts at 1).
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Consumes the round-`t` signal and moves to the round-`t+1` action.
    /// On error the learner is left exactly as it was.
    pub fn step(&mut self, signal: &GradientSignal) -> Result<&[f64]> {
        let mut next = self.clone();
        next.step_in_place(signal)?;
        *self = next;
        Ok(&self.action)
    }

    fn step_in_place(&mut self, signal: &GradientSignal) -> Result<()> {
        let g = &signal.vector;
        if g.len() != self.set.dim() {
            return Err(Error::contract(format!(
                "signal has dimension {}, learner expects {}",
                g.len(),
                self.set.dim()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("signal contains non-finite entries"));
        }
        let t = self.round;
        let next = match &mut self.curvature {
            None => {
                let eta = self.rule.next_weight(t, &mut self.rng)?;
                let y: Vec<f64> = self.action.iter().zip(g).map(|(x, gi)| x - gi / eta).collect();
                project_euclidean(&self.set, &y)?
            }
            Some(curvature) => {
                if !signal.exact {
                    return Err(Error::contract(format!(
                        "{} requires exact gradients; the oracle is noisy",
                        self.algorithm
                    )));
                }
                curvature.rank_one_update(g);
                let eta = self.rule.next_weight(t, &mut self.rng)?;
                project_quadratic(&self.set, &self.action, g, eta, curvature)?
            }
        };
        debug_assert!(self.set.contains(&next, 1e3 * FEASIBILITY_TOL));
        self.action = next;
        self.round += 1;
        Ok(())
    }
}

/// The current joint action of a group of learners.
pub fn joint_action(learners: &[Learner]) -> JointAction {
    JointAction::from_blocks(learners.iter().map(Learner::action))
}

/// One decentralized round: query `oracle` once at the joint action, hand
/// agent `i` its block signal, and step every agent. Agents are stepped in
/// index order. If the oracle or any step fails, no learner changes.
pub fn ma_round<F>(learners: &mut [Learner], oracle: F) -> Result<JointAction>
where
    F: FnOnce(&JointAction) -> Result<Vec<GradientSignal>>,
{
    let x = joint_action(learners);
    let signals = oracle(&x)?;
    if signals.len() != learners.len() {
        return Err(Error::contract(format!(
            "oracle returned {} signals for {} agents",
            signals.len(),
            learners.len()
        )));
    }
    let mut next: Vec<Learner> = learners.to_vec();
    for (learner, signal) in next.iter_mut().zip(&signals) {
        learner.step_in_place(signal)?;
    }
    learners.clone_from_slice(&next);
    Ok(joint_action(learners))
}
