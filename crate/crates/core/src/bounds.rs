//! Closed-form bounds on the greedy sum reward.
//!
//! All three bounds average the fresh-row rewards `p_i alpha` over the joint
//! distribution of both users' previous states in steady state:
//!
//! * at least one user in state 3 with probability `w3 = 2 s3 - s3^2`,
//! * otherwise at least one in state 2 with probability `w2 = 2 s1 s2 + s2^2`,
//! * both in state 1 with probability `w1 = s1^2`,
//!
//! where `s = p_ss`. The upper bound is the genie-aided system's sum reward,
//! which serves the better previous state every slot. The type II lower bound
//! credits only the state-3 class and treats everything else as state 1 (the
//! printed formula repeats `p_3 alpha` in its second term; the derivation it
//! summarizes replaces `p_2 alpha` with `p_1 alpha`, which is what is used
//! here).
//!
//! Each bound is evaluated as `p_1 alpha` (or `p_2 alpha`) plus weighted
//! reward differences. This is algebraically identical to the weighted sum,
//! and collapses to exactly `p_ss alpha` when all rows coincide.

use crate::channel::{RewardVector, State, TransitionMatrix};
use crate::policy::{classify_system, SystemType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundsError {
    #[error("the state-2 lower bound applies to type I systems only")]
    NotTypeI,
    #[error("the state-3 lower bound applies to type II systems only")]
    NotTypeII,
}

/// Probabilities of the three joint previous-state classes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassWeights {
    /// Some user was in state 3.
    pub w3: f64,
    /// No user in state 3, some user in state 2.
    pub w2: f64,
    /// Both users in state 1.
    pub w1: f64,
}

impl ClassWeights {
    pub fn new(p: &TransitionMatrix) -> Self {
        let [s1, s2, s3] = p.steady_state();
        ClassWeights { w3: 2.0 * s3 - s3 * s3, w2: 2.0 * s1 * s2 + s2 * s2, w1: s1 * s1 }
    }

    pub fn total(&self) -> f64 {
        self.w3 + self.w2 + self.w1
    }
}

/// The fresh-row rewards the bounds are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateRewards {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub steady: f64,
}

impl StateRewards {
    pub fn new(p: &TransitionMatrix, alpha: &RewardVector) -> Self {
        StateRewards {
            r1: p.row_reward(State::S1, alpha),
            r2: p.row_reward(State::S2, alpha),
            r3: p.row_reward(State::S3, alpha),
            steady: p.steady_reward(alpha),
        }
    }
}

/// `p_2 alpha - s1^2 (p_2 alpha - p_1 alpha)`.
pub fn lb_type1(p: &TransitionMatrix, alpha: &RewardVector) -> Result<f64, BoundsError> {
    if classify_system(p, alpha) != SystemType::TypeI {
        return Err(BoundsError::NotTypeI);
    }
    Ok(lb_type1_unchecked(&ClassWeights::new(p), &StateRewards::new(p, alpha)))
}

/// `(2 s3 - s3^2) p_3 alpha + (1 - s3)^2 p_1 alpha`.
pub fn lb_type2(p: &TransitionMatrix, alpha: &RewardVector) -> Result<f64, BoundsError> {
    if classify_system(p, alpha) != SystemType::TypeII {
        return Err(BoundsError::NotTypeII);
    }
    Ok(lb_type2_unchecked(&ClassWeights::new(p), &StateRewards::new(p, alpha)))
}

/// `w3 p_3 alpha + w2 p_2 alpha + w1 p_1 alpha`.
pub fn upper_bound(p: &TransitionMatrix, alpha: &RewardVector) -> f64 {
    upper_unchecked(&ClassWeights::new(p), &StateRewards::new(p, alpha))
}

fn lb_type1_unchecked(w: &ClassWeights, r: &StateRewards) -> f64 {
    r.r2 - w.w1 * (r.r2 - r.r1)
}

fn lb_type2_unchecked(w: &ClassWeights, r: &StateRewards) -> f64 {
    r.r1 + w.w3 * (r.r3 - r.r1)
}

fn upper_unchecked(w: &ClassWeights, r: &StateRewards) -> f64 {
    r.r1 + w.w3 * (r.r3 - r.r1) + w.w2 * (r.r2 - r.r1)
}

/// The applicable lower bound and the upper bound, with their ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsReport {
    #[cfg_attr(feature = "serde", serde(rename = "type"))]
    pub system: SystemType,
    pub lower: f64,
    pub upper: f64,
    pub weights: ClassWeights,
    pub rewards: StateRewards,
}

impl BoundsReport {
    pub fn new(p: &TransitionMatrix, alpha: &RewardVector) -> Self {
        let system = classify_system(p, alpha);
        let weights = ClassWeights::new(p);
        let rewards = StateRewards::new(p, alpha);
        let lower = match system {
            SystemType::TypeI => lb_type1_unchecked(&weights, &rewards),
            SystemType::TypeII => lb_type2_unchecked(&weights, &rewards),
        };
        BoundsReport { system, lower, upper: upper_unchecked(&weights, &rewards), weights, rewards }
    }
}
