//! Scheduling policies for the two-user downlink.
//!
//! The greedy policy schedules the user with the larger expected immediate
//! reward. [`greedy_argmax`] evaluates that definition directly;
//! [`greedy_structured`] is the equivalent round-robin rule driven only by
//! the last feedback (and, in a type II system after `F2`, one reward
//! comparison). [`genie_decide`] is the full-information baseline and
//! [`dp`] solves the finite-horizon problem exactly.

use core::fmt;

use crate::belief::{BeliefState, Feedback, RewardTable};
use crate::channel::{RewardVector, State, TransitionMatrix};

pub mod dp;

pub use dp::{compare_greedy_vs_optimal, compare_with_lag_cap, optimal_dp, ComparisonReport, DpEntry, ValueTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub const fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    pub const fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Type I when `p_2 alpha >= p_ss alpha`, type II otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SystemType {
    #[cfg_attr(feature = "serde", serde(rename = "I"))]
    TypeI,
    #[cfg_attr(feature = "serde", serde(rename = "II"))]
    TypeII,
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemType::TypeI => "I",
            SystemType::TypeII => "II",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("the crossover lag is only defined for type I systems")]
    NotTypeI,
    #[error("horizon {horizon} exceeds the belief lag cap {lag_cap}")]
    CapTooSmall { horizon: usize, lag_cap: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

/// Classifies the system. Differences within the algebraic tolerance count
/// as equality, which is type I.
pub fn classify_system(p: &TransitionMatrix, alpha: &RewardVector) -> SystemType {
    let tol = p.tolerances().algebraic;
    if p.row_reward(State::S2, alpha) >= p.steady_reward(alpha) - tol {
        SystemType::TypeI
    } else {
        SystemType::TypeII
    }
}

/// Crossover lag `L`: a fresh state-2 observation is worth at least a
/// state-3 observation that is `k` slots old exactly when `k >= L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdL {
    Finite(usize),
    /// `p_3 P^k alpha` stays above `p_2 alpha` at every finite lag; happens
    /// when `p_2 alpha` equals the common limit `p_ss alpha`.
    Infinite,
}

#[cfg(feature = "serde")]
impl serde::Serialize for ThresholdL {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ThresholdL::Finite(l) => s.serialize_u64(*l as u64),
            ThresholdL::Infinite => s.serialize_str("infinite"),
        }
    }
}

const MAX_THRESHOLD_SEARCH: usize = 1 << 20;

/// Smallest `L` with `p_3 P^L alpha <= p_2 alpha`.
pub fn threshold_l(p: &TransitionMatrix, alpha: &RewardVector) -> Result<ThresholdL, PolicyError> {
    if classify_system(p, alpha) != SystemType::TypeI {
        return Err(PolicyError::NotTypeI);
    }
    let tol = p.tolerances().algebraic;
    let target = p.row_reward(State::S2, alpha);
    if p.row_reward(State::S3, alpha) <= target {
        return Ok(ThresholdL::Finite(0));
    }
    // The curve decreases to p_ss alpha; if that limit is p_2 alpha the
    // crossing never happens at a finite lag.
    if (target - p.steady_reward(alpha)).abs() <= tol {
        return Ok(ThresholdL::Infinite);
    }
    let curve = p.reward_curve(alpha, State::S3, p.lag_cap());
    if let Some(k) = curve.iter().position(|&r| r <= target) {
        return Ok(ThresholdL::Finite(k));
    }
    // Slowly mixing chain: keep multiplying past the cache.
    let mut m = p.n_step(p.lag_cap() + 1);
    for k in p.lag_cap() + 1..MAX_THRESHOLD_SEARCH {
        if alpha.dot(&m[State::S3.index()]) <= target {
            return Ok(ThresholdL::Finite(k));
        }
        m = crate::channel::mat_mul(&m, p.matrix());
    }
    Ok(ThresholdL::Infinite)
}

/// Both users' beliefs plus the user served in the previous slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointInfoState {
    pub beliefs: [BeliefState; 2],
    pub scheduled_last: Option<User>,
}

impl JointInfoState {
    /// Nobody observed yet: both beliefs at the steady state.
    pub const INITIAL: JointInfoState =
        JointInfoState { beliefs: [BeliefState::Steady, BeliefState::Steady], scheduled_last: None };

    pub fn new(first: BeliefState, second: BeliefState, scheduled_last: Option<User>) -> Self {
        JointInfoState { beliefs: [first, second], scheduled_last }
    }

    #[inline]
    pub fn belief(&self, user: User) -> BeliefState {
        self.beliefs[user.index()]
    }

    /// State for the next slot after serving `action` and hearing `feedback`.
    #[inline]
    pub fn after(&self, action: User, feedback: Feedback, lag_cap: usize) -> Self {
        let mut beliefs = self.beliefs;
        beliefs[action.index()] = BeliefState::observe(feedback);
        beliefs[action.other().index()] = self.belief(action.other()).advance(lag_cap);
        JointInfoState { beliefs, scheduled_last: Some(action) }
    }

    /// At most one fresh belief, and it belongs to the last scheduled user.
    pub fn is_consistent(&self) -> bool {
        let fresh = |b: BeliefState| b.lag() == Some(0);
        match self.scheduled_last {
            None => !fresh(self.beliefs[0]) && !fresh(self.beliefs[1]),
            Some(u) => fresh(self.belief(u)) && !fresh(self.belief(u.other())),
        }
    }

    /// The last scheduled user just reported `F3`.
    pub fn last_heard_f3(&self) -> bool {
        self.scheduled_last.is_some_and(|u| self.belief(u) == BeliefState::Observed { origin: State::S3, lag: 0 })
    }
}

impl fmt::Display for JointInfoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, last=", self.beliefs[0], self.beliefs[1])?;
        match self.scheduled_last {
            Some(u) => write!(f, "{u})"),
            None => f.write_str("-)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rationale {
    RetainOnF3,
    RetainOnF2,
    SwitchOnF1,
    ComparedRewards,
    ArgmaxTie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyDecision {
    pub action: User,
    pub expected_immediate: f64,
    pub rationale: Rationale,
}

fn argmax_with(state: &JointInfoState, tol: f64, reward: impl Fn(BeliefState) -> f64) -> PolicyDecision {
    let keep = state.scheduled_last.unwrap_or(User::One);
    let (r_keep, r_other) = (reward(state.belief(keep)), reward(state.belief(keep.other())));
    if r_other > r_keep + tol {
        PolicyDecision { action: keep.other(), expected_immediate: r_other, rationale: Rationale::ComparedRewards }
    } else if r_other < r_keep - tol {
        PolicyDecision { action: keep, expected_immediate: r_keep, rationale: Rationale::ComparedRewards }
    } else {
        PolicyDecision { action: keep, expected_immediate: r_keep, rationale: Rationale::ArgmaxTie }
    }
}

fn structured_with(
    feedback: Feedback,
    state: &JointInfoState,
    system: SystemType,
    tol: f64,
    reward: impl Fn(BeliefState) -> f64,
) -> PolicyDecision {
    let Some(served) = state.scheduled_last else {
        return argmax_with(state, tol, reward);
    };
    debug_assert_eq!(state.belief(served), BeliefState::observe(feedback));
    let retain =
        |rationale| PolicyDecision { action: served, expected_immediate: reward(state.belief(served)), rationale };
    let switch = |rationale| PolicyDecision {
        action: served.other(),
        expected_immediate: reward(state.belief(served.other())),
        rationale,
    };
    match (feedback, system) {
        (Feedback::F3, _) => retain(Rationale::RetainOnF3),
        (Feedback::F1, _) => switch(Rationale::SwitchOnF1),
        (Feedback::F2, SystemType::TypeI) => retain(Rationale::RetainOnF2),
        (Feedback::F2, SystemType::TypeII) => {
            let fresh_mid = reward(state.belief(served));
            if fresh_mid >= reward(state.belief(served.other())) - tol {
                retain(Rationale::ComparedRewards)
            } else {
                switch(Rationale::ComparedRewards)
            }
        }
    }
}

/// Greedy choice by direct comparison of expected immediate rewards.
/// Ties (within the algebraic tolerance) keep the last scheduled user, or
/// user 1 in the first slot.
pub fn greedy_argmax(state: &JointInfoState, p: &TransitionMatrix, alpha: &RewardVector) -> PolicyDecision {
    argmax_with(state, p.tolerances().algebraic, |b| b.expected_reward(p, alpha))
}

/// Greedy choice in round-robin form, given the feedback of the user served
/// last slot. `state` is the state after that feedback was applied.
///
/// Matches [`greedy_argmax`] along any trajectory that has been greedy since
/// the first slot. Falls back to the argmax in the first slot.
pub fn greedy_structured(
    feedback: Feedback,
    state: &JointInfoState,
    system: SystemType,
    p: &TransitionMatrix,
    alpha: &RewardVector,
) -> PolicyDecision {
    structured_with(feedback, state, system, p.tolerances().algebraic, |b| b.expected_reward(p, alpha))
}

/// Full-information baseline: serve the user whose previous-slot state was
/// higher; on ties keep the last scheduled user (user 1 initially). With no
/// previous states (first slot) the tie rule applies.
pub fn genie_decide(prev_states: Option<[State; 2]>, scheduled_last: Option<User>) -> User {
    let keep = scheduled_last.unwrap_or(User::One);
    match prev_states {
        Some([a, b]) if a > b => User::One,
        Some([a, b]) if b > a => User::Two,
        _ => keep,
    }
}

/// Greedy policy with rewards precomputed for every belief up to a lag cap.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    rewards: RewardTable,
    system: SystemType,
    tol: f64,
}

impl GreedyPolicy {
    pub fn new(p: &TransitionMatrix, alpha: &RewardVector, lag_cap: usize) -> Self {
        GreedyPolicy {
            rewards: RewardTable::new(p, alpha, lag_cap),
            system: classify_system(p, alpha),
            tol: p.tolerances().algebraic,
        }
    }

    pub fn system(&self) -> SystemType {
        self.system
    }

    pub fn rewards(&self) -> &RewardTable {
        &self.rewards
    }

    #[inline]
    pub fn reward(&self, belief: BeliefState) -> f64 {
        self.rewards.reward(belief)
    }

    #[inline]
    pub fn argmax(&self, state: &JointInfoState) -> PolicyDecision {
        argmax_with(state, self.tol, |b| self.rewards.reward(b))
    }

    #[inline]
    pub fn structured(&self, feedback: Feedback, state: &JointInfoState) -> PolicyDecision {
        structured_with(feedback, state, self.system, self.tol, |b| self.rewards.reward(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const P_IID: [[f64; 3]; 3] = [[1.0 / 3.0; 3]; 3];
    const P_A: [[f64; 3]; 3] = [[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];
    const P_S: [[f64; 3]; 3] = [[0.6, 0.3, 0.1], [0.3, 0.4, 0.3], [0.1, 0.3, 0.6]];

    fn obs(origin: State, lag: usize) -> BeliefState {
        BeliefState::Observed { origin, lag }
    }

    fn alpha(a2: f64) -> RewardVector {
        RewardVector::normalized(a2).unwrap()
    }

    #[test]
    fn classification_examples() {
        let iid = TransitionMatrix::new(P_IID).unwrap();
        assert_eq!(classify_system(&iid, &alpha(0.3)), SystemType::TypeI);
        let a = TransitionMatrix::new(P_A).unwrap();
        // p_2 alpha = 0.35 + 0.2 = 0.55 < p_ss alpha = 1/6 + 0.4
        assert_abs_diff_eq!(a.row_reward(State::S2, &alpha(0.5)), 0.55, epsilon = 1e-15);
        assert_eq!(classify_system(&a, &alpha(0.5)), SystemType::TypeII);
        // 0.63 + 0.2 = 0.83 > 0.3 + 0.4
        assert_eq!(classify_system(&a, &alpha(0.9)), SystemType::TypeI);
    }

    /// Brute-force oracle: iterate `p_3 P^k alpha` by vector-matrix products.
    fn threshold_oracle(p: &[[f64; 3]; 3], alpha: [f64; 3]) -> Option<usize> {
        let dot = |v: [f64; 3]| v[0] * alpha[0] + v[1] * alpha[1] + v[2] * alpha[2];
        let target = dot(p[1]);
        let mut v = p[2];
        for k in 0..1000 {
            if dot(v) <= target {
                return Some(k);
            }
            v = [0, 1, 2].map(|j| v[0] * p[0][j] + v[1] * p[1][j] + v[2] * p[2][j]);
        }
        None
    }

    #[test]
    fn threshold_examples() {
        let iid = TransitionMatrix::new(P_IID).unwrap();
        assert_eq!(threshold_l(&iid, &alpha(0.4)), Ok(ThresholdL::Finite(0)));

        let a = TransitionMatrix::new(P_A).unwrap();
        assert_eq!(threshold_oracle(&P_A, [0.0, 0.9, 1.0]), Some(3));
        assert_eq!(threshold_l(&a, &alpha(0.9)), Ok(ThresholdL::Finite(3)));
        let r3 = a.reward_curve(&alpha(0.9), State::S3, 3);
        assert!(r3[2] > 0.83 && r3[3] <= 0.83);
        assert_abs_diff_eq!(r3[2], 0.8393, epsilon = 1e-4);
        assert_abs_diff_eq!(r3[3], 0.8062, epsilon = 1e-4);

        let s = TransitionMatrix::new(P_S).unwrap();
        assert_eq!(threshold_l(&s, &alpha(0.5)), Ok(ThresholdL::Infinite));

        assert_eq!(threshold_l(&a, &alpha(0.5)), Err(PolicyError::NotTypeI));
    }

    #[test]
    fn argmax_examples() {
        let a = TransitionMatrix::new(P_A).unwrap();
        let al = alpha(0.5);
        let s = JointInfoState::new(obs(State::S3, 0), obs(State::S1, 5), Some(User::One));
        assert_eq!(greedy_argmax(&s, &a, &al).action, User::One);

        let d = greedy_argmax(&JointInfoState::INITIAL, &a, &al);
        assert_eq!((d.action, d.rationale), (User::One, Rationale::ArgmaxTie));

        let s = JointInfoState::new(obs(State::S2, 0), obs(State::S3, 1), Some(User::One));
        let d = greedy_argmax(&s, &a, &al);
        assert_eq!(d.action, User::Two);
        // p_3 P alpha = 0.5 * 0.2475 + 0.665
        assert_abs_diff_eq!(d.expected_immediate, 0.78875, epsilon = 1e-12);
    }

    #[test]
    fn structured_examples() {
        let a = TransitionMatrix::new(P_A).unwrap();
        let al = alpha(0.9);
        let s = JointInfoState::new(obs(State::S3, 0), obs(State::S1, 2), Some(User::One));
        let d = greedy_structured(Feedback::F3, &s, SystemType::TypeI, &a, &al);
        assert_eq!((d.action, d.rationale), (User::One, Rationale::RetainOnF3));

        for k in 0..20 {
            let s = JointInfoState::new(obs(State::S2, 0), obs(State::S1, k), Some(User::One));
            let d = greedy_structured(Feedback::F2, &s, SystemType::TypeI, &a, &al);
            assert_eq!((d.action, d.rationale), (User::One, Rationale::RetainOnF2));
            assert_eq!(d.action, greedy_argmax(&s, &a, &al).action);
        }

        let al = alpha(0.5);
        let s = JointInfoState::new(obs(State::S2, 0), obs(State::S3, 1), Some(User::One));
        let d = greedy_structured(Feedback::F2, &s, SystemType::TypeII, &a, &al);
        assert_eq!((d.action, d.rationale), (User::Two, Rationale::ComparedRewards));

        let s = JointInfoState::new(obs(State::S3, 4), obs(State::S1, 0), Some(User::Two));
        let d = greedy_structured(Feedback::F1, &s, SystemType::TypeII, &a, &al);
        assert_eq!((d.action, d.rationale), (User::One, Rationale::SwitchOnF1));
    }

    #[test]
    fn genie_examples() {
        assert_eq!(genie_decide(Some([State::S3, State::S2]), Some(User::Two)), User::One);
        assert_eq!(genie_decide(Some([State::S1, State::S1]), Some(User::Two)), User::Two);
        assert_eq!(genie_decide(Some([State::S2, State::S3]), Some(User::One)), User::Two);
        assert_eq!(genie_decide(None, None), User::One);
    }

    #[test]
    fn joint_state_transitions_keep_invariants() {
        let s = JointInfoState::INITIAL;
        assert!(s.is_consistent());
        let s = s.after(User::One, Feedback::F3, 8);
        assert!(s.is_consistent() && s.last_heard_f3());
        let s = s.after(User::Two, Feedback::F1, 8);
        assert_eq!(s.beliefs, [obs(State::S3, 1), obs(State::S1, 0)]);
        assert!(s.is_consistent() && !s.last_heard_f3());
        assert_eq!(format!("{s}"), "(3@1, 1@0, last=2)");
        let bad = JointInfoState::new(obs(State::S3, 0), obs(State::S1, 0), Some(User::One));
        assert!(!bad.is_consistent());
    }

    extern crate std;
    use std::format;
}
