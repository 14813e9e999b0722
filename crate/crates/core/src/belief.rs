//! Per-user belief in `(origin, lag)` form.
//!
//! After the scheduler hears feedback `F_j` from a user, that user's belief
//! for the next slot is `p_j` (row `j` of `P`). Every slot the user goes
//! unscheduled the belief is multiplied by `P` once more, so the belief is
//! always `p_j P^l` for the last observed state `j` and the number `l` of
//! slots since, or `p_ss` for a user that was never observed. Storing the
//! pair instead of the vector keeps the reachable belief set finite.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::{RewardVector, State, TransitionMatrix, Vector3};

/// ARQ feedback: the channel state the scheduled user observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Feedback {
    F1,
    F2,
    F3,
}

impl Feedback {
    #[inline]
    pub const fn state(self) -> State {
        match self {
            Feedback::F1 => State::S1,
            Feedback::F2 => State::S2,
            Feedback::F3 => State::S3,
        }
    }
}

impl From<State> for Feedback {
    #[inline]
    fn from(s: State) -> Self {
        match s {
            State::S1 => Feedback::F1,
            State::S2 => Feedback::F2,
            State::S3 => Feedback::F3,
        }
    }
}

impl fmt::Display for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.state().number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeliefState {
    /// No observation yet; the belief is the steady state.
    Steady,
    /// Feedback `origin` was heard `lag + 1` slots before the current one.
    Observed { origin: State, lag: usize },
}

impl BeliefState {
    /// Belief for the slot after hearing `feedback`.
    #[inline]
    pub fn observe(feedback: Feedback) -> Self {
        BeliefState::Observed { origin: feedback.state(), lag: 0 }
    }

    /// One more slot without observation. Lags beyond `lag_cap` clamp to
    /// [`BeliefState::Steady`].
    #[inline]
    pub fn advance(self, lag_cap: usize) -> Self {
        match self {
            BeliefState::Steady => BeliefState::Steady,
            BeliefState::Observed { origin, lag } if lag < lag_cap => BeliefState::Observed { origin, lag: lag + 1 },
            BeliefState::Observed { .. } => BeliefState::Steady,
        }
    }

    /// Lag of an observed belief; `None` for the steady state.
    pub fn lag(self) -> Option<usize> {
        match self {
            BeliefState::Steady => None,
            BeliefState::Observed { lag, .. } => Some(lag),
        }
    }

    pub fn origin(self) -> Option<State> {
        match self {
            BeliefState::Steady => None,
            BeliefState::Observed { origin, .. } => Some(origin),
        }
    }

    /// The probability vector `p_j P^l` (or `p_ss`).
    pub fn materialize(self, p: &TransitionMatrix) -> Vector3 {
        match self {
            BeliefState::Steady => p.steady_state(),
            BeliefState::Observed { origin, lag } => p.n_step_row(origin, lag + 1),
        }
    }

    /// Expected immediate reward `pi . alpha` of scheduling this user.
    pub fn expected_reward(self, p: &TransitionMatrix, alpha: &RewardVector) -> f64 {
        alpha.dot(&self.materialize(p))
    }
}

impl fmt::Display for BeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeliefState::Steady => f.write_str("S"),
            BeliefState::Observed { origin, lag } => write!(f, "{origin}@{lag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse belief {0:?}: expected `S` or `<state>@<lag>`")]
pub struct ParseBeliefError(pub alloc::string::String);

impl FromStr for BeliefState {
    type Err = ParseBeliefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseBeliefError(s.into());
        if s == "S" {
            return Ok(BeliefState::Steady);
        }
        let (origin, lag) = s.split_once('@').ok_or_else(err)?;
        let origin = match origin {
            "1" => State::S1,
            "2" => State::S2,
            "3" => State::S3,
            _ => return Err(err()),
        };
        let lag = lag.parse().map_err(|_| err())?;
        Ok(BeliefState::Observed { origin, lag })
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for BeliefState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for BeliefState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::string::String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Expected rewards of every belief up to a lag cap, precomputed.
///
/// Entries are computed exactly as [`BeliefState::expected_reward`] does, so
/// a lookup is bitwise equal to the direct evaluation.
#[derive(Debug, Clone)]
pub struct RewardTable {
    by_origin: [Vec<f64>; 3],
    steady: f64,
}

impl RewardTable {
    pub fn new(p: &TransitionMatrix, alpha: &RewardVector, lag_cap: usize) -> Self {
        let curve = |s: State| {
            (0..=lag_cap)
                .map(|lag| BeliefState::Observed { origin: s, lag }.expected_reward(p, alpha))
                .collect::<Vec<_>>()
        };
        RewardTable {
            by_origin: [curve(State::S1), curve(State::S2), curve(State::S3)],
            steady: p.steady_reward(alpha),
        }
    }

    #[inline]
    pub fn reward(&self, belief: BeliefState) -> f64 {
        match belief {
            BeliefState::Steady => self.steady,
            BeliefState::Observed { origin, lag } => self.by_origin[origin.index()][lag],
        }
    }

    /// `p_ss alpha`.
    pub fn steady(&self) -> f64 {
        self.steady
    }

    /// `p_j alpha`.
    pub fn fresh(&self, origin: State) -> f64 {
        self.by_origin[origin.index()][0]
    }

    pub fn lag_cap(&self) -> usize {
        self.by_origin[0].len() - 1
    }
}
