//! Scheduling a two-user downlink over three-state Markov channels using
//! ARQ feedback from the scheduled user.
//!
//! Each user's channel is a first-order Markov chain on states 1 (worst),
//! 2 and 3 (best). The scheduler never sees the channel directly; it only
//! learns the state of the user it just served. This crate provides:
//!
//! - [`channel`]: the validated transition matrix, its steady state, cached
//!   powers and expected-reward curves.
//! - [`belief`]: the `(origin, lag)` sufficient statistic for one user.
//! - [`policy`]: the greedy policy (argmax and round-robin forms), the genie
//!   baseline, system classification, the crossover lag, and exact
//!   finite-horizon dynamic programming over the belief lattice.
//! - [`bounds`]: closed-form lower and upper bounds on the sum reward.
//! - [`analysis`]: numerical verifiers for the structural properties the
//!   policy relies on.
//! - [`sim`]: a seeded Monte Carlo engine estimating the per-slot sum reward.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(unsafe_code)]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod belief;
pub mod bounds;
pub mod channel;
pub mod policy;
pub mod sim;
pub mod tolerance;

pub use belief::{BeliefState, Feedback, RewardTable};
pub use bounds::BoundsReport;
pub use channel::{ChannelError, RewardError, RewardVector, State, TransitionMatrix};
pub use policy::{JointInfoState, PolicyDecision, SystemType, User};
pub use sim::{SimConfig, SimPolicy, SimResult, Simulator};
pub use tolerance::Tolerances;
