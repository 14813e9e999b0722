//! Command-line tooling, file formats and parallel Monte Carlo for
//! [`arqsched_core`].
//!
//! - [`instance`]: the JSON instance file every subcommand reads.
//! - [`format`]: curve, trace and reference-line outputs.
//! - [`parallel`]: episode-parallel simulation with order-independent
//!   aggregation.
//! - [`suite`]: the full verification suite behind `arqsched verify`.
//! - [`cli`]: argument parsing and subcommand dispatch.

#![deny(unsafe_code)]

pub mod cli;
pub mod format;
pub mod instance;
pub mod parallel;
pub mod suite;

pub use arqsched_core as core;
pub use cli::run_command;
pub use instance::{Instance, InstanceError};
