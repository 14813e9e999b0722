//! The JSON instance file.
//!
//! ```json
//! {
//!   "P": [[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]],
//!   "alpha": [0, 0.5, 1],
//!   "sim": {"horizon": 10000, "episodes": 100, "seed": 0, "burn_in": 1000, "policy": "greedy-structured"},
//!   "dp": {"horizon": 6, "lag_cap": 16, "restricted": false},
//!   "verify": {"k_max": 64, "random_instances": 100}
//! }
//! ```
//!
//! Only `P` and `alpha` are required.

use std::path::Path;

use arqsched_core::sim::SimPolicy;
use arqsched_core::{ChannelError, RewardError, RewardVector, TransitionMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub horizon: Option<usize>,
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub burn_in: Option<usize>,
    pub policy: Option<SimPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpBlock {
    pub horizon: Option<usize>,
    pub lag_cap: Option<usize>,
    pub restricted: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub k_max: Option<usize>,
    pub random_instances: Option<usize>,
}

/// The file as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    #[serde(rename = "P")]
    pub p: [[f64; 3]; 3],
    pub alpha: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp: Option<DpBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyBlock>,
}

/// A validated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub p: TransitionMatrix,
    pub alpha: RewardVector,
    pub sim: SimBlock,
    pub dp: DpBlock,
    pub verify: VerifyBlock,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed instance: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid reward vector: {0}")]
    Reward(#[from] RewardError),
}

impl InstanceError {
    /// Machine-readable error name.
    pub fn kind(&self) -> &'static str {
        match self {
            InstanceError::Io { .. } => "IoError",
            InstanceError::Malformed(_) => "MalformedInstance",
            InstanceError::Channel(e) => e.kind(),
            InstanceError::Reward(_) => "InvalidReward",
        }
    }
}

impl TryFrom<RawInstance> for Instance {
    type Error = InstanceError;

    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        Ok(Instance {
            p: TransitionMatrix::new(raw.p)?,
            alpha: RewardVector::new(raw.alpha)?,
            sim: raw.sim.unwrap_or_default(),
            dp: raw.dp.unwrap_or_default(),
            verify: raw.verify.unwrap_or_default(),
        })
    }
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str::<RawInstance>(text)?.try_into()
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}
