//! Tiered edge-cloud simulator: local device, edge servers and a cloud node,
//! with FIFO task queues and the latency/energy/cost/SLA dynamics behind the
//! weighted reward.

mod action;
mod config;
mod reward;
mod sim;

pub use action::{ActionSpace, HybridAction};
pub use config::{EnvConfig, MetricBounds, NodeProfile, RewardWeights, Tier};
pub use reward::{compute_reward, normalize, StepBreakdown};
pub use sim::{EdgeCloudEnv, RawState, StepOutcome, WorkLedger};

#[cfg(test)]
mod tests;
