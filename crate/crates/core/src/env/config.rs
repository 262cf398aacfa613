use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Local,
    Edge,
    Cloud,
}

/// Static capabilities and prices of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeProfile {
    pub tier: Tier,
    /// Work units processed per timestep at full share.
    pub cpu_capacity: f64,
    pub mem_capacity: f64,
    /// Timesteps per data unit to reach this node from a task's home location.
    pub link_latency: f64,
    pub energy_per_work: f64,
    /// Energy drawn every timestep regardless of load.
    pub energy_idle: f64,
    pub cost_per_work: f64,
}

impl NodeProfile {
    pub fn local() -> Self {
        Self {
            tier: Tier::Local,
            cpu_capacity: 1.0,
            mem_capacity: 4.0,
            link_latency: 0.0,
            energy_per_work: 0.3,
            energy_idle: 0.01,
            cost_per_work: 0.0,
        }
    }

    pub fn edge() -> Self {
        Self {
            tier: Tier::Edge,
            cpu_capacity: 4.0,
            mem_capacity: 16.0,
            link_latency: 0.5,
            energy_per_work: 0.2,
            energy_idle: 0.02,
            cost_per_work: 0.3,
        }
    }

    pub fn cloud() -> Self {
        Self {
            tier: Tier::Cloud,
            cpu_capacity: 16.0,
            mem_capacity: 64.0,
            link_latency: 2.0,
            energy_per_work: 0.5,
            energy_idle: 0.0,
            cost_per_work: 1.0,
        }
    }
}

/// Min-max range used to normalise one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricBounds {
    pub min: f64,
    pub max: f64,
}

impl MetricBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min < self.max {
            Ok(())
        } else {
            Err(Error::InvalidBounds { min: self.min, max: self.max })
        }
    }
}

/// Weights and normalisation bounds of the scalar reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_latency: f64,
    pub w_energy: f64,
    pub w_cost: f64,
    pub w_violation: f64,
    pub sla_penalty: f64,
    pub latency_bounds: MetricBounds,
    pub energy_bounds: MetricBounds,
    pub cost_bounds: MetricBounds,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_latency: 0.3,
            w_energy: 0.2,
            w_cost: 0.2,
            w_violation: 0.3,
            sla_penalty: 5.0,
            latency_bounds: MetricBounds { min: 0.0, max: 20.0 },
            energy_bounds: MetricBounds { min: 0.0, max: 4.0 },
            cost_bounds: MetricBounds { min: 0.0, max: 4.0 },
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("reward.w_latency", self.w_latency),
            ("reward.w_energy", self.w_energy),
            ("reward.w_cost", self.w_cost),
            ("reward.w_violation", self.w_violation),
            ("reward.sla_penalty", self.sla_penalty),
        ];
        for (field, w) in named {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(field, "must be finite and non-negative"));
            }
        }
        self.latency_bounds.validate()?;
        self.energy_bounds.validate()?;
        self.cost_bounds.validate()
    }

    /// Most negative reward a single step can produce.
    pub fn worst_reward(&self) -> f64 {
        -(self.w_latency + self.w_energy + self.w_cost + self.w_violation * self.sla_penalty)
    }
}

/// Simulator configuration.
///
/// Nodes are ordered `[local, edge.., cloud]`. Edge `i` sits at location
/// `i % n_locations`; tasks reaching an edge from another location pay
/// `remote_hop_factor` times its link latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub nodes: Vec<NodeProfile>,
    pub reward: RewardWeights,
    /// Number of allocation dimensions `m` (1: CPU share, 2: CPU + link share).
    pub alloc_dims: usize,
    /// Discrete levels `L` per allocation dimension.
    pub alloc_levels: usize,
    /// Past snapshots kept in the observation.
    pub history: usize,
    /// Steps per episode `T`. Experiments set this from their own `steps`.
    #[serde(skip)]
    pub episode_steps: usize,
    /// Earliest trace offset an episode may start at, so that look-back
    /// windows are filled with real data.
    pub context: usize,
    pub remote_hop_factor: f64,
    /// Task count mapped to a queue reading of 1.
    pub queue_scale: f64,
    pub work_scale: f64,
    pub data_scale: f64,
    pub deadline_scale: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            nodes: vec![NodeProfile::local(), NodeProfile::edge(), NodeProfile::edge(), NodeProfile::cloud()],
            reward: RewardWeights::default(),
            alloc_dims: 1,
            alloc_levels: 4,
            history: 4,
            episode_steps: 200,
            context: 32,
            remote_hop_factor: 2.0,
            queue_scale: 8.0,
            work_scale: 6.0,
            data_scale: 2.0,
            deadline_scale: 12.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n < 2 {
            return Err(Error::invalid("env.nodes", "need at least a local node and a cloud node"));
        }
        for node in &self.nodes {
            let finite = [
                node.cpu_capacity,
                node.mem_capacity,
                node.link_latency,
                node.energy_per_work,
                node.energy_idle,
                node.cost_per_work,
            ]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
            if !finite {
                return Err(Error::invalid("env.nodes", "node parameters must be finite and non-negative"));
            }
            if node.cpu_capacity <= 0.0 || node.mem_capacity <= 0.0 {
                return Err(Error::invalid("env.nodes", "capacities must be positive"));
            }
        }
        let local = &self.nodes[0];
        if local.tier != Tier::Local || local.link_latency != 0.0 {
            return Err(Error::invalid("env.nodes", "node 0 must be the local tier with zero link latency"));
        }
        let cloud = &self.nodes[n - 1];
        if cloud.tier != Tier::Cloud {
            return Err(Error::invalid("env.nodes", "last node must be the cloud tier"));
        }
        if self.nodes[1..n - 1].iter().any(|p| p.tier != Tier::Edge) {
            return Err(Error::invalid("env.nodes", "nodes between local and cloud must be edge tier"));
        }
        for other in &self.nodes[..n - 1] {
            if other.cpu_capacity >= cloud.cpu_capacity
                || other.link_latency >= cloud.link_latency
                || other.cost_per_work >= cloud.cost_per_work
            {
                return Err(Error::invalid(
                    "env.nodes",
                    "cloud must have the highest capacity, link latency and cost per work",
                ));
            }
        }
        self.reward.validate()?;
        if !(1..=2).contains(&self.alloc_dims) {
            return Err(Error::invalid("env.alloc_dims", "supported allocation dimensions are 1 or 2"));
        }
        if self.alloc_levels == 0 {
            return Err(Error::invalid("env.alloc_levels", "must be at least 1"));
        }
        if self.episode_steps == 0 {
            return Err(Error::invalid("env.episode_steps", "must be at least 1"));
        }
        let positive = [
            ("env.remote_hop_factor", self.remote_hop_factor),
            ("env.queue_scale", self.queue_scale),
            ("env.work_scale", self.work_scale),
            ("env.data_scale", self.data_scale),
            ("env.deadline_scale", self.deadline_scale),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        Ok(())
    }

    /// `N + 1`: number of offloading targets.
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Length of one observation snapshot: CPU and memory utilisation and
    /// queue length per node, plus network congestion.
    pub fn snapshot_dim(&self) -> usize {
        3 * self.n_nodes() + 1
    }

    /// Raw observation length: `(H + 1) * (3 (N + 1) + 1) + 3 + n_locations`.
    pub fn raw_state_dim(&self, n_locations: usize) -> usize {
        (self.history + 1) * self.snapshot_dim() + 3 + n_locations
    }

    /// Allocation fraction used when an agent cannot choose one:
    /// `ceil(L / 2) / L` in every dimension.
    pub fn default_levels(&self) -> Vec<usize> {
        vec![self.alloc_levels.div_ceil(2) - 1; self.alloc_dims]
    }
}
