use serde::{Deserialize, Serialize};

use super::config::{MetricBounds, RewardWeights};
use crate::error::{Error, Result};

/// Per-step measurements behind one reward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepBreakdown {
    /// Mean latency of the tasks that completed this step (0 if none did).
    pub latency: f64,
    pub energy: f64,
    pub cost: f64,
    pub sla_violated: bool,
    /// Tasks completed this step.
    pub completed: usize,
    /// Tasks dropped after their deadline expired while waiting.
    pub dropped: usize,
    /// Mean CPU utilisation across nodes at the end of the step.
    pub utilization: f64,
    /// Sum of completion - arrival over the tasks completed this step.
    pub makespan: f64,
}

/// `clip((x - min) / (max - min), 0, 1)`
pub fn normalize(x: f64, min: f64, max: f64) -> Result<f64> {
    MetricBounds::new(min, max)?;
    if !x.is_finite() {
        return Err(Error::Numeric(alloc::format!("cannot normalise {x}")));
    }
    Ok(((x - min) / (max - min)).clamp(0.0, 1.0))
}

/// `-(w_L N(L) + w_E N(E) + w_C N(C) + w_V P_SLA [violated])`
pub fn compute_reward(b: &StepBreakdown, w: &RewardWeights) -> Result<f64> {
    let nl = normalize(b.latency, w.latency_bounds.min, w.latency_bounds.max)?;
    let ne = normalize(b.energy, w.energy_bounds.min, w.energy_bounds.max)?;
    let nc = normalize(b.cost, w.cost_bounds.min, w.cost_bounds.max)?;
    let violation = if b.sla_violated { w.sla_penalty } else { 0.0 };
    Ok(-(w.w_latency * nl + w.w_energy * ne + w.w_cost * nc + w.w_violation * violation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_weights() -> RewardWeights {
        RewardWeights {
            w_latency: 1.0,
            w_energy: 1.0,
            w_cost: 1.0,
            w_violation: 1.0,
            sla_penalty: 10.0,
            latency_bounds: MetricBounds { min: 1.0, max: 11.0 },
            energy_bounds: MetricBounds { min: 0.5, max: 2.5 },
            cost_bounds: MetricBounds { min: 0.0, max: 4.0 },
        }
    }

    #[test]
    fn normalize_endpoints_and_midpoint() {
        assert_eq!(normalize(2.0, 2.0, 12.0).unwrap(), 0.0);
        assert_eq!(normalize(12.0, 2.0, 12.0).unwrap(), 1.0);
        assert_eq!(normalize(7.0, 2.0, 12.0).unwrap(), 0.5);
        assert_eq!(normalize(-5.0, 2.0, 12.0).unwrap(), 0.0);
        assert_eq!(normalize(50.0, 2.0, 12.0).unwrap(), 1.0);
    }

    #[test]
    fn normalize_rejects_bad_bounds() {
        assert!(matches!(normalize(1.0, 3.0, 3.0), Err(Error::InvalidBounds { .. })));
        assert!(matches!(normalize(1.0, 4.0, 3.0), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn reward_at_minimum_bounds_is_zero() {
        let w = unit_weights();
        let b = StepBreakdown { latency: 1.0, energy: 0.5, cost: 0.0, ..StepBreakdown::default() };
        assert_eq!(compute_reward(&b, &w).unwrap(), 0.0);
    }

    #[test]
    fn reward_at_maximum_bounds_with_violation() {
        let w = unit_weights();
        let b = StepBreakdown { latency: 11.0, energy: 2.5, cost: 4.0, sla_violated: true, ..StepBreakdown::default() };
        assert_eq!(compute_reward(&b, &w).unwrap(), -13.0);
        assert_eq!(w.worst_reward(), -13.0);
    }

    #[test]
    fn weighted_sum_example() {
        // N(L) = 0.4, N(E) = 0.2, N(C) = 0.5 with unit-interval bounds
        let w = RewardWeights {
            w_latency: 0.5,
            w_energy: 0.3,
            w_cost: 0.2,
            w_violation: 1.0,
            sla_penalty: 10.0,
            latency_bounds: MetricBounds { min: 0.0, max: 1.0 },
            energy_bounds: MetricBounds { min: 0.0, max: 1.0 },
            cost_bounds: MetricBounds { min: 0.0, max: 1.0 },
        };
        let b = StepBreakdown { latency: 0.4, energy: 0.2, cost: 0.5, ..StepBreakdown::default() };
        let oracle = -(0.5 * 0.4 + 0.3 * 0.2 + 0.2 * 0.5);
        let r = compute_reward(&b, &w).unwrap();
        assert_eq!(r, oracle);
        assert!((r + 0.36).abs() < 1e-15);
    }

    #[test]
    fn non_finite_metric_is_rejected() {
        let b = StepBreakdown { latency: f64::NAN, ..StepBreakdown::default() };
        assert!(matches!(compute_reward(&b, &unit_weights()), Err(Error::Numeric(_))));
    }
}
