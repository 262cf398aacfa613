use alloc::vec;
use alloc::sync::Arc;

use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::workload::{compose, TaskArrival, WorkloadConfig, WorkloadTrace};

fn flat_trace(horizon: usize, bg: f64, congestion: f64, arrivals: Vec<TaskArrival>) -> Arc<WorkloadTrace> {
    Arc::new(compose(vec![vec![bg; horizon]], vec![congestion; horizon], arrivals).unwrap())
}

fn task(at: usize, work: f64, data: f64, deadline: f64) -> TaskArrival {
    TaskArrival { arrival_time: at, location: 0, work, data_size: data, sla_deadline: deadline }
}

fn small_config() -> EnvConfig {
    EnvConfig { episode_steps: 20, context: 0, ..EnvConfig::default() }
}

/// Runs actions until the single task completes; returns its latency.
fn single_task_latency(cfg: EnvConfig, trace: Arc<WorkloadTrace>, action: HybridAction) -> f64 {
    let mut env = EdgeCloudEnv::new(cfg, 1).unwrap();
    env.reset_at(trace, 0).unwrap();
    loop {
        let out = env.step(&action).unwrap();
        if out.breakdown.completed == 1 {
            return out.breakdown.latency;
        }
        assert!(!out.done, "task never completed");
    }
}

#[test]
fn reset_is_deterministic() {
    let cfg = EnvConfig::default();
    let trace = Arc::new(WorkloadConfig::default().generate(1).unwrap());
    let mut a = EdgeCloudEnv::new(cfg.clone(), 2).unwrap();
    let mut b = EdgeCloudEnv::new(cfg, 2).unwrap();
    assert_eq!(a.reset(trace.clone(), 17).unwrap(), b.reset(trace, 17).unwrap());
    assert_eq!(a.start(), b.start());
}

#[test]
fn zero_load_trace_observes_zeros() {
    let mut env = EdgeCloudEnv::new(small_config(), 1).unwrap();
    let s = env.reset_at(flat_trace(30, 0.0, 0.0, Vec::new()), 0).unwrap();
    assert!(s.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn state_dim_matches_formula() {
    for (history, locations) in [(0, 1), (2, 1), (4, 2), (3, 3)] {
        let cfg = EnvConfig { history, ..small_config() };
        let expected = (history + 1) * (3 * cfg.n_nodes() + 1) + 3 + locations;
        let trace = Arc::new(
            compose(vec![vec![0.2; 30]; locations], vec![0.1; 30], vec![TaskArrival { location: locations - 1, ..task(0, 1.0, 1.0, 5.0) }])
                .unwrap(),
        );
        let mut env = EdgeCloudEnv::new(cfg, locations).unwrap();
        assert_eq!(env.state_dim(), expected);
        let mut s = env.reset_at(trace, 0).unwrap();
        assert_eq!(s.len(), expected);
        for _ in 0..5 {
            s = env.step(&HybridAction::new(1, vec![3])).unwrap().next_state;
            assert_eq!(s.len(), expected);
        }
    }
}

#[test]
fn local_latency_is_pure_processing() {
    // capacity 1, alloc 1/2, work 3 => 6 timesteps
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 3.0, 1.0, 50.0)]);
    let l = single_task_latency(small_config(), trace, HybridAction::new(0, vec![1]));
    assert!((l - 3.0 / (0.5 * 1.0)).abs() < 1e-12, "latency {l}");
}

#[test]
fn open_spans_count_unfinished_tasks() {
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 30.0, 1.0, 100.0), task(2, 30.0, 1.0, 100.0)]);
    let mut env = EdgeCloudEnv::new(small_config(), 1).unwrap();
    env.reset_at(trace, 0).unwrap();
    assert_eq!(env.open_spans(), (0.0, 1));
    for _ in 0..4 {
        env.step(&HybridAction::new(0, vec![1])).unwrap();
    }
    assert_eq!(env.open_spans(), (4.0 + 2.0, 2));
}

#[test]
fn hand_simulated_edge_task() {
    // capacity 2, work 4, alloc 1, data 1, link 1, congestion 0 => 1 + 0 + 2
    let mut cfg = small_config();
    cfg.nodes[1].cpu_capacity = 2.0;
    cfg.nodes[1].link_latency = 1.0;
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 4.0, 1.0, 50.0)]);
    let l = single_task_latency(cfg, trace, HybridAction::new(1, vec![3]));
    assert!((l - 3.0).abs() < 1e-12, "latency {l}");
}

#[test]
fn congestion_and_background_slow_edge_tasks() {
    let mut cfg = small_config();
    cfg.nodes[1].cpu_capacity = 2.0;
    cfg.nodes[1].link_latency = 1.0;
    // transfer 1 * 1 * (1 + 0.5) = 1.5, processing 4 / (2 * (1 - 0.5)) = 4
    let trace = flat_trace(30, 0.5, 0.5, vec![task(0, 4.0, 1.0, 50.0)]);
    let l = single_task_latency(cfg, trace, HybridAction::new(1, vec![3]));
    assert!((l - 5.5).abs() < 1e-12, "latency {l}");
}

#[test]
fn larger_allocation_never_slower() {
    let trace = flat_trace(40, 0.3, 0.2, vec![task(0, 5.0, 1.5, 50.0)]);
    for target in 0..4 {
        let lat: Vec<f64> = (0..4)
            .map(|level| single_task_latency(EnvConfig { episode_steps: 40, ..small_config() }, trace.clone(), HybridAction::new(target, vec![level])))
            .collect();
        assert!(lat.windows(2).all(|w| w[1] <= w[0]), "target {target}: {lat:?}");
    }
}

#[test]
fn step_errors() {
    let mut env = EdgeCloudEnv::new(EnvConfig { episode_steps: 2, ..small_config() }, 1).unwrap();
    assert!(matches!(env.step(&HybridAction::new(0, vec![0])), Err(Error::State(_))));
    env.reset_at(flat_trace(10, 0.0, 0.0, Vec::new()), 0).unwrap();
    assert!(matches!(env.step(&HybridAction::new(4, vec![0])), Err(Error::InvalidAction(_))));
    assert!(!env.step(&HybridAction::new(0, vec![0])).unwrap().done);
    assert!(env.step(&HybridAction::new(0, vec![0])).unwrap().done);
    assert!(matches!(env.step(&HybridAction::new(0, vec![0])), Err(Error::State(_))));
}

#[test]
fn expired_waiting_task_is_dropped_with_violation() {
    // a huge task blocks the local node; the second one can never start in time
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 50.0, 0.0, 100.0), task(1, 1.0, 0.0, 2.0)]);
    let mut env = EdgeCloudEnv::new(small_config(), 1).unwrap();
    env.reset_at(trace, 0).unwrap();
    let a = HybridAction::new(0, vec![3]);
    env.step(&a).unwrap();
    let mut dropped = 0;
    for _ in 0..3 {
        let out = env.step(&a).unwrap();
        dropped += out.breakdown.dropped;
        if out.breakdown.dropped > 0 {
            assert!(out.breakdown.sla_violated);
        }
    }
    assert_eq!(dropped, 1);
    assert_eq!(env.ledger().dropped, 1.0);
    assert!(env.ledger().imbalance().abs() < 1e-9);
}

#[test]
fn late_completion_is_a_violation() {
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 3.0, 0.0, 2.0)]);
    let mut env = EdgeCloudEnv::new(small_config(), 1).unwrap();
    env.reset_at(trace, 0).unwrap();
    let a = HybridAction::new(0, vec![3]);
    let outs: Vec<_> = (0..3).map(|_| env.step(&a).unwrap()).collect();
    assert_eq!(outs[2].breakdown.completed, 1);
    assert!(outs[2].breakdown.sla_violated);
    assert!(!outs[0].breakdown.sla_violated);
}

#[test]
fn energy_and_cost_follow_linear_models() {
    let cfg = small_config();
    let trace = flat_trace(30, 0.0, 0.0, vec![task(0, 2.0, 0.0, 50.0)]);
    let mut env = EdgeCloudEnv::new(cfg.clone(), 1).unwrap();
    env.reset_at(trace, 0).unwrap();
    let cloud = cfg.nodes.len() - 1;
    let out = env.step(&HybridAction::new(cloud, vec![3])).unwrap();
    let idle: f64 = cfg.nodes.iter().map(|n| n.energy_idle).sum();
    // zero data => no transfer; all 2 units of work done within the step
    assert!((out.breakdown.energy - (idle + 2.0 * cfg.nodes[cloud].energy_per_work)).abs() < 1e-12);
    assert!((out.breakdown.cost - 2.0 * cfg.nodes[cloud].cost_per_work).abs() < 1e-12);
}

#[test]
fn remote_edge_pays_extra_hop() {
    let mut cfg = small_config();
    cfg.nodes[1].link_latency = 1.0;
    cfg.nodes[2].link_latency = 1.0;
    let trace = Arc::new(compose(vec![vec![0.0; 30]; 2], vec![0.0; 30], vec![task(0, 1.0, 1.0, 50.0)]).unwrap());
    let run = |target| {
        let mut env = EdgeCloudEnv::new(cfg.clone(), 2).unwrap();
        env.reset_at(trace.clone(), 0).unwrap();
        loop {
            let out = env.step(&HybridAction::new(target, vec![3])).unwrap();
            if out.breakdown.completed == 1 {
                return out.breakdown.latency;
            }
        }
    };
    // edge 1 serves location 0, edge 2 serves location 1
    let near = run(1);
    let far = run(2);
    assert!((far - near - 1.0).abs() < 1e-12, "near {near} far {far}");
}

fn random_episode(seed: u64, cfg: &EnvConfig) -> Vec<(StepOutcome, WorkLedger)> {
    let trace = Arc::new(WorkloadConfig::default().generate(seed).unwrap());
    let mut env = EdgeCloudEnv::new(cfg.clone(), 2).unwrap();
    env.reset(trace, seed).unwrap();
    let space = env.action_space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while !env.is_done() {
        let a = space.decode(rng.random_range(0..space.len())).unwrap();
        let o = env.step(&a).unwrap();
        out.push((o, env.ledger()));
    }
    out
}

#[test]
fn trajectories_are_deterministic() {
    let cfg = EnvConfig { episode_steps: 60, ..EnvConfig::default() };
    let a = random_episode(3, &cfg);
    let b = random_episode(3, &cfg);
    assert_eq!(a.len(), 60);
    assert!(a.iter().zip(&b).all(|(x, y)| x.0 == y.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reward_recomputable_and_bounded(seed in any::<u64>()) {
        let cfg = EnvConfig { episode_steps: 80, ..EnvConfig::default() };
        let worst = cfg.reward.worst_reward();
        for (o, _) in random_episode(seed, &cfg) {
            prop_assert_eq!(o.reward, compute_reward(&o.breakdown, &cfg.reward).unwrap());
            prop_assert!(o.reward <= 0.0 && o.reward >= worst);
        }
    }

    #[test]
    fn work_is_conserved(seed in any::<u64>()) {
        let cfg = EnvConfig { episode_steps: 80, ..EnvConfig::default() };
        for (_, ledger) in random_episode(seed, &cfg) {
            prop_assert!(ledger.imbalance().abs() <= 1e-9 * (1.0 + ledger.arrived));
            prop_assert!(ledger.in_system >= -1e-9);
        }
    }

    #[test]
    fn observations_are_finite_and_utilisations_bounded(seed in any::<u64>()) {
        let cfg = EnvConfig { episode_steps: 40, ..EnvConfig::default() };
        let n = cfg.n_nodes();
        for (o, _) in random_episode(seed, &cfg) {
            let s = o.next_state.as_slice();
            prop_assert!(s.iter().all(|v| v.is_finite()));
            prop_assert!(s[..2 * n].iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
