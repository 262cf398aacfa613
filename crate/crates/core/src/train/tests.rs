use alloc::vec;
use alloc::vec::Vec;

use super::*;

fn tiny(mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { mode, episodes: 3, steps: 20, ..ExperimentConfig::default() };
    cfg.workload.cpu.horizon = 200;
    cfg.seeds.eval = vec![7, 8];
    cfg.forecast = ForecastConfig {
        history_window: 8,
        horizon: 2,
        conv_channels: 4,
        kernel_width: 3,
        lstm_hidden: 6,
        train_epochs: 2,
        ..ForecastConfig::default()
    };
    cfg.agent = AgentConfig { hidden: vec![16], learn_start: 10, batch_size: 8, buffer_capacity: 100, ..AgentConfig::default() };
    cfg
}

fn quiet() -> impl FnMut(&EpisodeRecord) {
    |_: &EpisodeRecord| {}
}

fn record(reward: f64, cost: f64) -> EpisodeRecord {
    EpisodeRecord {
        episode: 0,
        reward,
        latency: 1.0,
        energy: 1.0,
        cost,
        throughput: 0.5,
        utilization: 0.4,
        makespan: 2.0,
        epsilon: 0.0,
        td_loss: None,
        steps: 10,
        completed: 5,
        dropped: 0,
        violations: 0,
    }
}

fn report(mode: Mode, runs: Vec<(u64, EpisodeRecord)>) -> TrainingReport {
    TrainingReport {
        mode,
        episodes: Vec::new(),
        evaluation: MetricTable::from_runs(runs).unwrap(),
        forecaster_curve: None,
        env: EnvConfig::default(),
        workload: WorkloadConfig::default(),
    }
}

#[test]
fn single_step_run() {
    let cfg = ExperimentConfig { episodes: 1, steps: 1, ..tiny(Mode::Hybrid) };
    let out = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
    assert_eq!(out.report.episodes.len(), 1);
    assert_eq!(out.report.episodes[0].steps, 1);
    assert_eq!(out.agent.buffer().len(), 1);
    assert!(out.report.forecaster_curve.is_some());
}

#[test]
fn runs_are_deterministic() {
    for mode in [Mode::Baseline, Mode::Hybrid] {
        let cfg = tiny(mode);
        let a = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
        let b = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.agent.networks().online.params(), b.agent.networks().online.params());
    }
}

#[test]
fn baseline_dimensions() {
    let cfg = tiny(Mode::Baseline);
    let out = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
    let raw = cfg.env_config().raw_state_dim(cfg.n_locations());
    assert_eq!(out.agent.state_dim(), raw);
    assert_eq!(out.agent.n_actions(), cfg.env.n_nodes());
    assert!(out.forecaster.is_none());

    let hybrid = tiny(Mode::Hybrid);
    assert_eq!(hybrid.state_dim(Mode::Hybrid), raw + 2 * 3);
    assert_eq!(hybrid.action_space(Mode::Hybrid).unwrap().len(), 4 * 4);
}

#[test]
fn hybrid_states_decompose_into_raw_and_forecast() {
    let cfg = tiny(Mode::Hybrid);
    let out = train(&cfg, TrainOptions { audit: true }, &mut quiet()).unwrap();
    let f = out.forecaster.as_ref().unwrap();
    assert_eq!(out.audit.len(), cfg.episodes * cfg.steps);
    let all: Vec<&AuditEntry> = out.audit.iter().collect();
    let summary = verify_audit(&all, &out.audit, f).unwrap();
    assert!(summary.passed(), "{summary:?}");
    assert_eq!(summary.checked, 60);

    let mut broken = out.audit.clone();
    broken[5].transition.state[0] += 1.0;
    let last = broken[7].transition.state.len() - 1;
    broken[7].transition.state[last] += 1.0;
    let refs: Vec<&AuditEntry> = broken.iter().collect();
    let s = verify_audit(&refs, &broken, f).unwrap();
    assert_eq!((s.prefix_failures, s.suffix_failures), (1, 1));
    assert_eq!(s.chain_failures, 2);
}

#[test]
fn episode_metrics_account_for_every_step() {
    let cfg = tiny(Mode::Baseline);
    let out = train(&cfg, TrainOptions { audit: true }, &mut quiet()).unwrap();
    for (e, rec) in out.report.episodes.iter().enumerate() {
        let sum: f64 = out.audit.iter().filter(|a| a.episode == e).map(|a| a.transition.reward).sum();
        assert_eq!(rec.reward, sum);
        assert_eq!(rec.throughput * cfg.steps as f64, rec.completed as f64);
    }
}

#[test]
fn observer_sees_every_episode() {
    let cfg = tiny(Mode::Baseline);
    let mut seen = Vec::new();
    let out = train(&cfg, TrainOptions::default(), &mut |r: &EpisodeRecord| seen.push(r.clone())).unwrap();
    assert_eq!(seen, out.report.episodes);
    let eps = out.report.epsilon_trace();
    assert_eq!(eps[0], 1.0);
    assert!(eps.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn evaluation_properties() {
    let cfg = tiny(Mode::Baseline);
    let out = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
    let policy = out.agent.policy();
    let one = evaluate(&policy, None, &cfg, Mode::Baseline, &[7]).unwrap();
    assert!(one.metrics.iter().all(|m| m.std == 0.0));
    let a = evaluate(&policy, None, &cfg, Mode::Baseline, &[9, 7, 8]).unwrap();
    let b = evaluate(&policy, None, &cfg, Mode::Baseline, &[8, 9, 7]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.seeds, vec![7, 8, 9]);
    assert!(a.metrics.iter().all(|m| m.std >= 0.0));
}

#[test]
fn evaluation_rejects_mismatched_policy() {
    let cfg = tiny(Mode::Baseline);
    let out = train(&cfg, TrainOptions::default(), &mut quiet()).unwrap();
    let policy = out.agent.policy();
    let other = ExperimentConfig { env: EnvConfig { history: 1, ..cfg.env.clone() }, ..cfg.clone() };
    assert!(matches!(evaluate(&policy, None, &other, Mode::Baseline, &[1]), Err(Error::Shape { .. })));
}

#[test]
fn mode_mismatch_is_rejected() {
    let cfg = tiny(Mode::Hybrid);
    assert!(matches!(train_baseline(&cfg, TrainOptions::default(), &mut quiet()), Err(Error::Usage(_))));
}

#[test]
fn validation_names_fields() {
    let mut cfg = tiny(Mode::Hybrid);
    cfg.forecast.input_channels = 5;
    assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { field: "forecast.input_channels", .. })));
    let cfg = ExperimentConfig { episodes: 0, ..tiny(Mode::Hybrid) };
    assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { field: "episodes", .. })));
    let mut cfg = tiny(Mode::Hybrid);
    cfg.agent.gamma = 1.5;
    assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { field: "agent.gamma", .. })));
}

#[test]
fn identical_reports_tie_everywhere() {
    let r = report(Mode::Baseline, vec![(1, record(-5.0, 1.0)), (2, record(-4.0, 2.0))]);
    let s = compare(&r, &r).unwrap();
    assert_eq!(s.rows.len(), Metric::ALL.len());
    assert!(s.rows.iter().all(|row| row.direction == Direction::Tie));
}

#[test]
fn comparison_flags_follow_metric_direction() {
    let base = report(Mode::Baseline, vec![(1, record(-10.0, 2.0))]);
    let mut better = record(-4.0, 0.5);
    better.throughput = 0.25;
    better.makespan = 1.0;
    let hyb = report(Mode::Hybrid, vec![(1, better)]);
    let s = compare(&base, &hyb).unwrap();
    assert_eq!(s.row(Metric::TotalReward).direction, Direction::HybridBetter);
    assert_eq!(s.row(Metric::Cost).direction, Direction::HybridBetter);
    assert_eq!(s.row(Metric::Makespan).direction, Direction::HybridBetter);
    assert_eq!(s.row(Metric::Throughput).direction, Direction::HybridWorse);
    assert_eq!(s.row(Metric::Energy).direction, Direction::Tie);

    let table = s.render();
    for m in Metric::ALL {
        assert!(table.contains(m.label()));
    }
    let widths: Vec<usize> = table.lines().map(|l| l.chars().count()).collect();
    assert!(widths.windows(2).all(|w| w[0] == w[1]), "{table}");
}

#[test]
fn comparison_requires_shared_seeds_and_settings() {
    let base = report(Mode::Baseline, vec![(1, record(-1.0, 1.0))]);
    let hyb = report(Mode::Hybrid, vec![(2, record(-1.0, 1.0))]);
    assert!(matches!(compare(&base, &hyb), Err(Error::Comparison(_))));
    let mut hyb = report(Mode::Hybrid, vec![(1, record(-1.0, 1.0))]);
    hyb.env.history = 1;
    assert!(matches!(compare(&base, &hyb), Err(Error::Comparison(_))));
}

#[test]
fn population_std() {
    let t = MetricTable::from_runs(vec![(1, record(-1.0, 1.0)), (2, record(-3.0, 3.0))]).unwrap();
    assert_eq!(t.get(Metric::TotalReward).mean, -2.0);
    assert_eq!(t.get(Metric::TotalReward).std, 1.0);
    assert_eq!(t.get(Metric::Cost).std, 1.0);
}

#[test]
fn seed_override_derives_distinct_streams() {
    let s = Seeds::from_base(42, 5);
    assert_eq!(s, Seeds::from_base(42, 5));
    let mut all = vec![s.workload, s.env, s.agent, s.forecast];
    all.extend(&s.eval);
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), 9);
}
