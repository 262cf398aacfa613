//! End-to-end experiment driver: forecaster pretraining, DDQN training in
//! baseline (raw state, target-only actions) or hybrid (lookahead state,
//! target plus allocation) mode, greedy evaluation and comparison.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, DdqnAgent, GreedyPolicy, Transition};
use crate::env::{ActionSpace, EdgeCloudEnv, EnvConfig, HybridAction, RawState, StepOutcome};
use crate::error::{Error, Result};
use crate::forecast::{self, ForecastConfig, Forecaster, LossCurve};
use crate::seed::derive_seed;
use crate::workload::{WorkloadConfig, WorkloadTrace};

const PRETRAIN_STREAM: u64 = 0x7072_6574;
const EVAL_STREAM: u64 = 0x6576_616c;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Hybrid,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Hybrid => "hybrid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub workload: u64,
    pub env: u64,
    pub agent: u64,
    pub forecast: u64,
    pub eval: Vec<u64>,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { workload: 1, env: 2, agent: 3, forecast: 4, eval: vec![101, 102, 103, 104, 105] }
    }
}

impl Seeds {
    /// Every named seed derived from one base value.
    pub fn from_base(base: u64, n_eval: usize) -> Self {
        Self {
            workload: derive_seed(base, 1),
            env: derive_seed(base, 2),
            agent: derive_seed(base, 3),
            forecast: derive_seed(base, 4),
            eval: (0..n_eval as u64).map(|i| derive_seed(base, 100 + i)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Training episodes `M`.
    pub episodes: usize,
    /// Steps per episode `T`.
    pub steps: usize,
    pub seeds: Seeds,
    pub workload: WorkloadConfig,
    pub env: EnvConfig,
    pub forecast: ForecastConfig,
    pub agent: AgentConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hybrid,
            episodes: 300,
            steps: 200,
            seeds: Seeds::default(),
            workload: WorkloadConfig::default(),
            env: EnvConfig::default(),
            forecast: ForecastConfig::default(),
            agent: AgentConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::invalid("episodes", "must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.seeds.eval.is_empty() {
            return Err(Error::invalid("seeds.eval", "need at least one evaluation seed"));
        }
        self.workload.validate()?;
        self.env_config().validate()?;
        self.agent.validate()?;
        self.forecast.validate()?;
        if self.steps > self.workload.cpu.horizon {
            return Err(Error::invalid("steps", "episode longer than the workload horizon"));
        }
        if self.forecast.input_channels != self.workload.mobility.n_locations + 1 {
            return Err(Error::invalid("forecast.input_channels", "must equal workload.mobility.n_locations + 1"));
        }
        if self.mode == Mode::Hybrid && self.workload.cpu.horizon < self.forecast.history_window + self.forecast.horizon {
            return Err(Error::invalid("forecast.history_window", "pretraining trace shorter than one sample"));
        }
        Ok(())
    }

    /// Environment settings with `T` applied.
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig { episode_steps: self.steps, ..self.env.clone() }
    }

    pub fn forecast_config(&self) -> ForecastConfig {
        ForecastConfig { seed: self.seeds.forecast, ..self.forecast.clone() }
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig { seed: self.seeds.agent, ..self.agent.clone() }
    }

    /// Decay constant, defaulting to `M * T / 5`.
    pub fn epsilon_decay(&self) -> f64 {
        self.agent.epsilon_decay.unwrap_or((self.episodes * self.steps) as f64 / 5.0).max(f64::MIN_POSITIVE)
    }

    pub fn n_locations(&self) -> usize {
        self.workload.mobility.n_locations
    }

    /// Action space used by `mode`.
    pub fn action_space(&self, mode: Mode) -> Result<ActionSpace> {
        let env = self.env_config();
        match mode {
            Mode::Hybrid => ActionSpace::new(env.n_nodes(), env.alloc_dims, env.alloc_levels),
            Mode::Baseline => ActionSpace::new(env.n_nodes(), 0, env.alloc_levels),
        }
    }

    /// Agent input width for `mode`.
    pub fn state_dim(&self, mode: Mode) -> usize {
        let raw = self.env_config().raw_state_dim(self.n_locations());
        match mode {
            Mode::Baseline => raw,
            Mode::Hybrid => raw + self.forecast.output_len(),
        }
    }

    pub fn training_trace(&self) -> Result<WorkloadTrace> {
        self.workload.generate(self.seeds.workload)
    }

    /// History trace for forecaster pretraining, from a seed disjoint from
    /// the training and evaluation traces.
    pub fn pretrain_trace(&self) -> Result<WorkloadTrace> {
        self.workload.generate(derive_seed(self.seeds.workload, PRETRAIN_STREAM))
    }

    pub fn eval_trace(&self, seed: u64) -> Result<WorkloadTrace> {
        self.workload.generate(derive_seed(seed, EVAL_STREAM))
    }
}

/// Per-episode metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Sum of step rewards.
    pub reward: f64,
    /// Mean over steps of the step latency seen by the reward.
    pub latency: f64,
    pub energy: f64,
    pub cost: f64,
    /// Completed tasks per step.
    pub throughput: f64,
    pub utilization: f64,
    /// Mean completion minus arrival. Tasks still open at the end count their span so far.
    pub makespan: f64,
    pub epsilon: f64,
    /// Mean TD loss over the episode's gradient updates.
    pub td_loss: Option<f64>,
    pub steps: usize,
    pub completed: usize,
    pub dropped: usize,
    pub violations: usize,
}

#[derive(Default)]
struct Accumulator {
    reward: f64,
    latency: f64,
    energy: f64,
    cost: f64,
    utilization: f64,
    spans: f64,
    open: usize,
    steps: usize,
    completed: usize,
    dropped: usize,
    violations: usize,
    loss: f64,
    updates: usize,
}

impl Accumulator {
    fn add(&mut self, out: &StepOutcome) {
        let b = &out.breakdown;
        self.reward += out.reward;
        self.latency += b.latency;
        self.energy += b.energy;
        self.cost += b.cost;
        self.utilization += b.utilization;
        self.spans += b.makespan;
        self.completed += b.completed;
        self.dropped += b.dropped;
        self.violations += b.sla_violated as usize;
        self.steps += 1;
    }

    fn close(&mut self, env: &EdgeCloudEnv) {
        let (spans, count) = env.open_spans();
        self.spans += spans;
        self.open = count;
    }

    fn finish(self, episode: usize, epsilon: f64) -> EpisodeRecord {
        let t = self.steps.max(1) as f64;
        EpisodeRecord {
            episode,
            reward: self.reward,
            latency: self.latency / t,
            energy: self.energy / t,
            cost: self.cost / t,
            throughput: self.completed as f64 / t,
            utilization: self.utilization / t,
            makespan: match self.completed + self.open {
                0 => 0.0,
                n => self.spans / n as f64,
            },
            epsilon,
            td_loss: (self.updates > 0).then(|| self.loss / self.updates as f64),
            steps: self.steps,
            completed: self.completed,
            dropped: self.dropped,
            violations: self.violations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TotalReward,
    Latency,
    Energy,
    Cost,
    Throughput,
    Utilization,
    Makespan,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::TotalReward,
        Metric::Latency,
        Metric::Energy,
        Metric::Cost,
        Metric::Throughput,
        Metric::Utilization,
        Metric::Makespan,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::TotalReward => "Total Reward",
            Metric::Latency => "Avg. Latency",
            Metric::Energy => "Avg. Energy",
            Metric::Cost => "Avg. Cost",
            Metric::Throughput => "Avg. Throughput",
            Metric::Utilization => "Avg. Utilization",
            Metric::Makespan => "Avg. Makespan",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::TotalReward | Metric::Throughput | Metric::Utilization)
    }

    pub fn of(self, r: &EpisodeRecord) -> f64 {
        match self {
            Metric::TotalReward => r.reward,
            Metric::Latency => r.latency,
            Metric::Energy => r.energy,
            Metric::Cost => r.cost,
            Metric::Throughput => r.throughput,
            Metric::Utilization => r.utilization,
            Metric::Makespan => r.makespan,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub metric: Metric,
    pub mean: f64,
    /// Population standard deviation over evaluation seeds.
    pub std: f64,
}

/// Greedy-policy results over a set of evaluation seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub seeds: Vec<u64>,
    pub episodes: Vec<EpisodeRecord>,
    pub metrics: Vec<MetricStat>,
}

impl MetricTable {
    /// Aggregates `(seed, record)` pairs; input order does not matter.
    pub fn from_runs(mut runs: Vec<(u64, EpisodeRecord)>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InsufficientData { needed: 1, available: 0 });
        }
        runs.sort_by_key(|(seed, _)| *seed);
        let n = runs.len() as f64;
        let metrics = Metric::ALL
            .iter()
            .map(|&metric| {
                let mean = runs.iter().map(|(_, r)| metric.of(r)).sum::<f64>() / n;
                let var = runs.iter().map(|(_, r)| (metric.of(r) - mean) * (metric.of(r) - mean)).sum::<f64>() / n;
                MetricStat { metric, mean, std: libm::sqrt(var) }
            })
            .collect();
        let (seeds, episodes) = runs.into_iter().unzip();
        Ok(Self { seeds, episodes, metrics })
    }

    pub fn get(&self, metric: Metric) -> MetricStat {
        self.metrics.iter().copied().find(|m| m.metric == metric).expect("every metric is tabulated")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub mode: Mode,
    pub episodes: Vec<EpisodeRecord>,
    pub evaluation: MetricTable,
    pub forecaster_curve: Option<LossCurve>,
    pub env: EnvConfig,
    pub workload: WorkloadConfig,
}

impl TrainingReport {
    pub fn epsilon_trace(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.epsilon).collect()
    }

    /// Mean total reward over the first and last `window` episodes.
    pub fn learning_curve_ends(&self, window: usize) -> (f64, f64) {
        let w = window.min(self.episodes.len()).max(1);
        let mean = |xs: &[EpisodeRecord]| xs.iter().map(|e| e.reward).sum::<f64>() / xs.len().max(1) as f64;
        (mean(&self.episodes[..w]), mean(&self.episodes[self.episodes.len().saturating_sub(w)..]))
    }
}

/// Everything needed to rebuild a transition's agent state.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub episode: usize,
    pub step: usize,
    pub raw: Vec<f64>,
    pub window: Vec<f64>,
    pub next_raw: Vec<f64>,
    pub next_window: Vec<f64>,
    pub transition: Transition,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub checked: usize,
    pub prefix_failures: usize,
    pub suffix_failures: usize,
    /// Consecutive transitions within an episode whose `s'` and `s` differ.
    pub chain_failures: usize,
}

impl AuditSummary {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.prefix_failures + self.suffix_failures + self.chain_failures == 0
    }
}

/// Rechecks the given audit entries: each state must be the raw state
/// followed by the forecaster's output on the logged window.
pub fn verify_audit(entries: &[&AuditEntry], all: &[AuditEntry], forecaster: &Forecaster) -> Result<AuditSummary> {
    let mut s = AuditSummary::default();
    for e in entries {
        s.checked += 1;
        let t = &e.transition;
        for (state, raw, window) in [(&t.state, &e.raw, &e.window), (&t.next_state, &e.next_raw, &e.next_window)] {
            if state.len() < raw.len() || state[..raw.len()] != raw[..] {
                s.prefix_failures += 1;
                continue;
            }
            if state[raw.len()..] != forecaster.forecast(window)?.values[..] {
                s.suffix_failures += 1;
            }
        }
    }
    for pair in all.windows(2) {
        if pair[0].episode == pair[1].episode && pair[0].transition.next_state != pair[1].transition.state {
            s.chain_failures += 1;
        }
    }
    Ok(s)
}

/// Outcome of a full training run.
pub struct TrainingOutcome {
    pub report: TrainingReport,
    pub agent: DdqnAgent,
    pub forecaster: Option<Forecaster>,
    pub audit: Vec<AuditEntry>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TrainOptions {
    /// Keep an [`AuditEntry`] for every stored transition.
    pub audit: bool,
}

/// Pretrains the forecaster on the history trace.
pub fn pretrain_forecaster(cfg: &ExperimentConfig) -> Result<(Forecaster, LossCurve)> {
    cfg.validate()?;
    let fc = cfg.forecast_config();
    let dataset = forecast::build_dataset(&cfg.pretrain_trace()?, &fc)?;
    let trained = forecast::pretrain(&dataset, &fc)?;
    Ok((Forecaster::new(fc, trained.network)?, trained.curve))
}

/// Turns raw observations and flat action indices into what one mode uses.
struct Policy<'a> {
    space: ActionSpace,
    default_levels: Vec<usize>,
    forecaster: Option<&'a Forecaster>,
}

impl<'a> Policy<'a> {
    fn new(cfg: &ExperimentConfig, mode: Mode, forecaster: Option<&'a Forecaster>) -> Result<Self> {
        match (mode, forecaster) {
            (Mode::Hybrid, None) => return Err(Error::Usage("hybrid mode needs a forecaster".into())),
            (Mode::Baseline, Some(_)) => return Err(Error::Usage("baseline mode takes no forecaster".into())),
            _ => {}
        }
        if let Some(f) = forecaster {
            if f.config.output_len() != cfg.forecast.output_len() || f.config.window_len() != cfg.forecast.window_len() {
                return Err(Error::shape(&[cfg.forecast.output_len()], &[f.config.output_len()]));
            }
        }
        Ok(Self { space: cfg.action_space(mode)?, default_levels: cfg.env_config().default_levels(), forecaster })
    }

    fn state(&self, env: &EdgeCloudEnv, raw: &RawState) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.forecaster {
            None => Ok((raw.as_slice().to_vec(), Vec::new())),
            Some(f) => {
                let window = env.observation_window(f.config.history_window);
                Ok((f.extend(raw, &window)?.into_vec(), window))
            }
        }
    }

    fn action(&self, index: usize) -> Result<HybridAction> {
        let a = self.space.decode(index)?;
        if self.space.alloc_dims == 0 {
            Ok(HybridAction::new(a.target, self.default_levels.clone()))
        } else {
            Ok(a)
        }
    }
}

fn run_training(
    cfg: &ExperimentConfig,
    mode: Mode,
    forecaster: Option<Forecaster>,
    curve: Option<LossCurve>,
    options: TrainOptions,
    observer: &mut dyn FnMut(&EpisodeRecord),
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let policy = Policy::new(cfg, mode, forecaster.as_ref())?;
    let env_cfg = cfg.env_config();
    let mut env = EdgeCloudEnv::new(env_cfg.clone(), cfg.n_locations())?;
    let trace = Arc::new(cfg.training_trace()?);
    let mut agent = DdqnAgent::new(cfg.agent_config(), cfg.state_dim(mode), policy.space.len(), cfg.epsilon_decay())?;
    let mut records = Vec::with_capacity(cfg.episodes);
    let mut audit = Vec::new();
    let mut global_step = 0u64;

    for episode in 0..cfg.episodes {
        let raw = env.reset(trace.clone(), derive_seed(cfg.seeds.env, episode as u64))?;
        let (mut state, mut window) = policy.state(&env, &raw).map_err(|e| e.at(episode, 0))?;
        let mut raw = raw.into_vec();
        let mut acc = Accumulator::default();
        let epsilon = agent.epsilon();
        let mut step = 0;
        while !env.is_done() {
            let ctx = |e: Error| e.at(episode, step);
            let index = agent.act(&state).map_err(ctx)?;
            let out = env.step(&policy.action(index).map_err(ctx)?).map_err(ctx)?;
            let (next_state, next_window) = policy.state(&env, &out.next_state).map_err(ctx)?;
            acc.add(&out);
            // episodes end on a time limit, not in a terminal state
            let t = Transition { state, action: index, reward: out.reward, next_state: next_state.clone(), done: false };
            if options.audit {
                audit.push(AuditEntry {
                    episode,
                    step,
                    raw: core::mem::take(&mut raw),
                    window: core::mem::take(&mut window),
                    next_raw: out.next_state.as_slice().to_vec(),
                    next_window: next_window.clone(),
                    transition: t.clone(),
                });
            }
            agent.store(t).map_err(ctx)?;
            if let Some(loss) = agent.train_step().map_err(ctx)? {
                acc.loss += loss;
                acc.updates += 1;
            }
            state = next_state;
            window = next_window;
            raw = out.next_state.into_vec();
            global_step += 1;
            step += 1;
        }
        acc.close(&env);
        agent.decay_epsilon(global_step);
        let record = acc.finish(episode, epsilon);
        observer(&record);
        records.push(record);
    }

    let evaluation = evaluate(&agent.policy(), forecaster.as_ref(), cfg, mode, &cfg.seeds.eval)?;
    let report = TrainingReport {
        mode,
        episodes: records,
        evaluation,
        forecaster_curve: curve,
        env: env_cfg,
        workload: cfg.workload.clone(),
    };
    Ok(TrainingOutcome { report, agent, forecaster, audit })
}

/// Pretrains the forecaster, then trains the agent on lookahead states.
pub fn train_hybrid(cfg: &ExperimentConfig, options: TrainOptions, observer: &mut dyn FnMut(&EpisodeRecord)) -> Result<TrainingOutcome> {
    let (forecaster, curve) = pretrain_forecaster(cfg)?;
    train_hybrid_with(cfg, forecaster, Some(curve), options, observer)
}

/// Hybrid training with an already pretrained, frozen forecaster.
pub fn train_hybrid_with(
    cfg: &ExperimentConfig,
    forecaster: Forecaster,
    curve: Option<LossCurve>,
    options: TrainOptions,
    observer: &mut dyn FnMut(&EpisodeRecord),
) -> Result<TrainingOutcome> {
    if cfg.mode != Mode::Hybrid {
        return Err(Error::Usage("train_hybrid requires mode = hybrid".into()));
    }
    run_training(cfg, Mode::Hybrid, Some(forecaster), curve, options, observer)
}

/// Trains the reactive agent: raw state, target choice only.
pub fn train_baseline(cfg: &ExperimentConfig, options: TrainOptions, observer: &mut dyn FnMut(&EpisodeRecord)) -> Result<TrainingOutcome> {
    if cfg.mode != Mode::Baseline {
        return Err(Error::Usage("train_baseline requires mode = baseline".into()));
    }
    run_training(cfg, Mode::Baseline, None, None, options, observer)
}

/// Dispatches on `cfg.mode`.
pub fn train(cfg: &ExperimentConfig, options: TrainOptions, observer: &mut dyn FnMut(&EpisodeRecord)) -> Result<TrainingOutcome> {
    match cfg.mode {
        Mode::Hybrid => train_hybrid(cfg, options, observer),
        Mode::Baseline => train_baseline(cfg, options, observer),
    }
}

/// One greedy episode on the evaluation trace of `seed`.
pub fn evaluate_episode(
    policy: &GreedyPolicy,
    forecaster: Option<&Forecaster>,
    cfg: &ExperimentConfig,
    mode: Mode,
    seed: u64,
) -> Result<EpisodeRecord> {
    let p = Policy::new(cfg, mode, forecaster)?;
    let net = &policy.network;
    if net.input_shape() != [cfg.state_dim(mode)] || net.output_shape() != [p.space.len()] {
        return Err(Error::shape(&[cfg.state_dim(mode), p.space.len()], &[net.input_shape()[0], net.output_shape()[0]]));
    }
    let mut env = EdgeCloudEnv::new(cfg.env_config(), cfg.n_locations())?;
    let raw = env.reset(Arc::new(cfg.eval_trace(seed)?), seed)?;
    let (mut state, _) = p.state(&env, &raw)?;
    let mut acc = Accumulator::default();
    let mut step = 0;
    while !env.is_done() {
        let ctx = |e: Error| e.at(0, step);
        let out = env.step(&p.action(policy.act(&state).map_err(ctx)?).map_err(ctx)?).map_err(ctx)?;
        acc.add(&out);
        state = p.state(&env, &out.next_state).map_err(ctx)?.0;
        step += 1;
    }
    acc.close(&env);
    Ok(acc.finish(0, 0.0))
}

/// Greedy evaluation over `seeds`, aggregated per metric.
pub fn evaluate(
    policy: &GreedyPolicy,
    forecaster: Option<&Forecaster>,
    cfg: &ExperimentConfig,
    mode: Mode,
    seeds: &[u64],
) -> Result<MetricTable> {
    let runs = seeds
        .iter()
        .map(|&seed| Ok((seed, evaluate_episode(policy, forecaster, cfg, mode, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    MetricTable::from_runs(runs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HybridBetter,
    HybridWorse,
    Tie,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: Metric,
    pub baseline: MetricStat,
    pub hybrid: MetricStat,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
}

/// Relative gap under which two means count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

fn direction(metric: Metric, baseline: f64, hybrid: f64) -> Direction {
    let scale = baseline.abs().max(hybrid.abs()).max(1.0);
    if (hybrid - baseline).abs() <= TIE_TOLERANCE * scale {
        Direction::Tie
    } else if (hybrid > baseline) == metric.higher_is_better() {
        Direction::HybridBetter
    } else {
        Direction::HybridWorse
    }
}

/// Per-metric comparison of two reports evaluated on the same seeds.
pub fn compare(base: &TrainingReport, hyb: &TrainingReport) -> Result<ComparisonSummary> {
    if base.evaluation.seeds != hyb.evaluation.seeds {
        return Err(Error::Comparison("reports were evaluated on different seeds".into()));
    }
    if base.env != hyb.env || base.workload != hyb.workload {
        return Err(Error::Comparison("reports use different environment or workload settings".into()));
    }
    let rows = Metric::ALL
        .iter()
        .map(|&metric| {
            let (b, h) = (base.evaluation.get(metric), hyb.evaluation.get(metric));
            ComparisonRow { metric, baseline: b, hybrid: h, direction: direction(metric, b.mean, h.mean) }
        })
        .collect();
    Ok(ComparisonSummary { seeds: base.evaluation.seeds.clone(), rows })
}

impl ComparisonSummary {
    pub fn row(&self, metric: Metric) -> &ComparisonRow {
        self.rows.iter().find(|r| r.metric == metric).expect("every metric is compared")
    }

    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let header = ["Metric", "Baseline (DDQN)", "Hybrid (Mean ± StdDev)", "Direction"];
        let body: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    String::from(r.metric.label()),
                    format!("{:.4}", r.baseline.mean),
                    format!("{:.4} ± {:.4}", r.hybrid.mean, r.hybrid.std),
                    String::from(match r.direction {
                        Direction::HybridBetter => "hybrid better",
                        Direction::HybridWorse => "hybrid worse",
                        Direction::Tie => "tie",
                    }),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 4]| {
            for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
                let pad = w - cell.chars().count();
                if i == 0 {
                    let _ = write!(out, "{cell}{}", " ".repeat(pad));
                } else {
                    let _ = write!(out, "  {}{cell}", " ".repeat(pad));
                }
            }
            out.push('\n');
        };
        line(&mut out, header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, [&rule[0], &rule[1], &rule[2], &rule[3]]);
        for row in &body {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
        }
        out
    }
}

#[cfg(test)]
mod tests;
