use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, HybridAction};
use super::config::{EnvConfig, Tier};
use super::reward::{compute_reward, StepBreakdown};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::workload::{TaskArrival, WorkloadTrace};

// Times closer than this are treated as simultaneous.
const TIME_EPS: f64 = 1e-12;

/// Observation before forecast augmentation.
///
/// Layout: the current snapshot, then `H` past snapshots (most recent
/// first), then the pending-task descriptor. A snapshot is
/// `[cpu util per node, mem util per node, congestion, queue per node]`;
/// the descriptor is `[work, data, min deadline]` (scaled) followed by the
/// share of pending tasks originating at each location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawState(Vec<f64>);

impl From<Vec<f64>> for RawState {
    fn from(v: Vec<f64>) -> Self {
        RawState(v)
    }
}

impl RawState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: RawState,
    pub reward: f64,
    pub breakdown: StepBreakdown,
    pub done: bool,
}

/// Work accounting since reset. `arrived == processed + in_system + dropped`
/// holds after every step, up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorkLedger {
    pub arrived: f64,
    pub processed: f64,
    pub in_system: f64,
    pub dropped: f64,
}

impl WorkLedger {
    pub fn imbalance(&self) -> f64 {
        self.arrived - (self.processed + self.in_system + self.dropped)
    }
}

#[derive(Debug, Clone)]
struct Task {
    arrival: f64,
    remaining: f64,
    data: f64,
    deadline: f64,
    share: f64,
    ready_at: f64,
    started: bool,
}

#[derive(Debug, Clone, Default)]
struct NodeRuntime {
    tasks: Vec<Task>,
}

/// The tiered edge-cloud simulator.
///
/// One `step` dispatches every task that arrived at the current timestep to
/// the chosen node, then advances all nodes by one timestep. Each node is a
/// non-preemptive FIFO server ordered by arrival at the node: the task in
/// service runs at `share * capacity * (1 - background)`, so a task waits
/// for the backlog ahead of it and then needs `work / (share * capacity)`.
/// Transfers take `data * link * (1 + congestion) / link_share` timesteps.
#[derive(Debug, Clone)]
pub struct EdgeCloudEnv {
    config: EnvConfig,
    space: ActionSpace,
    n_locations: usize,
    trace: Option<Arc<WorkloadTrace>>,
    start: usize,
    len: usize,
    t: usize,
    cursor: usize,
    pending: Vec<TaskArrival>,
    nodes: Vec<NodeRuntime>,
    current: Vec<f64>,
    history: Vec<Vec<f64>>,
    ledger: WorkLedger,
    done: bool,
}

impl EdgeCloudEnv {
    pub fn new(config: EnvConfig, n_locations: usize) -> Result<Self> {
        config.validate()?;
        if n_locations == 0 {
            return Err(Error::invalid("n_locations", "must be at least 1"));
        }
        let space = ActionSpace::new(config.n_nodes(), config.alloc_dims, config.alloc_levels)?;
        let nodes = vec![NodeRuntime::default(); config.n_nodes()];
        Ok(Self {
            config,
            space,
            n_locations,
            trace: None,
            start: 0,
            len: 0,
            t: 0,
            cursor: 0,
            pending: Vec::new(),
            nodes,
            current: Vec::new(),
            history: Vec::new(),
            ledger: WorkLedger::default(),
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn action_space(&self) -> ActionSpace {
        self.space
    }

    pub fn state_dim(&self) -> usize {
        self.config.raw_state_dim(self.n_locations)
    }

    /// Steps taken in the current episode.
    pub fn time(&self) -> usize {
        self.t
    }

    /// Trace offset of the current episode's first step.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Steps in the current episode.
    pub fn episode_len(&self) -> usize {
        self.len
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn pending(&self) -> &[TaskArrival] {
        &self.pending
    }

    pub fn ledger(&self) -> WorkLedger {
        self.ledger
    }

    /// Offset chosen for an episode seed: uniform over the offsets that leave
    /// room for `context` look-back rows and a full episode, where possible.
    pub fn episode_start(&self, horizon: usize, episode_seed: u64) -> usize {
        let last = horizon.saturating_sub(self.config.episode_steps);
        let first = self.config.context.min(last);
        first + (derive_seed(episode_seed, 0x5eed) % (last - first + 1) as u64) as usize
    }

    /// Starts an episode at the offset selected by `episode_seed`.
    pub fn reset(&mut self, trace: Arc<WorkloadTrace>, episode_seed: u64) -> Result<RawState> {
        let start = self.episode_start(trace.horizon(), episode_seed);
        self.reset_at(trace, start)
    }

    /// Starts an episode at an explicit trace offset.
    pub fn reset_at(&mut self, trace: Arc<WorkloadTrace>, start: usize) -> Result<RawState> {
        if trace.n_locations() != self.n_locations {
            return Err(Error::invalid("trace", "location count differs from the environment's"));
        }
        if start >= trace.horizon() {
            return Err(Error::invalid("start", "offset beyond trace horizon"));
        }
        self.len = self.config.episode_steps.min(trace.horizon() - start);
        self.start = start;
        self.t = 0;
        self.cursor = trace.arrivals().partition_point(|a| a.arrival_time < start);
        self.trace = Some(trace);
        self.nodes.iter_mut().for_each(|n| n.tasks.clear());
        self.ledger = WorkLedger::default();
        self.done = false;
        self.pending.clear();
        self.collect_arrivals();
        self.current = self.snapshot();
        self.history = vec![self.current.clone(); self.config.history];
        Ok(self.observe())
    }

    fn trace(&self) -> &WorkloadTrace {
        self.trace.as_deref().expect("environment has been reset")
    }

    fn abs_time(&self) -> usize {
        (self.start + self.t).min(self.trace().horizon() - 1)
    }

    fn collect_arrivals(&mut self) {
        let now = self.start + self.t;
        let trace = self.trace.clone().expect("environment has been reset");
        let arrivals = trace.arrivals();
        while self.cursor < arrivals.len() && arrivals[self.cursor].arrival_time == now {
            let a = arrivals[self.cursor];
            self.ledger.arrived += a.work;
            self.ledger.in_system += a.work;
            self.pending.push(a);
            self.cursor += 1;
        }
    }

    fn background(&self, node: usize, abs_t: usize) -> f64 {
        match self.config.nodes[node].tier {
            Tier::Edge => self.trace().cpu((node - 1) % self.n_locations)[abs_t],
            Tier::Local | Tier::Cloud => 0.0,
        }
    }

    fn link_factor(&self, node: usize, location: usize) -> f64 {
        match self.config.nodes[node].tier {
            Tier::Edge if (node - 1) % self.n_locations != location => self.config.remote_hop_factor,
            _ => 1.0,
        }
    }

    /// CPU share of each task at time `now`. One task is in service at a
    /// time: the one already started, else the earliest to become ready. It
    /// runs at its own allocated share; the rest of the node idles.
    fn shares(tasks: &[Task], now: f64) -> Vec<f64> {
        let mut out = vec![0.0; tasks.len()];
        let current = tasks.iter().position(|t| t.started).or_else(|| {
            tasks
                .iter()
                .enumerate()
                .filter(|(_, t)| t.ready_at <= now + TIME_EPS)
                .min_by(|a, b| a.1.ready_at.total_cmp(&b.1.ready_at))
                .map(|(i, _)| i)
        });
        if let Some(i) = current {
            out[i] = tasks[i].share;
        }
        out
    }

    fn snapshot(&self) -> Vec<f64> {
        let abs_t = self.abs_time();
        let n = self.config.n_nodes();
        let now = self.t as f64;
        let mut cpu = Vec::with_capacity(n);
        let mut mem = Vec::with_capacity(n);
        let mut queue = Vec::with_capacity(n);
        for (i, node) in self.nodes.iter().enumerate() {
            let bg = self.background(i, abs_t);
            let busy: f64 = Self::shares(&node.tasks, now).iter().sum();
            cpu.push((bg + (1.0 - bg) * busy).clamp(0.0, 1.0));
            let resident: f64 = node.tasks.iter().filter(|t| t.ready_at <= now + TIME_EPS).map(|t| t.data).sum();
            mem.push((resident / self.config.nodes[i].mem_capacity).min(1.0));
            queue.push((node.tasks.len() as f64 / self.config.queue_scale).min(1.0));
        }
        let mut snap = cpu;
        snap.extend(mem);
        snap.push(self.trace().net_series()[abs_t]);
        snap.extend(queue);
        snap
    }

    fn observe(&self) -> RawState {
        let mut v = Vec::with_capacity(self.state_dim());
        v.extend_from_slice(&self.current);
        for past in &self.history {
            v.extend_from_slice(past);
        }
        if self.pending.is_empty() {
            v.extend(core::iter::repeat_n(0.0, 3 + self.n_locations));
        } else {
            let work: f64 = self.pending.iter().map(|a| a.work).sum();
            let data: f64 = self.pending.iter().map(|a| a.data_size).sum();
            let deadline = self.pending.iter().map(|a| a.sla_deadline).fold(f64::INFINITY, f64::min);
            v.push(work / self.config.work_scale);
            v.push(data / self.config.data_scale);
            v.push(deadline / self.config.deadline_scale);
            let k = self.pending.len() as f64;
            for loc in 0..self.n_locations {
                v.push(self.pending.iter().filter(|a| a.location == loc).count() as f64 / k);
            }
        }
        RawState(v)
    }

    /// Advances one timestep with action `a`.
    pub fn step(&mut self, a: &HybridAction) -> Result<StepOutcome> {
        if self.trace.is_none() || self.done {
            return Err(Error::State("step called on a finished or unreset environment".into()));
        }
        self.space.validate(a)?;
        let abs_t = self.abs_time();
        let now = self.t as f64;
        let alloc = a.allocation(self.config.alloc_levels);
        let cpu_share = alloc[0];
        let link_share = alloc.get(1).copied().unwrap_or(1.0);
        let congestion = self.trace().net_series()[abs_t];

        let pending = core::mem::take(&mut self.pending);
        for task in pending {
            let link = self.config.nodes[a.target].link_latency * self.link_factor(a.target, task.location);
            let transfer = task.data_size * link * (1.0 + congestion) / link_share;
            let arrival = (task.arrival_time - self.start) as f64;
            self.nodes[a.target].tasks.push(Task {
                arrival,
                remaining: task.work,
                data: task.data_size,
                deadline: task.sla_deadline,
                share: cpu_share,
                ready_at: now + transfer,
                started: false,
            });
        }

        let mut b = StepBreakdown::default();
        let mut latency_sum = 0.0;
        for i in 0..self.nodes.len() {
            let profile = &self.config.nodes[i];
            let capacity = profile.cpu_capacity * (1.0 - self.background(i, abs_t));
            let (done_work, finished) = advance(&mut self.nodes[i].tasks, now, capacity);
            b.energy += profile.energy_per_work * done_work + profile.energy_idle;
            b.cost += profile.cost_per_work * done_work;
            self.ledger.processed += done_work;
            self.ledger.in_system -= done_work;
            for (latency, deadline) in finished {
                b.completed += 1;
                latency_sum += latency;
                b.makespan += latency;
                if latency > deadline {
                    b.sla_violated = true;
                }
            }
        }
        if b.completed > 0 {
            b.latency = latency_sum / b.completed as f64;
        }

        // tasks that never started and are past their deadline are dropped
        let end = now + 1.0;
        for node in &mut self.nodes {
            let mut dropped_work = 0.0;
            let before = node.tasks.len();
            node.tasks.retain(|t| {
                let expired = !t.started && end - t.arrival > t.deadline;
                if expired {
                    dropped_work += t.remaining;
                }
                !expired
            });
            let dropped = before - node.tasks.len();
            if dropped > 0 {
                b.dropped += dropped;
                b.sla_violated = true;
                self.ledger.dropped += dropped_work;
                self.ledger.in_system -= dropped_work;
            }
        }

        self.t += 1;
        self.done = self.t >= self.len;
        if !self.done {
            self.collect_arrivals();
        }
        let snap = self.snapshot();
        let n = self.config.n_nodes();
        b.utilization = snap[..n].iter().sum::<f64>() / n as f64;
        let previous = core::mem::replace(&mut self.current, snap);
        if self.config.history > 0 {
            self.history.pop();
            self.history.insert(0, previous);
        }

        let reward = compute_reward(&b, &self.config.reward)?;
        Ok(StepOutcome { next_state: self.observe(), reward, breakdown: b, done: self.done })
    }

    /// Sum of `T - arrival` over tasks still in the system, and their count.
    pub fn open_spans(&self) -> (f64, usize) {
        let now = self.t as f64;
        let mut spans = 0.0;
        let mut count = 0;
        for node in &self.nodes {
            for task in &node.tasks {
                spans += now - task.arrival;
                count += 1;
            }
        }
        for a in &self.pending {
            spans += now - (a.arrival_time - self.start) as f64;
            count += 1;
        }
        (spans, count)
    }

    /// The `len` most recent observation rows of the workload channels
    /// (`[cpu per location, congestion]`), ending at the current timestep.
    pub fn observation_window(&self, len: usize) -> Vec<f64> {
        self.trace().window_ending_at(self.abs_time(), len)
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }
}

/// Runs one node for one timestep from `now`; returns processed work and
/// `(latency, deadline)` of the tasks that finished.
fn advance(tasks: &mut Vec<Task>, now: f64, capacity: f64) -> (f64, Vec<(f64, f64)>) {
    let end = now + 1.0;
    let mut clock = now;
    let mut processed = 0.0;
    let mut finished = Vec::new();
    while clock < end - TIME_EPS && !tasks.is_empty() {
        let shares = EdgeCloudEnv::shares(tasks, clock);
        let mut dt = end - clock;
        for (task, &s) in tasks.iter().zip(&shares) {
            let rate = s * capacity;
            if rate > 0.0 {
                dt = dt.min(task.remaining / rate);
            } else if task.ready_at > clock + TIME_EPS {
                dt = dt.min(task.ready_at - clock);
            }
        }
        for (task, &s) in tasks.iter_mut().zip(&shares) {
            let rate = s * capacity;
            if rate > 0.0 {
                task.started = true;
                if task.remaining / rate <= dt {
                    processed += task.remaining;
                    task.remaining = 0.0;
                } else {
                    processed += rate * dt;
                    task.remaining -= rate * dt;
                }
            }
        }
        clock += dt;
        tasks.retain(|task| {
            if task.remaining <= 0.0 {
                finished.push((clock - task.arrival, task.deadline));
                false
            } else {
                true
            }
        });
    }
    (processed, finished)
}
