//! Double-DQN agent: online and target Q networks, a FIFO replay buffer,
//! epsilon-greedy exploration and soft target updates.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamParams, LayerSpec, Network, Tensor};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Decay constant in steps; `None` resolves to `episodes * steps / 5`.
    pub epsilon_decay: Option<f64>,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub learn_start: usize,
    pub lr: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: None,
            tau: 0.005,
            buffer_capacity: 50_000,
            batch_size: 64,
            learn_start: 500,
            lr: 2.5e-4,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid("agent.gamma", "discount must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid("agent.tau", "must lie in [0, 1]"));
        }
        for (field, eps) in [("agent.epsilon_start", self.epsilon_start), ("agent.epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::invalid(field, "must lie in [0, 1]"));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return Err(Error::invalid("agent.epsilon_end", "must not exceed epsilon_start"));
        }
        if let Some(d) = self.epsilon_decay {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid("agent.epsilon_decay", "must be positive"));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("agent.batch_size", "must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::invalid("agent.buffer_capacity", "must be at least batch_size"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("agent.hidden", "layer widths must be positive"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("agent.lr", "must be a positive finite number"));
        }
        Ok(())
    }

    /// Dense/ReLU stack from `state_dim` to one output per action.
    pub fn layers(&self, state_dim: usize, n_actions: usize) -> Vec<LayerSpec> {
        let mut layers = Vec::new();
        let mut width = state_dim;
        for &h in &self.hidden {
            layers.push(LayerSpec::dense(width, h));
            layers.push(LayerSpec::activation(Activation::Relu));
            width = h;
        }
        layers.push(LayerSpec::dense(width, n_actions));
        layers
    }
}

/// `end + (start - end) * exp(-step / decay)`.
pub fn decay_epsilon(start: f64, end: f64, decay: f64, step: u64) -> f64 {
    end + (start - end) * libm::exp(-(step as f64) / decay)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer; the oldest transition is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::new(), capacity: capacity.max(1), head: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn store(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }

    /// `n` draws, uniform with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.len() < n || self.items.is_empty() {
            return Err(Error::InsufficientData { needed: n.max(1), available: self.items.len() });
        }
        Ok((0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }
}

/// Anything that maps a state to one value per action.
pub trait QFunction {
    fn q_values(&self, state: &[f64]) -> Result<Vec<f64>>;
}

impl QFunction for Network {
    fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.predict(state)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniform action, otherwise the greedy one.
pub fn select_action<Q: QFunction + ?Sized, R: Rng + ?Sized>(q: &Q, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    let values = q.q_values(state)?;
    if values.is_empty() {
        return Err(Error::shape(&[1], &[0]));
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..values.len()))
    } else {
        Ok(argmax(&values))
    }
}

/// `r` for terminal transitions, else `r + gamma * Q_target(s', argmax Q_online(s'))`.
pub fn ddqn_targets<Q: QFunction + ?Sized>(batch: &[&Transition], gamma: f64, online: &Q, target: &Q) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let q_online = online.q_values(&t.next_state)?;
            let q_target = target.q_values(&t.next_state)?;
            let a = argmax(&q_online);
            let v = *q_target.get(a).ok_or_else(|| Error::shape(&[q_online.len()], &[q_target.len()]))?;
            let y = t.reward + gamma * v;
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Numeric("non-finite TD target".into()))
            }
        })
        .collect()
}

/// Online network `theta` and its slowly tracking copy `theta'`.
#[derive(Clone, Debug)]
pub struct QNetworkPair {
    pub online: Network,
    pub target: Network,
}

impl QNetworkPair {
    pub fn new(online: Network) -> Self {
        Self { target: online.clone(), online }
    }

    pub fn from_parts(online: Network, target: Network) -> Result<Self> {
        if !online.same_architecture(&target) {
            return Err(Error::Usage("online and target networks differ in architecture".into()));
        }
        Ok(Self { online, target })
    }

    /// `theta' <- tau * theta + (1 - tau) * theta'`.
    pub fn soft_update(&mut self, tau: f64) -> Result<()> {
        self.target.blend_from(&self.online, tau)
    }

    /// One Adam step on the mean squared TD error; targets are constants and
    /// only `Q(s_j, a_j)` receives gradient. Returns the pre-step loss.
    pub fn learn(&mut self, batch: &[&Transition], gamma: f64, hp: &AdamParams) -> Result<f64> {
        let y = ddqn_targets(batch, gamma, &self.online, &self.target)?;
        let n = batch.len() as f64;
        let width = self.online.input_shape()[0];
        let mut grad = vec![0.0; self.online.param_count()];
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(&y) {
            if t.state.len() != width {
                return Err(Error::shape(&[width], &[t.state.len()]));
            }
            let (q, cache) = self.online.forward(&Tensor::vector(t.state.clone())?)?;
            let q = q.data();
            if t.action >= q.len() {
                return Err(Error::InvalidAction(alloc::format!("action {} of {}", t.action, q.len())));
            }
            let err = q[t.action] - y;
            loss += err * err / n;
            let mut dq = vec![0.0; q.len()];
            dq[t.action] = 2.0 * err / n;
            self.online.backward_accumulate(&cache, &dq, &mut grad)?;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite TD loss".into()));
        }
        self.online.adam_step(&grad, hp)?;
        Ok(loss)
    }
}

/// Frozen greedy policy, safe to clone across evaluation threads.
#[derive(Clone, Debug)]
pub struct GreedyPolicy {
    pub network: Network,
}

impl GreedyPolicy {
    pub fn act(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.network.q_values(state)?))
    }
}

/// Training-time agent state.
#[derive(Clone, Debug)]
pub struct DdqnAgent {
    config: AgentConfig,
    state_dim: usize,
    n_actions: usize,
    decay: f64,
    nets: QNetworkPair,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    epsilon: f64,
    updates: u64,
}

impl DdqnAgent {
    /// `decay` is the resolved epsilon decay constant in steps.
    pub fn new(config: AgentConfig, state_dim: usize, n_actions: usize, decay: f64) -> Result<Self> {
        config.validate()?;
        if state_dim == 0 || n_actions == 0 {
            return Err(Error::invalid("agent", "state_dim and n_actions must be positive"));
        }
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::invalid("agent.epsilon_decay", "must be positive"));
        }
        let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
        let online = Network::new(vec![state_dim], config.layers(state_dim, n_actions), &mut init_rng)?;
        Ok(Self {
            state_dim,
            n_actions,
            decay,
            nets: QNetworkPair::new(online),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1)),
            epsilon: config.epsilon_start,
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn networks(&self) -> &QNetworkPair {
        &self.nets
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Gradient updates performed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Epsilon-greedy action at the current epsilon.
    pub fn act(&mut self, state: &[f64]) -> Result<usize> {
        self.check_state(state)?;
        select_action(&self.nets.online, state, self.epsilon, &mut self.rng)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        self.check_state(state)?;
        Ok(argmax(&self.nets.online.q_values(state)?))
    }

    pub fn policy(&self) -> GreedyPolicy {
        GreedyPolicy { network: self.nets.online.clone() }
    }

    pub fn store(&mut self, t: Transition) -> Result<()> {
        self.check_state(&t.state)?;
        self.check_state(&t.next_state)?;
        if t.action >= self.n_actions {
            return Err(Error::InvalidAction(alloc::format!("action {} of {}", t.action, self.n_actions)));
        }
        if !t.reward.is_finite() {
            return Err(Error::Numeric("non-finite reward".into()));
        }
        self.buffer.store(t);
        Ok(())
    }

    /// Samples a minibatch, takes one gradient step and soft-updates the
    /// target, once the buffer holds `learn_start` transitions.
    pub fn train_step(&mut self) -> Result<Option<f64>> {
        if self.buffer.len() < self.config.learn_start.max(self.config.batch_size) {
            return Ok(None);
        }
        let batch: Vec<Transition> =
            self.buffer.sample(self.config.batch_size, &mut self.rng)?.into_iter().cloned().collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let hp = AdamParams { lr: self.config.lr, ..AdamParams::default() };
        let loss = self.nets.learn(&refs, self.config.gamma, &hp)?;
        self.nets.soft_update(self.config.tau)?;
        self.updates += 1;
        Ok(Some(loss))
    }

    /// Sets epsilon from the global step count.
    pub fn decay_epsilon(&mut self, step: u64) -> f64 {
        self.epsilon = decay_epsilon(self.config.epsilon_start, self.config.epsilon_end, self.decay, step);
        self.epsilon
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.state_dim {
            return Err(Error::shape(&[self.state_dim], &[s.len()]));
        }
        Ok(())
    }
}
