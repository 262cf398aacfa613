//! JSON checkpoints. A network is stored as its input shape, layer specs and
//! flat parameter vector; loading rebuilds it and refuses any mismatch with
//! the architecture the current config implies.

use std::path::Path;

use lookahead_core::agent::{AgentConfig, DdqnAgent, GreedyPolicy};
use lookahead_core::forecast::{ForecastConfig, Forecaster, LossCurve};
use lookahead_core::nn::{LayerSpec, Network};
use lookahead_core::train::{ExperimentConfig, Mode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

pub const VERSION: u32 = 1;
pub const AGENT_FORMAT: &str = "lookahead-agent";
pub const FORECASTER_FORMAT: &str = "lookahead-forecaster";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCheckpoint {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub params: Vec<f64>,
}

impl NetworkCheckpoint {
    pub fn of(net: &Network) -> Self {
        Self { input_shape: net.input_shape().to_vec(), layers: net.layers().to_vec(), params: net.params().to_vec() }
    }

    /// Rebuilds the network if it has exactly the expected architecture.
    pub fn restore(&self, input_shape: &[usize], layers: &[LayerSpec]) -> std::result::Result<Network, String> {
        if self.input_shape != input_shape {
            return Err(format!("input shape {:?}, config expects {input_shape:?}", self.input_shape));
        }
        if self.layers != layers {
            return Err(format!("layers {:?}, config expects {layers:?}", self.layers));
        }
        Network::from_params(self.input_shape.clone(), self.layers.clone(), self.params.clone()).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub state_dim: usize,
    pub n_actions: usize,
    pub config: AgentConfig,
    /// Agent seed; the config section does not serialize it.
    pub seed: u64,
    pub epsilon: f64,
    pub updates: u64,
    pub online: NetworkCheckpoint,
    pub target: NetworkCheckpoint,
}

impl AgentCheckpoint {
    pub fn of(agent: &DdqnAgent, mode: Mode) -> Self {
        let nets = agent.networks();
        Self {
            format: AGENT_FORMAT.into(),
            version: VERSION,
            mode,
            state_dim: agent.state_dim(),
            n_actions: agent.n_actions(),
            config: agent.config().clone(),
            seed: agent.config().seed,
            epsilon: agent.epsilon(),
            updates: agent.updates(),
            online: NetworkCheckpoint::of(&nets.online),
            target: NetworkCheckpoint::of(&nets.target),
        }
    }

    /// Greedy policy for `cfg`; rejects checkpoints whose mode or
    /// dimensions disagree with it.
    pub fn policy(&self, cfg: &ExperimentConfig, path: &Path) -> Result<GreedyPolicy> {
        let fail = |message: String| Error::Checkpoint { path: path.to_path_buf(), message };
        if self.mode != cfg.mode {
            return Err(fail(format!("trained in {} mode, config selects {}", self.mode.name(), cfg.mode.name())));
        }
        let state_dim = cfg.state_dim(cfg.mode);
        let n_actions = cfg.action_space(cfg.mode)?.len();
        if (self.state_dim, self.n_actions) != (state_dim, n_actions) {
            return Err(fail(format!(
                "dimensions {}x{}, config implies {state_dim}x{n_actions}",
                self.state_dim, self.n_actions
            )));
        }
        let layers = cfg.agent.layers(state_dim, n_actions);
        self.target.restore(&[state_dim], &layers).map_err(&fail)?;
        let network = self.online.restore(&[state_dim], &layers).map_err(fail)?;
        Ok(GreedyPolicy { network })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: ForecastConfig,
    pub network: NetworkCheckpoint,
    pub curve: Option<LossCurve>,
}

impl ForecasterCheckpoint {
    pub fn of(f: &Forecaster, curve: Option<&LossCurve>) -> Self {
        Self {
            format: FORECASTER_FORMAT.into(),
            version: VERSION,
            config: f.config.clone(),
            network: NetworkCheckpoint::of(&f.network),
            curve: curve.cloned(),
        }
    }

    /// Forecaster for `cfg`; the stored architecture must match the
    /// config's forecast section.
    pub fn forecaster(&self, cfg: &ExperimentConfig, path: &Path) -> Result<Forecaster> {
        let fail = |message: String| Error::Checkpoint { path: path.to_path_buf(), message };
        let fc = cfg.forecast_config();
        let network = self.network.restore(&[fc.history_window, fc.input_channels], &fc.layers()).map_err(fail)?;
        Ok(Forecaster::new(fc, network)?)
    }
}

trait Tagged {
    fn tag(&self) -> (&str, u32);
    const FORMAT: &'static str;
}

impl Tagged for AgentCheckpoint {
    fn tag(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
    const FORMAT: &'static str = AGENT_FORMAT;
}

impl Tagged for ForecasterCheckpoint {
    fn tag(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
    const FORMAT: &'static str = FORECASTER_FORMAT;
}

fn load<T: DeserializeOwned + Tagged>(path: &Path) -> Result<T> {
    let fail = |message: String| Error::Checkpoint { path: path.to_path_buf(), message };
    let text = fsio::read(path)?;
    let value: T = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    match value.tag() {
        (f, VERSION) if f == T::FORMAT => Ok(value),
        (f, v) => Err(fail(format!("expected {} v{VERSION}, found {f} v{v}", T::FORMAT))),
    }
}

pub fn load_agent(path: &Path) -> Result<AgentCheckpoint> {
    let mut ckpt: AgentCheckpoint = load(path)?;
    ckpt.config.seed = ckpt.seed;
    Ok(ckpt)
}

pub fn load_forecaster(path: &Path) -> Result<ForecasterCheckpoint> {
    load(path)
}
