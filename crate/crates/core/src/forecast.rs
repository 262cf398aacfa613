//! CNN-LSTM workload forecaster and the lookahead state it feeds the agent.
//!
//! The network reads the last `history_window` rows of the workload channels
//! (`[cpu per location, congestion]`) and predicts the next `horizon` rows.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::RawState;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamParams, LayerSpec, Network, Tensor};
use crate::seed::derive_seed;
use crate::workload::WorkloadTrace;

/// Share of samples held out (as the trailing block) for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub history_window: usize,
    pub horizon: usize,
    pub input_channels: usize,
    pub conv_channels: usize,
    pub kernel_width: usize,
    pub lstm_hidden: usize,
    pub train_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            history_window: 32,
            horizon: 4,
            input_channels: 3,
            conv_channels: 16,
            kernel_width: 5,
            lstm_hidden: 32,
            train_epochs: 20,
            batch_size: 32,
            lr: 2e-3,
            seed: 0,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("forecast.history_window", self.history_window),
            ("forecast.horizon", self.horizon),
            ("forecast.input_channels", self.input_channels),
            ("forecast.conv_channels", self.conv_channels),
            ("forecast.kernel_width", self.kernel_width),
            ("forecast.lstm_hidden", self.lstm_hidden),
            ("forecast.batch_size", self.batch_size),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        if self.history_window < self.kernel_width {
            return Err(Error::invalid("forecast.history_window", "must be at least kernel_width"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("forecast.lr", "must be a positive finite number"));
        }
        Ok(())
    }

    /// Flattened window length, `history_window * input_channels`.
    pub fn window_len(&self) -> usize {
        self.history_window * self.input_channels
    }

    /// Forecast length appended to the raw state, `horizon * input_channels`.
    pub fn output_len(&self) -> usize {
        self.horizon * self.input_channels
    }

    /// conv1d -> relu -> LSTM -> dense.
    pub fn layers(&self) -> Vec<LayerSpec> {
        vec![
            LayerSpec::conv1d(self.input_channels, self.conv_channels, self.kernel_width),
            LayerSpec::activation(Activation::Relu),
            LayerSpec::lstm(self.conv_channels, self.lstm_hidden),
            LayerSpec::dense(self.lstm_hidden, self.output_len()),
        ]
    }

    /// Freshly initialised forecaster network.
    pub fn network(&self) -> Result<Network> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0));
        Network::new(vec![self.history_window, self.input_channels], self.layers(), &mut rng)
    }
}

/// One sliding-window example; both matrices flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub window: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryDataset {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub history_window: usize,
    pub horizon: usize,
    pub channels: usize,
}

impl HistoryDataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Slides a `history_window + horizon` frame over the trace one step at a
/// time; the trailing `floor(0.2 n)` samples form the validation block.
pub fn build_dataset(trace: &WorkloadTrace, cfg: &ForecastConfig) -> Result<HistoryDataset> {
    cfg.validate()?;
    if trace.channels() != cfg.input_channels {
        return Err(Error::shape(&[cfg.input_channels], &[trace.channels()]));
    }
    let (h, k, c) = (cfg.history_window, cfg.horizon, cfg.input_channels);
    let needed = h + k;
    if trace.horizon() < needed {
        return Err(Error::InsufficientData { needed, available: trace.horizon() });
    }
    let rows: Vec<Vec<f64>> = (0..trace.horizon()).map(|t| trace.row(t)).collect();
    let n = trace.horizon() - needed + 1;
    let mut samples: Vec<Sample> = (0..n)
        .map(|s| Sample {
            window: rows[s..s + h].concat(),
            target: rows[s + h..s + h + k].concat(),
        })
        .collect();
    let n_val = libm::floor(VALIDATION_FRACTION * n as f64) as usize;
    let validation = samples.split_off(n - n_val);
    Ok(HistoryDataset { train: samples, validation, history_window: h, horizon: k, channels: c })
}

/// Losses after one pretraining epoch. `val_mse` is absent when the dataset
/// has no validation block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub epochs: Vec<EpochLoss>,
    /// Epoch whose parameters were kept, if any epoch ran.
    pub best_epoch: Option<usize>,
}

impl LossCurve {
    /// Running minimum of the selection loss (validation, else train).
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.epochs
            .iter()
            .map(|e| {
                best = best.min(e.val_mse.unwrap_or(e.train_mse));
                best
            })
            .collect()
    }
}

pub struct Pretrained {
    pub network: Network,
    pub curve: LossCurve,
}

/// Mean squared error of `net` over `samples`.
pub fn dataset_mse(net: &Network, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let mut total = 0.0;
    for s in samples {
        let y = net.predict(&s.window)?;
        total += mse(&y, &s.target);
    }
    Ok(total / samples.len() as f64)
}

/// Persistence MSE over `samples`: last window row repeated `horizon` times.
pub fn persistence_mse(samples: &[Sample], channels: usize, horizon: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let mut total = 0.0;
    for s in samples {
        let f = persistence_baseline(&s.window, channels, horizon)?;
        total += mse(&f.values, &s.target);
    }
    Ok(total / samples.len() as f64)
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Minibatch Adam on MSE, keeping the parameters of the best epoch.
pub fn pretrain(dataset: &HistoryDataset, cfg: &ForecastConfig) -> Result<Pretrained> {
    pretrain_from(cfg.network()?, dataset, cfg)
}

/// As [`pretrain`], starting from an existing network.
pub fn pretrain_from(mut net: Network, dataset: &HistoryDataset, cfg: &ForecastConfig) -> Result<Pretrained> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    if dataset.history_window != cfg.history_window || dataset.horizon != cfg.horizon || dataset.channels != cfg.input_channels {
        return Err(Error::shape(
            &[cfg.history_window, cfg.horizon, cfg.input_channels],
            &[dataset.history_window, dataset.horizon, dataset.channels],
        ));
    }
    if net.input_shape() != [cfg.history_window, cfg.input_channels] || net.output_shape() != [cfg.output_len()] {
        return Err(Error::shape(&[cfg.history_window, cfg.input_channels], net.input_shape()));
    }
    let hp = AdamParams { lr: cfg.lr, ..AdamParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut grad = vec![0.0; net.param_count()];
    let mut curve = LossCurve::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let shape = vec![cfg.history_window, cfg.input_channels];
    let out_len = cfg.output_len() as f64;

    for epoch in 0..cfg.train_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / (out_len * batch.len() as f64);
            for &i in batch {
                let s = &dataset.train[i];
                let input = Tensor::new(shape.clone(), s.window.clone())?;
                let (y, cache) = net.forward(&input).map_err(|e| diverged(epoch, e))?;
                sum += mse(y.data(), &s.target);
                let dy: Vec<f64> = y.data().iter().zip(&s.target).map(|(p, t)| scale * (p - t)).collect();
                net.backward_accumulate(&cache, &dy, &mut grad)?;
            }
            net.adam_step(&grad, &hp).map_err(|e| diverged(epoch, e))?;
        }
        let train_mse = sum / dataset.train.len() as f64;
        if !train_mse.is_finite() {
            return Err(Error::Training { epoch, detail: alloc::format!("train loss became {train_mse}") });
        }
        let val_mse = if dataset.validation.is_empty() {
            None
        } else {
            Some(dataset_mse(&net, &dataset.validation).map_err(|e| diverged(epoch, e))?)
        };
        curve.epochs.push(EpochLoss { epoch, train_mse, val_mse });
        let score = val_mse.unwrap_or(train_mse);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, net.params().to_vec()));
            curve.best_epoch = Some(epoch);
        }
    }
    if let Some((_, params)) = best {
        net.set_params(&params)?;
    }
    Ok(Pretrained { network: net, curve })
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric(detail) => Error::Training { epoch, detail },
        other => other,
    }
}

/// `horizon x channels` prediction, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub values: Vec<f64>,
    pub horizon: usize,
    pub channels: usize,
}

impl Forecast {
    pub fn zeros(horizon: usize, channels: usize) -> Self {
        Self { values: vec![0.0; horizon * channels], horizon, channels }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }
}

/// Runs the forecaster on one flattened `history_window x channels` window.
pub fn forecast(net: &Network, window: &[f64], cfg: &ForecastConfig) -> Result<Forecast> {
    if window.len() != cfg.window_len() {
        return Err(Error::shape(&[cfg.history_window, cfg.input_channels], &[window.len()]));
    }
    let values = net.predict(window)?;
    if values.len() != cfg.output_len() {
        return Err(Error::shape(&[cfg.output_len()], &[values.len()]));
    }
    Ok(Forecast { values, horizon: cfg.horizon, channels: cfg.input_channels })
}

/// Repeats the last window row `horizon` times.
pub fn persistence_baseline(window: &[f64], channels: usize, horizon: usize) -> Result<Forecast> {
    if channels == 0 || window.is_empty() || window.len() % channels != 0 {
        return Err(Error::shape(&[channels], &[window.len()]));
    }
    let last = &window[window.len() - channels..];
    Ok(Forecast { values: last.repeat(horizon), horizon, channels })
}

/// Raw state followed by the flattened forecast.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    values: Vec<f64>,
    raw_dim: usize,
}

impl ExtendedState {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.values[..self.raw_dim]
    }

    pub fn lookahead(&self) -> &[f64] {
        &self.values[self.raw_dim..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

pub fn extend_state(s: &RawState, f: &Forecast) -> ExtendedState {
    let mut values = Vec::with_capacity(s.len() + f.values.len());
    values.extend_from_slice(s.as_slice());
    values.extend_from_slice(&f.values);
    ExtendedState { values, raw_dim: s.len() }
}

/// Splits a flat extended vector back into its raw prefix and forecast.
pub fn split_extended(v: &[f64], raw_dim: usize, horizon: usize, channels: usize) -> Result<(&[f64], Forecast)> {
    if v.len() != raw_dim + horizon * channels {
        return Err(Error::shape(&[raw_dim + horizon * channels], &[v.len()]));
    }
    let (raw, tail) = v.split_at(raw_dim);
    Ok((raw, Forecast { values: tail.to_vec(), horizon, channels }))
}

/// A frozen forecaster with its configuration.
#[derive(Clone, Debug)]
pub struct Forecaster {
    pub config: ForecastConfig,
    pub network: Network,
}

impl Forecaster {
    pub fn new(config: ForecastConfig, network: Network) -> Result<Self> {
        config.validate()?;
        if network.input_shape() != [config.history_window, config.input_channels]
            || network.output_shape() != [config.output_len()]
        {
            return Err(Error::shape(&[config.history_window, config.input_channels], network.input_shape()));
        }
        Ok(Self { config, network })
    }

    pub fn forecast(&self, window: &[f64]) -> Result<Forecast> {
        forecast(&self.network, window, &self.config)
    }

    pub fn extend(&self, s: &RawState, window: &[f64]) -> Result<ExtendedState> {
        Ok(extend_state(s, &self.forecast(window)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{compose, TaskArrival};

    fn trace_from(channels: Vec<Vec<f64>>) -> WorkloadTrace {
        let mut cpu = channels;
        let net = cpu.pop().unwrap();
        compose(cpu, net, Vec::<TaskArrival>::new()).unwrap()
    }

    fn small_cfg() -> ForecastConfig {
        ForecastConfig {
            history_window: 8,
            horizon: 2,
            input_channels: 2,
            conv_channels: 4,
            kernel_width: 3,
            lstm_hidden: 8,
            train_epochs: 0,
            batch_size: 8,
            lr: 5e-3,
            seed: 9,
        }
    }

    #[test]
    fn sample_count_follows_sliding_window_formula() {
        let cfg = small_cfg();
        for horizon in [10, 19, 40] {
            let t = trace_from(vec![vec![0.1; horizon], vec![0.2; horizon]]);
            let d = build_dataset(&t, &cfg).unwrap();
            let n = horizon - 8 - 2 + 1;
            assert_eq!(d.len(), n);
            assert_eq!(d.validation.len(), n / 5);
        }
        let t = trace_from(vec![vec![0.1; 9], vec![0.2; 9]]);
        assert!(matches!(build_dataset(&t, &cfg), Err(Error::InsufficientData { needed: 10, available: 9 })));
    }

    #[test]
    fn samples_are_contiguous_slices() {
        let h = 30;
        let cpu: Vec<f64> = (0..h).map(|t| t as f64 / 100.0).collect();
        let net: Vec<f64> = (0..h).map(|t| 0.5 + t as f64 / 100.0).collect();
        let d = build_dataset(&trace_from(vec![cpu, net]), &small_cfg()).unwrap();
        for (s, sample) in d.train.iter().chain(&d.validation).enumerate() {
            for r in 0..8 {
                assert_eq!(sample.window[2 * r], (s + r) as f64 / 100.0);
            }
            assert_eq!(sample.target[2], (s + 9) as f64 / 100.0);
            assert_eq!(sample.target[3], 0.5 + (s + 9) as f64 / 100.0);
        }
    }

    #[test]
    fn constant_trace_targets_equal_window_tails() {
        let d = build_dataset(&trace_from(vec![vec![0.4; 20], vec![0.7; 20]]), &small_cfg()).unwrap();
        for s in d.train.iter().chain(&d.validation) {
            assert_eq!(s.target, s.window[s.window.len() - 2..].repeat(2));
        }
    }

    #[test]
    fn zero_epochs_leave_network_unchanged() {
        let cfg = small_cfg();
        let d = build_dataset(&trace_from(vec![vec![0.4; 20], vec![0.7; 20]]), &cfg).unwrap();
        let out = pretrain(&d, &cfg).unwrap();
        assert_eq!(out.network.params(), cfg.network().unwrap().params());
        assert!(out.curve.epochs.is_empty());
        assert_eq!(out.curve.best_epoch, None);
    }

    #[test]
    fn constant_series_is_learned() {
        let cfg = ForecastConfig { train_epochs: 150, ..small_cfg() };
        let d = build_dataset(&trace_from(vec![vec![0.4; 60], vec![0.7; 60]]), &cfg).unwrap();
        let out = pretrain(&d, &cfg).unwrap();
        let all: Vec<Sample> = d.train.iter().chain(&d.validation).cloned().collect();
        let m = dataset_mse(&out.network, &all).unwrap();
        assert!(m < 1e-6, "mse {m}");
    }

    #[test]
    fn sinusoid_beats_persistence_and_best_loss_is_monotone() {
        let period = 6.0;
        let wave = |phase: f64| -> Vec<f64> {
            (0..240).map(|t| 0.5 + 0.3 * libm::sin(2.0 * core::f64::consts::PI * t as f64 / period + phase)).collect()
        };
        let cfg = ForecastConfig { train_epochs: 40, ..small_cfg() };
        let d = build_dataset(&trace_from(vec![wave(0.0), wave(1.0)]), &cfg).unwrap();
        let out = pretrain(&d, &cfg).unwrap();
        let model = dataset_mse(&out.network, &d.validation).unwrap();
        let persistence = persistence_mse(&d.validation, 2, 2).unwrap();
        assert!(model < persistence, "model {model} persistence {persistence}");
        let best = out.curve.best_so_far();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(Some(model), out.curve.epochs[out.curve.best_epoch.unwrap()].val_mse);

        // one-step errors on held-out windows
        let f = Forecaster::new(cfg, out.network).unwrap();
        let (mut m1, mut p1) = (0.0, 0.0);
        for s in &d.validation {
            let y = f.forecast(&s.window).unwrap();
            let p = persistence_baseline(&s.window, 2, 2).unwrap();
            m1 += mse(y.row(0), &s.target[..2]);
            p1 += mse(p.row(0), &s.target[..2]);
        }
        assert!(m1 < p1);
    }

    #[test]
    fn pretraining_is_deterministic() {
        let cfg = ForecastConfig { train_epochs: 3, ..small_cfg() };
        let cpu: Vec<f64> = (0..50).map(|t| (t % 7) as f64 / 10.0).collect();
        let d = build_dataset(&trace_from(vec![cpu.clone(), cpu]), &cfg).unwrap();
        let a = pretrain(&d, &cfg).unwrap();
        let b = pretrain(&d, &cfg).unwrap();
        assert_eq!(a.network.params(), b.network.params());
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let cfg = ForecastConfig { train_epochs: 5, lr: 1e300, ..small_cfg() };
        let cpu: Vec<f64> = (0..50).map(|t| (t % 7) as f64 / 10.0).collect();
        let d = build_dataset(&trace_from(vec![cpu.clone(), cpu]), &cfg).unwrap();
        assert!(matches!(pretrain(&d, &cfg), Err(Error::Training { .. })));
    }

    #[test]
    fn forecast_shape_and_determinism() {
        let cfg = small_cfg();
        let net = cfg.network().unwrap();
        let w: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
        let a = forecast(&net, &w, &cfg).unwrap();
        assert_eq!((a.horizon, a.channels, a.values.len()), (2, 2, 4));
        assert_eq!(a, forecast(&net, &w, &cfg).unwrap());
        assert!(matches!(forecast(&net, &w[1..], &cfg), Err(Error::Shape { .. })));
    }

    #[test]
    fn persistence_examples() {
        let f = persistence_baseline(&[0.1, 0.2, 0.3, 0.5], 2, 2).unwrap();
        assert_eq!(f.values, vec![0.3, 0.5, 0.3, 0.5]);
        assert!(persistence_baseline(&[], 2, 2).is_err());
    }

    #[test]
    fn persistence_on_ramp_matches_closed_form() {
        let slope = 0.01;
        let cfg = ForecastConfig { horizon: 3, ..small_cfg() };
        let ramp: Vec<f64> = (0..40).map(|t| t as f64 * slope).collect();
        let d = build_dataset(&trace_from(vec![ramp.clone(), ramp]), &cfg).unwrap();
        let expected = (1..=3).map(|i| (i as f64 * slope).powi(2)).sum::<f64>() / 3.0;
        let got = persistence_mse(&d.train, 2, 3).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn extended_state_layout() {
        let s = RawState::from((0..20).map(|i| i as f64).collect::<Vec<_>>());
        let f = Forecast { values: (0..12).map(|i| -(i as f64)).collect(), horizon: 3, channels: 4 };
        let e = extend_state(&s, &f);
        assert_eq!(e.len(), 32);
        assert_eq!(e.raw(), s.as_slice());
        let (raw, back) = split_extended(e.as_slice(), 20, 3, 4).unwrap();
        assert_eq!(raw, s.as_slice());
        assert_eq!(back, f);
        assert!(split_extended(e.as_slice(), 21, 3, 4).is_err());

        let z = extend_state(&s, &Forecast::zeros(3, 4));
        assert!(z.lookahead().iter().all(|&v| v == 0.0));
        assert_eq!(z.raw(), s.as_slice());
    }
}
