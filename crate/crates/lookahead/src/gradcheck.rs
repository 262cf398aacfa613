//! Randomized finite-difference checks for every layer kind and for the
//! full forecaster stack.

use lookahead_core::forecast::ForecastConfig;
use lookahead_core::nn::{gradient_check, Activation, LayerSpec, Network, Tensor};
use lookahead_core::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Dense,
    Conv1d,
    Lstm,
    Forecaster,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Dense, Kind::Conv1d, Kind::Lstm, Kind::Forecaster];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub kind: Kind,
    pub instance: usize,
    pub input_shape: Vec<usize>,
    pub params_checked: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tolerance: f64,
    pub seed: u64,
    pub instances: usize,
    pub passed: bool,
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

fn instance(kind: Kind, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<LayerSpec>) {
    match kind {
        Kind::Dense => {
            let (i, h, o) = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=4));
            let act = [Activation::Tanh, Activation::Sigmoid, Activation::Identity][rng.random_range(0..3)];
            (vec![i], vec![LayerSpec::dense(i, h), LayerSpec::activation(act), LayerSpec::dense(h, o)])
        }
        Kind::Conv1d => {
            let (c, o, k) = (rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4));
            (vec![k + rng.random_range(0..5), c], vec![LayerSpec::conv1d(c, o, k)])
        }
        Kind::Lstm => {
            let (c, h) = (rng.random_range(1..=3), rng.random_range(1..=5));
            (vec![rng.random_range(1..=6), c], vec![LayerSpec::lstm(c, h)])
        }
        Kind::Forecaster => {
            let kernel = rng.random_range(2..=3);
            let fc = ForecastConfig {
                history_window: kernel + rng.random_range(1..=5),
                horizon: rng.random_range(1..=3),
                input_channels: rng.random_range(2..=3),
                conv_channels: rng.random_range(2..=4),
                kernel_width: kernel,
                lstm_hidden: rng.random_range(2..=5),
                ..ForecastConfig::default()
            };
            (vec![fc.history_window, fc.input_channels], fc.layers())
        }
    }
}

/// `instances` random networks per kind, each checked at [`TOLERANCE`].
pub fn run_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut cases = Vec::new();
    for (k, kind) in Kind::ALL.into_iter().enumerate() {
        for i in 0..instances {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (k * 1_000_000 + i) as u64));
            let (shape, layers) = instance(kind, &mut rng);
            let net = Network::new(shape.clone(), layers, &mut rng)?;
            let data = (0..shape.iter().product()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = Tensor::new(shape.clone(), data)?;
            let r = gradient_check(&net, &x, TOLERANCE)?;
            cases.push(CaseReport {
                kind,
                instance: i,
                input_shape: shape,
                params_checked: r.params_checked,
                max_rel_error: r.max_rel_error,
                passed: r.passed,
            });
        }
    }
    let passed = cases.iter().all(|c| c.passed);
    Ok(SuiteReport { tolerance: TOLERANCE, seed, instances, passed, cases })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_suite(3, 5).unwrap();
        assert!(a.passed, "{:?}", a.failures().collect::<Vec<_>>());
        assert_eq!(a.cases.len(), 12);
        assert_eq!(a, run_suite(3, 5).unwrap());
        for kind in Kind::ALL {
            assert_eq!(a.cases.iter().filter(|c| c.kind == kind).count(), 3);
        }
    }
}
