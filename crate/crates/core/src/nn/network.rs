use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{self, LayerCache, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    fn new(n: usize) -> Self {
        Self { step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }
}

/// A feed-forward stack of layers over one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    params: Vec<f64>,
    adam: AdamState,
    // bumped on every parameter mutation; caches from older versions are stale
    version: u64,
}

/// Forward-pass intermediates consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Cache {
    version: u64,
    layers: Vec<LayerCache>,
}

impl Network {
    /// Builds a network with freshly initialised parameters.
    pub fn new<R: Rng + ?Sized>(input_shape: Vec<usize>, layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let mut net = Self::with_params(input_shape, layers, Vec::new(), true)?;
        for (i, layer) in net.layers.iter().enumerate() {
            let (start, end) = (net.offsets[i], net.offsets[i + 1]);
            layer.init(&mut net.params[start..end], rng);
        }
        Ok(net)
    }

    /// Rebuilds a network from stored parameters; the parameter count must
    /// match the architecture.
    pub fn from_params(input_shape: Vec<usize>, layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        Self::with_params(input_shape, layers, params, false)
    }

    fn with_params(input_shape: Vec<usize>, layers: Vec<LayerSpec>, params: Vec<f64>, fresh: bool) -> Result<Self> {
        if input_shape.is_empty() || input_shape.iter().any(|&d| d == 0) {
            return Err(Error::invalid("input_shape", "dimensions must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::invalid("layers", "network needs at least one layer"));
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut shape = input_shape.clone();
        let mut total = 0;
        offsets.push(0);
        for layer in &layers {
            shape = layer.output_shape(&shape)?;
            shapes.push(shape.clone());
            total += layer.param_count();
            offsets.push(total);
        }
        let params = if fresh { vec![0.0; total] } else { params };
        if params.len() != total {
            return Err(Error::shape(&[total], &[params.len()]));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Self { input_shape, layers, shapes, offsets, adam: AdamState::new(total), params, version: 0 })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Parameters belonging to layer `index`.
    pub fn layer_params(&self, index: usize) -> &[f64] {
        &self.params[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn set_adam_state(&mut self, state: AdamState) -> Result<()> {
        if state.m.len() != self.params.len() || state.v.len() != self.params.len() {
            return Err(Error::shape(&[self.params.len()], &[state.m.len()]));
        }
        self.adam = state;
        Ok(())
    }

    /// Replaces all parameters (optimizer state is kept).
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::shape(&[self.params.len()], &[params.len()]));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        self.params.copy_from_slice(params);
        self.version += 1;
        Ok(())
    }

    /// Mutable access to layer parameters, for hand-set weights in tests and tools.
    pub fn layer_params_mut(&mut self, index: usize) -> &mut [f64] {
        self.version += 1;
        let (start, end) = (self.offsets[index], self.offsets[index + 1]);
        &mut self.params[start..end]
    }

    /// Same layer list and input shape.
    pub fn same_architecture(&self, other: &Network) -> bool {
        self.input_shape == other.input_shape && self.layers == other.layers
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        if shape != self.input_shape.as_slice() {
            return Err(Error::shape(&self.input_shape, shape));
        }
        Ok(())
    }

    /// Forward pass keeping intermediates for [`Network::backward`].
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Cache)> {
        self.check_input(input.shape())?;
        let mut x = input.data().to_vec();
        let mut shape = self.input_shape.as_slice();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let p = self.layer_params(i);
            let (y, cache) = match *layer {
                LayerSpec::Dense { inputs, outputs } => {
                    let y = layers::dense_forward(p, inputs, outputs, &x);
                    (y, LayerCache::Dense { input: x })
                }
                LayerSpec::Conv1d { in_channels, out_channels, kernel } => {
                    let len = shape[0];
                    let y = layers::conv1d_forward(p, in_channels, out_channels, kernel, &x, len);
                    (y, LayerCache::Conv1d { input: x, len })
                }
                LayerSpec::Lstm { inputs, hidden } => {
                    let (y, trace) = layers::lstm_forward(p, inputs, hidden, &x, shape[0]);
                    (y, LayerCache::Lstm(trace))
                }
                LayerSpec::Activation { activation } => {
                    let y = layers::activation_forward(activation, &x);
                    (y.clone(), LayerCache::Activation { input: x, output: y })
                }
            };
            caches.push(cache);
            x = y;
            shape = &self.shapes[i];
        }
        check_finite(&x)?;
        let out = Tensor::from_parts_unchecked(self.output_shape().to_vec(), x);
        Ok((out, Cache { version: self.version, layers: caches }))
    }

    /// Forward pass on a flat input without keeping intermediates.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let expected: usize = self.input_shape.iter().product();
        if input.len() != expected {
            return Err(Error::shape(&self.input_shape, &[input.len()]));
        }
        let mut x = input.to_vec();
        let mut shape = self.input_shape.as_slice();
        for (i, layer) in self.layers.iter().enumerate() {
            let p = self.layer_params(i);
            x = match *layer {
                LayerSpec::Dense { inputs, outputs } => layers::dense_forward(p, inputs, outputs, &x),
                LayerSpec::Conv1d { in_channels, out_channels, kernel } => {
                    layers::conv1d_forward(p, in_channels, out_channels, kernel, &x, shape[0])
                }
                LayerSpec::Lstm { inputs, hidden } => layers::lstm_forward(p, inputs, hidden, &x, shape[0]).0,
                LayerSpec::Activation { activation } => layers::activation_forward(activation, &x),
            };
            shape = &self.shapes[i];
        }
        check_finite(&x)?;
        Ok(x)
    }

    /// Gradient of `<output_grad, output>` with respect to the parameters.
    pub fn backward(&self, cache: &Cache, output_grad: &Tensor) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.params.len()];
        self.backward_accumulate(cache, output_grad.data(), &mut grad)?;
        Ok(grad)
    }

    /// Like [`Network::backward`] but adds into an existing gradient buffer.
    pub fn backward_accumulate(&self, cache: &Cache, output_grad: &[f64], grad: &mut [f64]) -> Result<()> {
        if cache.version != self.version || cache.layers.len() != self.layers.len() {
            return Err(Error::Usage("cache does not belong to the current parameters".into()));
        }
        let out_len: usize = self.output_shape().iter().product();
        if output_grad.len() != out_len {
            return Err(Error::shape(self.output_shape(), &[output_grad.len()]));
        }
        if grad.len() != self.params.len() {
            return Err(Error::shape(&[self.params.len()], &[grad.len()]));
        }
        let mut dy = output_grad.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (start, end) = (self.offsets[i], self.offsets[i + 1]);
            let p = &self.params[start..end];
            let g = &mut grad[start..end];
            dy = match (*layer, &cache.layers[i]) {
                (LayerSpec::Dense { inputs, outputs }, LayerCache::Dense { input }) => {
                    layers::dense_backward(p, inputs, outputs, input, &dy, g)
                }
                (LayerSpec::Conv1d { in_channels, out_channels, kernel }, LayerCache::Conv1d { input, len }) => {
                    layers::conv1d_backward(p, in_channels, out_channels, kernel, input, *len, &dy, g)
                }
                (LayerSpec::Lstm { inputs, hidden }, LayerCache::Lstm(trace)) => {
                    layers::lstm_backward(p, inputs, hidden, trace, &dy, g)
                }
                (LayerSpec::Activation { activation }, LayerCache::Activation { input, output }) => {
                    layers::activation_backward(activation, input, output, &dy)
                }
                _ => return Err(Error::Usage("cache layout does not match network".into())),
            };
        }
        Ok(())
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grad: &[f64], hp: &AdamParams) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::shape(&[self.params.len()], &[grad.len()]));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(alloc::format!("non-finite gradient at parameter {i}")));
        }
        let st = &mut self.adam;
        st.step += 1;
        let t = st.step as f64;
        let bc1 = 1.0 - libm::pow(hp.beta1, t);
        let bc2 = 1.0 - libm::pow(hp.beta2, t);
        for ((p, &g), (m, v)) in self.params.iter_mut().zip(grad).zip(st.m.iter_mut().zip(st.v.iter_mut())) {
            *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
            *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= hp.lr * m_hat / (libm::sqrt(v_hat) + hp.eps);
        }
        self.version += 1;
        Ok(())
    }

    /// `self <- tau * source + (1 - tau) * self`, parameter-wise.
    pub fn blend_from(&mut self, source: &Network, tau: f64) -> Result<()> {
        if !self.same_architecture(source) {
            return Err(Error::Usage("blend between different architectures".into()));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid("tau", "must lie in [0, 1]"));
        }
        for (t, &s) in self.params.iter_mut().zip(&source.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
        self.version += 1;
        Ok(())
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("non-finite network output".into()))
    }
}
