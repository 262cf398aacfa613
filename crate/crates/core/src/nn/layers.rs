use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::math::{axpy, dot, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// One layer of a [`Network`](super::Network).
///
/// Sequence tensors are `[len, channels]`; vector tensors are `[n]`.
/// `Conv1d` uses valid padding and stride 1. `Lstm` consumes a sequence and
/// emits its final hidden state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv1d { in_channels: usize, out_channels: usize, kernel: usize },
    Lstm { inputs: usize, hidden: usize },
    Activation { activation: Activation },
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs }
    }

    pub fn conv1d(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerSpec::Conv1d { in_channels, out_channels, kernel }
    }

    pub fn lstm(inputs: usize, hidden: usize) -> Self {
        LayerSpec::Lstm { inputs, hidden }
    }

    pub fn activation(activation: Activation) -> Self {
        LayerSpec::Activation { activation }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, outputs } => outputs * inputs + outputs,
            LayerSpec::Conv1d { in_channels, out_channels, kernel } => out_channels * kernel * in_channels + out_channels,
            LayerSpec::Lstm { inputs, hidden } => 4 * hidden * (inputs + hidden) + 4 * hidden,
            LayerSpec::Activation { .. } => 0,
        }
    }

    /// Output shape for `input`, or a shape error.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                positive(&[inputs, outputs])?;
                if input != [inputs] {
                    return Err(Error::shape(&[inputs], input));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel } => {
                positive(&[in_channels, out_channels, kernel])?;
                match input {
                    [len, ch] if *ch == in_channels && kernel <= *len => Ok(vec![len - kernel + 1, out_channels]),
                    _ => Err(Error::shape(&[kernel.max(input.first().copied().unwrap_or(0)), in_channels], input)),
                }
            }
            LayerSpec::Lstm { inputs, hidden } => {
                positive(&[inputs, hidden])?;
                match input {
                    [len, ch] if *ch == inputs && *len > 0 => Ok(vec![hidden]),
                    _ => Err(Error::shape(&[input.first().copied().unwrap_or(1).max(1), inputs], input)),
                }
            }
            LayerSpec::Activation { .. } => Ok(input.to_vec()),
        }
    }

    pub(crate) fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                let bound = libm::sqrt(6.0 / (inputs + outputs) as f64);
                let (w, b) = params.split_at_mut(outputs * inputs);
                w.iter_mut().for_each(|p| *p = rng.random_range(-bound..bound));
                b.fill(0.0);
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel } => {
                let bound = libm::sqrt(6.0 / ((in_channels + out_channels) * kernel) as f64);
                let (w, b) = params.split_at_mut(out_channels * kernel * in_channels);
                w.iter_mut().for_each(|p| *p = rng.random_range(-bound..bound));
                b.fill(0.0);
            }
            LayerSpec::Lstm { inputs, hidden } => {
                let bound = 1.0 / libm::sqrt(hidden as f64);
                let weights = 4 * hidden * (inputs + hidden);
                let (w, b) = params.split_at_mut(weights);
                w.iter_mut().for_each(|p| *p = rng.random_range(-bound..bound));
                b.fill(0.0);
                // forget gate
                b[hidden..2 * hidden].fill(1.0);
            }
            LayerSpec::Activation { .. } => {}
        }
    }
}

fn positive(dims: &[usize]) -> Result<()> {
    if dims.iter().all(|&d| d > 0) {
        Ok(())
    } else {
        Err(Error::invalid("layer", "dimensions must be positive"))
    }
}

/// Intermediates kept from a forward pass.
#[derive(Debug, Clone)]
pub(crate) enum LayerCache {
    Dense { input: Vec<f64> },
    Conv1d { input: Vec<f64>, len: usize },
    Lstm(LstmTrace),
    Activation { input: Vec<f64>, output: Vec<f64> },
}

// Dense: W is [outputs, inputs] row-major followed by b.

pub(crate) fn dense_forward(params: &[f64], inputs: usize, outputs: usize, x: &[f64]) -> Vec<f64> {
    let (w, b) = params.split_at(outputs * inputs);
    w.chunks_exact(inputs).zip(b).map(|(row, &bias)| bias + dot(row, x)).collect()
}

pub(crate) fn dense_backward(
    params: &[f64],
    inputs: usize,
    outputs: usize,
    x: &[f64],
    dy: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let (w, _) = params.split_at(outputs * inputs);
    let (gw, gb) = grad.split_at_mut(outputs * inputs);
    let mut dx = vec![0.0; inputs];
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        gb[o] += g;
        axpy(g, x, &mut gw[o * inputs..(o + 1) * inputs]);
        axpy(g, &w[o * inputs..(o + 1) * inputs], &mut dx);
    }
    dx
}

// Conv1d: W is [out, kernel, in] row-major followed by b.

pub(crate) fn conv1d_forward(
    params: &[f64],
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    x: &[f64],
    len: usize,
) -> Vec<f64> {
    let (w, b) = params.split_at(out_ch * kernel * in_ch);
    let out_len = len - kernel + 1;
    let span = kernel * in_ch;
    let mut y = Vec::with_capacity(out_len * out_ch);
    for t in 0..out_len {
        let patch = &x[t * in_ch..t * in_ch + span];
        for o in 0..out_ch {
            y.push(b[o] + dot(&w[o * span..(o + 1) * span], patch));
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward(
    params: &[f64],
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    x: &[f64],
    len: usize,
    dy: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let (w, _) = params.split_at(out_ch * kernel * in_ch);
    let (gw, gb) = grad.split_at_mut(out_ch * kernel * in_ch);
    let out_len = len - kernel + 1;
    let span = kernel * in_ch;
    let mut dx = vec![0.0; len * in_ch];
    for t in 0..out_len {
        let patch = &x[t * in_ch..t * in_ch + span];
        for o in 0..out_ch {
            let g = dy[t * out_ch + o];
            gb[o] += g;
            axpy(g, patch, &mut gw[o * span..(o + 1) * span]);
            axpy(g, &w[o * span..(o + 1) * span], &mut dx[t * in_ch..t * in_ch + span]);
        }
    }
    dx
}

/// Parameter view of an LSTM layer: input weights `W` `[4h, inputs]`,
/// recurrent weights `U` `[4h, h]` and bias `[4h]`. Gate order is
/// input, forget, candidate, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmCell<'a> {
    pub inputs: usize,
    pub hidden: usize,
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
}

/// Post-activation gate values of one LSTM step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmGates {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
}

impl<'a> LstmCell<'a> {
    pub fn from_params(params: &'a [f64], inputs: usize, hidden: usize) -> Self {
        let (w, rest) = params.split_at(4 * hidden * inputs);
        let (u, b) = rest.split_at(4 * hidden * hidden);
        Self { inputs, hidden, w, u, b }
    }

    /// One step of the standard cell:
    /// `c = f * c_prev + i * g`, `h = o * tanh(c)`.
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, LstmGates) {
        let h = self.hidden;
        let mut z = vec![0.0; 4 * h];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = self.b[r]
                + dot(&self.w[r * self.inputs..(r + 1) * self.inputs], x)
                + dot(&self.u[r * h..(r + 1) * h], h_prev);
        }
        let gates = LstmGates {
            input: z[..h].iter().map(|&v| sigmoid(v)).collect(),
            forget: z[h..2 * h].iter().map(|&v| sigmoid(v)).collect(),
            candidate: z[2 * h..3 * h].iter().map(|&v| libm::tanh(v)).collect(),
            output: z[3 * h..].iter().map(|&v| sigmoid(v)).collect(),
        };
        let c: Vec<f64> = (0..h)
            .map(|j| gates.forget[j] * c_prev[j] + gates.input[j] * gates.candidate[j])
            .collect();
        let hn = (0..h).map(|j| gates.output[j] * libm::tanh(c[j])).collect();
        (hn, c, gates)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LstmTrace {
    len: usize,
    xs: Vec<f64>,
    // hs[t], cs[t] are the states *before* step t; entry len is the final state.
    hs: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    gates: Vec<LstmGates>,
}

pub(crate) fn lstm_forward(params: &[f64], inputs: usize, hidden: usize, x: &[f64], len: usize) -> (Vec<f64>, LstmTrace) {
    let cell = LstmCell::from_params(params, inputs, hidden);
    let mut hs = Vec::with_capacity(len + 1);
    let mut cs = Vec::with_capacity(len + 1);
    let mut gates = Vec::with_capacity(len);
    hs.push(vec![0.0; hidden]);
    cs.push(vec![0.0; hidden]);
    for t in 0..len {
        let (h, c, g) = cell.step(&x[t * inputs..(t + 1) * inputs], &hs[t], &cs[t]);
        hs.push(h);
        cs.push(c);
        gates.push(g);
    }
    let out = hs[len].clone();
    (out, LstmTrace { len, xs: x.to_vec(), hs, cs, gates })
}

/// Backpropagation through time from a gradient on the final hidden state.
pub(crate) fn lstm_backward(
    params: &[f64],
    inputs: usize,
    hidden: usize,
    trace: &LstmTrace,
    dh_out: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let cell = LstmCell::from_params(params, inputs, hidden);
    let h = hidden;
    let (gw, rest) = grad.split_at_mut(4 * h * inputs);
    let (gu, gb) = rest.split_at_mut(4 * h * h);
    let mut dx = vec![0.0; trace.len * inputs];
    let mut dh = dh_out.to_vec();
    let mut dc = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];

    for t in (0..trace.len).rev() {
        let g = &trace.gates[t];
        let c = &trace.cs[t + 1];
        let c_prev = &trace.cs[t];
        for j in 0..h {
            let tc = libm::tanh(c[j]);
            let d_o = dh[j] * tc;
            let dcj = dc[j] + dh[j] * g.output[j] * (1.0 - tc * tc);
            let d_i = dcj * g.candidate[j];
            let d_g = dcj * g.input[j];
            let d_f = dcj * c_prev[j];
            dc[j] = dcj * g.forget[j];
            dz[j] = d_i * g.input[j] * (1.0 - g.input[j]);
            dz[h + j] = d_f * g.forget[j] * (1.0 - g.forget[j]);
            dz[2 * h + j] = d_g * (1.0 - g.candidate[j] * g.candidate[j]);
            dz[3 * h + j] = d_o * g.output[j] * (1.0 - g.output[j]);
        }
        let xt = &trace.xs[t * inputs..(t + 1) * inputs];
        let h_prev = &trace.hs[t];
        let dxt = &mut dx[t * inputs..(t + 1) * inputs];
        let mut dh_prev = vec![0.0; h];
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[r] += d;
            axpy(d, xt, &mut gw[r * inputs..(r + 1) * inputs]);
            axpy(d, h_prev, &mut gu[r * h..(r + 1) * h]);
            axpy(d, &cell.w[r * inputs..(r + 1) * inputs], dxt);
            axpy(d, &cell.u[r * h..(r + 1) * h], &mut dh_prev);
        }
        dh = dh_prev;
    }
    dx
}

pub(crate) fn activation_forward(a: Activation, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| a.apply(v)).collect()
}

pub(crate) fn activation_backward(a: Activation, x: &[f64], y: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .zip(dy)
        .map(|((&xi, &yi), &g)| g * a.derivative(xi, yi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_counts() {
        assert_eq!(LayerSpec::dense(3, 2).param_count(), 8);
        assert_eq!(LayerSpec::conv1d(3, 4, 5).param_count(), 64);
        assert_eq!(LayerSpec::lstm(2, 3).param_count(), 4 * 3 * 5 + 12);
        assert_eq!(LayerSpec::activation(Activation::Relu).param_count(), 0);
    }

    #[test]
    fn shape_inference() {
        assert_eq!(LayerSpec::conv1d(3, 4, 5).output_shape(&[10, 3]).unwrap(), vec![6, 4]);
        assert!(LayerSpec::conv1d(3, 4, 5).output_shape(&[4, 3]).is_err());
        assert_eq!(LayerSpec::lstm(4, 7).output_shape(&[6, 4]).unwrap(), vec![7]);
        assert!(LayerSpec::dense(3, 1).output_shape(&[4]).is_err());
        assert!(LayerSpec::dense(3, 1).output_shape(&[1, 3]).is_err());
    }

    #[test]
    fn lstm_saturated_forget_gate_preserves_cell() {
        // zero weights, x = 0: gates reduce to sigmoid/tanh of the biases
        let (inputs, hidden) = (2, 3);
        let mut params = vec![0.0; LayerSpec::lstm(inputs, hidden).param_count()];
        let bias = params.len() - 4 * hidden;
        params[bias..bias + hidden].fill(-40.0); // input gate closed
        params[bias + hidden..bias + 2 * hidden].fill(40.0); // forget gate open
        let cell = LstmCell::from_params(&params, inputs, hidden);
        let c_prev = [0.7, -1.2, 0.05];
        let h_prev = [0.3, 0.1, -0.4];
        let (h, c, gates) = cell.step(&[0.0, 0.0], &h_prev, &c_prev);
        assert_eq!(gates.forget, vec![1.0; 3]);
        assert_eq!(c, c_prev.to_vec());
        // output gate = sigmoid(0) = 0.5
        for j in 0..3 {
            assert!((h[j] - 0.5 * libm::tanh(c_prev[j])).abs() < 1e-15);
        }
    }
}
