use alloc::vec::Vec;

use super::network::Network;
use super::tensor::Tensor;
use crate::error::Result;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params_checked: usize,
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    /// Compares two gradient vectors entry by entry using
    /// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
    pub fn compare(analytic: &[f64], numeric: &[f64], tolerance: f64) -> Self {
        let mut worst = (0.0f64, 0usize);
        for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
            let denom = a.abs().max(n.abs()).max(RELATIVE_FLOOR);
            let err = (a - n).abs() / denom;
            // NaN never compares greater; treat it as the worst possible error
            if err.is_nan() || err > worst.0 {
                worst = (if err.is_nan() { f64::INFINITY } else { err }, i);
            }
        }
        let passed = analytic.len() == numeric.len() && worst.0 <= tolerance;
        Self { params_checked: analytic.len(), max_rel_error: worst.0, worst_param: worst.1, tolerance, passed }
    }
}

/// Fixed projection used as the scalar loss `sum_i w_i * y_i`.
pub fn probe_weights(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.5 * libm::sin(1.3 * i as f64 + 0.2)).collect()
}

/// Central finite-difference gradient of the probe loss.
pub fn numeric_gradient(net: &Network, input: &Tensor) -> Result<Vec<f64>> {
    let probe = probe_weights(net.output_shape().iter().product());
    let loss = |n: &Network| -> Result<f64> {
        let y = n.predict(input.data())?;
        Ok(y.iter().zip(&probe).map(|(a, b)| a * b).sum())
    };
    let mut work = net.clone();
    let base = net.params().to_vec();
    let mut params = base.clone();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        params[i] = base[i] + FD_STEP;
        work.set_params(&params)?;
        let plus = loss(&work)?;
        params[i] = base[i] - FD_STEP;
        work.set_params(&params)?;
        let minus = loss(&work)?;
        params[i] = base[i];
        grad.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(grad)
}

/// Analytic gradient of the probe loss via [`Network::backward`].
pub fn analytic_gradient(net: &Network, input: &Tensor) -> Result<Vec<f64>> {
    let (out, cache) = net.forward(input)?;
    let probe = Tensor::new(out.shape().to_vec(), probe_weights(out.len()))?;
    net.backward(&cache, &probe)
}

/// Compares backpropagated gradients against central finite differences.
pub fn gradient_check(net: &Network, input: &Tensor, tolerance: f64) -> Result<GradCheckReport> {
    let analytic = analytic_gradient(net, input)?;
    let numeric = numeric_gradient(net, input)?;
    Ok(GradCheckReport::compare(&analytic, &numeric, tolerance))
}
