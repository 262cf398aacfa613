//! Small neural-network substrate: dense, 1-D convolution, LSTM and
//! element-wise activation layers over a flat `f64` parameter vector, with
//! hand-written backward passes and an Adam optimizer.

mod gradcheck;
mod layers;
mod math;
mod network;
mod tensor;

pub use gradcheck::{analytic_gradient, gradient_check, numeric_gradient, probe_weights, GradCheckReport, FD_STEP, RELATIVE_FLOOR};
pub use layers::{Activation, LayerSpec, LstmCell, LstmGates};
pub use network::{AdamParams, AdamState, Cache, Network};
pub use tensor::Tensor;
