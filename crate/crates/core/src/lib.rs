//! Proactive edge-cloud resource management: composite workload generation,
//! a tiered edge-cloud simulator, a CNN-LSTM load forecaster and a Double-DQN
//! orchestrator whose observation is extended with the forecast.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the command
//! line and threading live in the `lookahead` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod env;
pub mod error;
pub mod forecast;
pub mod nn;
pub mod seed;
pub mod train;
pub mod workload;

pub use error::{Error, Result};
