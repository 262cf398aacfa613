//! Files, command line and experiment harness around `lookahead-core`.

pub mod artifacts;
pub mod checkpoint;
pub mod cli;
pub mod config_io;
pub mod error;
pub mod fsio;
pub mod gradcheck;
pub mod manifest;
pub mod run;
pub mod trace_io;

pub use error::{Error, Result};
