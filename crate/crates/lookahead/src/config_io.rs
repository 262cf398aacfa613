//! TOML experiment configuration.
//!
//! Every key is optional; missing keys take their defaults. Sections mirror
//! [`ExperimentConfig`]: top-level `mode`, `episodes`, `steps`, then
//! `[seeds]`, `[workload.cpu]`, `[workload.congestion]`,
//! `[workload.mobility]`, `[env]` (with `[[env.nodes]]` and `[env.reward]`),
//! `[forecast]` and `[agent]`.

use std::path::Path;

use lookahead_core::train::ExperimentConfig;

use crate::error::{Error, Result};

pub const RESOLVED_NAME: &str = "config.resolved.toml";

/// Parses and validates; `path` only labels errors.
pub fn parse(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse { path: path.to_path_buf(), line, message: e.message().trim().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// Fully resolved TOML, defaults included.
pub fn echo(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes to TOML")
}
