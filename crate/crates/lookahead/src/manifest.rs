//! Run manifests: everything needed to rerun a command and check that it
//! reproduces the same bytes.

use std::path::{Path, PathBuf};

use lookahead_core::train::Seeds;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::{self, FileDigest};

pub const FORMAT: &str = "lookahead-manifest";
pub const VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

/// A fully resolved command. Input paths are absolute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Job {
    GenTrace,
    Pretrain,
    Train { forecaster: Option<PathBuf> },
    Evaluate { agent: PathBuf, forecaster: Option<PathBuf> },
    Compare { baseline: PathBuf, hybrid: PathBuf },
    Gradcheck { instances: usize, seed: u64 },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::GenTrace => "gen-trace",
            Job::Pretrain => "pretrain",
            Job::Train { .. } => "train",
            Job::Evaluate { .. } => "evaluate",
            Job::Compare { .. } => "compare",
            Job::Gradcheck { .. } => "gradcheck",
        }
    }

    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            Job::Train { forecaster } => forecaster.iter().map(PathBuf::as_path).collect(),
            Job::Evaluate { agent, forecaster } => {
                let mut v = vec![agent.as_path()];
                v.extend(forecaster.as_deref());
                v
            }
            Job::Compare { baseline, hybrid } => vec![baseline, hybrid],
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub job: Job,
    /// Resolved configuration as TOML, for commands that take one.
    pub config: Option<String>,
    pub seeds: Option<Seeds>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<FileDigest>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fsio::read(path)?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })?;
        if m.format != FORMAT || m.version != VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("expected {FORMAT} v{VERSION}, found {} v{}", m.format, m.version),
            });
        }
        Ok(m)
    }

    /// Fails unless every recorded input still has its recorded digest.
    pub fn check_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = fsio::sha256_file(&input.path)?;
            if now != input.sha256 {
                return Err(Error::Replay(format!("input {} changed since the run", input.path.display())));
            }
        }
        Ok(())
    }

    /// Names of artifacts whose digests differ from `other`'s, or that
    /// either side lacks.
    pub fn artifact_mismatches(&self, other: &[FileDigest]) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.artifacts {
            match other.iter().find(|b| b.path == a.path) {
                Some(b) if b.sha256 == a.sha256 => {}
                Some(_) => out.push(format!("{} differs", a.path.display())),
                None => out.push(format!("{} missing", a.path.display())),
            }
        }
        for b in other {
            if !self.artifacts.iter().any(|a| a.path == b.path) {
                out.push(format!("{} unexpected", b.path.display()));
            }
        }
        out
    }
}
