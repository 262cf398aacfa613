use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lookahead_core::train::Mode;

use crate::run::{Invocation, Request};

#[derive(Debug, Parser)]
#[command(name = "lookahead", version, about = "Proactive edge-cloud orchestration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Derive every named seed from this value.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Hybrid => Mode::Hybrid,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the training and pretraining workload traces.
    GenTrace(Common),
    /// Pretrain the workload forecaster.
    Pretrain(Common),
    /// Train an agent and evaluate it greedily.
    Train {
        #[command(flatten)]
        common: Common,
        /// Pretrained forecaster checkpoint for hybrid mode.
        #[arg(long, value_name = "PATH")]
        forecaster: Option<PathBuf>,
    },
    /// Evaluate a trained agent on the evaluation seeds.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        agent: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        forecaster: Option<PathBuf>,
    },
    /// Compare a baseline and a hybrid training report.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Baseline `report.json` or the run directory holding it.
        #[arg(long, value_name = "PATH")]
        baseline: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        hybrid: Option<PathBuf>,
    },
    /// Finite-difference gradient checks for every layer kind.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        instances: usize,
    },
    /// Rerun a manifest and verify byte-identical artifacts.
    Replay {
        #[arg(long, value_name = "PATH")]
        manifest: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

impl Cli {
    pub fn invocation(self) -> Invocation {
        let (request, common) = match self.command {
            Command::GenTrace(c) => (Request::GenTrace, c),
            Command::Pretrain(c) => (Request::Pretrain, c),
            Command::Train { common, forecaster } => (Request::Train { forecaster }, common),
            Command::Evaluate { common, agent, forecaster } => (Request::Evaluate { agent, forecaster }, common),
            Command::Compare { common, baseline, hybrid } => (Request::Compare { baseline, hybrid }, common),
            Command::Gradcheck { common, instances } => (Request::Gradcheck { instances }, common),
            Command::Replay { manifest, out } => {
                return Invocation { request: Request::Replay { manifest }, config: None, out, seed: None, mode: None }
            }
        };
        Invocation { request, config: common.config, out: common.out, seed: common.seed, mode: common.mode.map(Mode::from) }
    }
}
