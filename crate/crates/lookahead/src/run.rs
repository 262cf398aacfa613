//! Command execution. Every command writes its artifacts and a manifest
//! into one output directory and touches nothing else.

use std::io::Write;
use std::path::{Path, PathBuf};

use lookahead_core::agent::GreedyPolicy;
use lookahead_core::forecast::Forecaster;
use lookahead_core::train::{
    self, compare, evaluate_episode, pretrain_forecaster, train_hybrid_with, EpisodeRecord, ExperimentConfig,
    MetricTable, Mode, Seeds, TrainOptions, TrainingReport,
};

use crate::artifacts::{self, EvaluationSummary};
use crate::checkpoint::{self, AgentCheckpoint, ForecasterCheckpoint};
use crate::config_io;
use crate::error::{Error, Result};
use crate::fsio::{self, FileDigest, OutDir};
use crate::gradcheck;
use crate::manifest::{self, Job, Manifest};
use crate::trace_io;

pub const REPORT_NAME: &str = "report.json";

/// Parsed command line, before defaults and overrides are applied.
#[derive(Clone, Debug, PartialEq)]
pub enum Request {
    GenTrace,
    Pretrain,
    Train { forecaster: Option<PathBuf> },
    Evaluate { agent: Option<PathBuf>, forecaster: Option<PathBuf> },
    Compare { baseline: Option<PathBuf>, hybrid: Option<PathBuf> },
    Gradcheck { instances: usize },
    Replay { manifest: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub request: Request,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| Error::io(path, e))
}

fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match path {
        Some(p) => absolute(p),
        None => Err(Error::MissingInput(what.into())),
    }
}

/// A directory argument stands for the report inside it.
fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(REPORT_NAME)
    } else {
        path.to_path_buf()
    }
}

fn load_config(inv: &Invocation) -> Result<ExperimentConfig> {
    let mut cfg = match &inv.config {
        Some(path) => config_io::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = inv.seed {
        cfg.seeds = Seeds::from_base(seed, cfg.seeds.eval.len());
    }
    if let Some(mode) = inv.mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Applies defaults and overrides, yielding the job and its config.
pub fn resolve(inv: &Invocation) -> Result<(Job, Option<ExperimentConfig>)> {
    Ok(match &inv.request {
        Request::GenTrace => (Job::GenTrace, Some(load_config(inv)?)),
        Request::Pretrain => (Job::Pretrain, Some(load_config(inv)?)),
        Request::Train { forecaster } => {
            let forecaster = forecaster.as_deref().map(absolute).transpose()?;
            (Job::Train { forecaster }, Some(load_config(inv)?))
        }
        Request::Evaluate { agent, forecaster } => {
            let agent = required(agent, "evaluate needs --agent")?;
            let mut cfg = load_config(inv)?;
            if inv.mode.is_none() {
                cfg.mode = checkpoint::load_agent(&agent)?.mode;
            }
            let forecaster = match (cfg.mode, forecaster) {
                (Mode::Hybrid, None) => return Err(Error::MissingInput("hybrid evaluation needs --forecaster".into())),
                (Mode::Baseline, Some(_)) => return Err(Error::Usage("baseline evaluation takes no --forecaster".into())),
                (_, f) => f.as_deref().map(absolute).transpose()?,
            };
            (Job::Evaluate { agent, forecaster }, Some(cfg))
        }
        Request::Compare { baseline, hybrid } => {
            let (b, h) = match (baseline, hybrid) {
                (Some(b), Some(h)) => (b, h),
                _ => return Err(Error::MissingInput("compare needs both --baseline and --hybrid".into())),
            };
            let baseline = required(&Some(report_path(b)), "baseline report")?;
            let hybrid = required(&Some(report_path(h)), "hybrid report")?;
            (Job::Compare { baseline, hybrid }, None)
        }
        Request::Gradcheck { instances } => (Job::Gradcheck { instances: *instances, seed: inv.seed.unwrap_or(0) }, None),
        Request::Replay { .. } => return Err(Error::Usage("replay is resolved from its manifest".into())),
    })
}

/// What a finished command leaves behind.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

pub fn run(inv: &Invocation, progress: &mut dyn Write) -> Result<Outcome> {
    if let Request::Replay { manifest } = &inv.request {
        return replay(manifest, &inv.out, progress);
    }
    let (job, cfg) = resolve(inv)?;
    execute(&job, cfg.as_ref(), &inv.out, progress)
}

/// Reruns a manifest's job into `out` and checks the artifacts match.
pub fn replay(path: &Path, out: &Path, progress: &mut dyn Write) -> Result<Outcome> {
    let original = Manifest::load(path)?;
    original.check_inputs()?;
    let cfg = original.config.as_deref().map(|text| config_io::parse(text, path)).transpose()?;
    let outcome = execute(&original.job, cfg.as_ref(), out, progress)?;
    let mismatches = original.artifact_mismatches(&outcome.manifest.artifacts);
    if !mismatches.is_empty() {
        return Err(Error::Replay(mismatches.join("; ")));
    }
    let _ = writeln!(progress, "replay: {} artifacts identical", original.artifacts.len());
    Ok(outcome)
}

/// Runs a resolved job. `cfg` is required exactly for jobs that use one.
pub fn execute(job: &Job, cfg: Option<&ExperimentConfig>, out: &Path, progress: &mut dyn Write) -> Result<Outcome> {
    let inputs = job.inputs().into_iter().map(FileDigest::of).collect::<Result<Vec<_>>>()?;
    let mut dir = OutDir::create(out)?;
    let config_text = cfg.map(config_io::echo);
    if let Some(text) = &config_text {
        dir.write(config_io::RESOLVED_NAME, text.as_bytes())?;
    }
    let need = || cfg.ok_or_else(|| Error::Usage(format!("{} needs a config", job.name())));
    let mut failure = None;
    match job {
        Job::GenTrace => gen_trace(need()?, &mut dir)?,
        Job::Pretrain => pretrain(need()?, &mut dir)?,
        Job::Train { forecaster } => train_cmd(need()?, forecaster.as_deref(), &mut dir, progress)?,
        Job::Evaluate { agent, forecaster } => evaluate_cmd(need()?, agent, forecaster.as_deref(), &mut dir)?,
        Job::Compare { baseline, hybrid } => compare_cmd(baseline, hybrid, &mut dir, progress)?,
        Job::Gradcheck { instances, seed } => failure = gradcheck_cmd(*instances, *seed, &mut dir, progress)?,
    }
    let manifest = Manifest {
        format: manifest::FORMAT.into(),
        version: manifest::VERSION,
        job: job.clone(),
        config: config_text,
        seeds: cfg.map(|c| c.seeds.clone()),
        inputs,
        artifacts: dir.written().to_vec(),
    };
    let manifest_path = dir.write_json(manifest::FILE_NAME, &manifest)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Outcome { manifest, manifest_path })
}

fn gen_trace(cfg: &ExperimentConfig, dir: &mut OutDir) -> Result<()> {
    dir.write("trace.txt", trace_io::to_string(&cfg.training_trace()?).as_bytes())?;
    dir.write("history.txt", trace_io::to_string(&cfg.pretrain_trace()?).as_bytes())?;
    Ok(())
}

fn write_forecaster(f: &Forecaster, curve: Option<&lookahead_core::forecast::LossCurve>, dir: &mut OutDir) -> Result<()> {
    dir.write_json("forecaster.json", &ForecasterCheckpoint::of(f, curve))?;
    if let Some(c) = curve {
        dir.write("loss_curve.csv", &artifacts::loss_curve_csv(c))?;
    }
    Ok(())
}

fn pretrain(cfg: &ExperimentConfig, dir: &mut OutDir) -> Result<()> {
    let (f, curve) = pretrain_forecaster(cfg)?;
    write_forecaster(&f, Some(&curve), dir)
}

fn train_cmd(cfg: &ExperimentConfig, forecaster: Option<&Path>, dir: &mut OutDir, progress: &mut dyn Write) -> Result<()> {
    let total = cfg.episodes;
    let mut observer = |r: &EpisodeRecord| {
        if (r.episode + 1) % 10 == 0 || r.episode + 1 == total {
            let _ = writeln!(progress, "episode {}/{total} reward {:.4} epsilon {:.4}", r.episode + 1, r.reward, r.epsilon);
        }
    };
    let outcome = match (cfg.mode, forecaster) {
        (Mode::Hybrid, Some(path)) => {
            let ckpt = checkpoint::load_forecaster(path)?;
            let f = ckpt.forecaster(cfg, path)?;
            train_hybrid_with(cfg, f, ckpt.curve, TrainOptions::default(), &mut observer)?
        }
        (Mode::Baseline, Some(_)) => return Err(Error::Usage("baseline training takes no --forecaster".into())),
        (_, None) => train::train(cfg, TrainOptions::default(), &mut observer)?,
    };
    if let Some(f) = &outcome.forecaster {
        write_forecaster(f, outcome.report.forecaster_curve.as_ref(), dir)?;
    }
    dir.write_json("agent.json", &AgentCheckpoint::of(&outcome.agent, cfg.mode))?;
    dir.write("episodes.csv", &artifacts::episodes_csv(&outcome.report.episodes))?;
    dir.write_json("evaluation.json", &EvaluationSummary::new(cfg.mode, outcome.report.evaluation.clone()))?;
    dir.write_json(REPORT_NAME, &outcome.report)?;
    Ok(())
}

/// Greedy evaluation with one thread per seed; the table is sorted by seed,
/// so scheduling order does not matter.
pub fn evaluate_parallel(
    policy: &GreedyPolicy,
    forecaster: Option<&Forecaster>,
    cfg: &ExperimentConfig,
    seeds: &[u64],
) -> Result<MetricTable> {
    let runs = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| s.spawn(move || evaluate_episode(policy, forecaster, cfg, cfg.mode, seed).map(|r| (seed, r))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect::<Result<Vec<_>, _>>()
    })?;
    Ok(MetricTable::from_runs(runs)?)
}

fn evaluate_cmd(cfg: &ExperimentConfig, agent: &Path, forecaster: Option<&Path>, dir: &mut OutDir) -> Result<()> {
    let policy = checkpoint::load_agent(agent)?.policy(cfg, agent)?;
    let f = forecaster.map(|p| checkpoint::load_forecaster(p)?.forecaster(cfg, p)).transpose()?;
    let table = evaluate_parallel(&policy, f.as_ref(), cfg, &cfg.seeds.eval)?;
    dir.write_json("evaluation.json", &EvaluationSummary::new(cfg.mode, table))?;
    Ok(())
}

fn load_report(path: &Path, mode: Mode) -> Result<TrainingReport> {
    let report: TrainingReport = serde_json::from_str(&fsio::read(path)?)
        .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })?;
    if report.mode != mode {
        return Err(Error::Usage(format!("{} holds a {} report, expected {}", path.display(), report.mode.name(), mode.name())));
    }
    Ok(report)
}

fn compare_cmd(baseline: &Path, hybrid: &Path, dir: &mut OutDir, progress: &mut dyn Write) -> Result<()> {
    let summary = compare(&load_report(baseline, Mode::Baseline)?, &load_report(hybrid, Mode::Hybrid)?)?;
    let table = summary.render();
    let _ = write!(progress, "{table}");
    dir.write("comparison.txt", table.as_bytes())?;
    dir.write_json("comparison.json", &summary)?;
    Ok(())
}

/// Writes the report; a failed check comes back as an error to raise after
/// the manifest is written.
fn gradcheck_cmd(instances: usize, seed: u64, dir: &mut OutDir, progress: &mut dyn Write) -> Result<Option<Error>> {
    if instances == 0 {
        return Err(Error::Usage("--instances must be at least 1".into()));
    }
    let report = gradcheck::run_suite(instances, seed)?;
    for kind in gradcheck::Kind::ALL {
        let cases: Vec<_> = report.cases.iter().filter(|c| c.kind == kind).collect();
        let worst = cases.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
        let passed = cases.iter().filter(|c| c.passed).count();
        let _ = writeln!(progress, "{kind:?}: {passed}/{} passed, max relative error {worst:.3e}", cases.len());
    }
    dir.write_json("gradcheck.json", &report)?;
    Ok((!report.passed).then(|| {
        let names: Vec<String> = report.failures().map(|c| format!("{:?}#{}", c.kind, c.instance)).collect();
        Error::GradCheck(names.join(", "))
    }))
}
