//! Artifact schemas. Column orders are fixed; changing them bumps
//! [`SCHEMA_VERSION`].

use lookahead_core::forecast::LossCurve;
use lookahead_core::train::{EpisodeRecord, MetricTable, Mode};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const EPISODE_COLUMNS: [&str; 10] =
    ["episode", "reward", "latency", "energy", "cost", "throughput", "utilization", "makespan", "epsilon", "td_loss"];

pub const LOSS_COLUMNS: [&str; 3] = ["epoch", "train_mse", "val_mse"];

#[derive(Serialize)]
struct EpisodeRow {
    episode: usize,
    reward: f64,
    latency: f64,
    energy: f64,
    cost: f64,
    throughput: f64,
    utilization: f64,
    makespan: f64,
    epsilon: f64,
    td_loss: Option<f64>,
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    train_mse: f64,
    val_mse: Option<f64>,
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("row serializes");
    }
    w.into_inner().expect("in-memory writer")
}

/// Per-episode training metrics; `td_loss` is empty before learning starts.
pub fn episodes_csv(records: &[EpisodeRecord]) -> Vec<u8> {
    csv_bytes(records.iter().map(|r| EpisodeRow {
        episode: r.episode,
        reward: r.reward,
        latency: r.latency,
        energy: r.energy,
        cost: r.cost,
        throughput: r.throughput,
        utilization: r.utilization,
        makespan: r.makespan,
        epsilon: r.epsilon,
        td_loss: r.td_loss,
    }))
}

/// Forecaster loss per epoch; `val_mse` is empty without a validation split.
pub fn loss_curve_csv(curve: &LossCurve) -> Vec<u8> {
    csv_bytes(curve.epochs.iter().map(|e| LossRow { epoch: e.epoch, train_mse: e.train_mse, val_mse: e.val_mse }))
}

/// Contents of `evaluation.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(flatten)]
    pub table: MetricTable,
}

impl EvaluationSummary {
    pub fn new(mode: Mode, table: MetricTable) -> Self {
        Self { schema_version: SCHEMA_VERSION, mode, table }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lookahead_core::forecast::EpochLoss;

    fn record(episode: usize, td_loss: Option<f64>) -> EpisodeRecord {
        EpisodeRecord {
            episode,
            reward: -1.5,
            latency: 0.25,
            energy: 0.5,
            cost: 0.75,
            throughput: 0.1,
            utilization: 0.2,
            makespan: 3.0,
            epsilon: 1.0,
            td_loss,
            steps: 10,
            completed: 1,
            dropped: 0,
            violations: 0,
        }
    }

    #[test]
    fn episode_csv_layout() {
        let text = String::from_utf8(episodes_csv(&[record(0, None), record(1, Some(0.125))])).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EPISODE_COLUMNS.join(","));
        assert_eq!(lines[1], "0,-1.5,0.25,0.5,0.75,0.1,0.2,3.0,1.0,");
        assert_eq!(lines[2], "1,-1.5,0.25,0.5,0.75,0.1,0.2,3.0,1.0,0.125");
    }

    #[test]
    fn loss_csv_layout() {
        let curve = LossCurve {
            epochs: vec![
                EpochLoss { epoch: 0, train_mse: 0.5, val_mse: Some(0.25) },
                EpochLoss { epoch: 1, train_mse: 0.4, val_mse: None },
            ],
            best_epoch: Some(0),
        };
        let text = String::from_utf8(loss_curve_csv(&curve)).unwrap();
        assert_eq!(text, "epoch,train_mse,val_mse\n0,0.5,0.25\n1,0.4,\n");
    }

    #[test]
    fn csv_floats_round_trip() {
        let mut r = record(0, Some(0.1 + 0.2));
        r.reward = -1.0 / 3.0;
        let text = String::from_utf8(episodes_csv(&[r.clone()])).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let row = rd.records().next().unwrap().unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), r.reward);
        assert_eq!(row[9].parse::<f64>().unwrap(), r.td_loss.unwrap());
    }
}
