//! Simulation and text-classification studies built from the library
//! pieces: the oracle minimum-model-size study, the comparison with SAFE
//! and strong rules, and screening-accelerated sentiment classification.
//!
//! Each run returns its per-trial [`ExperimentRecord`]s plus a summary
//! table. Trials draw every random quantity from sub-streams of a seed
//! derived from the master seed, so any record can be regenerated alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub mod compare;
pub mod config;
pub mod oracle;
pub mod plot;
pub mod sentiment;
pub mod stats;

pub use compare::{run_screening_comparison, CompareRun, CompareSummaryRow};
pub use config::{BetaGenerator, DRule, ExperimentConfig, SentimentConfig};
pub use oracle::{run_oracle_mms, OracleRun, OracleSummaryRow};
pub use sentiment::{run_sentiment, SentimentRun, SentimentSummaryRow};
pub use stats::{aggregate, BoxStats, Summary};

/// One row of a per-trial table. Fields that do not apply to an
/// experiment stay `None` (empty in CSV).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: usize,
    pub trial_seed: u64,
    pub method: String,
    pub alpha: Option<f64>,
    pub mu_target: Option<f64>,
    pub mu_achieved: Option<f64>,
    pub e: Option<f64>,
    pub lambda: Option<f64>,
    /// Position on the λ grid, largest λ first.
    pub lambda_index: Option<usize>,
    pub mms: Option<usize>,
    pub detection_rate: Option<f64>,
    pub post_screen_size: Option<usize>,
    pub active_size: Option<usize>,
    pub kkt_residual: Option<f64>,
    pub violations: Option<usize>,
    pub train_tp: Option<f64>,
    pub test_tp: Option<f64>,
    pub screen_seconds: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub status: String,
}

impl ExperimentRecord {
    /// The record with wall times cleared; everything else is a function
    /// of the seed and config.
    pub fn without_timings(&self) -> Self {
        ExperimentRecord {
            screen_seconds: None,
            solve_seconds: None,
            ..self.clone()
        }
    }
}

pub(crate) const STATUS_OK: &str = "ok";

/// Runs `f` and returns its value with the elapsed wall time in seconds.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes `<name>_records.csv` and `<name>_summary.csv` under `dir`.
pub(crate) fn write_tables<S: Serialize>(dir: &Path, name: &str, records: &[ExperimentRecord], summary: &[S]) -> Result<Vec<PathBuf>> {
    let records_path = dir.join(format!("{name}_records.csv"));
    let summary_path = dir.join(format!("{name}_summary.csv"));
    write_csv(&records_path, records)?;
    write_csv(&summary_path, summary)?;
    Ok(vec![records_path, summary_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = vec![
            ExperimentRecord {
                trial: 0,
                trial_seed: u64::MAX,
                method: "exsis".into(),
                mms: Some(7),
                mu_target: Some(0.25),
                status: STATUS_OK.into(),
                ..Default::default()
            },
            ExperimentRecord {
                trial: 1,
                method: "safe".into(),
                lambda: Some(0.125),
                detection_rate: Some(1.0),
                screen_seconds: Some(0.5),
                status: "adjustment-failed".into(),
                ..Default::default()
            },
        ];
        write_csv(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
        assert_eq!(records[1].without_timings().screen_seconds, None);
    }
}
