//! Optimizer comparison: several training configurations on one split,
//! repeated with different initialisation seeds.

use std::fmt::Write as _;

use serde::Serialize;

use crate::scalar::Scalar;
use crate::training::{train, TrainConfig, TrainError, TrainReport};
use crate::types::DatasetSplit;

/// Slack on the best validation RMSE used by the epochs-to-near-best column.
pub const NEAR_BEST_RATIO: f64 = 1.05;

#[derive(Debug, Clone)]
pub struct BenchCase<T> {
    pub label: String,
    pub config: TrainConfig<T>,
}

/// Outcome of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub seed: u64,
    pub best_rmse: f64,
    pub test_rmse: f64,
    /// Epochs run through the best epoch.
    pub epochs_to_best: usize,
    /// Epochs run until validation RMSE first fell within [`NEAR_BEST_RATIO`] of the best.
    pub epochs_to_near_best: usize,
    pub update_secs_to_best: f64,
    pub total_secs_to_best: f64,
    pub total_secs_to_near_best: f64,
}

impl RunStats {
    pub fn from_report<T: Scalar>(seed: u64, report: &TrainReport<T>) -> Self {
        let (update, eval) = report.seconds_through(report.best_epoch);
        RunStats {
            seed,
            best_rmse: report.best_validation_rmse.to_f64_exact(),
            test_rmse: report.test_rmse.to_f64_exact(),
            epochs_to_best: report.best_epoch + 1,
            epochs_to_near_best: report.epochs_to_within(NEAR_BEST_RATIO),
            update_secs_to_best: update,
            total_secs_to_best: update + eval,
            total_secs_to_near_best: report.seconds_to_within(NEAR_BEST_RATIO),
        }
    }
}

/// Mean and sample standard deviation (0 for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> MeanStd {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub runs: Vec<RunStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowSummary {
    pub best_rmse: MeanStd,
    pub test_rmse: MeanStd,
    pub epochs_to_best: MeanStd,
    pub epochs_to_near_best: MeanStd,
    pub update_secs_to_best: MeanStd,
    pub total_secs_to_best: MeanStd,
}

impl BenchRow {
    pub fn summary(&self) -> RowSummary {
        let col = |f: fn(&RunStats) -> f64| MeanStd::of(self.runs.iter().map(f));
        RowSummary {
            best_rmse: col(|r| r.best_rmse),
            test_rmse: col(|r| r.test_rmse),
            epochs_to_best: col(|r| r.epochs_to_best as f64),
            epochs_to_near_best: col(|r| r.epochs_to_near_best as f64),
            update_secs_to_best: col(|r| r.update_secs_to_best),
            total_secs_to_best: col(|r| r.total_secs_to_best),
        }
    }
}

/// Runs every case `repeats` times on `split`. Repeat `r` trains with seed
/// `case.config.seed + r`, identical across cases. Runs are sequential.
pub fn run_benchmark<T: Scalar>(
    split: &DatasetSplit<T>,
    cases: &[BenchCase<T>],
    repeats: usize,
) -> Result<Vec<BenchRow>, TrainError<T>> {
    let mut rows: Vec<BenchRow> = cases
        .iter()
        .map(|c| BenchRow { label: c.label.clone(), runs: Vec::with_capacity(repeats) })
        .collect();
    for r in 0..repeats as u64 {
        for (case, row) in cases.iter().zip(rows.iter_mut()) {
            let mut cfg = case.config.clone();
            cfg.seed = cfg.seed.wrapping_add(r);
            let (_, report) = train(split, &cfg)?;
            log::info!(
                "{} repeat {r}: best {:.6} at epoch {}",
                case.label,
                report.best_validation_rmse,
                report.best_epoch
            );
            row.runs.push(RunStats::from_report(cfg.seed, &report));
        }
    }
    Ok(rows)
}

/// Plain-text comparison table, one row per case, cells as `mean ± std`.
pub fn format_table(rows: &[BenchRow]) -> String {
    let header = [
        "optimizer",
        "best val RMSE",
        "test RMSE",
        "epochs to best",
        "epochs to 1.05x best",
        "update secs",
        "total secs",
    ];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|row| {
            let s = row.summary();
            [
                row.label.clone(),
                format!("{:.4} ± {:.1e}", s.best_rmse.mean, s.best_rmse.std),
                format!("{:.4} ± {:.1e}", s.test_rmse.mean, s.test_rmse.std),
                format!("{:.1} ± {:.1}", s.epochs_to_best.mean, s.epochs_to_best.std),
                format!("{:.1} ± {:.1}", s.epochs_to_near_best.mean, s.epochs_to_near_best.std),
                format!("{:.3} ± {:.3}", s.update_secs_to_best.mean, s.update_secs_to_best.std),
                format!("{:.3} ± {:.3}", s.total_secs_to_best.mean, s.total_secs_to_best.std),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|k| cells.iter().map(|c| c[k].chars().count()).chain([header[k].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |fields: Vec<&str>| {
        let padded: Vec<String> = fields
            .iter()
            .zip(&widths)
            .map(|(f, &w)| format!("{f:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for c in &cells {
        line(c.iter().map(String::as_str).collect());
    }
    out
}
