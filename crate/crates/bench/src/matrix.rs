//! The full experiment grid: every combination of submission rate, chain
//! capacity, and gas price tier, run back to back with per-cell reports
//! and a cross-cell analysis written to the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, write_density_csvs, AnalysisError};
use crate::cell::{run_cell, BenchError};
use crate::report::{CellConfig, ClockChoice, ExperimentReport};

pub const TPS_LEVELS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const N_LEVELS: [u64; 3] = [1, 10, 100];
pub const GAS_LEVELS: [u64; 3] = [6, 9, 20];

/// Submission count per cell: enough for a long schedule at slow rates
/// without stretching virtual time unreasonably, more at fast rates.
pub fn file_count_for(tps: f64) -> u64 {
    if tps >= 10.0 {
        1_000
    } else {
        200
    }
}

/// The 36 grid cells in a fixed order (rate, then capacity, then gas),
/// each with its own derived seed so cells are independent but the whole
/// grid is reproducible from `base_seed`.
pub fn matrix_cells(base_seed: u64, clock: ClockChoice) -> Vec<(String, CellConfig)> {
    let mut cells = Vec::new();
    let mut ordinal = 0u64;
    for &tps in &TPS_LEVELS {
        for &n in &N_LEVELS {
            for &gas_gwei in &GAS_LEVELS {
                ordinal += 1;
                let config = CellConfig {
                    tps,
                    n,
                    gas_gwei,
                    file_count: file_count_for(tps),
                    file_size_bytes: 64,
                    seed: base_seed.wrapping_add(ordinal),
                    clock,
                    anchored: true,
                };
                cells.push((format!("{ordinal:02}-{}", config.slug()), config));
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct MatrixOutcome {
    pub out_dir: PathBuf,
    pub completed: Vec<ExperimentReport>,
    pub failures: Vec<CellFailure>,
    pub analysis_written: bool,
}

pub fn report_path(out_dir: &Path, cell: &str) -> PathBuf {
    out_dir.join(format!("report-{cell}.json"))
}

/// Runs every cell of the grid, writing `report-<cell>.json` as each one
/// finishes and a progress line to stdout. A failing cell is recorded
/// and skipped, never fatal to the rest of the grid. Afterwards the
/// cross-cell analysis lands in `analysis.json` plus one density CSV per
/// gas tier.
pub async fn run_matrix(
    out_dir: &Path,
    base_seed: u64,
    clock: ClockChoice,
) -> Result<MatrixOutcome, BenchError> {
    fs::create_dir_all(out_dir)?;
    let mut completed = Vec::new();
    let mut failures = Vec::new();

    for (name, config) in matrix_cells(base_seed, clock) {
        let ledger_root = out_dir.join(format!("ledger-{name}"));
        match run_cell(&config, &name, &ledger_root).await {
            Ok(report) => {
                fs::write(report_path(out_dir, &name), serde_json::to_vec_pretty(&report)?)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "cell": name,
                        "super_blocks": report.super_blocks,
                        "acknowledged": report.ingest.acknowledged,
                        "verified_ok": report.verified_ok,
                        "wall_seconds": report.wall_seconds,
                    })
                );
                completed.push(report);
            }
            Err(error) => {
                let failure = CellFailure { cell: name, error: error.to_string() };
                println!("{}", serde_json::json!({"cell": failure.cell, "failed": failure.error}));
                failures.push(failure);
            }
        }
    }

    if !failures.is_empty() {
        fs::write(out_dir.join("failures.json"), serde_json::to_vec_pretty(&failures)?)?;
    }

    let analysis_written = match analyze(&completed) {
        Ok(summary) => {
            fs::write(out_dir.join("analysis.json"), serde_json::to_vec_pretty(&summary)?)?;
            write_density_csvs(out_dir, &summary)?;
            true
        }
        Err(AnalysisError::InsufficientData { .. }) => false,
        Err(other) => return Err(other.into()),
    };

    Ok(MatrixOutcome { out_dir: out_dir.to_path_buf(), completed, failures, analysis_written })
}

/// Reads every `report-*.json` in `out_dir` (sorted by file name, i.e.
/// cell order) for a standalone re-analysis.
pub fn load_reports(out_dir: &Path) -> Result<Vec<ExperimentReport>, BenchError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(out_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("report-") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| Ok(serde_json::from_slice(&fs::read(p)?)?))
        .collect()
}
