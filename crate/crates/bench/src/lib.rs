//! Experiment harness for the log-sealing service: runs load cells
//! against an embedded service instance, sweeps the full factor grid,
//! aggregates cross-cell statistics, and hosts a crash-test worker for
//! durability checks.

pub mod analysis;
pub mod cell;
pub mod matrix;
pub mod report;
pub mod worker;

pub use analysis::{
    analyze, write_density_csvs, AnalysisError, AnalysisSummary, CellRow, FactorAssociation,
    GlobalOutlier, KsComparison, TierSummary,
};
pub use cell::{generate_load, record_body, run_cell, AckRecord, BenchError};
pub use matrix::{
    file_count_for, load_reports, matrix_cells, report_path, run_matrix, CellFailure,
    MatrixOutcome, GAS_LEVELS, N_LEVELS, TPS_LEVELS,
};
pub use report::{
    density_histogram, AnchorReport, CellConfig, ClockChoice, ExperimentReport, IngestReport,
    Outlier, SummaryStats, HISTOGRAM_BINS, HISTOGRAM_UPPER_PERCENTILE, OUTLIER_THRESHOLD_MS,
};
pub use worker::{run_worker, worker_digest, worker_timestamp, WORKER_TS0};
