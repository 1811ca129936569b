//! Report shapes the harness emits: one `ExperimentReport` per cell, all
//! JSON-serializable and re-readable so analysis can run as a separate
//! pass over previously written files.

use lcaas_core::stats::{self, Histogram};
use serde::{Deserialize, Serialize};

/// How many bins the density histograms use.
pub const HISTOGRAM_BINS: usize = 50;
/// Upper percentile bounding the histogram range.
pub const HISTOGRAM_UPPER_PERCENTILE: f64 = 99.9;
/// A confirmation slower than this is reported as an outlier (3 minutes).
pub const OUTLIER_THRESHOLD_MS: f64 = 180_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockChoice {
    /// Real time: submissions sleep out their schedule.
    Wall,
    /// Virtual time shared by generator, service, and anchoring simulator;
    /// the whole schedule collapses to bookkeeping time.
    Sim,
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Submissions per second (open-loop schedule rate).
    pub tps: f64,
    /// Data blocks per circled chain.
    pub n: u64,
    /// Gas price bid on every anchoring submission.
    pub gas_gwei: u64,
    /// Number of synthetic log records submitted.
    pub file_count: u64,
    /// Size of each synthetic record body.
    pub file_size_bytes: usize,
    pub seed: u64,
    pub clock: ClockChoice,
    /// False runs the cell without an anchoring backend (ingest-only
    /// smoke runs); the matrix always anchors.
    pub anchored: bool,
}

impl CellConfig {
    /// Stable factor slug, e.g. `tps0.1-n10-g6`.
    pub fn slug(&self) -> String {
        format!("tps{}-n{}-g{}", self.tps, self.n, self.gas_gwei)
    }

    /// Super blocks an uninterrupted run must produce.
    pub fn expected_super_blocks(&self) -> u64 {
        self.file_count / self.n
    }

    /// Virtual (or wall) milliseconds between consecutive submissions.
    pub fn schedule_offset_ms(&self, k: u64) -> i64 {
        (k as f64 * 1_000.0 / self.tps).round() as i64
    }
}

/// Five-number summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: u64,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn describe(samples: &[f64]) -> Option<SummaryStats> {
        if samples.is_empty() {
            return None;
        }
        Some(SummaryStats {
            count: samples.len() as u64,
            mean: stats::mean(samples).expect("non-empty"),
            median: stats::median(samples).expect("non-empty"),
            p95: stats::percentile(samples, 95.0).expect("non-empty"),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Density histogram over `[0, p99.9]` of a sample.
pub fn density_histogram(samples: &[f64]) -> Option<Histogram> {
    if samples.is_empty() {
        return None;
    }
    let hi = stats::percentile(samples, HISTOGRAM_UPPER_PERCENTILE).ok()?;
    stats::histogram(samples, HISTOGRAM_BINS, 0.0, hi.max(1.0)).ok()
}

/// Ingest-side outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Successfully acknowledged submissions.
    pub acknowledged: u64,
    /// Submissions the service answered with a non-2xx status.
    pub rejected: u64,
    /// HTTP round-trip time per submission, real milliseconds.
    pub roundtrip_ms: SummaryStats,
    /// Worst |actual − scheduled| send time. Exactly 0 on the virtual
    /// clock; reported honestly on the wall clock.
    pub max_schedule_drift_ms: f64,
}

/// A confirmation slower than [`OUTLIER_THRESHOLD_MS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub sb_index: u64,
    pub latency_ms: f64,
}

/// Anchoring-side outcome of one cell: one latency per super block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    /// Submit→confirm latency per super block, in super-block order.
    pub latencies_ms: Vec<f64>,
    /// Chain-seal→confirm per super block (secondary measurement; sealing
    /// and anchor submission happen in the same rotation, so this differs
    /// from `latencies_ms` only if the rotation was interrupted).
    pub seal_to_confirm_ms: Vec<f64>,
    pub stats: SummaryStats,
    pub histogram: Option<Histogram>,
    pub outliers: Vec<Outlier>,
}

/// Everything one cell produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Cell name, e.g. `03-tps0.1-n1-g20` (matrix ordinal + factor slug).
    pub cell: String,
    pub config: CellConfig,
    pub super_blocks: u64,
    pub chains: u64,
    pub ingest: IngestReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorReport>,
    /// Post-run verification verdict over the full hierarchy.
    pub verified_ok: bool,
    /// First and last clock readings of the run (virtual time for
    /// simulated cells).
    pub started_at_ms: i64,
    pub finished_at_ms: i64,
    /// Real seconds the cell took, whatever the clock mode.
    pub wall_seconds: f64,
}
