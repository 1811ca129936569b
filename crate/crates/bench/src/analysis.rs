//! Cross-cell analysis: pooled per-tier latency distributions, two-sample
//! distribution comparisons between gas tiers, and factor/latency
//! association measures across the whole grid.

use std::fs;
use std::io::Write;
use std::path::Path;

use lcaas_core::stats::{
    self, Histogram, KsResult, LinearFit, StatsError,
};
use serde::{Deserialize, Serialize};

use crate::report::{density_histogram, ExperimentReport, SummaryStats};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("analysis needs at least 2 cell reports, have {have}")]
    InsufficientData { have: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One row per completed cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRow {
    pub cell: String,
    pub tps: f64,
    pub n: u64,
    pub gas_gwei: u64,
    pub super_blocks: u64,
    pub acknowledged: u64,
    pub rejected: u64,
    pub ingest_p95_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_latency: Option<SummaryStats>,
    pub verified_ok: bool,
}

/// Pooled confirmation latencies for one gas price tier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TierSummary {
    pub gas_gwei: u64,
    pub samples: usize,
    pub stats: SummaryStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
}

/// A two-sample distribution comparison between two gas tiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsComparison {
    pub gas_a: u64,
    pub gas_b: u64,
    pub ks: KsResult,
}

/// Association between an experiment factor and confirmation latency.
/// `aggregate` says what the y-values were: every pooled sample (`raw`)
/// or one per-cell summary point (`mean`, `median`, `p95`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorAssociation {
    pub factor: String,
    pub aggregate: String,
    pub pearson: f64,
    pub spearman: f64,
    pub fit: LinearFit,
}

/// A confirmation that took longer than the outlier threshold, with the
/// cell it occurred in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalOutlier {
    pub cell: String,
    pub sb_index: u64,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub reports: usize,
    pub cells: Vec<CellRow>,
    pub tiers: Vec<TierSummary>,
    pub ks: Vec<KsComparison>,
    pub correlations: Vec<FactorAssociation>,
    pub outliers: Vec<GlobalOutlier>,
}

fn factor_value(report: &ExperimentReport, factor: &str) -> f64 {
    match factor {
        "tps" => report.config.tps,
        "n" => report.config.n as f64,
        "gas_gwei" => report.config.gas_gwei as f64,
        other => unreachable!("unknown factor {other}"),
    }
}

/// Computes all three association measures for one (x, y) pairing,
/// returning `None` when the inputs are degenerate (constant factor or
/// too few points) rather than failing the whole analysis.
fn associate(factor: &str, aggregate: &str, x: &[f64], y: &[f64]) -> Option<FactorAssociation> {
    let pearson = stats::pearson(x, y).ok()?;
    let spearman = stats::spearman(x, y).ok()?;
    let fit = stats::linear_fit(x, y).ok()?;
    Some(FactorAssociation {
        factor: factor.to_string(),
        aggregate: aggregate.to_string(),
        pearson,
        spearman,
        fit,
    })
}

pub fn analyze(reports: &[ExperimentReport]) -> Result<AnalysisSummary, AnalysisError> {
    if reports.len() < 2 {
        return Err(AnalysisError::InsufficientData { have: reports.len() });
    }

    let cells = reports
        .iter()
        .map(|r| CellRow {
            cell: r.cell.clone(),
            tps: r.config.tps,
            n: r.config.n,
            gas_gwei: r.config.gas_gwei,
            super_blocks: r.super_blocks,
            acknowledged: r.ingest.acknowledged,
            rejected: r.ingest.rejected,
            ingest_p95_ms: r.ingest.roundtrip_ms.p95,
            anchor_latency: r.anchor.as_ref().map(|a| a.stats.clone()),
            verified_ok: r.verified_ok,
        })
        .collect();

    // Pool confirmation latencies per gas tier, preserving report order.
    let mut gas_levels: Vec<u64> = reports.iter().map(|r| r.config.gas_gwei).collect();
    gas_levels.sort_unstable();
    gas_levels.dedup();
    let pool = |gas: u64| -> Vec<f64> {
        reports
            .iter()
            .filter(|r| r.config.gas_gwei == gas)
            .filter_map(|r| r.anchor.as_ref())
            .flat_map(|a| a.latencies_ms.iter().copied())
            .collect()
    };
    let tiers: Vec<TierSummary> = gas_levels
        .iter()
        .filter_map(|&gas| {
            let samples = pool(gas);
            Some(TierSummary {
                gas_gwei: gas,
                samples: samples.len(),
                stats: SummaryStats::describe(&samples)?,
                histogram: density_histogram(&samples),
            })
        })
        .collect();

    let mut ks = Vec::new();
    for i in 0..gas_levels.len() {
        for j in (i + 1)..gas_levels.len() {
            let (a, b) = (pool(gas_levels[i]), pool(gas_levels[j]));
            if let Ok(result) = stats::ks_two_sample(&a, &b) {
                ks.push(KsComparison { gas_a: gas_levels[i], gas_b: gas_levels[j], ks: result });
            }
        }
    }

    let mut correlations = Vec::new();
    for factor in ["tps", "n", "gas_gwei"] {
        // Raw: every pooled sample against its cell's factor value.
        let mut raw_x = Vec::new();
        let mut raw_y = Vec::new();
        for r in reports {
            if let Some(anchor) = &r.anchor {
                for &latency in &anchor.latencies_ms {
                    raw_x.push(factor_value(r, factor));
                    raw_y.push(latency);
                }
            }
        }
        correlations.extend(associate(factor, "raw", &raw_x, &raw_y));

        // Aggregates: one summary point per anchored cell.
        for (aggregate, pick) in [
            ("mean", (|s: &SummaryStats| s.mean) as fn(&SummaryStats) -> f64),
            ("median", |s| s.median),
            ("p95", |s| s.p95),
        ] {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in reports {
                if let Some(anchor) = &r.anchor {
                    xs.push(factor_value(r, factor));
                    ys.push(pick(&anchor.stats));
                }
            }
            correlations.extend(associate(factor, aggregate, &xs, &ys));
        }
    }

    let outliers = reports
        .iter()
        .flat_map(|r| {
            r.anchor.iter().flat_map(|a| {
                a.outliers.iter().map(|o| GlobalOutlier {
                    cell: r.cell.clone(),
                    sb_index: o.sb_index,
                    latency_ms: o.latency_ms,
                })
            })
        })
        .collect();

    Ok(AnalysisSummary { reports: reports.len(), cells, tiers, ks, correlations, outliers })
}

/// Writes one `density-g{gas}.csv` per tier histogram: a header line and
/// one `bin_lo,bin_hi,count` row per bin.
pub fn write_density_csvs(out_dir: &Path, summary: &AnalysisSummary) -> Result<(), AnalysisError> {
    for tier in &summary.tiers {
        let Some(histogram) = &tier.histogram else { continue };
        let mut csv = String::from("bin_lo,bin_hi,count\n");
        for (window, count) in histogram.edges.windows(2).zip(&histogram.counts) {
            csv.push_str(&format!("{},{},{count}\n", window[0], window[1]));
        }
        let mut file = fs::File::create(out_dir.join(format!("density-g{}.csv", tier.gas_gwei)))?;
        file.write_all(csv.as_bytes())?;
    }
    Ok(())
}
