use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use lcaas_bench::{
    analyze, load_reports, report_path, run_cell, run_matrix, run_worker, write_density_csvs,
    CellConfig, ClockChoice,
};

#[derive(Parser)]
#[command(name = "bench", version, about = "Experiment harness for the log-sealing service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ClockArg {
    /// Virtual clock: schedules and anchor confirmations happen in
    /// simulated time, so even slow cells finish in seconds.
    Sim,
    /// Real time: schedules are honored against the wall clock.
    Wall,
}

impl From<ClockArg> for ClockChoice {
    fn from(arg: ClockArg) -> Self {
        match arg {
            ClockArg::Sim => ClockChoice::Sim,
            ClockArg::Wall => ClockChoice::Wall,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment grid, or a single cell given --tps/--n/--gas/--count
    Run {
        /// Run all 36 grid cells (4 rates x 3 capacities x 3 gas tiers)
        #[arg(long, conflicts_with_all = ["tps", "n", "gas", "count", "no_anchor"])]
        matrix: bool,
        /// Submissions per second for a single cell
        #[arg(long)]
        tps: Option<f64>,
        /// Chain capacity for a single cell
        #[arg(long)]
        n: Option<u64>,
        /// Gas price tier in gwei for a single cell
        #[arg(long)]
        gas: Option<u64>,
        /// Number of submissions for a single cell
        #[arg(long)]
        count: Option<u64>,
        /// Base RNG seed (each grid cell derives its own from this)
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ClockArg::Sim)]
        clock: ClockArg,
        /// Disable anchoring for a single-cell run
        #[arg(long)]
        no_anchor: bool,
        /// Output directory for reports, analysis, and cell ledgers
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the cross-cell analysis over report-*.json files in --out
    Analyze {
        #[arg(long)]
        out: PathBuf,
    },
    /// Internal: deterministic ingest stream for crash testing
    #[command(hide = true)]
    IngestWorker {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        count: u64,
    },
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { matrix: true, out, seed, clock, .. } => {
            let outcome = run_matrix(&out, seed, clock.into()).await?;
            println!(
                "{}",
                serde_json::json!({
                    "completed": outcome.completed.len(),
                    "failed": outcome.failures.len(),
                    "analysis_written": outcome.analysis_written,
                    "out_dir": outcome.out_dir,
                })
            );
            if !outcome.failures.is_empty() {
                std::process::exit(1);
            }
        }
        Command::Run { matrix: false, tps, n, gas, count, seed, clock, no_anchor, out } => {
            let (Some(tps), Some(n), Some(gas), Some(count)) = (tps, n, gas, count) else {
                anyhow::bail!("provide --matrix, or all of --tps, --n, --gas, --count");
            };
            anyhow::ensure!(tps > 0.0, "--tps must be positive");
            anyhow::ensure!(n >= 1 && gas >= 1 && count >= 1, "--n, --gas, --count must be at least 1");
            let config = CellConfig {
                tps,
                n,
                gas_gwei: gas,
                file_count: count,
                file_size_bytes: 64,
                seed,
                clock: clock.into(),
                anchored: !no_anchor,
            };
            fs::create_dir_all(&out)?;
            let name = config.slug();
            let report = run_cell(&config, &name, &out.join(format!("ledger-{name}"))).await?;
            fs::write(report_path(&out, &name), serde_json::to_vec_pretty(&report)?)?;
            println!(
                "{}",
                serde_json::json!({
                    "cell": report.cell,
                    "super_blocks": report.super_blocks,
                    "acknowledged": report.ingest.acknowledged,
                    "rejected": report.ingest.rejected,
                    "verified_ok": report.verified_ok,
                    "report": report_path(&out, &name),
                })
            );
        }
        Command::Analyze { out } => {
            let reports = load_reports(&out)?;
            let summary = analyze(&reports)?;
            fs::write(out.join("analysis.json"), serde_json::to_vec_pretty(&summary)?)?;
            write_density_csvs(&out, &summary)?;
            println!(
                "{}",
                serde_json::json!({
                    "reports": summary.reports,
                    "tiers": summary.tiers.len(),
                    "ks_pairs": summary.ks.len(),
                    "correlations": summary.correlations.len(),
                    "outliers": summary.outliers.len(),
                })
            );
        }
        Command::IngestWorker { root, count } => run_worker(&root, count)?,
    }
    Ok(())
}
