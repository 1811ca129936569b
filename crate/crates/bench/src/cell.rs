//! Running one experiment cell: an embedded service instance, an
//! open-loop submission schedule against its real HTTP endpoint, and a
//! receipt drain that harvests one confirmation latency per super block.

use std::path::Path;
use std::time::{Duration, Instant};

use lcaas_core::{LedgerError, SimulatedClock};
use lcaas_service::{AnchorMode, ClockMode, RunningService, ServiceConfig, StartError};
use serde::{Deserialize, Serialize};

use crate::report::{
    density_histogram, AnchorReport, CellConfig, ClockChoice, ExperimentReport, IngestReport,
    Outlier, SummaryStats, OUTLIER_THRESHOLD_MS,
};

/// Virtual time added past the last scheduled submission per drain round;
/// comfortably beyond the slowest possible confirmation (25 minutes).
const DRAIN_STEP_MS: i64 = 26 * 60 * 1_000;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Start(#[from] StartError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("submission failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("super block {sb_index} has no confirmed receipt after the drain")]
    MissingReceipt { sb_index: u64 },
    #[error("expected {expected} super blocks from {acknowledged} acknowledged submissions, ledger holds {actual}")]
    SuperBlockCount { expected: u64, actual: u64, acknowledged: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("{0}")]
    Report(String),
}

/// One acknowledged submission, as the service reported it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckRecord {
    pub k: u64,
    pub digest: String,
    pub chain_id: u64,
    pub block_index: u64,
    pub sealed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sb_index: Option<u64>,
}

/// The deterministic 64-byte record body for submission `k` of a cell.
pub fn record_body(config: &CellConfig, k: u64) -> Vec<u8> {
    let mut s = format!(
        "cell {} seed {:016x} record {k:08} ",
        config.slug(),
        config.seed
    );
    s.truncate(config.file_size_bytes);
    while s.len() < config.file_size_bytes {
        s.push('.');
    }
    s.into_bytes()
}

struct SendOutcome {
    k: u64,
    roundtrip_ms: f64,
    drift_ms: f64,
    ack: Option<AckRecord>,
}

async fn send_one(
    client: &reqwest::Client,
    url: &str,
    config: &CellConfig,
    k: u64,
    drift_ms: f64,
) -> Result<SendOutcome, BenchError> {
    let sent = Instant::now();
    let response = client.post(url).body(record_body(config, k)).send().await?;
    let status = response.status();
    let ack = if status.is_success() {
        let v: serde_json::Value = response.json().await?;
        Some(AckRecord {
            k,
            digest: v["digest"].as_str().unwrap_or_default().to_string(),
            chain_id: v["chain_id"].as_u64().unwrap_or_default(),
            block_index: v["block_index"].as_u64().unwrap_or_default(),
            sealed: v["chain_state"] == "sealed",
            sb_index: v["sb_index"].as_u64(),
        })
    } else {
        None
    };
    Ok(SendOutcome { k, roundtrip_ms: sent.elapsed().as_secs_f64() * 1_000.0, drift_ms, ack })
}

/// Submits `config.file_count` synthetic records to `base_url` on the
/// open-loop schedule `t₀ + k/tps`: on the virtual clock the schedule is
/// exact (time is advanced to each slot), on the wall clock every
/// submission is its own task sleeping until its slot, so a slow response
/// never delays later sends. Returns the ingest summary and the
/// acknowledgements in submission order.
pub async fn generate_load(
    base_url: &str,
    config: &CellConfig,
    sim: Option<&SimulatedClock>,
) -> Result<(IngestReport, Vec<AckRecord>), BenchError> {
    let url = format!("{base_url}/api/v1/logs");
    let client = reqwest::Client::new();
    let mut outcomes: Vec<SendOutcome> = Vec::with_capacity(config.file_count as usize);

    match sim {
        Some(sim) => {
            let t0 = sim.now_ms();
            for k in 0..config.file_count {
                sim.advance_to(t0 + config.schedule_offset_ms(k));
                outcomes.push(send_one(&client, &url, config, k, 0.0).await?);
            }
        }
        None => {
            let t0 = Instant::now();
            let mut handles = Vec::with_capacity(config.file_count as usize);
            for k in 0..config.file_count {
                let client = client.clone();
                let url = url.clone();
                let config = config.clone();
                let slot = t0 + Duration::from_millis(config.schedule_offset_ms(k) as u64);
                handles.push(tokio::spawn(async move {
                    tokio::time::sleep_until(slot.into()).await;
                    let drift_ms = slot.elapsed().as_secs_f64() * 1_000.0;
                    send_one(&client, &url, &config, k, drift_ms).await
                }));
            }
            for handle in handles {
                outcomes.push(handle.await.expect("send task never panics")?);
            }
            outcomes.sort_by_key(|o| o.k);
        }
    }

    let roundtrips: Vec<f64> = outcomes.iter().map(|o| o.roundtrip_ms).collect();
    let max_drift =
        outcomes.iter().map(|o| o.drift_ms).fold(0.0, f64::max);
    let acks: Vec<AckRecord> = outcomes.into_iter().filter_map(|o| o.ack).collect();
    let ingest = IngestReport {
        acknowledged: acks.len() as u64,
        rejected: config.file_count - acks.len() as u64,
        roundtrip_ms: SummaryStats::describe(&roundtrips)
            .ok_or_else(|| BenchError::Report("no submissions were sent".into()))?,
        max_schedule_drift_ms: max_drift,
    };
    Ok((ingest, acks))
}

fn service_config(config: &CellConfig, ledger_root: &Path) -> ServiceConfig {
    ServiceConfig {
        ledger_root: ledger_root.to_path_buf(),
        listen_address: "127.0.0.1:0".to_string(),
        capacity_n: config.n,
        gas_price_gwei: config.gas_gwei,
        anchor_backend: if config.anchored { AnchorMode::Simulated } else { AnchorMode::None },
        rng_seed: config.seed,
        clock_mode: match config.clock {
            ClockChoice::Wall => ClockMode::Wall,
            ClockChoice::Sim => ClockMode::Simulated,
        },
        ..ServiceConfig::default()
    }
}

/// Polls until every submitted ticket is confirmed. On the virtual clock
/// each round jumps time past the slowest possible confirmation; on the
/// wall clock it polls periodically and genuinely waits.
async fn drain_receipts(service: &RunningService) -> Result<(), BenchError> {
    let Some(backend) = service.anchor.as_deref() else {
        return Ok(());
    };
    loop {
        {
            let mut ledger = service.ledger.write().await;
            ledger.poll_pending(backend, None, service.clock.now_ms())?;
            if ledger.receipts().unconfirmed().is_empty() {
                return Ok(());
            }
        }
        match &service.sim_clock {
            Some(sim) => sim.advance_by(DRAIN_STEP_MS),
            None => tokio::time::sleep(Duration::from_millis(250)).await,
        }
    }
}

/// Runs one full cell: starts an embedded service on `ledger_root`, puts
/// the scheduled load through its HTTP endpoint, drains anchoring
/// receipts, verifies the resulting hierarchy, and summarizes.
pub async fn run_cell(
    config: &CellConfig,
    cell_name: &str,
    ledger_root: &Path,
) -> Result<ExperimentReport, BenchError> {
    let started_wall = Instant::now();
    let service = lcaas_service::start(service_config(config, ledger_root)).await?;
    let started_at_ms = service.clock.now_ms();

    let base_url = format!("http://{}", service.addr);
    let result = run_against(&service, config, &base_url).await;
    let finished_at_ms = service.clock.now_ms();
    service.shutdown().await;
    let (ingest, anchor, super_blocks, chains, verified_ok) = result?;

    Ok(ExperimentReport {
        cell: cell_name.to_string(),
        config: config.clone(),
        super_blocks,
        chains,
        ingest,
        anchor,
        verified_ok,
        started_at_ms,
        finished_at_ms,
        wall_seconds: started_wall.elapsed().as_secs_f64(),
    })
}

async fn run_against(
    service: &RunningService,
    config: &CellConfig,
    base_url: &str,
) -> Result<(IngestReport, Option<AnchorReport>, u64, u64, bool), BenchError> {
    let (ingest, acks) = generate_load(base_url, config, service.sim_clock.as_ref()).await?;
    drain_receipts(service).await?;

    let ledger = service.ledger.read().await;
    let super_blocks = ledger.super_chain().super_block_count();
    let chains = ledger.chains().len() as u64;
    let expected = ingest.acknowledged / config.n;
    if super_blocks != expected {
        return Err(BenchError::SuperBlockCount {
            expected,
            actual: super_blocks,
            acknowledged: ingest.acknowledged,
        });
    }
    // Sanity: the service acknowledged every seal we observed.
    debug_assert_eq!(acks.iter().filter(|a| a.sealed).count() as u64, super_blocks);

    let anchor = if config.anchored {
        let mut latencies = Vec::with_capacity(super_blocks as usize);
        let mut seal_to_confirm = Vec::with_capacity(super_blocks as usize);
        for sb in 1..=super_blocks {
            let receipt = ledger
                .receipts()
                .latest_for_sb(sb)
                .and_then(|entry| entry.receipt.clone())
                .ok_or(BenchError::MissingReceipt { sb_index: sb })?;
            latencies.push(receipt.latency_ms as f64);
            let terminal_ts = ledger.chains()[(sb - 1) as usize]
                .terminal()
                .expect("promoted chains are sealed")
                .timestamp;
            seal_to_confirm.push((receipt.confirmed_at - terminal_ts) as f64);
        }
        let stats = SummaryStats::describe(&latencies)
            .ok_or(BenchError::Report("anchored cell produced no latencies".into()))?;
        let outliers = latencies
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > OUTLIER_THRESHOLD_MS)
            .map(|(i, &l)| Outlier { sb_index: i as u64 + 1, latency_ms: l })
            .collect();
        Some(AnchorReport {
            histogram: density_histogram(&latencies),
            stats,
            outliers,
            latencies_ms: latencies,
            seal_to_confirm_ms: seal_to_confirm,
        })
    } else {
        None
    };

    let verified_ok = ledger.verify_in_memory().ok;
    Ok((ingest, anchor, super_blocks, chains, verified_ok))
}
