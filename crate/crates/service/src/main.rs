//! Standalone server binary.

use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use lcaas_service::{ClockMode, ServiceConfig};

/// Tamper-evident log-digest ledger over HTTP.
#[derive(Debug, Parser)]
#[command(name = "lcaas-server", version)]
struct Args {
    /// Path to a TOML configuration file. Environment variables
    /// LCAAS_ROOT, LCAAS_LISTEN, LCAAS_CAPACITY, LCAAS_GAS_GWEI,
    /// LCAAS_ANCHOR and LCAAS_SEED override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let config = match &args.config {
        Some(path) => ServiceConfig::from_file(path)?,
        None => ServiceConfig::default(),
    }
    .with_env_overrides()?;
    if config.clock_mode == ClockMode::Simulated {
        anyhow::bail!(
            "clock_mode = \"simulated\" only works embedded in a harness \
             that drives the clock; the standalone server needs wall time"
        );
    }

    let service = lcaas_service::start(config.clone()).await.with_context(|| {
        format!("starting the service on {}", config.listen_address)
    })?;
    println!(
        "{}",
        serde_json::json!({
            "listening": service.addr.to_string(),
            "ledger_root": config.ledger_root.display().to_string(),
            "capacity_n": config.capacity_n,
            "anchoring": matches!(config.anchor_backend, lcaas_service::AnchorMode::Simulated),
        })
    );

    shutdown_signal().await;
    println!("{}", serde_json::json!({ "shutting_down": true }));
    service.shutdown().await;
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = tokio::signal::ctrl_c();
    #[cfg(unix)]
    {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())
            .expect("installing SIGTERM handler");
        tokio::select! {
            _ = ctrl_c => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = ctrl_c.await;
    }
}
