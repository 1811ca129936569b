//! Log-chaining service: an HTTP front end over the durable digest ledger.
//!
//! The service ingests raw logs or precomputed digests, appends them to
//! the current circled chain, seals and promotes chains as they fill,
//! submits each new super block for anchoring, and serves verification
//! and audit queries. It can run standalone (`lcaas-server`) or embedded
//! in-process via [`start`], which the load harness uses to drive whole
//! experiments on a virtual clock.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use lcaas_core::{AnchorBackend, Clock, GasPrice, Ledger, RecoveryNote, SimulatedClock};
use tokio::sync::RwLock;

pub use config::{AnchorMode, ClockMode, ConfigError, ServiceConfig};
pub use error::ApiError;
pub use state::{AppState, StartError};

/// A service bound to a local port, plus the handles an embedding harness
/// needs: the shared ledger, the anchoring backend, and (for simulated
/// runs) the clock driver.
pub struct RunningService {
    pub addr: SocketAddr,
    pub ledger: Arc<RwLock<Ledger>>,
    pub anchor: Option<Arc<dyn AnchorBackend>>,
    pub gas: GasPrice,
    pub clock: Clock,
    /// Clock driver when the service runs on virtual time.
    pub sim_clock: Option<SimulatedClock>,
    /// What opening the ledger had to repair or flag.
    pub notes: Vec<RecoveryNote>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    server: tokio::task::JoinHandle<()>,
}

impl RunningService {
    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.server).await;
    }
}

/// Binds `config.listen_address` (port 0 picks a free port) and serves
/// the API until [`RunningService::shutdown`]. On a wall clock with an
/// anchoring backend, a background task polls unconfirmed tickets every
/// `poll_interval_ms`; on a virtual clock the embedding harness polls
/// explicitly, since time only moves when it says so.
pub async fn start(config: ServiceConfig) -> Result<RunningService, StartError> {
    let (app_state, notes, sim_clock) = state::build_state(&config)?;
    for note in &notes {
        log_note(note);
    }

    let listener = tokio::net::TcpListener::bind(&config.listen_address)
        .await
        .map_err(|source| StartError::Bind { addr: config.listen_address.clone(), source })?;
    let addr = listener.local_addr().map_err(|source| StartError::Bind {
        addr: config.listen_address.clone(),
        source,
    })?;

    let poller = if matches!(config.clock_mode, ClockMode::Wall) {
        app_state.anchor.clone().map(|backend| {
            let ledger = app_state.ledger.clone();
            let gas = app_state.gas;
            let clock = app_state.clock.clone();
            let interval = std::time::Duration::from_millis(config.poll_interval_ms);
            tokio::spawn(async move {
                loop {
                    tokio::time::sleep(interval).await;
                    let mut ledger = ledger.write().await;
                    let now = clock.now_ms();
                    if let Err(e) = ledger.poll_pending(backend.as_ref(), Some(gas), now) {
                        eprintln!("anchor polling failed: {e}");
                    }
                }
            })
        })
    } else {
        None
    };

    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let router = routes::router(app_state.clone());
    let server = tokio::spawn(async move {
        let serve = axum::serve(listener, router).with_graceful_shutdown(async {
            let _ = shutdown_rx.await;
        });
        if let Err(e) = serve.await {
            eprintln!("server error: {e}");
        }
        if let Some(p) = poller {
            // Await the aborted task so its ledger handle (and with it the
            // ledger's lock file) is provably released before shutdown
            // resolves — a caller may reopen the same root immediately.
            p.abort();
            let _ = p.await;
        }
    });

    Ok(RunningService {
        addr,
        ledger: app_state.ledger,
        anchor: app_state.anchor,
        gas: app_state.gas,
        clock: app_state.clock,
        sim_clock,
        notes,
        shutdown: Some(shutdown_tx),
        server,
    })
}

fn log_note(note: &RecoveryNote) {
    match serde_json::to_value(note) {
        Ok(v) => println!("{}", serde_json::json!({ "recovery": v })),
        Err(_) => println!("{note:?}"),
    }
}
