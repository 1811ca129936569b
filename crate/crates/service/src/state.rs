//! Shared service state and its startup choreography.
//!
//! All ledger mutations funnel through one `RwLock<Ledger>` writer lock —
//! that lock is the serialization point that keeps concurrent submissions
//! loss- and duplication-free. Reads (chain listings, receipt lookups)
//! take the read side; the disk-audit endpoints additionally hold it
//! across their re-read of the files so a writer cannot interleave.

use std::sync::Arc;

use lcaas_core::{
    AnchorBackend, Clock, GasPrice, LatencyModel, Ledger, LedgerError, RecoveryNote,
    SimulatedAnchor, SimulatedClock,
};
use tokio::sync::RwLock;

use crate::config::{AnchorMode, ClockMode, ConfigError, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(
        "ledger at {root} was created with capacity_n={ledger}, but the \
         configuration says capacity_n={config}; chain capacity is fixed at \
         initialization"
    )]
    CapacityMismatch { root: std::path::PathBuf, ledger: u64, config: u64 },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything a request handler can reach.
#[derive(Clone)]
pub struct AppState {
    pub ledger: Arc<RwLock<Ledger>>,
    /// Attached anchoring backend, absent when anchoring is off.
    pub anchor: Option<Arc<dyn AnchorBackend>>,
    pub gas: GasPrice,
    pub clock: Clock,
    pub max_body_bytes: usize,
}

impl AppState {
    pub fn anchor_with(&self) -> Option<(&dyn AnchorBackend, GasPrice)> {
        self.anchor.as_deref().map(|a| (a, self.gas))
    }
}

/// Opens (or initializes) the ledger named by `config`, attaches the
/// anchoring backend, and brings receipt bookkeeping up to date: super
/// blocks with no ticket get one, and tickets the fresh backend no longer
/// recognizes are re-submitted. Returns the recovery and repair notes the
/// open produced.
pub fn build_state(
    config: &ServiceConfig,
) -> Result<(AppState, Vec<RecoveryNote>, Option<SimulatedClock>), StartError> {
    let (clock, sim_clock) = match config.clock_mode {
        ClockMode::Wall => (Clock::Wall, None),
        ClockMode::Simulated => {
            let (clock, driver) = Clock::simulated(0);
            (clock, Some(driver))
        }
    };

    let root = &config.ledger_root;
    let manifest_present = root.join(lcaas_core::store::MANIFEST_FILE).is_file();
    let (mut ledger, notes) = if manifest_present {
        let (ledger, notes) = Ledger::open(root)?;
        if ledger.capacity_n() != config.capacity_n {
            return Err(StartError::CapacityMismatch {
                root: root.clone(),
                ledger: ledger.capacity_n(),
                config: config.capacity_n,
            });
        }
        (ledger, notes)
    } else {
        (Ledger::init(root, config.capacity_n, clock.now_ms())?, Vec::new())
    };

    let gas = GasPrice::new(config.gas_price_gwei).map_err(LedgerError::from)?;
    let anchor: Option<Arc<dyn AnchorBackend>> = match config.anchor_backend {
        AnchorMode::None => None,
        AnchorMode::Simulated => {
            let mut backend = SimulatedAnchor::new(LatencyModel::default(), config.rng_seed)
                .with_ticket_start(ledger.receipts().max_ticket_number() + 1);
            if config.strict_gas_tiers {
                backend = backend.with_strict_tiers();
            }
            Some(Arc::new(backend))
        }
    };

    if let Some(backend) = anchor.as_deref() {
        let now = clock.now_ms();
        ledger.anchor_missing(backend, gas, now)?;
        ledger.poll_pending(backend, Some(gas), now)?;
    }

    let state = AppState {
        ledger: Arc::new(RwLock::new(ledger)),
        anchor,
        gas,
        clock,
        max_body_bytes: config.max_body_bytes,
    };
    Ok((state, notes, sim_clock))
}
