//! Wall and simulated clocks.
//!
//! Chain construction takes caller-supplied timestamps, so the choice of
//! clock lives at the edges: the service stamps requests, the anchoring
//! simulator schedules confirmations, and the load harness paces its
//! submissions. Sharing one `Clock` value between all three lets an entire
//! experiment run in virtual time — a multi-hour submission schedule
//! collapses to however long the bookkeeping takes.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

/// A source of Unix-epoch millisecond timestamps.
#[derive(Debug, Clone)]
pub enum Clock {
    /// System time.
    Wall,
    /// Virtual time, advanced explicitly by whoever drives the run.
    Simulated(SimulatedClock),
}

impl Clock {
    /// A simulated clock starting at `start_ms`, plus a handle to drive it.
    pub fn simulated(start_ms: i64) -> (Clock, SimulatedClock) {
        let sim = SimulatedClock { now_ms: Arc::new(AtomicI64::new(start_ms)) };
        (Clock::Simulated(sim.clone()), sim)
    }

    /// Current time in Unix epoch milliseconds.
    pub fn now_ms(&self) -> i64 {
        match self {
            Clock::Wall => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .expect("system clock before Unix epoch")
                .as_millis() as i64,
            Clock::Simulated(sim) => sim.now_ms(),
        }
    }
}

/// Shared handle to a virtual clock. Clones observe and drive the same
/// instant.
#[derive(Debug, Clone)]
pub struct SimulatedClock {
    now_ms: Arc<AtomicI64>,
}

impl SimulatedClock {
    pub fn now_ms(&self) -> i64 {
        self.now_ms.load(Ordering::SeqCst)
    }

    /// Moves time forward to `target_ms`. Time never goes backwards; a
    /// target in the virtual past is a no-op.
    pub fn advance_to(&self, target_ms: i64) {
        self.now_ms.fetch_max(target_ms, Ordering::SeqCst);
    }

    /// Moves time forward by `delta_ms`.
    pub fn advance_by(&self, delta_ms: i64) {
        assert!(delta_ms >= 0, "virtual time cannot rewind");
        self.now_ms.fetch_add(delta_ms, Ordering::SeqCst);
    }
}
