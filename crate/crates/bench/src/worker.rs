//! Crash-test ingest worker: a deterministic digest stream appended to an
//! existing ledger, acknowledging each submission on stdout only after it
//! is durable. Progress is derived from the ledger itself, so a worker
//! killed mid-stream and restarted resumes exactly where the surviving
//! bytes end — the parent can kill it at any instant and the final ledger
//! must still come out byte-identical to an uninterrupted run.

use std::io::Write;
use std::path::Path;

use lcaas_core::{compute_hash, Hash, Ledger};

use crate::cell::BenchError;

/// Fixed virtual timestamp base so every run of the stream writes
/// identical bytes regardless of the wall clock.
pub const WORKER_TS0: i64 = 1_000_000;

/// The deterministic timestamp of submission `k`.
pub fn worker_timestamp(k: u64) -> i64 {
    WORKER_TS0 + (k as i64 + 1) * 137
}

/// The deterministic digest of submission `k`.
pub fn worker_digest(k: u64) -> Hash {
    compute_hash(format!("worker record {k:08}").as_bytes())
}

/// Opens the ledger at `root` (running crash recovery if the previous
/// worker died mid-write), resumes the stream at the first digest the
/// ledger does not yet hold, and appends until `count` submissions exist.
/// Each ack line — `ACK <k> <digest> <chain_id> <block_index>` — is
/// flushed only after the submission returned, i.e. after its bytes were
/// synced to disk.
pub fn run_worker(root: &Path, count: u64) -> Result<(), BenchError> {
    let (mut ledger, notes) = Ledger::open(root)?;
    let mut out = std::io::stdout().lock();
    for note in &notes {
        writeln!(out, "RECOVERED {note:?}")?;
    }
    let resume_at = ledger.total_data_blocks();
    for k in resume_at..count {
        let submission = ledger.submit_digest(worker_digest(k), worker_timestamp(k), None)?;
        writeln!(
            out,
            "ACK {k} {} {} {}",
            submission.digest, submission.chain_id, submission.block_index
        )?;
        out.flush()?;
    }
    writeln!(out, "DONE {}", ledger.total_data_blocks())?;
    out.flush()?;
    Ok(())
}
