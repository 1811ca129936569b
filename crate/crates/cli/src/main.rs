//! Offline operator tool for ledger directories.
//!
//! Exit codes are scriptable: 0 = success / fully verified, 1 = any
//! operational or integrity failure, 2 = a queried digest is not stored.
//! `--json` switches every command to machine-readable output; `verify
//! --json` emits exactly the same report shape the HTTP service serves,
//! so offline and online audits can be diffed byte for byte.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand};
use lcaas_core::{audit, audit_digest, compute_hash, lock_ledger, Hash, Ledger};

const EXIT_OK: i32 = 0;
const EXIT_FAILURE: i32 = 1;
const EXIT_NOT_FOUND: i32 = 2;

/// Tamper-evident log-digest ledger: offline init, ingest, and audit.
#[derive(Debug, Parser)]
#[command(name = "lcaas", version)]
struct Cli {
    /// Emit machine-readable JSON instead of prose.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an empty ledger: manifest, first genesis, super genesis.
    Init {
        /// Directory for the ledger; must be empty or absent.
        #[arg(long)]
        root: PathBuf,
        /// Data blocks per circled chain.
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Hash files and append each digest as one data block.
    Ingest {
        #[arg(long)]
        root: PathBuf,
        /// Files to ingest, in order.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Re-read the ledger from disk and verify the whole hierarchy.
    Verify {
        #[arg(long)]
        root: PathBuf,
        /// Also look this digest up and report its position.
        #[arg(long)]
        digest: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Init { root, n } => run_init(&root, n, cli.json),
        Command::Ingest { root, files } => run_ingest(&root, &files, cli.json),
        Command::Verify { root, digest } => run_verify(&root, digest.as_deref(), cli.json),
    };
    std::process::exit(code);
}

fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("system clock before Unix epoch")
        .as_millis() as i64
}

fn fail(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e:#}");
    EXIT_FAILURE
}

fn run_init(root: &Path, n: u64, json: bool) -> i32 {
    match Ledger::init(root, n, now_ms()) {
        Ok(ledger) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "root": root.display().to_string(),
                        "capacity_n": ledger.capacity_n(),
                    })
                );
            } else {
                println!("initialized ledger at {} (capacity n = {n})", root.display());
            }
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn run_ingest(root: &Path, files: &[PathBuf], json: bool) -> i32 {
    let (mut ledger, notes) = match Ledger::open(root) {
        Ok(opened) => opened,
        Err(e) => return fail(e),
    };
    for note in notes {
        eprintln!("recovery: {note:?}");
    }
    for path in files {
        let bytes = match std::fs::read(path)
            .with_context(|| format!("reading {}", path.display()))
        {
            Ok(bytes) => bytes,
            Err(e) => return fail(e),
        };
        let submission = match ledger.submit_digest(compute_hash(&bytes), now_ms(), None) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        if json {
            let mut line = serde_json::to_value(&submission).expect("submission serializes");
            line["path"] = serde_json::Value::String(path.display().to_string());
            println!("{line}");
        } else {
            let seal = match submission.sb_index {
                Some(sb) => format!("  sealed -> super block {sb}"),
                None => String::new(),
            };
            println!(
                "{}  chain {} block {}{seal}  {}",
                submission.digest,
                submission.chain_id,
                submission.block_index,
                path.display()
            );
        }
    }
    EXIT_OK
}

fn run_verify(root: &Path, digest: Option<&str>, json: bool) -> i32 {
    // Take the ledger lock for the duration of the audit: verification
    // must not race a live writer.
    let _guard = match lock_ledger(root) {
        Ok(guard) => guard,
        Err(e) => return fail(e),
    };
    match digest {
        None => {
            let report = audit(root);
            if json {
                println!("{}", serde_json::to_string(&report).expect("report serializes"));
            } else {
                print_audit_prose(&report);
            }
            if report.ok {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Some(digest) => {
            let digest = match Hash::from_hex(digest) {
                Ok(d) => d,
                Err(e) => return fail(e),
            };
            let report = audit_digest(root, &digest);
            if json {
                println!("{}", serde_json::to_string(&report).expect("report serializes"));
            } else {
                print_audit_prose(&report.audit);
                match &report.proof {
                    Some(proof) => {
                        let promoted = match proof.sb_index {
                            Some(sb) => format!(", covered by super block {sb}"),
                            None => ", chain still open".to_string(),
                        };
                        println!(
                            "digest {digest}: chain {} block {}{promoted}",
                            proof.chain_id, proof.block_index
                        );
                    }
                    None => println!("digest {digest}: not stored"),
                }
            }
            if !report.audit.ok {
                EXIT_FAILURE
            } else if !report.found {
                EXIT_NOT_FOUND
            } else {
                EXIT_OK
            }
        }
    }
}

fn print_audit_prose(report: &lcaas_core::AuditReport) {
    if let Some(s) = &report.summary {
        println!(
            "ledger: {} chains, {} super blocks, {} data blocks, {} blocks total (n = {})",
            s.chain_count, s.super_block_count, s.data_block_count, s.total_blocks, s.capacity_n
        );
    }
    if let Some(c) = &report.corruption {
        println!("unreadable: {c}");
    }
    if let Some(h) = &report.hierarchy {
        if let Some((chain, reason)) = h.first_problem() {
            let place = match chain {
                Some(id) => format!("circled chain {id}"),
                None => "super chain".to_string(),
            };
            println!("integrity failure in {place}: {reason:?}");
        }
        println!(
            "verification: {} ({} hash invocations)",
            if h.ok { "OK" } else { "FAILED" },
            h.hash_invocations
        );
    }
}
