//! Durable ledger persistence.
//!
//! A ledger lives in one directory:
//!
//! - `circled-<id>.jsonl` — one circled chain per file, one block per line,
//!   ids contiguous from 0;
//! - `superchain.jsonl`   — the super chain, one block per line;
//! - `receipts.jsonl`     — anchoring events (ticket submissions and
//!   confirmations), one event per line;
//! - `manifest.json`      — fixed ledger parameters (format version and
//!   chain capacity); everything else is derived from the files above;
//! - `lock`               — holder pid while a process has the ledger open.
//!
//! Every append is flushed and fsynced before the call returns: once a
//! caller has been told a block is stored, a crash cannot take it back.
//! Writes happen in dependency order (data block → terminal → super block
//! → next genesis → receipt), so after a crash the ledger is always a
//! clean prefix of that sequence plus, at worst, one torn trailing line.
//! [`LedgerStore::open`] repairs exactly those states; the read-only
//! [`load_readonly`] refuses them instead, byte-for-byte strict, which is
//! what an auditor wants.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anchor::{AnchorReceipt, AnchorTicket};
use crate::block::{Block, BlockType};
use crate::circled::CircledBlockchain;
use crate::superchain::SuperBlockchain;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUPER_CHAIN_FILE: &str = "superchain.jsonl";
pub const RECEIPTS_FILE: &str = "receipts.jsonl";
pub const LOCK_FILE: &str = "lock";
pub const MANIFEST_VERSION: u32 = 1;

/// File name holding circled chain `chain_id`.
pub fn circled_file_name(chain_id: u64) -> String {
    format!("circled-{chain_id}.jsonl")
}

/// Location of an integrity problem found while reading ledger files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corruption {
    /// File name relative to the ledger root.
    pub file: String,
    /// 1-based line number, when the problem is a specific line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub detail: String,
}

impl std::fmt::Display for Corruption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(n) => write!(f, "{}:{}: {}", self.file, n, self.detail),
            None => write!(f, "{}: {}", self.file, self.detail),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger corruption: {0}")]
    Corrupt(Corruption),
    #[error("no ledger at {0} (missing manifest.json; run init first)")]
    NotInitialized(PathBuf),
    #[error("{0} is not empty; refusing to initialize a ledger over existing files")]
    NotEmpty(PathBuf),
    #[error("ledger at {root} is locked by running process {pid}")]
    Locked { root: PathBuf, pid: u32 },
}

impl StoreError {
    fn corrupt(file: impl Into<String>, line: Option<u64>, detail: impl Into<String>) -> Self {
        StoreError::Corrupt(Corruption { file: file.into(), line, detail: detail.into() })
    }

    /// Normal form for reporting: every variant as a [`Corruption`]-shaped
    /// location, so auditors can serialize one uniform record.
    pub fn to_corruption(&self) -> Corruption {
        match self {
            StoreError::Corrupt(c) => c.clone(),
            StoreError::Io { path, source } => Corruption {
                file: path.display().to_string(),
                line: None,
                detail: format!("i/o error: {source}"),
            },
            StoreError::NotInitialized(root) => Corruption {
                file: MANIFEST_FILE.to_string(),
                line: None,
                detail: format!("no ledger at {}", root.display()),
            },
            StoreError::NotEmpty(root) => Corruption {
                file: root.display().to_string(),
                line: None,
                detail: "directory not empty".to_string(),
            },
            StoreError::Locked { root, pid } => Corruption {
                file: LOCK_FILE.to_string(),
                line: None,
                detail: format!("ledger at {} locked by pid {pid}", root.display()),
            },
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), source }
}

/// Fixed ledger parameters, written once at init.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub capacity_n: u64,
}

/// One line of `receipts.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReceiptEvent {
    /// A super block's hash was handed to the anchoring backend.
    Submitted { sb_index: u64, ticket: AnchorTicket },
    /// The backend confirmed a previously submitted ticket.
    Confirmed { receipt: AnchorReceipt },
}

/// Folded view of one ticket's lifecycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceiptEntry {
    pub sb_index: u64,
    pub ticket: AnchorTicket,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receipt: Option<AnchorReceipt>,
    /// Set when a later ticket was submitted for the same super block
    /// (this one was abandoned, e.g. because the backend lost it across a
    /// restart).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<String>,
}

/// All anchoring state, folded from the receipt event log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceiptsState {
    by_ticket: BTreeMap<String, ReceiptEntry>,
    latest_by_sb: BTreeMap<u64, String>,
}

impl ReceiptsState {
    pub fn get(&self, ticket_id: &str) -> Option<&ReceiptEntry> {
        self.by_ticket.get(ticket_id)
    }

    /// Latest ticket submitted for a super block index, if any.
    pub fn latest_for_sb(&self, sb_index: u64) -> Option<&ReceiptEntry> {
        self.latest_by_sb.get(&sb_index).and_then(|id| self.by_ticket.get(id))
    }

    pub fn tickets(&self) -> impl Iterator<Item = &ReceiptEntry> {
        self.by_ticket.values()
    }

    /// Super blocks whose latest ticket has no confirmation yet, as
    /// `(sb_index, ticket_id)`.
    pub fn unconfirmed(&self) -> Vec<(u64, String)> {
        self.latest_by_sb
            .iter()
            .filter_map(|(sb, id)| {
                let entry = &self.by_ticket[id];
                entry.receipt.is_none().then(|| (*sb, id.clone()))
            })
            .collect()
    }

    /// Super block indexes in `1..=super_block_count` that were never
    /// submitted for anchoring at all.
    pub fn unanchored(&self, super_block_count: u64) -> Vec<u64> {
        (1..=super_block_count).filter(|sb| !self.latest_by_sb.contains_key(sb)).collect()
    }

    /// Largest numeric suffix among `tk-<n>` ticket ids, for seeding a
    /// fresh backend's counter past everything already on disk.
    pub fn max_ticket_number(&self) -> u64 {
        self.by_ticket
            .keys()
            .filter_map(|id| id.strip_prefix("tk-").and_then(|n| n.parse::<u64>().ok()))
            .max()
            .unwrap_or(0)
    }

    /// Folds one event into the state, enforcing the invariants the write
    /// path guarantees: ticket ids never repeat, confirmations only follow
    /// a submission, and nothing is confirmed twice.
    pub fn apply(&mut self, event: ReceiptEvent) -> Result<(), String> {
        match event {
            ReceiptEvent::Submitted { sb_index, ticket } => {
                if sb_index == 0 {
                    return Err("submission for super block 0 (the genesis is never anchored)"
                        .to_string());
                }
                if self.by_ticket.contains_key(&ticket.ticket_id) {
                    return Err(format!("duplicate ticket id {}", ticket.ticket_id));
                }
                if let Some(prev_id) = self.latest_by_sb.get(&sb_index) {
                    let prev = self.by_ticket.get_mut(prev_id).expect("index is consistent");
                    if prev.receipt.is_some() {
                        return Err(format!(
                            "super block {sb_index} re-submitted after confirmation"
                        ));
                    }
                    prev.superseded_by = Some(ticket.ticket_id.clone());
                }
                self.latest_by_sb.insert(sb_index, ticket.ticket_id.clone());
                self.by_ticket.insert(
                    ticket.ticket_id.clone(),
                    ReceiptEntry { sb_index, ticket, receipt: None, superseded_by: None },
                );
                Ok(())
            }
            ReceiptEvent::Confirmed { receipt } => {
                let entry = self
                    .by_ticket
                    .get_mut(&receipt.ticket_id)
                    .ok_or_else(|| format!("confirmation for unknown ticket {}", receipt.ticket_id))?;
                if entry.receipt.is_some() {
                    return Err(format!("ticket {} confirmed twice", receipt.ticket_id));
                }
                entry.receipt = Some(receipt);
                Ok(())
            }
        }
    }
}

/// In-memory mirror of everything the ledger files hold.
#[derive(Debug, Clone)]
pub struct LedgerState {
    /// Position in the vector equals `chain_id`.
    pub circled: Vec<CircledBlockchain>,
    pub super_chain: SuperBlockchain,
    pub receipts: ReceiptsState,
}

impl LedgerState {
    pub fn total_blocks(&self) -> u64 {
        let circled: usize = self.circled.iter().map(|c| c.blocks.len()).sum();
        (circled + self.super_chain.blocks.len()) as u64
    }

    /// Payload digests stored so far — the resume point for a
    /// deterministic re-ingest.
    pub fn total_data_blocks(&self) -> u64 {
        self.circled.iter().map(|c| c.data_block_count()).sum()
    }
}

/// What [`LedgerStore::open`] had to do to bring a crashed ledger back to
/// a consistent state, plus anchoring gaps the caller may want to act on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RecoveryNote {
    /// The final line of a file was incomplete (no trailing newline) and
    /// was discarded; the write it belonged to was never acknowledged.
    DiscardedTornTail { file: String },
    /// The open chain had a full complement of data blocks but no
    /// terminal; the seal was completed.
    SealedChain { chain_id: u64 },
    /// A sealed chain had no covering super block; the promotion was
    /// completed.
    PromotedChain { chain_id: u64, sb_index: u64 },
    /// The newest chain was sealed with no successor; the next chain's
    /// genesis was created.
    CreatedNextChain { chain_id: u64 },
    /// A super block has no anchoring ticket on record.
    UnanchoredSuperBlock { sb_index: u64 },
    /// A super block's latest ticket has no confirmation on record.
    UnconfirmedTicket { sb_index: u64, ticket_id: String },
}

// ---------------------------------------------------------------------------
// Locking

/// Holds the ledger's advisory lock file; removes it on drop.
#[derive(Debug)]
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(root: &Path) -> Result<LockGuard, StoreError> {
        let path = root.join(LOCK_FILE);
        for _ in 0..4 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let pid = std::process::id().to_string();
                    f.write_all(pid.as_bytes()).map_err(|e| io_err(&path, e))?;
                    f.sync_data().map_err(|e| io_err(&path, e))?;
                    return Ok(LockGuard { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    // Stale if the recorded pid is no longer running.
                    let holder = fs::read_to_string(&path)
                        .ok()
                        .and_then(|s| s.trim().parse::<u32>().ok());
                    if let Some(pid) = holder {
                        if Path::new("/proc").join(pid.to_string()).exists() {
                            return Err(StoreError::Locked { root: root.to_path_buf(), pid });
                        }
                    }
                    // Dead holder or unreadable pid: clear it and retry.
                    let _ = fs::remove_file(&path);
                }
                Err(e) => return Err(io_err(&path, e)),
            }
        }
        Err(StoreError::Locked { root: root.to_path_buf(), pid: 0 })
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Takes the ledger's exclusive lock without loading anything — for
/// read-only auditors that still need the writers kept out.
pub fn lock_ledger(root: &Path) -> Result<LockGuard, StoreError> {
    LockGuard::acquire(root)
}

// ---------------------------------------------------------------------------
// Low-level durable writes

fn append_line_durable(path: &Path, line: &str) -> Result<(), StoreError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    f.write_all(&buf).map_err(|e| io_err(path, e))?;
    f.sync_data().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// fsync a directory so a newly created file's entry is durable.
fn sync_dir(dir: &Path) -> Result<(), StoreError> {
    File::open(dir).map_err(|e| io_err(dir, e))?.sync_all().map_err(|e| io_err(dir, e))
}

fn block_line(block: &Block) -> String {
    serde_json::to_string(block).expect("block serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Reading

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Any irregularity is an error; nothing is written.
    Strict,
    /// A torn trailing line is discarded (it was never acknowledged);
    /// interrupted rotations get completed by the caller.
    Recover,
}

#[derive(Debug, Clone, Copy)]
enum FileKind {
    Circled { chain_id: u64 },
    Super,
}

impl FileKind {
    fn check_block(&self, block: &Block, line: u64, file: &str) -> Result<(), StoreError> {
        let expected_index = line - 1;
        if block.index != expected_index {
            return Err(StoreError::corrupt(
                file,
                Some(line),
                format!("block index {} where {} was expected", block.index, expected_index),
            ));
        }
        let ok = match (self, line) {
            (FileKind::Circled { chain_id: 0 }, 1) => {
                block.block_type == BlockType::AbsoluteGenesis
            }
            (FileKind::Circled { .. }, 1) => block.block_type == BlockType::RelativeGenesis,
            (FileKind::Circled { .. }, _) => {
                matches!(block.block_type, BlockType::Data | BlockType::Terminal)
            }
            (FileKind::Super, 1) => block.block_type == BlockType::SuperGenesis,
            (FileKind::Super, _) => block.block_type == BlockType::Super,
        };
        if !ok {
            return Err(StoreError::corrupt(
                file,
                Some(line),
                format!("unexpected block type {:?} at this position", block.block_type),
            ));
        }
        Ok(())
    }
}

/// Physically removes a torn tail so later appends land after the last
/// complete line instead of fusing with the leftover bytes. Only the
/// recovering (lock-holding) path may call this.
fn truncate_torn_tail(path: &Path, keep_bytes: u64) -> Result<(), StoreError> {
    let f = OpenOptions::new().write(true).open(path).map_err(|e| io_err(path, e))?;
    f.set_len(keep_bytes).map_err(|e| io_err(path, e))?;
    f.sync_all().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Splits raw file content into complete lines plus an optional torn tail
/// (bytes after the last newline).
fn split_lines(content: &str) -> (Vec<&str>, Option<&str>) {
    match content.rfind('\n') {
        Some(i) => {
            let body = &content[..i];
            let tail = &content[i + 1..];
            let lines = if body.is_empty() { Vec::new() } else { body.split('\n').collect() };
            (lines, (!tail.is_empty()).then_some(tail))
        }
        None => (Vec::new(), (!content.is_empty()).then_some(content)),
    }
}

/// Reads one block file. Returns the blocks and whether a torn tail was
/// discarded (Recover mode only; Strict errors instead).
fn read_block_file(
    root: &Path,
    name: &str,
    kind: FileKind,
    mode: Mode,
    notes: &mut Vec<RecoveryNote>,
) -> Result<Vec<Block>, StoreError> {
    let path = root.join(name);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    let content = std::str::from_utf8(&bytes)
        .map_err(|_| StoreError::corrupt(name, None, "file is not valid utf-8"))?;

    let (lines, tail) = split_lines(content);
    if let Some(torn) = tail {
        match mode {
            Mode::Recover => {
                truncate_torn_tail(&path, (content.len() - torn.len()) as u64)?;
                notes.push(RecoveryNote::DiscardedTornTail { file: name.to_string() })
            }
            Mode::Strict => {
                return Err(StoreError::corrupt(
                    name,
                    Some(lines.len() as u64 + 1),
                    "truncated final record (no trailing newline)",
                ));
            }
        }
    }

    let mut blocks = Vec::with_capacity(lines.len());
    let mut after_terminal = false;
    for (i, line) in lines.iter().enumerate() {
        let line_no = i as u64 + 1;
        if line.is_empty() {
            return Err(StoreError::corrupt(name, Some(line_no), "empty line"));
        }
        let block: Block = serde_json::from_str(line).map_err(|e| {
            StoreError::corrupt(name, Some(line_no), format!("unparseable block record: {e}"))
        })?;
        if after_terminal {
            return Err(StoreError::corrupt(name, Some(line_no), "record after the terminal"));
        }
        kind.check_block(&block, line_no, name)?;
        after_terminal = block.block_type == BlockType::Terminal;
        blocks.push(block);
    }
    Ok(blocks)
}

fn read_manifest(root: &Path) -> Result<Manifest, StoreError> {
    let path = root.join(MANIFEST_FILE);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StoreError::NotInitialized(root.to_path_buf()));
        }
        Err(e) => return Err(io_err(&path, e)),
    };
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| StoreError::corrupt(MANIFEST_FILE, None, format!("unparseable: {e}")))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(StoreError::corrupt(
            MANIFEST_FILE,
            None,
            format!("unsupported version {}", manifest.version),
        ));
    }
    if manifest.capacity_n == 0 {
        return Err(StoreError::corrupt(MANIFEST_FILE, None, "capacity_n must be at least 1"));
    }
    Ok(manifest)
}

/// Enumerates `circled-<id>.jsonl` files and checks the ids are exactly
/// `0..count` with canonical names.
fn circled_ids(root: &Path) -> Result<Vec<u64>, StoreError> {
    let mut ids = Vec::new();
    let entries = fs::read_dir(root).map_err(|e| io_err(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(root, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(id) = name
            .strip_prefix("circled-")
            .and_then(|rest| rest.strip_suffix(".jsonl"))
            .and_then(|num| num.parse::<u64>().ok())
        else {
            continue;
        };
        if circled_file_name(id) != name {
            return Err(StoreError::corrupt(name, None, "non-canonical chain file name"));
        }
        ids.push(id);
    }
    ids.sort_unstable();
    if ids.is_empty() {
        return Err(StoreError::corrupt(circled_file_name(0), None, "missing chain file"));
    }
    for (pos, &id) in ids.iter().enumerate() {
        if id != pos as u64 {
            return Err(StoreError::corrupt(
                circled_file_name(pos as u64),
                None,
                "missing chain file",
            ));
        }
    }
    Ok(ids)
}

fn read_receipts(
    root: &Path,
    super_block_count: u64,
    mode: Mode,
    notes: &mut Vec<RecoveryNote>,
) -> Result<ReceiptsState, StoreError> {
    let name = RECEIPTS_FILE;
    let path = root.join(name);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    let content = std::str::from_utf8(&bytes)
        .map_err(|_| StoreError::corrupt(name, None, "file is not valid utf-8"))?;
    let (lines, tail) = split_lines(content);
    if let Some(torn) = tail {
        match mode {
            Mode::Recover => {
                truncate_torn_tail(&path, (content.len() - torn.len()) as u64)?;
                notes.push(RecoveryNote::DiscardedTornTail { file: name.to_string() })
            }
            Mode::Strict => {
                return Err(StoreError::corrupt(
                    name,
                    Some(lines.len() as u64 + 1),
                    "truncated final record (no trailing newline)",
                ));
            }
        }
    }
    let mut state = ReceiptsState::default();
    for (i, line) in lines.iter().enumerate() {
        let line_no = i as u64 + 1;
        if line.is_empty() {
            return Err(StoreError::corrupt(name, Some(line_no), "empty line"));
        }
        let event: ReceiptEvent = serde_json::from_str(line).map_err(|e| {
            StoreError::corrupt(name, Some(line_no), format!("unparseable receipt event: {e}"))
        })?;
        if let ReceiptEvent::Submitted { sb_index, .. } = &event {
            if *sb_index > super_block_count {
                return Err(StoreError::corrupt(
                    name,
                    Some(line_no),
                    format!(
                        "submission for super block {sb_index} but only {super_block_count} exist"
                    ),
                ));
            }
        }
        state.apply(event).map_err(|msg| StoreError::corrupt(name, Some(line_no), msg))?;
    }
    Ok(state)
}

/// Loads a ledger in byte-strict read-only mode: any torn line, parse
/// failure, or structural irregularity in the files is an error carrying
/// the offending file and line. Nothing is written. The caller is
/// responsible for exclusivity (see [`lock_ledger`]).
///
/// Semantic integrity (hashes, links, aggregates, promotion coverage) is
/// *not* checked here — run the verification functions on the returned
/// state for that.
pub fn load_readonly(root: &Path) -> Result<(Manifest, LedgerState), StoreError> {
    let mut notes = Vec::new();
    let (manifest, state) = load(root, Mode::Strict, &mut notes)?;
    debug_assert!(notes.is_empty(), "strict mode never records recovery actions");
    Ok((manifest, state))
}

fn load(
    root: &Path,
    mode: Mode,
    notes: &mut Vec<RecoveryNote>,
) -> Result<(Manifest, LedgerState), StoreError> {
    let manifest = read_manifest(root)?;
    let ids = circled_ids(root)?;
    let last_id = *ids.last().expect("at least chain 0 exists");

    let mut circled = Vec::with_capacity(ids.len());
    for id in ids {
        let name = circled_file_name(id);
        let blocks = read_block_file(root, &name, FileKind::Circled { chain_id: id }, mode, notes)?;
        if blocks.is_empty() && !(mode == Mode::Recover && id == last_id) {
            // Only an interrupted rotation may leave the newest file
            // empty, and only the recovering path may excuse it.
            return Err(StoreError::corrupt(&name, None, "chain file holds no blocks"));
        }
        let chain = CircledBlockchain::from_parts(id, manifest.capacity_n, blocks);
        if chain.data_block_count() > manifest.capacity_n {
            return Err(StoreError::corrupt(
                &name,
                None,
                format!(
                    "{} data blocks exceed the configured capacity {}",
                    chain.data_block_count(),
                    manifest.capacity_n
                ),
            ));
        }
        circled.push(chain);
    }
    // An empty newest file is the moment between creating the file and
    // writing its genesis; recovery rewrites the genesis, so treat the
    // chain as not yet existing.
    if mode == Mode::Recover && circled.last().is_some_and(|c| c.blocks.is_empty()) {
        circled.pop();
        if circled.is_empty() {
            return Err(StoreError::corrupt(
                circled_file_name(0),
                None,
                "chain file holds no blocks",
            ));
        }
    }

    let super_blocks = read_block_file(root, SUPER_CHAIN_FILE, FileKind::Super, mode, notes)?;
    if super_blocks.is_empty() {
        return Err(StoreError::corrupt(SUPER_CHAIN_FILE, None, "missing genesis"));
    }
    let super_chain = SuperBlockchain::from_parts(super_blocks);

    if super_chain.super_block_count() > circled.len() as u64 {
        return Err(StoreError::corrupt(
            SUPER_CHAIN_FILE,
            None,
            format!(
                "{} super blocks but only {} circled chains",
                super_chain.super_block_count(),
                circled.len()
            ),
        ));
    }

    let receipts = read_receipts(root, super_chain.super_block_count(), mode, notes)?;
    Ok((manifest, LedgerState { circled, super_chain, receipts }))
}

// ---------------------------------------------------------------------------
// The store

/// Handle on a ledger directory with the exclusive lock held. All appends
/// are durable (fsynced) before they return.
#[derive(Debug)]
pub struct LedgerStore {
    root: PathBuf,
    capacity_n: u64,
    _lock: LockGuard,
}

impl LedgerStore {
    /// Creates a fresh ledger: the first chain's absolute genesis, the
    /// super chain's genesis, an empty receipt log, and the manifest.
    /// Refuses a directory that already contains anything.
    pub fn init(root: &Path, capacity_n: u64, now_ms: i64) -> Result<(Self, LedgerState), StoreError> {
        if capacity_n == 0 {
            return Err(StoreError::corrupt(MANIFEST_FILE, None, "capacity_n must be at least 1"));
        }
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let lock = LockGuard::acquire(root)?;
        let mut entries = fs::read_dir(root).map_err(|e| io_err(root, e))?;
        let only_lock = entries.all(|e| {
            e.map(|e| e.file_name().to_str() == Some(LOCK_FILE)).unwrap_or(false)
        });
        if !only_lock {
            return Err(StoreError::NotEmpty(root.to_path_buf()));
        }

        let chain = CircledBlockchain::first(capacity_n, now_ms)
            .expect("capacity checked above");
        let super_chain = SuperBlockchain::new(now_ms);
        append_line_durable(&root.join(circled_file_name(0)), &block_line(&chain.blocks[0]))?;
        append_line_durable(
            &root.join(SUPER_CHAIN_FILE),
            &block_line(&super_chain.blocks[0]),
        )?;
        // Empty receipt log: its presence distinguishes "no anchoring
        // events yet" from "file lost".
        File::create(root.join(RECEIPTS_FILE))
            .and_then(|f| f.sync_data())
            .map_err(|e| io_err(&root.join(RECEIPTS_FILE), e))?;
        // The manifest goes last: its presence marks init as complete.
        let manifest = Manifest { version: MANIFEST_VERSION, capacity_n };
        let manifest_json =
            serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
        let tmp = root.join(".manifest.tmp");
        fs::write(&tmp, format!("{manifest_json}\n")).map_err(|e| io_err(&tmp, e))?;
        File::open(&tmp)
            .and_then(|f| f.sync_data())
            .map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, root.join(MANIFEST_FILE))
            .map_err(|e| io_err(&root.join(MANIFEST_FILE), e))?;
        sync_dir(root)?;

        let state = LedgerState {
            circled: vec![chain],
            super_chain,
            receipts: ReceiptsState::default(),
        };
        Ok((LedgerStore { root: root.to_path_buf(), capacity_n, _lock: lock }, state))
    }

    /// Opens an existing ledger, repairing any crash-interrupted rotation:
    /// a torn trailing line is discarded (it was never acknowledged), a
    /// full-but-unsealed newest chain is sealed, sealed chains without a
    /// covering super block are promoted, and a sealed newest chain gets
    /// its successor's genesis. Every repair recreates exactly the bytes
    /// an uninterrupted run would have written, because terminal, super
    /// block, and follow-up genesis all carry the sealing call's
    /// timestamp.
    pub fn open(root: &Path) -> Result<(Self, LedgerState, Vec<RecoveryNote>), StoreError> {
        let lock = LockGuard::acquire(root)?;
        let mut notes = Vec::new();
        let (manifest, mut state) = load(root, Mode::Recover, &mut notes)?;
        let store =
            LedgerStore { root: root.to_path_buf(), capacity_n: manifest.capacity_n, _lock: lock };
        store.repair(&mut state, &mut notes)?;
        Ok((store, state, notes))
    }

    fn repair(
        &self,
        state: &mut LedgerState,
        notes: &mut Vec<RecoveryNote>,
    ) -> Result<(), StoreError> {
        // Rotations are strictly sequential, so at most the newest chain
        // can be mid-rotation; an unsealed interior chain is corruption,
        // not a crash artifact.
        let last = state.circled.len() - 1;
        for chain in &state.circled[..last] {
            if !chain.sealed {
                return Err(StoreError::corrupt(
                    circled_file_name(chain.chain_id),
                    None,
                    "interior chain is not sealed",
                ));
            }
        }

        // 1. Complete an interrupted seal of the newest chain.
        let newest = &mut state.circled[last];
        if !newest.sealed && newest.data_block_count() == newest.capacity_n {
            let ts = newest.blocks.last().expect("chain has a genesis").timestamp;
            let chain_id = newest.chain_id;
            let terminal = newest
                .seal(ts)
                .map_err(|e| {
                    StoreError::corrupt(circled_file_name(chain_id), None, e.to_string())
                })?
                .clone();
            self.append_chain_block(chain_id, &terminal)?;
            notes.push(RecoveryNote::SealedChain { chain_id });
        }

        // 2. Promote sealed chains that have no covering super block.
        while state.super_chain.super_block_count() < state.circled.len() as u64 {
            let chain_id = state.super_chain.super_block_count();
            let chain = &state.circled[chain_id as usize];
            if !chain.sealed {
                break; // the open newest chain — nothing to promote
            }
            let terminal = chain.terminal().expect("sealed chain has a terminal").clone();
            let sb = state
                .super_chain
                .make_super_block(&terminal, terminal.timestamp)
                .map_err(|e| {
                    StoreError::corrupt(circled_file_name(chain_id), None, e.to_string())
                })?
                .clone();
            self.append_super_block(&sb)?;
            notes.push(RecoveryNote::PromotedChain { chain_id, sb_index: sb.index });
        }

        // 3. A sealed newest chain means an interrupted rotation: create
        //    the successor's genesis.
        let newest = state.circled.last().expect("at least chain 0 exists");
        if newest.sealed {
            let terminal = newest.terminal().expect("sealed chain has a terminal");
            let next_id = newest.chain_id + 1;
            let chain = CircledBlockchain::next(
                next_id,
                self.capacity_n,
                terminal,
                terminal.timestamp,
            )
            .map_err(|e| {
                StoreError::corrupt(circled_file_name(next_id), None, e.to_string())
            })?;
            self.append_chain_block(next_id, &chain.blocks[0])?;
            state.circled.push(chain);
            notes.push(RecoveryNote::CreatedNextChain { chain_id: next_id });
        }

        // 4. Surface anchoring gaps; acting on them needs a backend, which
        //    is the caller's business.
        for sb_index in state.receipts.unanchored(state.super_chain.super_block_count()) {
            notes.push(RecoveryNote::UnanchoredSuperBlock { sb_index });
        }
        for (sb_index, ticket_id) in state.receipts.unconfirmed() {
            notes.push(RecoveryNote::UnconfirmedTicket { sb_index, ticket_id });
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn capacity_n(&self) -> u64 {
        self.capacity_n
    }

    /// Appends one block to a circled chain's file; creating the file (for
    /// a genesis) also syncs the directory entry.
    pub fn append_chain_block(&self, chain_id: u64, block: &Block) -> Result<(), StoreError> {
        let path = self.root.join(circled_file_name(chain_id));
        let is_new = block.index == 0;
        append_line_durable(&path, &block_line(block))?;
        if is_new {
            sync_dir(&self.root)?;
        }
        Ok(())
    }

    pub fn append_super_block(&self, block: &Block) -> Result<(), StoreError> {
        append_line_durable(&self.root.join(SUPER_CHAIN_FILE), &block_line(block))
    }

    pub fn append_receipt_event(&self, event: &ReceiptEvent) -> Result<(), StoreError> {
        let line = serde_json::to_string(event).expect("event serialization cannot fail");
        append_line_durable(&self.root.join(RECEIPTS_FILE), &line)
    }
}
