//! Blocks and their canonical byte serialization.
//!
//! A block's identity is its `current_hash`, computed over a canonical
//! string of the other five fields:
//!
//! ```text
//! index|timestamp|block_type|len(data):data|previous_hash
//! ```
//!
//! Integers are decimal, the type is its lowercase tag, and the free-form
//! `data` field is length-prefixed so that a `|` or `:` inside a payload can
//! never shift field boundaries — the serialization is injective, which is
//! what makes "different fields ⇒ different hash" hold. JSON is used only
//! for storage and transport; hashing always goes through this form.

use crate::hash::{compute_hash, Hash};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The six block kinds in the two-level hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockType {
    /// First block of the first circled chain (chain id 0).
    AbsoluteGenesis,
    /// First block of every later circled chain; links to the previous
    /// chain's terminal block.
    RelativeGenesis,
    /// Holds one payload digest.
    Data,
    /// Closes a circled chain; its data is the aggregate digest over every
    /// prior block hash in that chain.
    Terminal,
    /// First block of the super chain.
    SuperGenesis,
    /// Super block; its data embeds a full terminal-block serialization.
    Super,
}

impl BlockType {
    /// Lowercase tag used in the canonical serialization and in JSON.
    pub fn tag(&self) -> &'static str {
        match self {
            BlockType::AbsoluteGenesis => "absolute_genesis",
            BlockType::RelativeGenesis => "relative_genesis",
            BlockType::Data => "data",
            BlockType::Terminal => "terminal",
            BlockType::SuperGenesis => "super_genesis",
            BlockType::Super => "super",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "absolute_genesis" => BlockType::AbsoluteGenesis,
            "relative_genesis" => BlockType::RelativeGenesis,
            "data" => BlockType::Data,
            "terminal" => BlockType::Terminal,
            "super_genesis" => BlockType::SuperGenesis,
            "super" => BlockType::Super,
            _ => return None,
        })
    }
}

impl fmt::Display for BlockType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Sentinel payload of an absolute genesis block.
pub const ABSOLUTE_GENESIS_DATA: &str = "ABSOLUTE_GENESIS";
/// Sentinel payload of a relative genesis block.
pub const RELATIVE_GENESIS_DATA: &str = "RELATIVE_GENESIS";
/// Sentinel payload of a super genesis block.
pub const SUPER_GENESIS_DATA: &str = "SUPER_GENESIS";

/// One block of a circled chain or of the super chain.
///
/// `timestamp` is Unix epoch milliseconds as supplied by the caller; the
/// chain layer never reads a clock itself, which keeps chain construction
/// a pure function of its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub index: u64,
    pub timestamp: i64,
    pub block_type: BlockType,
    pub data: String,
    pub previous_hash: Hash,
    pub current_hash: Hash,
}

/// Canonical five-field byte string that gets hashed.
pub fn canonical_serialize(
    index: u64,
    timestamp: i64,
    block_type: BlockType,
    data: &str,
    previous_hash: &Hash,
) -> Vec<u8> {
    format!(
        "{index}|{timestamp}|{tag}|{len}:{data}|{prev}",
        tag = block_type.tag(),
        len = data.len(),
        prev = previous_hash.as_str(),
    )
    .into_bytes()
}

impl Block {
    /// Builds a block, deriving `current_hash` from the canonical
    /// serialization of the other five fields.
    pub fn new(
        index: u64,
        timestamp: i64,
        block_type: BlockType,
        data: String,
        previous_hash: Hash,
    ) -> Self {
        let current_hash = compute_hash(&canonical_serialize(
            index,
            timestamp,
            block_type,
            &data,
            &previous_hash,
        ));
        Block { index, timestamp, block_type, data, previous_hash, current_hash }
    }

    /// Recomputes this block's hash from its stored fields.
    pub fn recompute_hash(&self) -> Hash {
        compute_hash(&canonical_serialize(
            self.index,
            self.timestamp,
            self.block_type,
            &self.data,
            &self.previous_hash,
        ))
    }

    /// Six-field serialization (the canonical five plus `current_hash`),
    /// used as the payload a super block embeds for its terminal.
    pub fn serialize_full(&self) -> String {
        let mut s = String::from_utf8(canonical_serialize(
            self.index,
            self.timestamp,
            self.block_type,
            &self.data,
            &self.previous_hash,
        ))
        .expect("canonical form is built from valid UTF-8");
        s.push('|');
        s.push_str(self.current_hash.as_str());
        s
    }

    /// Parses a six-field serialization back into a block.
    ///
    /// This only restores the fields; it deliberately does **not** check
    /// that `current_hash` matches the other five — verification is a
    /// separate, counted step so that audits can report *where* a stored
    /// record disagrees with itself.
    pub fn parse_full(s: &str) -> Result<Block, BlockParseError> {
        use BlockParseError as E;

        let (index_s, rest) = s.split_once('|').ok_or(E::MissingField("index"))?;
        let index: u64 = index_s.parse().map_err(|_| E::BadInteger("index"))?;
        let (ts_s, rest) = rest.split_once('|').ok_or(E::MissingField("timestamp"))?;
        let timestamp: i64 = ts_s.parse().map_err(|_| E::BadInteger("timestamp"))?;
        let (tag_s, rest) = rest.split_once('|').ok_or(E::MissingField("block_type"))?;
        let block_type = BlockType::from_tag(tag_s).ok_or_else(|| E::BadTag(tag_s.to_string()))?;

        // Length-prefixed data: "<byte len>:<data>". The prefix tells us
        // exactly where the payload ends, so payloads may contain any
        // character including the field separators.
        let (len_s, rest) = rest.split_once(':').ok_or(E::MissingField("data length"))?;
        let data_len: usize = len_s.parse().map_err(|_| E::BadInteger("data length"))?;
        if !rest.is_char_boundary(data_len) || rest.len() < data_len {
            return Err(E::BadDataLength { declared: data_len, available: rest.len() });
        }
        let (data, rest) = rest.split_at(data_len);
        let rest = rest.strip_prefix('|').ok_or(E::MissingField("previous_hash"))?;

        let (prev_s, cur_s) = rest.split_once('|').ok_or(E::MissingField("current_hash"))?;
        let previous_hash = Hash::from_hex(prev_s).map_err(|e| E::BadHash("previous_hash", e))?;
        let current_hash = Hash::from_hex(cur_s).map_err(|e| E::BadHash("current_hash", e))?;

        Ok(Block {
            index,
            timestamp,
            block_type,
            data: data.to_string(),
            previous_hash,
            current_hash,
        })
    }
}

/// Why a six-field serialization failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockParseError {
    #[error("missing field: {0}")]
    MissingField(&'static str),
    #[error("field {0} is not a valid integer")]
    BadInteger(&'static str),
    #[error("unknown block type tag {0:?}")]
    BadTag(String),
    #[error("declared data length {declared} does not fit remainder of {available} bytes")]
    BadDataLength { declared: usize, available: usize },
    #[error("field {0} is not a valid digest: {1}")]
    BadHash(&'static str, crate::hash::HashError),
}

/// Outcome of checking a single block in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockVerdict {
    /// Stored hash matches the recomputation and the link matches.
    Ok,
    /// Recomputing the canonical serialization gives a different hash:
    /// some stored field (or the stored hash itself) was altered.
    HashMismatch,
    /// The block is internally consistent but its `previous_hash` does not
    /// equal the preceding block's `current_hash`.
    LinkBroken,
}

/// Checks one block: recomputes its hash and compares its back-link
/// against `expected_previous_hash`. Exactly one hash invocation.
pub fn verify_block(block: &Block, expected_previous_hash: &Hash) -> BlockVerdict {
    if block.recompute_hash() != block.current_hash {
        BlockVerdict::HashMismatch
    } else if &block.previous_hash != expected_previous_hash {
        BlockVerdict::LinkBroken
    } else {
        BlockVerdict::Ok
    }
}
