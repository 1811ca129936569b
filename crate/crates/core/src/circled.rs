//! Circled blockchains: fixed-capacity chains of payload digests.
//!
//! A circled chain starts with a genesis block (absolute for chain 0,
//! relative — back-linked to the previous chain's terminal — for every
//! later chain), holds up to `capacity_n` data blocks, and is closed by a
//! terminal block whose data is the aggregate digest over every prior
//! block hash in the chain. Once sealed, a chain never changes again.

use crate::block::{
    verify_block, Block, BlockType, BlockVerdict, ABSOLUTE_GENESIS_DATA, RELATIVE_GENESIS_DATA,
};
use crate::hash::{compute_hash, Hash};
use crate::report::{ChainReport, ChainStatus, FailureReason};
use serde::Serialize;

/// Errors from operations that would violate chain structure. Tamper is
/// never an `Err`: failed verification is reported via [`ChainReport`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("chain {chain_id} is sealed; no further blocks may be appended")]
    Sealed { chain_id: u64 },
    #[error("chain {chain_id} already holds {capacity} data blocks")]
    Full { chain_id: u64, capacity: u64 },
    #[error("chain {chain_id} holds {have} data blocks but needs {need} to seal at capacity")]
    NotFull { chain_id: u64, have: u64, need: u64 },
    #[error("chain {chain_id} has no data blocks to seal")]
    Empty { chain_id: u64 },
    #[error("capacity must be at least 1")]
    BadCapacity,
    #[error("previous block is a {found} block, not a terminal block")]
    NotTerminal { found: BlockType },
    #[error("previous terminal block fails verification; refusing to chain onto it")]
    TamperedTerminal,
}

/// A capacity-bounded hash chain of payload digests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CircledBlockchain {
    /// 0 for the first chain of a hierarchy, then 1, 2, … with no gaps.
    pub chain_id: u64,
    /// Number of data blocks after which the chain seals automatically.
    pub capacity_n: u64,
    /// Genesis, data blocks, and — once sealed — the terminal block.
    pub blocks: Vec<Block>,
    /// Set when the terminal block is appended; sealed chains are final.
    pub sealed: bool,
}

/// Builds the absolute genesis block that starts chain 0.
pub fn new_absolute_genesis(timestamp: i64) -> Block {
    Block::new(0, timestamp, BlockType::AbsoluteGenesis, ABSOLUTE_GENESIS_DATA.into(), Hash::zero())
}

/// Builds a relative genesis block linked to `previous_terminal`.
///
/// Refuses to chain onto anything but a verifying terminal block: the
/// back-link is the only thing that ties consecutive circled chains
/// together, so it must not be forgeable by handing in a tampered block.
pub fn new_relative_genesis(previous_terminal: &Block, timestamp: i64) -> Result<Block, ChainError> {
    if previous_terminal.block_type != BlockType::Terminal {
        return Err(ChainError::NotTerminal { found: previous_terminal.block_type });
    }
    if previous_terminal.recompute_hash() != previous_terminal.current_hash {
        return Err(ChainError::TamperedTerminal);
    }
    Ok(Block::new(
        0,
        timestamp,
        BlockType::RelativeGenesis,
        RELATIVE_GENESIS_DATA.into(),
        previous_terminal.current_hash.clone(),
    ))
}

impl CircledBlockchain {
    /// Starts chain 0 of a hierarchy with an absolute genesis block.
    pub fn first(capacity_n: u64, timestamp: i64) -> Result<Self, ChainError> {
        if capacity_n == 0 {
            return Err(ChainError::BadCapacity);
        }
        Ok(CircledBlockchain {
            chain_id: 0,
            capacity_n,
            blocks: vec![new_absolute_genesis(timestamp)],
            sealed: false,
        })
    }

    /// Starts chain `chain_id` (≥ 1) on top of the previous chain's
    /// terminal block.
    pub fn next(
        chain_id: u64,
        capacity_n: u64,
        previous_terminal: &Block,
        timestamp: i64,
    ) -> Result<Self, ChainError> {
        if capacity_n == 0 {
            return Err(ChainError::BadCapacity);
        }
        let genesis = new_relative_genesis(previous_terminal, timestamp)?;
        Ok(CircledBlockchain { chain_id, capacity_n, blocks: vec![genesis], sealed: false })
    }

    /// Reassembles a chain from already-persisted blocks without any
    /// verification; used by loaders, which audit separately.
    pub fn from_parts(chain_id: u64, capacity_n: u64, blocks: Vec<Block>) -> Self {
        let sealed = blocks.last().is_some_and(|b| b.block_type == BlockType::Terminal);
        CircledBlockchain { chain_id, capacity_n, blocks, sealed }
    }

    /// Number of data blocks currently held.
    pub fn data_block_count(&self) -> u64 {
        self.blocks.iter().filter(|b| b.block_type == BlockType::Data).count() as u64
    }

    /// The terminal block, if sealed.
    pub fn terminal(&self) -> Option<&Block> {
        self.blocks.last().filter(|b| b.block_type == BlockType::Terminal)
    }

    /// Appends one payload digest as a data block and returns it.
    pub fn append_data(&mut self, payload_digest: &Hash, timestamp: i64) -> Result<&Block, ChainError> {
        if self.sealed {
            return Err(ChainError::Sealed { chain_id: self.chain_id });
        }
        if self.data_block_count() >= self.capacity_n {
            return Err(ChainError::Full { chain_id: self.chain_id, capacity: self.capacity_n });
        }
        let prev = self.blocks.last().expect("chain always has a genesis");
        let block = Block::new(
            prev.index + 1,
            timestamp,
            BlockType::Data,
            payload_digest.as_str().to_string(),
            prev.current_hash.clone(),
        );
        self.blocks.push(block);
        Ok(self.blocks.last().unwrap())
    }

    /// Aggregate digest over the `current_hash` of every block currently
    /// in the chain, in order — the value a terminal block must carry.
    pub fn aggregate_digest(&self) -> Hash {
        aggregate_over(&self.blocks)
    }

    /// Seals the chain at exactly `capacity_n` data blocks.
    pub fn seal(&mut self, timestamp: i64) -> Result<&Block, ChainError> {
        let have = self.data_block_count();
        if !self.sealed && have < self.capacity_n {
            return Err(ChainError::NotFull {
                chain_id: self.chain_id,
                have,
                need: self.capacity_n,
            });
        }
        self.seal_inner(timestamp)
    }

    /// Seals the chain early, at however many data blocks it holds (at
    /// least one). The terminal aggregate covers the actual blocks;
    /// `capacity_n` only governs automatic rotation.
    pub fn seal_partial(&mut self, timestamp: i64) -> Result<&Block, ChainError> {
        if !self.sealed && self.data_block_count() == 0 {
            return Err(ChainError::Empty { chain_id: self.chain_id });
        }
        self.seal_inner(timestamp)
    }

    fn seal_inner(&mut self, timestamp: i64) -> Result<&Block, ChainError> {
        if self.sealed {
            return Err(ChainError::Sealed { chain_id: self.chain_id });
        }
        let aggregate = self.aggregate_digest();
        let prev = self.blocks.last().expect("chain always has a genesis");
        let terminal = Block::new(
            prev.index + 1,
            timestamp,
            BlockType::Terminal,
            aggregate.as_str().to_string(),
            prev.current_hash.clone(),
        );
        self.blocks.push(terminal);
        self.sealed = true;
        Ok(self.blocks.last().unwrap())
    }
}

/// Recomputes the aggregate digest over every block hash except a trailing
/// terminal's own. One hash invocation.
fn aggregate_over(blocks: &[Block]) -> Hash {
    let mut concat = String::with_capacity(blocks.len() * 64);
    for b in blocks {
        concat.push_str(b.current_hash.as_str());
    }
    compute_hash(concat.as_bytes())
}

/// Verifies one circled chain in isolation.
///
/// Walks every block in order (checking stored hash, back-link, index and
/// type), then — for sealed chains — re-derives the terminal aggregate.
/// Cost: one hash per block plus one for the aggregate, so a sealed chain
/// with `n` data blocks spends exactly `n + 3` hash invocations. Unsealed
/// chains verify their prefix and report [`ChainStatus::OkPartial`].
pub fn verify_circled(chain: &CircledBlockchain) -> ChainReport {
    let mut hashes = 0u64;
    let mut status = ChainStatus::Ok;

    'walk: {
        let Some(genesis) = chain.blocks.first() else {
            status = ChainStatus::Failed { index: 0, reason: FailureReason::WrongBlockType };
            break 'walk;
        };

        // The genesis fixes the chain's anchor: absolute genesis for chain
        // 0 must carry the zero back-link and its sentinel; relative
        // genesis must carry its sentinel (its back-link is validated
        // against the previous terminal at the hierarchy level).
        let genesis_shape_ok = match genesis.block_type {
            BlockType::AbsoluteGenesis => {
                chain.chain_id == 0
                    && genesis.data == ABSOLUTE_GENESIS_DATA
                    && genesis.previous_hash == Hash::zero()
            }
            BlockType::RelativeGenesis => {
                chain.chain_id != 0 && genesis.data == RELATIVE_GENESIS_DATA
            }
            _ => false,
        };
        if !genesis_shape_ok {
            status = ChainStatus::Failed { index: 0, reason: FailureReason::BadGenesis };
            break 'walk;
        }

        let mut expected_prev = genesis.previous_hash.clone();
        let last = chain.blocks.len() - 1;
        for (pos, block) in chain.blocks.iter().enumerate() {
            hashes += 1;
            match verify_block(block, &expected_prev) {
                BlockVerdict::Ok => {}
                BlockVerdict::HashMismatch => {
                    status = ChainStatus::Failed {
                        index: pos as u64,
                        reason: FailureReason::HashMismatch,
                    };
                    break 'walk;
                }
                BlockVerdict::LinkBroken => {
                    status = ChainStatus::Failed {
                        index: pos as u64,
                        reason: FailureReason::LinkBroken,
                    };
                    break 'walk;
                }
            }
            if block.index != pos as u64 {
                status =
                    ChainStatus::Failed { index: pos as u64, reason: FailureReason::IndexMismatch };
                break 'walk;
            }
            let type_ok = match block.block_type {
                BlockType::AbsoluteGenesis | BlockType::RelativeGenesis => pos == 0,
                BlockType::Data => pos > 0 && !(pos == last && chain.sealed),
                BlockType::Terminal => pos == last && pos > 0 && chain.sealed,
                BlockType::SuperGenesis | BlockType::Super => false,
            };
            if !type_ok {
                status =
                    ChainStatus::Failed { index: pos as u64, reason: FailureReason::WrongBlockType };
                break 'walk;
            }
            expected_prev = block.current_hash.clone();
        }

        match chain.terminal() {
            Some(terminal) => {
                // Re-derive the aggregate digest over everything before the
                // terminal and compare it to the terminal's payload.
                hashes += 1;
                let aggregate = aggregate_over(&chain.blocks[..last]);
                if terminal.data != aggregate.as_str() {
                    status = ChainStatus::Failed {
                        index: last as u64,
                        reason: FailureReason::AggregateMismatch,
                    };
                }
            }
            None => status = ChainStatus::OkPartial,
        }
    }

    ChainReport {
        chain_id: Some(chain.chain_id),
        status,
        blocks_checked: chain.blocks.len() as u64,
        hash_invocations: hashes,
    }
}
