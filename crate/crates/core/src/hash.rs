//! SHA-256 digests as fixed-width lowercase hex strings.
//!
//! Every hash in the ledger — block hashes, payload digests, aggregate
//! digests, pseudo transaction hashes — is the same 64-character lowercase
//! hex encoding of a SHA-256 output. Wrapping it in a newtype keeps raw
//! strings out of the chain APIs and lets constructors reject malformed
//! input once, at the boundary.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

/// Number of hex characters in an encoded SHA-256 digest.
pub const HASH_HEX_LEN: usize = 64;

/// A SHA-256 digest in lowercase hex. Always exactly 64 characters drawn
/// from `[0-9a-f]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Hash(String);

/// Rejection reasons for strings that do not encode a SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HashError {
    #[error("digest must be {HASH_HEX_LEN} hex characters, got {0}")]
    BadLength(usize),
    #[error("digest contains non-hex or uppercase character {0:?}")]
    BadCharacter(char),
}

impl Hash {
    /// The all-zero digest used as the previous-hash of the two genesis
    /// block kinds that start a hierarchy.
    pub fn zero() -> Self {
        Hash("0".repeat(HASH_HEX_LEN))
    }

    /// Validates and wraps a lowercase hex digest string.
    pub fn from_hex(s: &str) -> Result<Self, HashError> {
        if s.len() != HASH_HEX_LEN {
            return Err(HashError::BadLength(s.len()));
        }
        if let Some(c) = s.chars().find(|c| !matches!(c, '0'..='9' | 'a'..='f')) {
            return Err(HashError::BadCharacter(c));
        }
        Ok(Hash(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Hash {
    type Error = HashError;
    fn try_from(s: String) -> Result<Self, HashError> {
        Hash::from_hex(&s)
    }
}

impl From<Hash> for String {
    fn from(h: Hash) -> String {
        h.0
    }
}

/// SHA-256 of `bytes`, hex-encoded. The single hashing primitive behind
/// block hashes, aggregate digests and pseudo transaction hashes.
pub fn compute_hash(bytes: &[u8]) -> Hash {
    let digest = Sha256::digest(bytes);
    Hash(hex::encode(digest))
}
