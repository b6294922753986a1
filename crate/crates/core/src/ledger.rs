//! Hash-chained ledger sealed by a leading-zero-bits proof of work.
//!
//! Blocks carry content addresses of off-chain payloads rather than the
//! payloads themselves. The header encoding is fixed width and big-endian:
//!
//! ```text
//! index u64 ‖ timestamp u64 ‖ prev_hash [32] ‖ address₀ [32] ‖ … ‖ proof u64
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use hmac::{Hmac, Mac};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::offchain::ContentAddress;

/// Upper bound on difficulty bits; keeps mining cheap on constrained nodes.
pub const MAX_DIFFICULTY: u32 = 32;
pub const DEFAULT_DIFFICULTY: u32 = 8;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("difficulty {0} exceeds the cap of {MAX_DIFFICULTY} bits")]
    DifficultyTooHigh(u32),
    #[error("a non-genesis block needs at least one address")]
    NoAddresses,
    #[error("timestamp {timestamp} precedes previous block timestamp {previous}")]
    TimestampRegression { timestamp: u64, previous: u64 },
    #[error("refusing to extend a chain that fails verification: {0}")]
    CorruptChain(VerificationReport),
    #[error("nonce space exhausted")]
    NonceExhausted,
    #[error("chain file: {0}")]
    Io(String),
    #[error("malformed block encoding")]
    Malformed,
}

pub type Result<T> = std::result::Result<T, LedgerError>;

/// Wire form of a 32-byte hash in JSON: lowercase hex.
mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

mod hex32_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<[u8; 32]>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_some(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[u8; 32]>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| {
            let mut out = [0u8; 32];
            hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
            Ok(out)
        })
        .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u64,
    pub timestamp: u64,
    #[serde(with = "hex32")]
    pub prev_hash: [u8; 32],
    pub payload_addresses: Vec<ContentAddress>,
    pub proof: u64,
    #[serde(with = "hex32")]
    pub block_hash: [u8; 32],
    /// HMAC-SHA256 over the address batch, when the producer holds a key.
    /// Not part of the hashed header.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "hex32_opt")]
    pub batch_tag: Option<[u8; 32]>,
}

fn header_prefix(index: u64, timestamp: u64, prev_hash: &[u8; 32], addresses: &[ContentAddress]) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + 32 * addresses.len() + 8);
    out.extend_from_slice(&index.to_be_bytes());
    out.extend_from_slice(&timestamp.to_be_bytes());
    out.extend_from_slice(prev_hash);
    for a in addresses {
        out.extend_from_slice(a.as_bytes());
    }
    out
}

impl Block {
    /// Canonical header bytes, the input to `block_hash`.
    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = header_prefix(self.index, self.timestamp, &self.prev_hash, &self.payload_addresses);
        out.extend_from_slice(&self.proof.to_be_bytes());
        out
    }

    pub fn compute_hash(&self) -> [u8; 32] {
        Sha256::digest(self.header_bytes()).into()
    }

    /// Header followed by the stored block hash.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        out.extend_from_slice(&self.block_hash);
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). The batch tag is not part of
    /// the encoding and comes back as `None`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const FIXED: usize = 8 + 8 + 32 + 8 + 32;
        if bytes.len() < FIXED || (bytes.len() - FIXED) % 32 != 0 {
            return Err(LedgerError::Malformed);
        }
        let n = (bytes.len() - FIXED) / 32;
        let u64_at = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let arr_at = |i: usize| -> [u8; 32] { bytes[i..i + 32].try_into().expect("32 bytes") };
        let payload_addresses = (0..n).map(|k| ContentAddress(arr_at(48 + 32 * k))).collect();
        Ok(Self {
            index: u64_at(0),
            timestamp: u64_at(8),
            prev_hash: arr_at(16),
            payload_addresses,
            proof: u64_at(48 + 32 * n),
            block_hash: arr_at(56 + 32 * n),
            batch_tag: None,
        })
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.block_hash)
    }
}

pub fn leading_zero_bits(hash: &[u8; 32]) -> u32 {
    let mut bits = 0;
    for &b in hash {
        if b == 0 {
            bits += 8;
        } else {
            bits += b.leading_zeros();
            break;
        }
    }
    bits
}

pub fn meets_difficulty(hash: &[u8; 32], difficulty: u32) -> bool {
    leading_zero_bits(hash) >= difficulty
}

/// Where the nonce search starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningMode {
    /// Scan 0, 1, 2, …; the proof is the smallest valid nonce.
    #[default]
    Deterministic,
    /// Scan upward (wrapping) from a seeded random start.
    Randomized { seed: u64 },
}

/// Mines a block on top of `prev`. Returns the block and the number of
/// header hashes tried.
pub fn mine_block_counted(
    prev: Option<&Block>,
    addresses: &[ContentAddress],
    difficulty: u32,
    timestamp: u64,
    mode: MiningMode,
) -> Result<(Block, u64)> {
    if difficulty > MAX_DIFFICULTY {
        return Err(LedgerError::DifficultyTooHigh(difficulty));
    }
    let (index, prev_hash) = match prev {
        Some(p) => {
            if addresses.is_empty() {
                return Err(LedgerError::NoAddresses);
            }
            if timestamp < p.timestamp {
                return Err(LedgerError::TimestampRegression {
                    timestamp,
                    previous: p.timestamp,
                });
            }
            (p.index + 1, p.block_hash)
        }
        None => (0, [0u8; 32]),
    };
    let mut base = Sha256::new();
    base.update(header_prefix(index, timestamp, &prev_hash, addresses));

    let start = match mode {
        MiningMode::Deterministic => 0,
        MiningMode::Randomized { seed } => ChaCha8Rng::seed_from_u64(seed ^ index.rotate_left(17)).random(),
    };
    let mut nonce: u64 = start;
    let mut attempts: u64 = 0;
    loop {
        attempts += 1;
        let mut h = base.clone();
        h.update(nonce.to_be_bytes());
        let hash: [u8; 32] = h.finalize().into();
        if meets_difficulty(&hash, difficulty) {
            let block = Block {
                index,
                timestamp,
                prev_hash,
                payload_addresses: addresses.to_vec(),
                proof: nonce,
                block_hash: hash,
                batch_tag: None,
            };
            return Ok((block, attempts));
        }
        nonce = nonce.wrapping_add(1);
        if nonce == start {
            return Err(LedgerError::NonceExhausted);
        }
    }
}

pub fn mine_block(
    prev: &Block,
    addresses: &[ContentAddress],
    difficulty: u32,
    timestamp: u64,
    mode: MiningMode,
) -> Result<Block> {
    mine_block_counted(Some(prev), addresses, difficulty, timestamp, mode).map(|(b, _)| b)
}

/// HMAC-SHA256 of a batch of addresses under a device or producer key.
pub fn batch_tag(key: &[u8], addresses: &[ContentAddress]) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("hmac accepts any key length");
    for a in addresses {
        mac.update(a.as_bytes());
    }
    mac.finalize().into_bytes().into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyRule {
    IndexGap,
    LinkMismatch,
    TimestampRegression,
    HashMismatch,
    DifficultyUnmet,
    MissingAddresses,
    TagMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyFailure {
    pub index: usize,
    pub rule: VerifyRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub failure: Option<VerifyFailure>,
    /// Header hashes computed during this pass.
    pub headers_hashed: usize,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.failure {
            None => write!(f, "OK ({} blocks verified)", self.headers_hashed),
            Some(VerifyFailure { index, rule }) => write!(f, "FAILED at block {index}: {rule:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    difficulty: u32,
    mode: MiningMode,
}

impl Chain {
    /// New chain holding only a mined genesis block.
    pub fn new(difficulty: u32, genesis_timestamp: u64, mode: MiningMode) -> Result<Self> {
        let (genesis, _) = mine_block_counted(None, &[], difficulty, genesis_timestamp, mode)?;
        Ok(Self {
            blocks: vec![genesis],
            difficulty,
            mode,
        })
    }

    /// Wraps existing blocks without verifying them.
    pub fn from_blocks(blocks: Vec<Block>, difficulty: u32) -> Self {
        Self {
            blocks,
            difficulty,
            mode: MiningMode::Deterministic,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Mutable access for fault injection in tests and simulations.
    pub fn blocks_mut(&mut self) -> &mut Vec<Block> {
        &mut self.blocks
    }

    pub fn difficulty(&self) -> u32 {
        self.difficulty
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain has a genesis block")
    }

    pub fn verify(&self) -> VerificationReport {
        verify_chain(self)
    }

    /// Verifies, then mines one block for `addresses` on the tip.
    pub fn append_batch(&mut self, addresses: &[ContentAddress], timestamp: u64) -> Result<&Block> {
        self.append_batch_counted(addresses, timestamp).map(|(b, _)| b)
    }

    pub fn append_batch_counted(&mut self, addresses: &[ContentAddress], timestamp: u64) -> Result<(&Block, u64)> {
        let report = self.verify();
        if !report.is_ok() {
            return Err(LedgerError::CorruptChain(report));
        }
        let (block, attempts) =
            mine_block_counted(self.blocks.last(), addresses, self.difficulty, timestamp, self.mode)?;
        self.blocks.push(block);
        Ok((self.blocks.last().expect("just pushed"), attempts))
    }

    /// Like [`append_batch`](Self::append_batch) and attaches an HMAC tag.
    pub fn append_tagged_batch(&mut self, addresses: &[ContentAddress], timestamp: u64, key: &[u8]) -> Result<&Block> {
        self.append_batch(addresses, timestamp)?;
        let block = self.blocks.last_mut().expect("just pushed");
        block.batch_tag = Some(batch_tag(key, &block.payload_addresses));
        Ok(block)
    }

    /// One block per line, hashes hex encoded.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let io = |e: std::io::Error| LedgerError::Io(e.to_string());
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for b in &self.blocks {
            let line = BlockLine {
                difficulty: self.difficulty,
                block: b.clone(),
            };
            serde_json::to_writer(&mut out, &line).map_err(|e| LedgerError::Io(e.to_string()))?;
            out.write_all(b"\n").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Reads a chain written by [`write_jsonl`](Self::write_jsonl). The
    /// difficulty is the smallest recorded on any line.
    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let io = |e: std::io::Error| LedgerError::Io(e.to_string());
        let file = std::io::BufReader::new(std::fs::File::open(path).map_err(io)?);
        let mut blocks = Vec::new();
        let mut difficulty = u32::MAX;
        for (i, line) in file.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: BlockLine =
                serde_json::from_str(&line).map_err(|e| LedgerError::Io(format!("line {}: {e}", i + 1)))?;
            difficulty = difficulty.min(parsed.difficulty);
            blocks.push(parsed.block);
        }
        if blocks.is_empty() {
            return Err(LedgerError::Io("chain file has no blocks".into()));
        }
        Ok(Self::from_blocks(blocks, difficulty))
    }
}

#[derive(Serialize, Deserialize)]
struct BlockLine {
    difficulty: u32,
    #[serde(flatten)]
    block: Block,
}

/// Checks every block in order and stops at the first violation. Each block
/// header is hashed exactly once.
pub fn verify_chain(chain: &Chain) -> VerificationReport {
    verify_blocks(&chain.blocks, chain.difficulty, None)
}

/// [`verify_chain`] plus HMAC checks on every tagged non-genesis block.
pub fn verify_chain_with_key(chain: &Chain, key: &[u8]) -> VerificationReport {
    verify_blocks(&chain.blocks, chain.difficulty, Some(key))
}

fn verify_blocks(blocks: &[Block], difficulty: u32, key: Option<&[u8]>) -> VerificationReport {
    let mut headers_hashed = 0;
    let fail = |index, rule, headers_hashed| VerificationReport {
        failure: Some(VerifyFailure { index, rule }),
        headers_hashed,
    };
    for (i, block) in blocks.iter().enumerate() {
        if block.index != i as u64 {
            return fail(i, VerifyRule::IndexGap, headers_hashed);
        }
        let (expected_prev, prev_ts) = match i {
            0 => ([0u8; 32], 0),
            _ => (blocks[i - 1].block_hash, blocks[i - 1].timestamp),
        };
        if block.prev_hash != expected_prev {
            return fail(i, VerifyRule::LinkMismatch, headers_hashed);
        }
        if block.timestamp < prev_ts {
            return fail(i, VerifyRule::TimestampRegression, headers_hashed);
        }
        if i > 0 && block.payload_addresses.is_empty() {
            return fail(i, VerifyRule::MissingAddresses, headers_hashed);
        }
        let hash = block.compute_hash();
        headers_hashed += 1;
        if hash != block.block_hash {
            return fail(i, VerifyRule::HashMismatch, headers_hashed);
        }
        if !meets_difficulty(&hash, difficulty) {
            return fail(i, VerifyRule::DifficultyUnmet, headers_hashed);
        }
        if let (Some(key), Some(tag)) = (key, block.batch_tag) {
            if batch_tag(key, &block.payload_addresses) != tag {
                return fail(i, VerifyRule::TagMismatch, headers_hashed);
            }
        }
    }
    VerificationReport {
        failure: None,
        headers_hashed,
    }
}

/// Functional append: returns a new chain one block longer, leaving the
/// input untouched.
pub fn append_transaction_batch(
    chain: &Chain,
    addresses: &[ContentAddress],
    clock: &mut dyn crate::clock::Clock,
) -> Result<Chain> {
    let mut next = chain.clone();
    let ts = clock.now_ms().max(chain.tip().timestamp);
    next.append_batch(addresses, ts)?;
    Ok(next)
}
