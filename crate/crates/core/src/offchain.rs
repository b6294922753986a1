//! Content-addressed off-chain storage over a simulated DHT of fog nodes.
//!
//! Payloads are keyed by their SHA-256 digest and replicated onto the
//! highest-scoring nodes under rendezvous hashing. Reads re-hash what they
//! fetch and skip replicas that no longer match their address.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::SensorTransaction;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("no fog nodes available")]
    NoNodes,
    #[error("replication factor must be at least 1")]
    ZeroReplication,
    #[error("address {0} not found")]
    NotFound(ContentAddress),
    #[error("every replica of {0} failed integrity verification")]
    Integrity(ContentAddress),
    #[error("invalid content address {0:?}")]
    BadAddress(String),
    #[error("store io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, StoreError>;

/// SHA-256 digest of a payload, displayed as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentAddress(pub [u8; 32]);

impl ContentAddress {
    pub fn of(payload: &[u8]) -> Self {
        Self(Sha256::digest(payload).into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentAddress({})", self.to_hex())
    }
}

impl FromStr for ContentAddress {
    type Err = StoreError;
    fn from_str(s: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(StoreError::BadAddress(s.to_string()));
        }
        hex::decode_to_slice(s, &mut out).map_err(|_| StoreError::BadAddress(s.to_string()))?;
        Ok(Self(out))
    }
}

impl Serialize for ContentAddress {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentAddress {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical bytes of a transaction: `u32` BE length-prefixed device id,
/// `u64` BE sequence number, then each feature as an IEEE-754 `f64` BE.
pub fn encode_transaction(tx: &SensorTransaction) -> Vec<u8> {
    let id = tx.device_id.as_bytes();
    let mut out = Vec::with_capacity(4 + id.len() + 8 + 8 * tx.features.len());
    out.extend_from_slice(&(id.len() as u32).to_be_bytes());
    out.extend_from_slice(id);
    out.extend_from_slice(&tx.seq.to_be_bytes());
    for f in &tx.features {
        out.extend_from_slice(&f.to_be_bytes());
    }
    out
}

/// Same layout as [`encode_transaction`] with latent values in place of the
/// raw features.
pub fn encode_latent(device_id: &str, seq: u64, latent: &[f64]) -> Vec<u8> {
    encode_transaction(&SensorTransaction {
        device_id: device_id.to_string(),
        seq,
        features: latent.to_vec(),
        label: None,
    })
}

/// Rendezvous (highest random weight) placement: ranks nodes by
/// `SHA-256(address ‖ node_id)` and keeps the top `replication`.
pub fn node_set_for(address: &ContentAddress, nodes: &[String], replication: usize) -> Result<Vec<String>> {
    if nodes.is_empty() {
        return Err(StoreError::NoNodes);
    }
    if replication == 0 {
        return Err(StoreError::ZeroReplication);
    }
    let mut unique: Vec<&String> = nodes.iter().collect();
    unique.sort();
    unique.dedup();
    let mut scored: Vec<(u64, &String)> = unique
        .into_iter()
        .map(|node| {
            let mut h = Sha256::new();
            h.update(address.0);
            h.update(node.as_bytes());
            let digest = h.finalize();
            let score = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
            (score, node)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    Ok(scored.into_iter().take(replication).map(|(_, n)| n.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhtEntry {
    pub address: ContentAddress,
    pub stored_at: u64,
    pub replica_nodes: Vec<String>,
}

#[derive(Debug, Default)]
struct StoreState {
    index: BTreeMap<ContentAddress, DhtEntry>,
    /// node id -> address -> payload bytes held by that node.
    replicas: BTreeMap<String, BTreeMap<ContentAddress, Vec<u8>>>,
}

/// In-process DHT. Entries are append-only; storing existing content is a
/// no-op that returns the same address.
#[derive(Debug, Default)]
pub struct OffchainStore {
    state: RwLock<StoreState>,
}

impl OffchainStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(&self, payload: &[u8], nodes: &[String], replication: usize) -> Result<ContentAddress> {
        self.store_at(payload, nodes, replication, 0)
    }

    /// [`store`](Self::store) with an explicit timestamp for the index entry.
    pub fn store_at(
        &self,
        payload: &[u8],
        nodes: &[String],
        replication: usize,
        stored_at: u64,
    ) -> Result<ContentAddress> {
        if payload.is_empty() {
            return Err(StoreError::EmptyPayload);
        }
        let address = ContentAddress::of(payload);
        let placement = node_set_for(&address, nodes, replication)?;
        let mut state = self.state.write().expect("store lock poisoned");
        if state.index.contains_key(&address) {
            return Ok(address);
        }
        for node in &placement {
            state
                .replicas
                .entry(node.clone())
                .or_default()
                .insert(address, payload.to_vec());
        }
        state.index.insert(
            address,
            DhtEntry {
                address,
                stored_at,
                replica_nodes: placement,
            },
        );
        Ok(address)
    }

    /// Returns the first replica whose bytes still hash to `address`.
    pub fn retrieve(&self, address: &ContentAddress) -> Result<Vec<u8>> {
        let state = self.state.read().expect("store lock poisoned");
        let entry = state.index.get(address).ok_or(StoreError::NotFound(*address))?;
        for node in &entry.replica_nodes {
            if let Some(bytes) = state.replicas.get(node).and_then(|m| m.get(address)) {
                if ContentAddress::of(bytes) == *address {
                    return Ok(bytes.clone());
                }
                log::warn!("replica of {address} on {node} failed verification");
            }
        }
        Err(StoreError::Integrity(*address))
    }

    pub fn contains(&self, address: &ContentAddress) -> bool {
        self.state.read().expect("store lock poisoned").index.contains_key(address)
    }

    pub fn entry(&self, address: &ContentAddress) -> Option<DhtEntry> {
        self.state.read().expect("store lock poisoned").index.get(address).cloned()
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("store lock poisoned").index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn addresses(&self) -> Vec<ContentAddress> {
        self.state.read().expect("store lock poisoned").index.keys().copied().collect()
    }

    /// Number of entries replicated on each node.
    pub fn node_loads(&self) -> BTreeMap<String, usize> {
        let state = self.state.read().expect("store lock poisoned");
        state.replicas.iter().map(|(n, m)| (n.clone(), m.len())).collect()
    }

    /// Fault injection: XORs one byte of the replica held by `node`.
    /// Returns false if that node holds no such replica.
    pub fn corrupt_replica(&self, address: &ContentAddress, node: &str, byte: usize) -> bool {
        let mut state = self.state.write().expect("store lock poisoned");
        match state.replicas.get_mut(node).and_then(|m| m.get_mut(address)) {
            Some(bytes) if !bytes.is_empty() => {
                let i = byte % bytes.len();
                bytes[i] ^= 0xff;
                true
            }
            _ => false,
        }
    }

    /// Writes one file per entry (named by hex address) plus `index.json`.
    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| StoreError::Io(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let addresses = self.addresses();
        for address in addresses {
            let payload = self.retrieve(&address)?;
            std::fs::write(dir.join(address.to_hex()), payload).map_err(io)?;
            let entry = self.entry(&address).expect("indexed address");
            index.insert(address.to_hex(), entry.replica_nodes);
        }
        let json = serde_json::to_string_pretty(&index).expect("index serializes");
        std::fs::write(dir.join("index.json"), json).map_err(io)
    }

    /// Rebuilds a store written by [`persist`](Self::persist), re-verifying
    /// every payload against its file name.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| StoreError::Io(e.to_string());
        let text = std::fs::read_to_string(dir.join("index.json")).map_err(io)?;
        let index: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| StoreError::Io(e.to_string()))?;
        let store = Self::new();
        {
            let mut state = store.state.write().expect("store lock poisoned");
            for (hex_addr, nodes) in index {
                let address: ContentAddress = hex_addr.parse()?;
                let payload = std::fs::read(dir.join(&hex_addr)).map_err(io)?;
                if ContentAddress::of(&payload) != address {
                    return Err(StoreError::Integrity(address));
                }
                for node in &nodes {
                    state.replicas.entry(node.clone()).or_default().insert(address, payload.clone());
                }
                state.index.insert(
                    address,
                    DhtEntry {
                        address,
                        stored_at: 0,
                        replica_nodes: nodes,
                    },
                );
            }
        }
        Ok(store)
    }
}
