//! Content-addressed storage over a handful of fog nodes: placement,
//! replica fallback and persistence.
//!
//! `cargo run --example offchain_store`

use medledger::offchain::{self, OffchainStore};

fn main() -> anyhow::Result<()> {
    let nodes: Vec<String> = (0..5).map(|i| format!("fog-{i}")).collect();
    let store = OffchainStore::new();
    let mut addresses = Vec::new();
    for i in 0..20u64 {
        let payload = offchain::encode_latent("sn-001", i, &[i as f64, 0.5, -0.25]);
        addresses.push(store.store(&payload, &nodes, 2)?);
    }
    println!("{} payloads stored", store.len());
    for (node, load) in store.node_loads() {
        println!("  {node}: {load} replicas");
    }

    let dir = std::env::temp_dir().join(format!("medledger-store-{}", std::process::id()));
    store.persist(&dir)?;
    let reloaded = OffchainStore::load(&dir)?;
    println!("reloaded {} entries from {}", reloaded.len(), dir.display());
    std::fs::remove_dir_all(&dir)?;

    let a = addresses[3];
    let entry = store.entry(&a).expect("stored");
    println!("{} lives on {:?}", a.to_hex(), entry.replica_nodes);
    store.corrupt_replica(&a, &entry.replica_nodes[0], 0);
    println!("first replica corrupted, retrieve still ok: {}", store.retrieve(&a).is_ok());
    store.corrupt_replica(&a, &entry.replica_nodes[1], 0);
    match store.retrieve(&a) {
        Ok(_) => println!("unexpectedly retrieved"),
        Err(e) => println!("both replicas corrupted: {e}"),
    }

    Ok(())
}
