//! Scores readings against confidence ranges learned from clean data and
//! tracks device reputations, including penalties.
//!
//! `cargo run --example trust_scoring`

use medledger::dataset::{self, DatasetSchema, FeatureBounds};
use medledger::trust::{self, ReputationRegistry, TrustThresholds};

fn main() -> anyhow::Result<()> {
    let schema = DatasetSchema::nsl_kdd();
    let clean = dataset::synthesize(&schema, 2000, 5)?;
    let bounds = FeatureBounds::from_transactions(&clean).expect("non-empty");
    let thresholds = TrustThresholds::default();

    let registry = ReputationRegistry::new();
    let mut probe = dataset::synthesize(&schema, 30, 6)?;
    // drift a growing share of features out of range on later readings
    for (i, tx) in probe.iter_mut().enumerate() {
        for v in tx.features.iter_mut().take(i * 2) {
            *v = 5.0;
        }
    }
    for tx in &probe {
        let a = trust::score_transaction(tx, &bounds, &thresholds)?;
        let rep = registry.record(&tx.device_id, &a);
        println!(
            "{} #{:<2} TS {:.3} {:<10} reputation {:.3}",
            tx.device_id,
            tx.seq,
            a.transaction_score,
            format!("{:?}", a.category),
            rep.reputation()
        );
    }

    let flagged = &probe[0].device_id;
    for _ in 0..5 {
        registry.penalize(flagged, 0.1)?;
    }
    println!("{flagged} after five 10% penalties: {:.3}", registry.get(flagged).reputation());
    Ok(())
}
