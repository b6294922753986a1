//! Mines a short chain at a few difficulties, then tampers with it.
//!
//! `cargo run --release --example ledger_mining`

use medledger::ledger::{self, Block, Chain, MiningMode};
use medledger::offchain::ContentAddress;

fn main() -> anyhow::Result<()> {
    for difficulty in [4, 8, 12] {
        let mut chain = Chain::new(difficulty, 0, MiningMode::Deterministic)?;
        let mut attempts = 0;
        for i in 0..50u64 {
            let addrs = [ContentAddress::of(&i.to_be_bytes())];
            attempts += chain.append_batch_counted(&addrs, i + 1)?.1;
        }
        println!(
            "difficulty {difficulty:>2}: mean attempts {:>8.1} (expected {}), tip {}",
            attempts as f64 / 50.0,
            1u64 << difficulty,
            &chain.tip().hash_hex()[..16]
        );
    }

    let mut chain = Chain::new(8, 0, MiningMode::Deterministic)?;
    for i in 0..10u64 {
        chain.append_batch(&[ContentAddress::of(&i.to_be_bytes())], i + 1)?;
    }
    println!("clean chain: {}", ledger::verify_chain(&chain));

    let mut bytes = chain.blocks()[4].to_bytes();
    bytes[9] ^= 0x01;
    chain.blocks_mut()[4] = Block::from_bytes(&bytes)?;
    println!("after flipping one timestamp bit in block 4: {}", ledger::verify_chain(&chain));
    Ok(())
}
