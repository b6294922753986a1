//! Full seeded run: train on a split, simulate the held-out stream through
//! the trust gate, off-chain store, ledger and detector, then write the run
//! directory.
//!
//! `cargo run --release --example pipeline_simulation [out-dir] [seed]`

use std::path::PathBuf;

use medledger::dataset::{self, DatasetSchema};
use medledger::metrics::{self, TableFormat};
use medledger::pipeline::{self, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs".into()));
    let seed: u64 = args.next().map_or(Ok(0), |a| a.parse())?;

    let schema = DatasetSchema::nsl_kdd();
    let data = dataset::synthesize(&schema, 10_000, seed)?;
    let config = PipelineConfig { seed, ..Default::default() };
    let sim = pipeline::run(&config, &schema, &data)?;

    let dir = pipeline::run_dir(&out, &config);
    pipeline::write_artifacts(&dir, &sim)?;
    let r = &sim.report;
    println!("run directory {}", dir.display());
    println!("{:#?}", r.counters);
    println!("chain: {} blocks, {}", r.chain.length, r.chain.verification);
    if let Some(m) = &r.metrics {
        print!("{}", metrics::emit_tables(m, TableFormat::Text));
    }
    if let Some(b) = &r.binary {
        println!("detection rate {:.4}, false alarm rate {:.4}", b.detection_rate, b.false_alarm_rate);
    }
    Ok(())
}
