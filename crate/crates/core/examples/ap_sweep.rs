//! Detection and false alarm rates as the attack share of the evaluation
//! stream grows.
//!
//! `cargo run --release --example ap_sweep [seed]`

use medledger::dataset::{self, DatasetSchema};
use medledger::pipeline::{self, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |a| a.parse())?;
    let schema = DatasetSchema::nsl_kdd();
    let data = dataset::synthesize(&schema, 10_000, seed)?;
    let config = PipelineConfig { seed, ..Default::default() };
    let rows = pipeline::sweep(&config, &schema, &data, &[0.3, 0.4, 0.5, 0.6, 0.7, 0.8])?;
    print!("{}", pipeline::sweep_csv(&rows));
    for r in &rows {
        println!(
            "AP {:.1}: confusion {:?}{}",
            r.ap,
            r.confusion.counts(),
            if r.sampled_with_replacement { " (resampled with replacement)" } else { "" }
        );
    }
    Ok(())
}
