//! Trains a full-rank and a rank-8 factorized LSTM on the same seeded
//! synthetic NSL-KDD-shaped data and compares size and accuracy.
//!
//! `cargo run --release --example lstm_factorized [rows] [seed]`

use medledger::dataset::{self, DatasetSchema};
use medledger::lstm::{self, ClassifierTrainConfig, LstmParams};
use medledger::pipeline;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let rows: usize = args.next().map_or(Ok(10_000), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |a| a.parse())?;

    let schema = DatasetSchema::nsl_kdd();
    let data = dataset::synthesize(&schema, rows, seed)?;
    let (train, test) = dataset::split(&data, 0.8, seed)?;
    let (fit, validation) = pipeline::windows_with_holdout(&train, lstm::DEFAULT_WINDOW, 0.1, seed);
    let test_windows = lstm::build_windows(&test, lstm::DEFAULT_WINDOW);
    println!("{} training windows, {} validation, {} test", fit.len(), validation.len(), test_windows.len());

    let cfg = ClassifierTrainConfig { seed, ..Default::default() };
    let init = LstmParams::new(schema.feature_count, lstm::DEFAULT_HIDDEN, schema.class_count(), seed);
    for (name, start) in [("full", init.clone()), ("rank 8", init.factorized(8))] {
        let t = std::time::Instant::now();
        let out = lstm::train_classifier(&start, &fit, &validation, &cfg)?;
        let acc = lstm::accuracy(&out.params, &test_windows)?;
        let last = out.trace.last().expect("at least one epoch");
        println!(
            "{name:>7}: {:>6} parameters, {} epochs, final train accuracy {:.4}, test accuracy {:.4} ({:.1?})",
            out.params.param_count(),
            out.trace.len(),
            last.train_accuracy,
            acc,
            t.elapsed()
        );
    }
    Ok(())
}
