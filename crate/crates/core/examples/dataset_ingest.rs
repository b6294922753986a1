//! Loads a small headerless CSV with one categorical column, then shows the
//! encoded width, the fitted ranges and a stratified split.
//!
//! `cargo run --example dataset_ingest`

use std::collections::BTreeSet;

use medledger::dataset::{self, CategoricalEncoding, DatasetSchema};

const ROWS: &str = "\
0.0,tcp,491,0,Normal
2.0,udp,146,0,Normal
0.0,tcp,0,0,DoS
0.0,icmp,1032,0,Probe
1.0,tcp,232,8153,Normal
0.0,tcp,199,420,Normal
3.0,udp,0,0,DoS
0.0,icmp,520,0,Probe
";

fn main() -> anyhow::Result<()> {
    let schema = DatasetSchema::new(
        "toy",
        4,
        vec!["Normal".into(), "DoS".into(), "Probe".into()],
        BTreeSet::from([1]),
    )?;
    let dir = tempfile_dir()?;
    let path = dir.join("toy.csv");
    std::fs::write(&path, ROWS)?;

    for encoding in [CategoricalEncoding::OneHot, CategoricalEncoding::Ordinal] {
        let ingested = dataset::load_csv(&path, &schema, encoding)?;
        println!(
            "{encoding:?}: {} rows, {} encoded features",
            ingested.transactions.len(),
            ingested.preprocessor.encoded_width()
        );
    }

    let ingested = dataset::load_csv(&path, &schema, CategoricalEncoding::OneHot)?;
    for tx in ingested.transactions.iter().take(3) {
        let shown: Vec<String> = tx.features.iter().map(|v| format!("{v:.2}")).collect();
        println!("{} #{}: [{}] -> {}", tx.device_id, tx.seq, shown.join(", "), schema.class_names[tx.label.unwrap()]);
    }

    let nsl = DatasetSchema::nsl_kdd();
    let data = dataset::synthesize(&nsl, 1000, 1)?;
    let (train, test) = dataset::split(&data, 0.8, 1)?;
    println!("synthetic {}: {} train / {} test", nsl.name, train.len(), test.len());
    println!("train classes {:?}", dataset::class_histogram(&train, nsl.class_count()));
    println!("test classes  {:?}", dataset::class_histogram(&test, nsl.class_count()));
    std::fs::remove_dir_all(dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("medledger-ingest-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
