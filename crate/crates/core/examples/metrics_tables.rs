//! Per-class metrics from a confusion matrix in every table format.
//!
//! `cargo run --example metrics_tables`

use medledger::metrics::{self, ConfusionMatrix, RecallDefinition, TableFormat};

fn main() -> anyhow::Result<()> {
    let names: Vec<String> = ["Normal", "DoS", "Probe", "R2L", "U2R"].map(String::from).to_vec();
    let cm = ConfusionMatrix::from_counts(vec![
        vec![940, 12, 20, 25, 3],
        vec![15, 970, 10, 4, 1],
        vec![30, 8, 950, 10, 2],
        vec![60, 2, 6, 920, 12],
        vec![20, 1, 2, 30, 947],
    ]);
    let report = metrics::report_with(&cm, names.clone(), RecallDefinition::Standard)?;
    for format in [TableFormat::Text, TableFormat::Csv, TableFormat::Json] {
        println!("{}", metrics::emit_tables(&report, format));
    }

    let binary = cm.attack_vs_normal(0);
    let (tp, fp, fn_, tn) = binary.one_vs_rest(1);
    let m = metrics::class_metrics(tp, fp, fn_, tn, RecallDefinition::Standard);
    println!("attack vs normal: DR {:.4}, FAR {:.4}", m.detection_rate, m.false_alarm_rate);

    let literal = metrics::report_with(&cm, names, RecallDefinition::Literal)?;
    println!("macro recall, TP/(FP+FN) variant: {:.4}", literal.macro_avg.recall);
    Ok(())
}
