//! Confusion matrices and one-vs-rest classification metrics.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("label vectors differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {label} is not below the class count {classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("class names do not match the matrix size")]
    NameMismatch,
    #[error("unknown table format {0:?} (expected csv, json or text)")]
    UnknownFormat(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// K×K counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    /// Panics if `counts` is not square.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        assert!(counts.iter().all(|r| r.len() == counts.len()), "confusion matrix must be square");
        Self { counts }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    /// One-vs-rest `(tp, fp, fn, tn)` for `class`.
    pub fn one_vs_rest(&self, class: usize) -> (u64, u64, u64, u64) {
        let tp = self.counts[class][class];
        let col: u64 = self.counts.iter().map(|r| r[class]).sum();
        let row: u64 = self.counts[class].iter().sum();
        let (fp, fn_) = (col - tp, row - tp);
        (tp, fp, fn_, self.total() - tp - fp - fn_)
    }

    /// Collapses to 2×2 with index 0 = benign (`normal`) and 1 = attack
    /// (every other class).
    pub fn attack_vs_normal(&self, normal: usize) -> ConfusionMatrix {
        let side = |c: usize| usize::from(c != normal);
        let mut out = ConfusionMatrix::zeros(2);
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                out.counts[side(t)][side(p)] += n;
            }
        }
        out
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        if let Some(&label) = [t, p].iter().find(|&&l| l >= classes) {
            return Err(MetricsError::LabelOutOfRange { label, classes });
        }
        cm.add(t, p);
    }
    Ok(cm)
}

/// Recall formula. `Standard` is TP/(TP+FN). `Literal` is TP/(FP+FN), kept
/// for reproducing the printed formula; with it recall no longer equals the
/// detection rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallDefinition {
    #[default]
    Standard,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
}

impl ClassMetrics {
    pub fn values(&self) -> [f64; 6] {
        [
            self.precision,
            self.recall,
            self.f1,
            self.accuracy,
            self.detection_rate,
            self.false_alarm_rate,
        ]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self {
            precision: v[0],
            recall: v[1],
            f1: v[2],
            accuracy: v[3],
            detection_rate: v[4],
            false_alarm_rate: v[5],
        }
    }
}

pub const METRIC_NAMES: [&str; 6] = [
    "precision",
    "recall",
    "f1",
    "accuracy",
    "detection_rate",
    "false_alarm_rate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: ClassMetrics,
    pub overall_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(tp: u64, fp: u64, fn_: u64, tn: u64, recall_def: RecallDefinition) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let detection_rate = ratio(tp, tp + fn_);
    let recall = match recall_def {
        RecallDefinition::Standard => detection_rate,
        RecallDefinition::Literal => ratio(tp, fp + fn_).min(1.0),
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
        detection_rate,
        false_alarm_rate: ratio(fp, fp + tn),
    }
}

/// Per-class and macro metrics with generic class names `class-<k>`.
pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let names = (0..cm.classes()).map(|c| format!("class-{c}")).collect();
    report_with(cm, names, RecallDefinition::Standard)
}

pub fn report_with(cm: &ConfusionMatrix, class_names: Vec<String>, recall_def: RecallDefinition) -> Result<MetricsReport> {
    if cm.classes() == 0 || cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    if class_names.len() != cm.classes() {
        return Err(MetricsError::NameMismatch);
    }
    let per_class: Vec<ClassMetrics> = (0..cm.classes())
        .map(|c| {
            let (tp, fp, fn_, tn) = cm.one_vs_rest(c);
            class_metrics(tp, fp, fn_, tn, recall_def)
        })
        .collect();
    let k = per_class.len() as f64;
    let mut sums = [0.0; 6];
    for m in &per_class {
        for (s, v) in sums.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    Ok(MetricsReport {
        class_names,
        macro_avg: ClassMetrics::from_values(sums.map(|s| s / k)),
        per_class,
        overall_accuracy: ratio(cm.trace(), cm.total()),
        confusion: cm.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
    #[default]
    Text,
}

impl FromStr for TableFormat {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "text" => Ok(Self::Text),
            other => Err(MetricsError::UnknownFormat(other.to_string())),
        }
    }
}

/// One row per class plus an `Average` row. Floats use Rust's shortest
/// round-trip formatting in CSV and JSON.
pub fn emit_tables(report: &MetricsReport, format: TableFormat) -> String {
    let rows = report
        .class_names
        .iter()
        .map(String::as_str)
        .zip(&report.per_class)
        .chain(std::iter::once(("Average", &report.macro_avg)));
    match format {
        TableFormat::Csv => {
            let mut out = format!("class,{}\n", METRIC_NAMES.join(","));
            for (name, m) in rows {
                let vals: Vec<String> = m.values().iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{name},{}", vals.join(","));
            }
            out
        }
        TableFormat::Json => {
            let per_class: serde_json::Map<String, serde_json::Value> = report
                .class_names
                .iter()
                .zip(&report.per_class)
                .map(|(n, m)| (n.clone(), serde_json::to_value(m).expect("plain struct")))
                .collect();
            let doc = serde_json::json!({
                "per_class": per_class,
                "macro": report.macro_avg,
                "overall_accuracy": report.overall_accuracy,
                "confusion": report.confusion.counts(),
            });
            serde_json::to_string_pretty(&doc).expect("plain document") + "\n"
        }
        TableFormat::Text => {
            let width = report.class_names.iter().map(String::len).max().unwrap_or(0).max(7);
            let mut out = format!("{:<width$}", "class");
            for n in METRIC_NAMES {
                let _ = write!(out, "  {n:>16}");
            }
            out.push('\n');
            for (name, m) in rows {
                let _ = write!(out, "{name:<width$}");
                for v in m.values() {
                    let _ = write!(out, "  {v:>16.4}");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "overall accuracy: {:.4}", report.overall_accuracy);
            out
        }
    }
}
