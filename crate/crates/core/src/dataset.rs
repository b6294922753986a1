//! Intrusion-detection datasets: schemas, CSV ingestion with min-max
//! normalization, synthetic generation and stratified splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row {row}, column {column}: {reason}")]
    MalformedRow { row: usize, column: usize, reason: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("input contains no rows")]
    Empty,
    #[error("row count must be at least 1")]
    ZeroRows,
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    FractionOutOfRange(f64),
    #[error("feature vector has {actual} values, expected {expected}")]
    WidthMismatch { expected: usize, actual: usize },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Column layout and label set of a tabular IDS dataset.
///
/// `feature_count` counts raw columns before categorical expansion; the label
/// is the extra trailing column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub name: String,
    pub feature_count: usize,
    #[serde(rename = "classes")]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub categorical_columns: BTreeSet<usize>,
}

impl DatasetSchema {
    pub fn new(
        name: impl Into<String>,
        feature_count: usize,
        class_names: Vec<String>,
        categorical_columns: BTreeSet<usize>,
    ) -> Result<Self> {
        let schema = Self {
            name: name.into(),
            feature_count,
            class_names,
            categorical_columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// 41 features; protocol_type, service and flag are categorical.
    pub fn nsl_kdd() -> Self {
        Self::new(
            "NSL-KDD",
            41,
            ["DoS", "Probe", "U2R", "R2L", "Normal"].map(String::from).to_vec(),
            [1, 2, 3].into_iter().collect(),
        )
        .expect("built-in schema is valid")
    }

    /// 49 features; srcip, dstip, proto, state and service are categorical.
    pub fn unsw_nb15() -> Self {
        Self::new(
            "UNSW-NB15",
            49,
            [
                "Backdoor",
                "Worms",
                "Shellcode",
                "Exploits",
                "Fuzzers",
                "DoS",
                "Generic",
                "Reconnaissance",
                "Analysis",
                "Normal",
            ]
            .map(String::from)
            .to_vec(),
            [0, 2, 4, 5, 13].into_iter().collect(),
        )
        .expect("built-in schema is valid")
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let schema: Self =
            serde_json::from_str(&text).map_err(|e| DatasetError::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_count == 0 {
            return Err(DatasetError::InvalidSchema("feature_count must be >= 1".into()));
        }
        if self.class_names.is_empty() {
            return Err(DatasetError::InvalidSchema("class list is empty".into()));
        }
        let distinct: BTreeSet<&String> = self.class_names.iter().collect();
        if distinct.len() != self.class_names.len() {
            return Err(DatasetError::InvalidSchema("duplicate class names".into()));
        }
        if let Some(&c) = self.categorical_columns.iter().find(|&&c| c >= self.feature_count) {
            return Err(DatasetError::InvalidSchema(format!(
                "categorical column {c} outside 0..{}",
                self.feature_count
            )));
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// Index of the benign class, if the schema has one named `Normal`.
    pub fn normal_class(&self) -> Option<usize> {
        self.class_index("Normal")
    }
}

/// One device reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorTransaction {
    pub device_id: String,
    pub seq: u64,
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

/// Per-feature `(min, max)` ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureBounds {
    /// Bounds over a non-empty set of equally wide rows.
    pub fn fit<'a, I>(rows: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut iter = rows.into_iter();
        let first = iter.next()?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in iter {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Some(Self { min, max })
    }

    pub fn from_transactions(txs: &[SensorTransaction]) -> Option<Self> {
        Self::fit(txs.iter().map(|t| t.features.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn contains(&self, feature: usize, value: f64) -> bool {
        self.min[feature] <= value && value <= self.max[feature]
    }

    /// Min-max scaling; constant features map to 0.
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.max[j] - self.min[j];
                if span > 0.0 {
                    (v - self.min[j]) / span
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Like [`normalize`](Self::normalize) but clamps into `[0, 1]`, for rows
    /// outside the split the bounds were fitted on.
    pub fn normalize_clamped(&self, raw: &[f64]) -> Vec<f64> {
        self.normalize(raw).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }

    pub fn denormalize(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .enumerate()
            .map(|(j, &v)| self.min[j] + v * (self.max[j] - self.min[j]))
            .collect()
    }
}

/// How categorical columns become numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalEncoding {
    #[default]
    OneHot,
    Ordinal,
}

/// Number of device streams CSV rows are dealt round-robin onto.
pub const DEFAULT_DEVICE_STREAMS: usize = 10;

/// Fitted encoding: category tables plus normalization bounds.
///
/// Fitted on a training file and reused for test files so that both splits
/// share one feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub schema: DatasetSchema,
    pub encoding: CategoricalEncoding,
    /// Sorted distinct values per categorical column.
    pub categories: BTreeMap<usize, Vec<String>>,
    pub bounds: FeatureBounds,
    pub device_streams: usize,
}

impl Preprocessor {
    /// Width of an encoded feature vector.
    pub fn encoded_width(&self) -> usize {
        encoded_width(&self.schema, self.encoding, &self.categories)
    }

    /// Encodes and normalizes rows with the fitted tables; values outside the
    /// fitted range are clamped and unseen categories encode as all zeros.
    pub fn transform_file(&self, path: impl AsRef<Path>) -> Result<Vec<SensorTransaction>> {
        let rows = read_rows(path.as_ref(), &self.schema)?;
        let encoded = encode_rows(&rows, &self.schema, self.encoding, &self.categories)?;
        Ok(assemble(&rows, encoded, self.device_streams, |f| {
            self.bounds.normalize_clamped(f)
        }))
    }
}

/// Result of [`load_csv`].
#[derive(Debug, Clone)]
pub struct Ingested {
    pub transactions: Vec<SensorTransaction>,
    pub preprocessor: Preprocessor,
}

impl Ingested {
    pub fn bounds(&self) -> &FeatureBounds {
        &self.preprocessor.bounds
    }
}

struct RawRow {
    fields: Vec<String>,
    label: usize,
}

/// Reads a headerless CSV (label in the last column), encodes categorical
/// columns and min-max normalizes with bounds fitted on this file.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    encoding: CategoricalEncoding,
) -> Result<Ingested> {
    schema.validate()?;
    let rows = read_rows(path.as_ref(), schema)?;
    let mut categories: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for &c in &schema.categorical_columns {
        categories.insert(c, rows.iter().map(|r| r.fields[c].clone()).collect());
    }
    let categories: BTreeMap<usize, Vec<String>> =
        categories.into_iter().map(|(c, set)| (c, set.into_iter().collect())).collect();
    let encoded = encode_rows(&rows, schema, encoding, &categories)?;
    let bounds = FeatureBounds::fit(encoded.iter().map(Vec::as_slice)).ok_or(DatasetError::Empty)?;
    let transactions = assemble(&rows, encoded, DEFAULT_DEVICE_STREAMS, |f| bounds.normalize(f));
    Ok(Ingested {
        transactions,
        preprocessor: Preprocessor {
            schema: schema.clone(),
            encoding,
            categories,
            bounds,
            device_streams: DEFAULT_DEVICE_STREAMS,
        },
    })
}

fn read_rows(path: &Path, schema: &DatasetSchema) -> Result<Vec<RawRow>> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let expected = schema.feature_count + 1;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| DatasetError::MalformedRow {
            row: row_no,
            column: 0,
            reason: e.to_string(),
        })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != expected {
            return Err(DatasetError::MalformedRow {
                row: row_no,
                column: record.len().min(expected),
                reason: format!("expected {expected} columns, found {}", record.len()),
            });
        }
        let label_str = record[schema.feature_count].trim();
        let label = schema
            .class_index(label_str)
            .ok_or_else(|| DatasetError::UnknownLabel(label_str.to_string()))?;
        let fields = record.iter().take(schema.feature_count).map(|s| s.trim().to_string()).collect();
        rows.push(RawRow { fields, label });
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(rows)
}

fn encoded_width(
    schema: &DatasetSchema,
    encoding: CategoricalEncoding,
    categories: &BTreeMap<usize, Vec<String>>,
) -> usize {
    match encoding {
        CategoricalEncoding::Ordinal => schema.feature_count,
        CategoricalEncoding::OneHot => (0..schema.feature_count)
            .map(|c| categories.get(&c).map_or(1, Vec::len))
            .sum(),
    }
}

fn encode_rows(
    rows: &[RawRow],
    schema: &DatasetSchema,
    encoding: CategoricalEncoding,
    categories: &BTreeMap<usize, Vec<String>>,
) -> Result<Vec<Vec<f64>>> {
    let width = encoded_width(schema, encoding, categories);
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = Vec::with_capacity(width);
            for (c, field) in row.fields.iter().enumerate() {
                match categories.get(&c) {
                    Some(table) => {
                        let pos = table.binary_search(field).ok();
                        match encoding {
                            CategoricalEncoding::OneHot => {
                                out.extend((0..table.len()).map(|k| if Some(k) == pos { 1.0 } else { 0.0 }))
                            }
                            // Unseen categories land one past the last known code.
                            CategoricalEncoding::Ordinal => out.push(pos.unwrap_or(table.len()) as f64),
                        }
                    }
                    None => {
                        let v: f64 = field.parse().map_err(|_| DatasetError::MalformedRow {
                            row: i + 1,
                            column: c,
                            reason: format!("not a number: {field:?}"),
                        })?;
                        if !v.is_finite() {
                            return Err(DatasetError::MalformedRow {
                                row: i + 1,
                                column: c,
                                reason: format!("non-finite value {field:?}"),
                            });
                        }
                        out.push(v);
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

fn assemble(
    rows: &[RawRow],
    encoded: Vec<Vec<f64>>,
    device_streams: usize,
    normalize: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<SensorTransaction> {
    let streams = device_streams.max(1);
    rows.iter()
        .zip(encoded)
        .enumerate()
        .map(|(i, (row, features))| SensorTransaction {
            device_id: device_name(i % streams),
            seq: (i / streams) as u64,
            features: normalize(&features),
            label: Some(row.label),
        })
        .collect()
}

pub fn device_name(index: usize) -> String {
    format!("sn-{index:03}")
}

/// Writes transactions back out as headerless CSV (features then label name).
pub fn write_csv(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    txs: &[SensorTransaction],
) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for tx in txs {
        let mut record: Vec<String> = tx.features.iter().map(|v| v.to_string()).collect();
        record.push(tx.label.map(|l| schema.class_names[l].clone()).unwrap_or_default());
        w.write_record(&record)?;
    }
    w.flush()
}

/// Noise standard deviation of synthetic features around their class mean.
const SYNTH_NOISE_SD: f64 = 0.12;
/// Shift applied to a class's signature features.
const SYNTH_SHIFT: (f64, f64) = (0.25, 0.4);
const SYNTH_CLAMP: (f64, f64) = (0.02, 0.98);

/// Seeded Gaussian class-conditional data with `schema.feature_count`
/// numeric features in `[0, 1]` and round-robin balanced labels.
///
/// Each class shifts its own subset of "signature" features away from a
/// shared baseline; the rest is noise.
pub fn synthesize(schema: &DatasetSchema, rows: usize, seed: u64) -> Result<Vec<SensorTransaction>> {
    schema.validate()?;
    if rows == 0 {
        return Err(DatasetError::ZeroRows);
    }
    let fc = schema.feature_count;
    let k = schema.class_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let base: Vec<f64> = (0..fc).map(|_| rng.random_range(0.35..0.65)).collect();
    let signature_len = (fc / 6).max(1).min(fc);
    let means: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut mean = base.clone();
            let mut idx: Vec<usize> = (0..fc).collect();
            idx.shuffle(&mut rng);
            for &j in &idx[..signature_len] {
                let shift = rng.random_range(SYNTH_SHIFT.0..SYNTH_SHIFT.1);
                mean[j] += if rng.random_bool(0.5) { shift } else { -shift };
            }
            mean
        })
        .collect();

    let mut labels: Vec<usize> = (0..rows).map(|i| i % k).collect();
    labels.shuffle(&mut rng);

    let noise = Normal::new(0.0, SYNTH_NOISE_SD).expect("valid sd");
    Ok(labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| SensorTransaction {
            device_id: device_name(i % DEFAULT_DEVICE_STREAMS),
            seq: (i / DEFAULT_DEVICE_STREAMS) as u64,
            features: means[label]
                .iter()
                .map(|&m| (m + noise.sample(&mut rng)).clamp(SYNTH_CLAMP.0, SYNTH_CLAMP.1))
                .collect(),
            label: Some(label),
        })
        .collect())
}

/// Stratified seeded split.
///
/// The train side gets `round(n · fraction)` rows overall, and each class
/// contributes the floor or ceiling of its proportional share (largest
/// remainders first). Unlabeled rows form their own stratum.
pub fn split(
    data: &[SensorTransaction],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<SensorTransaction>, Vec<SensorTransaction>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::FractionOutOfRange(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, tx) in data.iter().enumerate() {
        strata.entry(tx.label).or_default().push(i);
    }
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
    }

    let target = (data.len() as f64 * train_fraction).round() as usize;
    let mut quotas: Vec<(usize, f64)> = strata
        .values()
        .map(|m| {
            let exact = m.len() as f64 * train_fraction;
            (exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.0).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].1.total_cmp(&quotas[a].1).then(a.cmp(&b)));
    for &s in order.iter().take(target.saturating_sub(assigned)) {
        quotas[s].0 += 1;
    }

    let mut train_idx = Vec::with_capacity(target);
    let mut test_idx = Vec::with_capacity(data.len() - target);
    for (members, (quota, _)) in strata.values().zip(&quotas) {
        train_idx.extend_from_slice(&members[..*quota]);
        test_idx.extend_from_slice(&members[*quota..]);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);
    Ok((
        train_idx.into_iter().map(|i| data[i].clone()).collect(),
        test_idx.into_iter().map(|i| data[i].clone()).collect(),
    ))
}

/// Per-class row counts, indexed by class.
pub fn class_histogram(data: &[SensorTransaction], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for l in data.iter().filter_map(|t| t.label) {
        counts[l] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tiny_schema() -> DatasetSchema {
        DatasetSchema::new(
            "tiny",
            3,
            vec!["Attack".into(), "Normal".into()],
            [1].into_iter().collect(),
        )
        .unwrap()
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn min_max_endpoints() {
        let f = write_tmp("2,tcp,5,Normal\n4,udp,5,Attack\n6,tcp,5,Normal\n");
        let got = load_csv(f.path(), &tiny_schema(), CategoricalEncoding::Ordinal).unwrap();
        let first: Vec<f64> = got.transactions.iter().map(|t| t.features[0]).collect();
        assert_eq!(first, vec![0.0, 0.5, 1.0]);
        // constant column normalizes to zero
        assert!(got.transactions.iter().all(|t| t.features[2] == 0.0));
    }

    #[test]
    fn single_row_normalizes_to_zero() {
        let f = write_tmp("7,icmp,3.5,Attack\r\n");
        let got = load_csv(f.path(), &tiny_schema(), CategoricalEncoding::OneHot).unwrap();
        assert_eq!(got.transactions.len(), 1);
        assert!(got.transactions[0].features.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors_name_row_column_and_label() {
        let f = write_tmp("1,tcp,2,Normal\n1,tcp,Normal\n");
        match load_csv(f.path(), &tiny_schema(), CategoricalEncoding::OneHot) {
            Err(DatasetError::MalformedRow { row: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("1,tcp,abc,Normal\n");
        match load_csv(f.path(), &tiny_schema(), CategoricalEncoding::OneHot) {
            Err(DatasetError::MalformedRow { row: 1, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("1,tcp,2,Botnet\n");
        match load_csv(f.path(), &tiny_schema(), CategoricalEncoding::OneHot) {
            Err(DatasetError::UnknownLabel(l)) => assert_eq!(l, "Botnet"),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("");
        assert!(matches!(
            load_csv(f.path(), &tiny_schema(), CategoricalEncoding::OneHot),
            Err(DatasetError::Empty)
        ));
    }

    #[test]
    fn test_split_reuses_bounds_and_clamps() {
        let train = write_tmp("0,tcp,0,Normal\n10,udp,10,Attack\n");
        let test = write_tmp("20,tcp,-5,Normal\n5,gre,5,Attack\n");
        let fitted = load_csv(train.path(), &tiny_schema(), CategoricalEncoding::OneHot).unwrap();
        let got = fitted.preprocessor.transform_file(test.path()).unwrap();
        // [x0, tcp, udp, x2]
        assert_eq!(got[0].features, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(got[1].features, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn schema_validation() {
        assert!(DatasetSchema::new("x", 0, vec!["a".into()], BTreeSet::new()).is_err());
        assert!(DatasetSchema::new("x", 2, vec![], BTreeSet::new()).is_err());
        assert!(DatasetSchema::new("x", 2, vec!["a".into(), "a".into()], BTreeSet::new()).is_err());
        assert!(DatasetSchema::new("x", 2, vec!["a".into()], [2].into_iter().collect()).is_err());
        assert_eq!(DatasetSchema::nsl_kdd().feature_count, 41);
        assert_eq!(DatasetSchema::unsw_nb15().feature_count, 49);
        assert_eq!(DatasetSchema::unsw_nb15().class_count(), 10);
    }

    #[test]
    fn schema_json_keys() {
        let f = write_tmp(r#"{"name":"t","feature_count":2,"classes":["A","Normal"],"categorical_columns":[1]}"#);
        let s = DatasetSchema::from_json_file(f.path()).unwrap();
        assert_eq!(s.normal_class(), Some(1));
        let f = write_tmp(r#"{"name":"t","feature_count":2,"classes":["A"],"extra":1}"#);
        assert!(DatasetSchema::from_json_file(f.path()).is_err());
    }

    #[test]
    fn synthesize_is_deterministic_and_balanced() {
        let schema = DatasetSchema::nsl_kdd();
        assert_eq!(synthesize(&schema, 10, 7).unwrap(), synthesize(&schema, 10, 7).unwrap());
        let data = synthesize(&schema, 100, 1).unwrap();
        assert_eq!(class_histogram(&data, 5), vec![20; 5]);
        assert!(data.iter().all(|t| t.features.len() == 41
            && t.features.iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(matches!(synthesize(&schema, 0, 1), Err(DatasetError::ZeroRows)));
    }

    #[test]
    fn split_sizes_and_errors() {
        let data = synthesize(&DatasetSchema::nsl_kdd(), 100, 4).unwrap();
        let (tr, te) = split(&data, 0.8, 9).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(split(&data, 0.8, 9).unwrap(), (tr, te));
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(split(&data, f, 1).is_err());
        }
    }
}
