//! Run configuration files.
//!
//! ```json
//! {
//!   "pipeline": { "epochs": 40, "batch_size": 64, "learning_rate": 0.001 },
//!   "dataset": { "schema": "nsl-kdd", "synthetic_rows": 10000 },
//!   "out": "runs"
//! }
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, CategoricalEncoding, DatasetSchema, SensorTransaction};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSource {
    /// `nsl-kdd`, `unsw-nb15`, or a path to a schema JSON file.
    pub schema: String,
    /// Headerless CSV with the label last. Synthetic data is used when absent.
    pub csv: Option<PathBuf>,
    pub encoding: CategoricalEncoding,
    pub synthetic_rows: usize,
}

impl Default for DatasetSource {
    fn default() -> Self {
        Self {
            schema: "nsl-kdd".into(),
            csv: None,
            encoding: CategoricalEncoding::OneHot,
            synthetic_rows: 10_000,
        }
    }
}

impl DatasetSource {
    pub fn schema(&self) -> Result<DatasetSchema, ConfigError> {
        Ok(match self.schema.as_str() {
            "nsl-kdd" | "nsl_kdd" => DatasetSchema::nsl_kdd(),
            "unsw-nb15" | "unsw_nb15" => DatasetSchema::unsw_nb15(),
            path => DatasetSchema::from_json_file(path)?,
        })
    }

    /// Loads the CSV, or synthesizes `synthetic_rows` rows with `seed`.
    pub fn load(&self, seed: u64) -> Result<(DatasetSchema, Vec<SensorTransaction>), ConfigError> {
        let schema = self.schema()?;
        let rows = match &self.csv {
            Some(path) => dataset::load_csv(path, &schema, self.encoding)?.transactions,
            None => dataset::synthesize(&schema, self.synthetic_rows, seed)?,
        };
        Ok((schema, rows))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub pipeline: PipelineConfig,
    pub dataset: DatasetSource,
    pub out: PathBuf,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            dataset: DatasetSource::default(),
            out: PathBuf::from("runs"),
        }
    }
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ConfigError::Parse { path: shown, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = RunConfigFile::from_json("{}").unwrap();
        assert_eq!(c, RunConfigFile::default());
        assert_eq!(c.pipeline.epochs, 40);
        assert_eq!(c.pipeline.batch_size, 64);
        assert_eq!(c.pipeline.learning_rate, 0.001);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfigFile::from_json(r#"{"pipelin": {}}"#).is_err());
        assert!(RunConfigFile::from_json(r#"{"pipeline": {"epoch": 3}}"#).is_err());
        assert!(RunConfigFile::from_json(r#"{"dataset": {"rows": 3}}"#).is_err());
    }

    #[test]
    fn partial_override() {
        let c = RunConfigFile::from_json(r#"{"pipeline": {"seed": 7, "vae": {"latent_dim": 4}}}"#).unwrap();
        assert_eq!(c.pipeline.seed, 7);
        assert_eq!(c.pipeline.vae.latent_dim, 4);
        assert_eq!(c.pipeline.epochs, 40);
    }
}
