//! Reputation-based trust estimation.
//!
//! A transaction's trust score is the fraction of its features that fall
//! inside the per-feature confidence range learned from trusted data. Devices
//! accumulate those scores into a reputation, which anomaly feedback can
//! later shrink.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureBounds, SensorTransaction};

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("transaction has {features} features but bounds cover {bounds}")]
    LengthMismatch { features: usize, bounds: usize },
    #[error("thresholds must satisfy 0 <= reliable_low <= valid_low < valid_high <= 1, got {0:?}")]
    InvalidThresholds(TrustThresholds),
    #[error("penalty {0} outside [0, 1]")]
    PenaltyOutOfRange(f64),
    #[error("registry io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, TrustError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrustCategory {
    Valid,
    Reliable,
    Malevolent,
}

impl TrustCategory {
    pub fn is_admissible(self) -> bool {
        !matches!(self, TrustCategory::Malevolent)
    }
}

impl fmt::Display for TrustCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrustCategory::Valid => "Valid Transaction",
            TrustCategory::Reliable => "Reliable Transaction",
            TrustCategory::Malevolent => "Malevolent Transaction",
        })
    }
}

/// Category boundaries on the trust score.
///
/// Valid: `(valid_low, valid_high]`; Reliable: `[reliable_low, valid_low]`;
/// anything else is Malevolent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustThresholds {
    pub reliable_low: f64,
    pub valid_low: f64,
    pub valid_high: f64,
}

impl Default for TrustThresholds {
    fn default() -> Self {
        Self {
            reliable_low: 0.5,
            valid_low: 0.8,
            valid_high: 1.0,
        }
    }
}

impl TrustThresholds {
    /// Literal `(FC-5)/10`, `(FC-2)/10`, `FC/10` boundaries for a feature count.
    ///
    /// These only fall inside `[0, 1]` for `FC <= 10`; for larger feature
    /// counts validation rejects them.
    pub fn from_feature_count(fc: usize) -> Self {
        let fc = fc as f64;
        Self {
            reliable_low: (fc - 5.0) / 10.0,
            valid_low: (fc - 2.0) / 10.0,
            valid_high: fc / 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.reliable_low
            && self.reliable_low <= self.valid_low
            && self.valid_low < self.valid_high
            && self.valid_high <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(TrustError::InvalidThresholds(*self))
        }
    }

    pub fn categorize(&self, score: f64) -> TrustCategory {
        if score > self.valid_low && score <= self.valid_high {
            TrustCategory::Valid
        } else if score >= self.reliable_low && score <= self.valid_low {
            TrustCategory::Reliable
        } else {
            TrustCategory::Malevolent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustAssessment {
    pub transaction_score: f64,
    pub category: TrustCategory,
    pub in_range_count: usize,
}

/// Scores one transaction against the confidence ranges.
pub fn score_transaction(
    tx: &SensorTransaction,
    bounds: &FeatureBounds,
    thresholds: &TrustThresholds,
) -> Result<TrustAssessment> {
    thresholds.validate()?;
    score_features(&tx.features, bounds, thresholds)
}

pub fn score_features(
    features: &[f64],
    bounds: &FeatureBounds,
    thresholds: &TrustThresholds,
) -> Result<TrustAssessment> {
    if features.len() != bounds.len() || features.is_empty() {
        return Err(TrustError::LengthMismatch {
            features: features.len(),
            bounds: bounds.len(),
        });
    }
    let in_range_count = features
        .iter()
        .enumerate()
        .filter(|&(j, &v)| bounds.contains(j, v))
        .count();
    let transaction_score = in_range_count as f64 / features.len() as f64;
    Ok(TrustAssessment {
        transaction_score,
        category: thresholds.categorize(transaction_score),
        in_range_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceReputation {
    pub device_id: String,
    pub cumulative_score: f64,
    pub transaction_count: u64,
}

impl DeviceReputation {
    pub fn new(device_id: impl Into<String>) -> Self {
        Self {
            device_id: device_id.into(),
            cumulative_score: 0.0,
            transaction_count: 0,
        }
    }

    /// Mean score per recorded transaction; 0 for a device with no history.
    pub fn reputation(&self) -> f64 {
        if self.transaction_count == 0 {
            0.0
        } else {
            (self.cumulative_score / self.transaction_count as f64).min(1.0)
        }
    }
}

pub fn update_reputation(rep: &DeviceReputation, assessment: &TrustAssessment) -> DeviceReputation {
    DeviceReputation {
        device_id: rep.device_id.clone(),
        cumulative_score: rep.cumulative_score + assessment.transaction_score,
        transaction_count: rep.transaction_count + 1,
    }
}

/// Scales the cumulative score by `1 - penalty`; the transaction count is
/// left alone, so repeated penalties compound.
pub fn penalize(rep: &DeviceReputation, penalty: f64) -> Result<DeviceReputation> {
    if !(0.0..=1.0).contains(&penalty) {
        return Err(TrustError::PenaltyOutOfRange(penalty));
    }
    Ok(DeviceReputation {
        device_id: rep.device_id.clone(),
        cumulative_score: rep.cumulative_score * (1.0 - penalty),
        transaction_count: rep.transaction_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RegistryRecord {
    cumulative_score: f64,
    transaction_count: u64,
}

/// Device reputations keyed by device id.
///
/// Readers share the lock; each update takes it exclusively, which
/// serializes writes per device.
#[derive(Debug, Default)]
pub struct ReputationRegistry {
    devices: RwLock<BTreeMap<String, DeviceReputation>>,
}

impl ReputationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, device_id: &str) -> DeviceReputation {
        self.devices
            .read()
            .expect("registry lock poisoned")
            .get(device_id)
            .cloned()
            .unwrap_or_else(|| DeviceReputation::new(device_id))
    }

    pub fn record(&self, device_id: &str, assessment: &TrustAssessment) -> DeviceReputation {
        let mut map = self.devices.write().expect("registry lock poisoned");
        let entry = map
            .entry(device_id.to_string())
            .or_insert_with(|| DeviceReputation::new(device_id));
        *entry = update_reputation(entry, assessment);
        entry.clone()
    }

    pub fn penalize(&self, device_id: &str, penalty: f64) -> Result<DeviceReputation> {
        let mut map = self.devices.write().expect("registry lock poisoned");
        let entry = map
            .entry(device_id.to_string())
            .or_insert_with(|| DeviceReputation::new(device_id));
        *entry = penalize(entry, penalty)?;
        Ok(entry.clone())
    }

    pub fn snapshot(&self) -> Vec<DeviceReputation> {
        self.devices.read().expect("registry lock poisoned").values().cloned().collect()
    }

    /// `{device_id: {cumulative_score, transaction_count}}`.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, RegistryRecord> = self
            .devices
            .read()
            .expect("registry lock poisoned")
            .iter()
            .map(|(k, r)| {
                (
                    k.clone(),
                    RegistryRecord {
                        cumulative_score: r.cumulative_score,
                        transaction_count: r.transaction_count,
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&map).expect("registry serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, RegistryRecord> =
            serde_json::from_str(text).map_err(|e| TrustError::Io(e.to_string()))?;
        let devices = map
            .into_iter()
            .map(|(k, r)| {
                let rep = DeviceReputation {
                    device_id: k.clone(),
                    cumulative_score: r.cumulative_score,
                    transaction_count: r.transaction_count,
                };
                (k, rep)
            })
            .collect();
        Ok(Self {
            devices: RwLock::new(devices),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| TrustError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TrustError::Io(e.to_string()))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_bounds(n: usize) -> FeatureBounds {
        FeatureBounds {
            min: vec![0.0; n],
            max: vec![1.0; n],
        }
    }

    fn tx(features: Vec<f64>) -> SensorTransaction {
        SensorTransaction {
            device_id: "sn-000".into(),
            seq: 0,
            features,
            label: None,
        }
    }

    #[test]
    fn all_in_range_is_valid() {
        let a = score_transaction(&tx(vec![0.5; 41]), &unit_bounds(41), &TrustThresholds::default()).unwrap();
        assert_eq!(a.transaction_score, 1.0);
        assert_eq!(a.category, TrustCategory::Valid);
    }

    #[test]
    fn all_out_of_range_is_malevolent() {
        let a = score_transaction(&tx(vec![2.0; 41]), &unit_bounds(41), &TrustThresholds::default()).unwrap();
        assert_eq!(a.transaction_score, 0.0);
        assert_eq!(a.in_range_count, 0);
        assert_eq!(a.category, TrustCategory::Malevolent);
    }

    #[test]
    fn three_of_five_is_reliable() {
        let features = vec![0.1, 1.5, 0.9, -0.2, 1.0];
        let bounds = unit_bounds(5);
        let mut oracle = 0;
        for j in 0..features.len() {
            if features[j] >= bounds.min[j] && features[j] <= bounds.max[j] {
                oracle += 1;
            }
        }
        let a = score_transaction(&tx(features), &bounds, &TrustThresholds::default()).unwrap();
        assert_eq!(a.in_range_count, oracle);
        assert_eq!(a.transaction_score, 0.6);
        assert_eq!(a.category, TrustCategory::Reliable);
    }

    #[test]
    fn boundaries_follow_interval_closures() {
        let t = TrustThresholds::default();
        assert_eq!(t.categorize(0.5), TrustCategory::Reliable);
        assert_eq!(t.categorize(0.8), TrustCategory::Reliable);
        assert_eq!(t.categorize(1.0), TrustCategory::Valid);
        assert_eq!(t.categorize(0.49), TrustCategory::Malevolent);
        assert_eq!(t.categorize(0.81), TrustCategory::Valid);
    }

    #[test]
    fn length_mismatch_and_bad_thresholds() {
        let t = TrustThresholds::default();
        assert!(matches!(
            score_transaction(&tx(vec![0.0; 3]), &unit_bounds(4), &t),
            Err(TrustError::LengthMismatch { features: 3, bounds: 4 })
        ));
        let bad = TrustThresholds {
            reliable_low: 0.9,
            valid_low: 0.8,
            valid_high: 1.0,
        };
        assert!(score_transaction(&tx(vec![0.0; 4]), &unit_bounds(4), &bad).is_err());
        assert!(TrustThresholds::from_feature_count(41).validate().is_err());
        assert!(TrustThresholds::from_feature_count(10).validate().is_ok());
    }

    fn assessment(score: f64) -> TrustAssessment {
        TrustAssessment {
            transaction_score: score,
            category: TrustThresholds::default().categorize(score),
            in_range_count: 0,
        }
    }

    #[test]
    fn reputation_updates() {
        let fresh = DeviceReputation::new("d");
        assert_eq!(fresh.reputation(), 0.0);
        assert_eq!(update_reputation(&fresh, &assessment(1.0)).reputation(), 1.0);
        assert_eq!(update_reputation(&fresh, &assessment(0.0)).reputation(), 0.0);
        let mut r = fresh;
        for s in [1.0, 0.6, 0.2] {
            r = update_reputation(&r, &assessment(s));
        }
        let mean = (1.0 + 0.6 + 0.2) / 3.0;
        assert!((r.reputation() - mean).abs() < 1e-15);
    }

    #[test]
    fn penalties() {
        let r = DeviceReputation {
            device_id: "d".into(),
            cumulative_score: 4.0,
            transaction_count: 5,
        };
        assert_eq!(penalize(&r, 0.0).unwrap().reputation(), 0.8);
        assert_eq!(penalize(&r, 1.0).unwrap().reputation(), 0.0);
        assert!((penalize(&r, 0.25).unwrap().reputation() - 0.6).abs() < 1e-15);
        assert_eq!(penalize(&r, 0.25).unwrap().transaction_count, 5);
        assert!(matches!(penalize(&r, 1.5), Err(TrustError::PenaltyOutOfRange(_))));
        assert!(penalize(&r, -0.1).is_err());
    }

    #[test]
    fn registry_json_round_trip() {
        let reg = ReputationRegistry::new();
        reg.record("a", &assessment(1.0));
        reg.record("a", &assessment(0.5));
        reg.record("b", &assessment(0.25));
        reg.penalize("b", 0.5).unwrap();
        let json = reg.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["a"]["transaction_count"], 2);
        assert_eq!(value["b"]["cumulative_score"], 0.125);
        let back = ReputationRegistry::from_json(&json).unwrap();
        assert_eq!(back.snapshot(), reg.snapshot());
    }
}
