//! End-to-end simulation: trust gate, VAE transform, off-chain storage,
//! ledger sealing, LSTM classification and reputation feedback.
//!
//! The loop is a deterministic discrete-event simulation. Offered
//! transactions are processed in blocks of `block_batch`. Within a block each
//! transaction is admitted or quarantined. Admitted ones are transformed and
//! stored, and their addresses are mined into one block. Then the block's
//! transactions are classified, and every predicted attack penalizes its
//! device. Penalties therefore take effect from the next block on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::{Clock, VirtualClock};
use crate::dataset::{self, DatasetSchema, FeatureBounds, SensorTransaction};
use crate::ledger::{self, Chain, MiningMode, VerificationReport};
use crate::lstm::{self, ClassifierTrainConfig, LabeledSequence, LstmParams};
use crate::metrics::{self, ConfusionMatrix, MetricsReport, RecallDefinition};
use crate::offchain::{self, ContentAddress, OffchainStore};
use crate::trust::{self, DeviceReputation, ReputationRegistry, TrustCategory, TrustThresholds};
use crate::vae::{self, VaeConfig, VaeParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset phase: {0}")]
    Dataset(#[from] dataset::DatasetError),
    #[error("trust phase: {0}")]
    Trust(#[from] trust::TrustError),
    #[error("privacy transform phase: {0}")]
    Vae(#[from] vae::VaeError),
    #[error("off-chain storage phase: {0}")]
    Store(#[from] offchain::StoreError),
    #[error("ledger phase: {0}")]
    Ledger(#[from] ledger::LedgerError),
    #[error("classification phase: {0}")]
    Lstm(#[from] lstm::LstmError),
    #[error("metrics phase: {0}")]
    Metrics(#[from] metrics::MetricsError),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("attack mix needs both Normal and attack rows")]
    MissingClass,
    #[error("attack percentage {0} must lie strictly between 0 and 1")]
    AttackPercentage(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Sensors, fog nodes and the sensor → fog assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub sensor_nodes: Vec<String>,
    pub fog_nodes: Vec<String>,
    pub assignment: BTreeMap<String, String>,
}

impl Topology {
    /// Deals sensors round-robin onto `fog_count` nodes named `fog-<i>`.
    pub fn round_robin(sensors: impl IntoIterator<Item = String>, fog_count: usize) -> Result<Self> {
        if fog_count == 0 {
            return Err(PipelineError::InvalidConfig("at least one fog node is required".into()));
        }
        let sensor_nodes: Vec<String> = sensors.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let fog_nodes: Vec<String> = (0..fog_count).map(|i| format!("fog-{i}")).collect();
        let assignment = sensor_nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), fog_nodes[i % fog_count].clone()))
            .collect();
        let t = Self {
            sensor_nodes,
            fog_nodes,
            assignment,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let fogs: BTreeSet<&String> = self.fog_nodes.iter().collect();
        let sensors: BTreeSet<&String> = self.sensor_nodes.iter().collect();
        if fogs.len() != self.fog_nodes.len() || sensors.len() != self.sensor_nodes.len() {
            return Err(PipelineError::InvalidConfig("duplicate node id".into()));
        }
        for s in &self.sensor_nodes {
            match self.assignment.get(s) {
                Some(f) if fogs.contains(f) => {}
                _ => return Err(PipelineError::InvalidConfig(format!("sensor {s} has no fog node"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub thresholds: TrustThresholds,
    /// Devices with history whose reputation falls below this are quarantined.
    pub admission_floor: f64,
    pub difficulty: u32,
    /// Offered transactions per block.
    pub block_batch: usize,
    pub fog_nodes: usize,
    pub replication: usize,
    pub train_fraction: f64,
    pub vae: VaeConfig,
    pub vae_epochs: usize,
    pub lstm_hidden: usize,
    /// Rank of the factorized stacked matrices; `None` trains full rank.
    pub lstm_rank: Option<usize>,
    pub window: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: Option<usize>,
    /// Fraction of training windows held out for early stopping.
    pub validation_fraction: f64,
    pub attack_percentage: Option<f64>,
    pub anomaly_penalty: f64,
    pub recall: RecallDefinition,
    pub seed: u64,
    pub genesis_timestamp: u64,
    pub clock_step_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            thresholds: TrustThresholds::default(),
            admission_floor: 0.3,
            difficulty: ledger::DEFAULT_DIFFICULTY,
            block_batch: 32,
            fog_nodes: 4,
            replication: 2,
            train_fraction: 0.8,
            vae: VaeConfig::default(),
            vae_epochs: 5,
            lstm_hidden: lstm::DEFAULT_HIDDEN,
            lstm_rank: None,
            window: lstm::DEFAULT_WINDOW,
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.001,
            patience: Some(10),
            validation_fraction: 0.1,
            attack_percentage: None,
            anomaly_penalty: 0.1,
            recall: RecallDefinition::Standard,
            seed: 0,
            genesis_timestamp: 1_700_000_000_000,
            clock_step_ms: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        self.thresholds.validate()?;
        if !(0.0..=1.0).contains(&self.admission_floor) {
            return bad("admission_floor must lie in [0, 1]");
        }
        if self.difficulty > ledger::MAX_DIFFICULTY {
            return bad("difficulty exceeds the lightweight cap of 32");
        }
        if self.block_batch == 0 || self.fog_nodes == 0 || self.replication == 0 {
            return bad("block_batch, fog_nodes and replication must be >= 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if self.vae_epochs == 0 || self.epochs == 0 || self.batch_size == 0 || self.window == 0 || self.lstm_hidden == 0 {
            return bad("epochs, batch sizes, window and hidden size must be >= 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if self.lstm_rank == Some(0) {
            return bad("lstm_rank must be >= 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if let Some(ap) = self.attack_percentage {
            if !(ap > 0.0 && ap < 1.0) {
                return Err(PipelineError::AttackPercentage(ap));
            }
        }
        if !(0.0..=1.0).contains(&self.anomaly_penalty) {
            return Err(trust::TrustError::PenaltyOutOfRange(self.anomaly_penalty).into());
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON encoding.
    pub fn hash_hex(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    pub fn classifier_train_config(&self) -> ClassifierTrainConfig {
        ClassifierTrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            patience: self.patience,
            clip_norm: lstm::DEFAULT_CLIP_NORM,
        }
    }
}

/// Attack classifier over a device's recent admitted rows (oldest first).
pub trait Detector {
    fn classify(&self, window: &[Vec<f64>]) -> Result<usize>;

    fn classify_batch(&self, windows: &[Vec<Vec<f64>>]) -> Result<Vec<usize>> {
        windows.iter().map(|w| self.classify(w)).collect()
    }
}

impl Detector for LstmParams {
    fn classify(&self, window: &[Vec<f64>]) -> Result<usize> {
        Ok(lstm::predict(self, window)?.class)
    }

    fn classify_batch(&self, windows: &[Vec<Vec<f64>>]) -> Result<Vec<usize>> {
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get().min(8));
        let threads = if windows.len() < 64 { 1 } else { threads };
        Ok(lstm::predict_batch(self, windows, threads)?
            .into_iter()
            .map(|p| p.class)
            .collect())
    }
}

/// Everything the simulation needs besides the transaction stream.
pub struct Models<'a> {
    pub schema: &'a DatasetSchema,
    /// Confidence ranges for the trust gate.
    pub bounds: &'a FeatureBounds,
    pub vae: &'a VaeParams,
    pub detector: &'a dyn Detector,
}

/// Trained artifacts of [`train_models`].
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub bounds: FeatureBounds,
    pub vae: VaeParams,
    pub lstm: LstmParams,
    pub lstm_trace: Vec<lstm::EpochStats>,
    pub vae_trace: Vec<f64>,
    pub test: Vec<SensorTransaction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseCounters {
    pub offered: usize,
    pub admitted: usize,
    pub quarantined: usize,
    /// Quarantined because the trust gate scored them Malevolent.
    pub quarantined_untrusted: usize,
    /// Quarantined because the device's reputation was under the floor.
    pub quarantined_reputation: usize,
    /// Admitted with a Reliable (not Valid) assessment.
    pub admitted_reliable: usize,
    pub payloads_stored: usize,
    pub blocks_mined: usize,
    pub classified: usize,
    pub anomalies_flagged: usize,
}

/// Per-phase time in clock milliseconds. Under the virtual clock every
/// clock read costs one step, so these are deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub trust_ms: u64,
    pub transform_ms: u64,
    pub store_ms: u64,
    pub ledger_ms: u64,
    pub classify_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub length: usize,
    pub tip_hash: String,
    pub verification: VerificationReport,
    pub verified: bool,
    pub addresses_on_chain: usize,
    /// Every on-chain address retrieved and re-hashed to itself.
    pub addresses_resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySummary {
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
    /// 2×2 counts, index 0 Normal, 1 attack.
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub attack_percentage: Option<f64>,
    pub sampled_with_replacement: bool,
    pub counters: PhaseCounters,
    /// True when nothing was admitted.
    pub quarantine_only: bool,
    pub metrics: Option<MetricsReport>,
    pub binary: Option<BinarySummary>,
    pub chain: ChainSummary,
    pub timings: PhaseTimings,
    pub reputations: Vec<DeviceReputation>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Report plus the state it describes.
#[derive(Debug)]
pub struct Simulation {
    pub report: RunReport,
    pub chain: Chain,
    pub store: OffchainStore,
    pub registry: ReputationRegistry,
    /// `(true, predicted)` per classified transaction, in classification order.
    pub predictions: Vec<(usize, usize)>,
}

/// Seed of the VAE noise for one transaction.
pub fn latent_seed(seed: u64, device_id: &str, seq: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((device_id.len() as u32).to_be_bytes());
    h.update(device_id.as_bytes());
    h.update(seq.to_be_bytes());
    u64::from_be_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn timed<T>(clock: &mut dyn Clock, acc: &mut u64, f: impl FnOnce() -> T) -> T {
    let start = clock.now_ms();
    let out = f();
    *acc += clock.now_ms().saturating_sub(start);
    out
}

/// Runs the phase loop over `stream` in order.
pub fn simulate(
    config: &PipelineConfig,
    models: &Models<'_>,
    stream: &[SensorTransaction],
    clock: &mut dyn Clock,
) -> Result<Simulation> {
    config.validate()?;
    let schema = models.schema;
    let topology = Topology::round_robin(stream.iter().map(|t| t.device_id.clone()), config.fog_nodes)?;
    let registry = ReputationRegistry::new();
    let store = OffchainStore::new();
    let mut chain = Chain::new(config.difficulty, config.genesis_timestamp, MiningMode::Deterministic)?;
    let mut counters = PhaseCounters {
        offered: stream.len(),
        ..Default::default()
    };
    let mut timings = PhaseTimings::default();
    let mut history: BTreeMap<&str, VecDeque<Vec<f64>>> = BTreeMap::new();
    let mut predictions = Vec::new();
    let normal = schema.normal_class();

    for batch in stream.chunks(config.block_batch) {
        let mut addresses: Vec<ContentAddress> = Vec::new();
        let mut pending: Vec<(&SensorTransaction, Vec<Vec<f64>>)> = Vec::new();

        for tx in batch {
            let rep = registry.get(&tx.device_id);
            if rep.transaction_count > 0 && rep.reputation() < config.admission_floor {
                counters.quarantined += 1;
                counters.quarantined_reputation += 1;
                continue;
            }
            let assessment = timed(clock, &mut timings.trust_ms, || {
                trust::score_transaction(tx, models.bounds, &config.thresholds)
            })?;
            match assessment.category {
                TrustCategory::Malevolent => {
                    registry.record(&tx.device_id, &assessment);
                    counters.quarantined += 1;
                    counters.quarantined_untrusted += 1;
                    continue;
                }
                TrustCategory::Valid => {
                    registry.record(&tx.device_id, &assessment);
                }
                TrustCategory::Reliable => counters.admitted_reliable += 1,
            }
            counters.admitted += 1;

            let code = timed(clock, &mut timings.transform_ms, || {
                vae::transform(models.vae, &tx.features, latent_seed(config.seed, &tx.device_id, tx.seq))
            })?;
            let payload = offchain::encode_latent(&tx.device_id, tx.seq, &code.sample);
            let nodes = &topology.fog_nodes;
            let stored_at = clock.now_ms();
            let addr = timed(clock, &mut timings.store_ms, || {
                store.store_at(&payload, nodes, config.replication.min(nodes.len()), stored_at)
            })?;
            addresses.push(addr);

            let window = history.entry(tx.device_id.as_str()).or_default();
            window.push_back(tx.features.clone());
            while window.len() > config.window {
                window.pop_front();
            }
            pending.push((tx, window.iter().cloned().collect()));
        }

        if addresses.is_empty() {
            continue;
        }
        let ts = clock.now_ms().max(chain.tip().timestamp);
        timed(clock, &mut timings.ledger_ms, || chain.append_batch(&addresses, ts).map(|_| ()))?;
        counters.blocks_mined += 1;

        let windows: Vec<Vec<Vec<f64>>> = pending.iter().map(|(_, w)| w.clone()).collect();
        let classes = timed(clock, &mut timings.classify_ms, || models.detector.classify_batch(&windows))?;
        for ((tx, _), class) in pending.iter().zip(classes) {
            counters.classified += 1;
            if let Some(truth) = tx.label {
                predictions.push((truth, class));
            }
            if Some(class) != normal {
                counters.anomalies_flagged += 1;
                registry.penalize(&tx.device_id, config.anomaly_penalty)?;
            }
        }
    }

    let verification = chain.verify();
    let mut addresses_on_chain = 0;
    let mut addresses_resolved = true;
    for block in chain.blocks() {
        for addr in &block.payload_addresses {
            addresses_on_chain += 1;
            let ok = store.retrieve(addr).is_ok_and(|p| ContentAddress::of(&p) == *addr);
            addresses_resolved &= ok;
        }
    }

    let (metrics, binary) = if predictions.is_empty() {
        (None, None)
    } else {
        let truth: Vec<usize> = predictions.iter().map(|p| p.0).collect();
        let pred: Vec<usize> = predictions.iter().map(|p| p.1).collect();
        let cm = metrics::confusion(&truth, &pred, schema.class_count())?;
        let binary = normal.map(|n| binary_summary(&cm.attack_vs_normal(n)));
        (
            Some(metrics::report_with(&cm, schema.class_names.clone(), config.recall)?),
            binary,
        )
    };

    counters.payloads_stored = store.len();
    let report = RunReport {
        config_hash: config.hash_hex(),
        seed: config.seed,
        attack_percentage: config.attack_percentage,
        sampled_with_replacement: false,
        counters,
        quarantine_only: counters.admitted == 0,
        metrics,
        binary,
        chain: ChainSummary {
            length: chain.len(),
            tip_hash: chain.tip().hash_hex(),
            verified: verification.is_ok(),
            verification,
            addresses_on_chain,
            addresses_resolved,
        },
        timings,
        reputations: registry.snapshot(),
    };
    Ok(Simulation {
        report,
        chain,
        store,
        registry,
        predictions,
    })
}

/// DR and FAR of the attack side of a 2×2 (Normal = 0, attack = 1) matrix.
pub fn binary_summary(cm: &ConfusionMatrix) -> BinarySummary {
    let m = metrics::class_metrics(
        cm.get(1, 1),
        cm.get(0, 1),
        cm.get(1, 0),
        cm.get(0, 0),
        RecallDefinition::Standard,
    );
    BinarySummary {
        detection_rate: m.detection_rate,
        false_alarm_rate: m.false_alarm_rate,
        confusion: cm.clone(),
    }
}

/// Splits the data, fits the trust ranges, the VAE and the LSTM.
pub fn train_models(config: &PipelineConfig, schema: &DatasetSchema, data: &[SensorTransaction]) -> Result<TrainedModels> {
    config.validate()?;
    if data.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let (train, test) = dataset::split(data, config.train_fraction, config.seed)?;
    let bounds = FeatureBounds::from_transactions(&train).ok_or(PipelineError::EmptyDataset)?;
    let width = bounds.len();

    let features: Vec<Vec<f64>> = train.iter().map(|t| t.features.clone()).collect();
    let vae0 = VaeParams::new(width, &config.vae, config.seed)?;
    let (vae, vae_trace) = vae::train(
        &vae0,
        &features,
        &vae::TrainConfig {
            epochs: config.vae_epochs,
            batch_size: config.batch_size,
            learning_rate: config.learning_rate,
            seed: config.seed,
        },
    )?;

    let (fit, validation) = windows_with_holdout(&train, config.window, config.validation_fraction, config.seed);
    let mut init = LstmParams::new(width, config.lstm_hidden, schema.class_count(), config.seed);
    if let Some(r) = config.lstm_rank {
        init = init.factorized(r);
    }
    let outcome = lstm::train_classifier(&init, &fit, &validation, &config.classifier_train_config())?;
    Ok(TrainedModels {
        bounds,
        vae,
        lstm: outcome.params,
        lstm_trace: outcome.trace,
        vae_trace,
        test,
    })
}

/// Non-overlapping windows of `train`, with a seeded `fraction` held out.
pub fn windows_with_holdout(
    train: &[SensorTransaction],
    window: usize,
    fraction: f64,
    seed: u64,
) -> (Vec<LabeledSequence>, Vec<LabeledSequence>) {
    let mut windows = lstm::build_windows(train, window);
    windows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    let held = (windows.len() as f64 * fraction).round() as usize;
    let validation = windows.split_off(windows.len() - held.min(windows.len()));
    (windows, validation)
}

/// Trains on a split of `data`, then simulates on the held-out part (mixed
/// to `attack_percentage` when set).
pub fn run(config: &PipelineConfig, schema: &DatasetSchema, data: &[SensorTransaction]) -> Result<Simulation> {
    let trained = train_models(config, schema, data)?;
    simulate_trained(config, schema, &trained)
}

/// Simulates over the held-out split of already trained models.
pub fn simulate_trained(config: &PipelineConfig, schema: &DatasetSchema, trained: &TrainedModels) -> Result<Simulation> {
    let (stream, with_replacement) = match config.attack_percentage {
        Some(ap) => {
            let mix = mix_attack_percentage(&trained.test, schema, ap, config.seed)?;
            (mix.rows, mix.with_replacement)
        }
        None => (trained.test.clone(), false),
    };
    let models = Models {
        schema,
        bounds: &trained.bounds,
        vae: &trained.vae,
        detector: &trained.lstm,
    };
    let mut clock = VirtualClock::new(config.genesis_timestamp + 1, config.clock_step_ms);
    let mut sim = simulate(config, &models, &stream, &mut clock)?;
    sim.report.sampled_with_replacement = with_replacement;
    Ok(sim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackMix {
    pub rows: Vec<SensorTransaction>,
    /// Set when one side had too few rows and was sampled with replacement.
    pub with_replacement: bool,
}

/// Resamples labeled rows to the same total size with `round(ap · N)` attack
/// rows, shuffles them and re-deals them onto the original device streams.
pub fn mix_attack_percentage(
    data: &[SensorTransaction],
    schema: &DatasetSchema,
    ap: f64,
    seed: u64,
) -> Result<AttackMix> {
    if !(ap > 0.0 && ap < 1.0) {
        return Err(PipelineError::AttackPercentage(ap));
    }
    let normal = schema.normal_class().ok_or(PipelineError::MissingClass)?;
    let (normals, attacks): (Vec<&SensorTransaction>, Vec<&SensorTransaction>) = data
        .iter()
        .filter(|t| t.label.is_some())
        .partition(|t| t.label == Some(normal));
    if normals.is_empty() || attacks.is_empty() {
        return Err(PipelineError::MissingClass);
    }
    let total = normals.len() + attacks.len();
    let n_attack = ((ap * total as f64).round() as usize).clamp(1, total - 1);
    let n_normal = total - n_attack;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut with_replacement = false;
    let mut draw = |pool: &[&SensorTransaction], n: usize, rng: &mut ChaCha8Rng| -> Vec<SensorTransaction> {
        if n <= pool.len() {
            pool.choose_multiple(rng, n).map(|&t| t.clone()).collect()
        } else {
            with_replacement = true;
            (0..n).map(|_| (*pool.choose(rng).expect("non-empty pool")).clone()).collect()
        }
    };
    let mut rows = draw(&attacks, n_attack, &mut rng);
    rows.extend(draw(&normals, n_normal, &mut rng));
    rows.shuffle(&mut rng);

    let mut devices: Vec<String> = data.iter().map(|t| t.device_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if devices.is_empty() {
        devices.push(dataset::device_name(0));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.device_id = devices[i % devices.len()].clone();
        row.seq = (i / devices.len()) as u64;
    }
    Ok(AttackMix { rows, with_replacement })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ap: f64,
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
    /// Binary Normal/attack counts the two rates were computed from.
    pub confusion: ConfusionMatrix,
    pub sampled_with_replacement: bool,
}

/// Trains once, then simulates one mixed evaluation stream per AP value.
/// Training depends only on the split and the seed, so this equals a full
/// run per AP.
pub fn sweep(config: &PipelineConfig, schema: &DatasetSchema, data: &[SensorTransaction], aps: &[f64]) -> Result<Vec<SweepRow>> {
    if aps.is_empty() {
        return Err(PipelineError::InvalidConfig("AP list is empty".into()));
    }
    let trained = train_models(config, schema, data)?;
    sweep_trained(config, schema, &trained, aps)
}

pub fn sweep_trained(config: &PipelineConfig, schema: &DatasetSchema, trained: &TrainedModels, aps: &[f64]) -> Result<Vec<SweepRow>> {
    aps.iter()
        .map(|&ap| {
            let cfg = PipelineConfig {
                attack_percentage: Some(ap),
                ..config.clone()
            };
            let sim = simulate_trained(&cfg, schema, trained)?;
            let binary = sim
                .report
                .binary
                .unwrap_or_else(|| binary_summary(&ConfusionMatrix::zeros(2)));
            Ok(SweepRow {
                ap,
                detection_rate: binary.detection_rate,
                false_alarm_rate: binary.false_alarm_rate,
                confusion: binary.confusion,
                sampled_with_replacement: sim.report.sampled_with_replacement,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("ap,detection_rate,false_alarm_rate\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.ap, r.detection_rate, r.false_alarm_rate));
    }
    out
}

/// `<out>/<config hash>`.
pub fn run_dir(out: &Path, config: &PipelineConfig) -> PathBuf {
    out.join(config.hash_hex())
}

/// Writes `report.json`, `chain.jsonl`, `reputations.json` and `store/`.
pub fn write_artifacts(dir: &Path, sim: &Simulation) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), sim.report.to_json())?;
    sim.chain.write_jsonl(dir.join("chain.jsonl"))?;
    sim.registry.save(dir.join("reputations.json"))?;
    sim.store.persist(dir.join("store"))?;
    Ok(())
}
