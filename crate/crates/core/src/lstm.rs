//! LSTM sequence classifier with optional low-rank weight factorization.
//!
//! Gate pre-activations are computed from stacked matrices
//!
//! ```text
//! z = W_in · pₜ + W_rec · qₜ₋₁ + B,   rows ordered [input, forget, cell, output]
//! i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
//! cₜ = f ⊙ cₜ₋₁ + i ⊙ g
//! qₜ = o ⊙ tanh(cₜ)
//! ```
//!
//! Either stacked matrix may be stored as a rank-r product `U · N` (with the
//! singular values folded into `N`), which cuts its storage from `m·n` to
//! `m·r + r·n`. Training then updates the two factors directly.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SensorTransaction;
use crate::linalg::{self, dot, Matrix};
use crate::modelio::{self, Tensor};
use crate::optim::{clip_global_norm, Adam};

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("rank {rank} must satisfy 1 <= rank < min({rows}, {cols})")]
    RankOutOfRange { rank: usize, rows: usize, cols: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("all windows must have the same length")]
    RaggedWindows,
    #[error("label {label} is not below the class count {classes}")]
    BadLabel { label: usize, classes: usize },
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Io(#[from] modelio::ModelIoError),
}

pub type Result<T> = std::result::Result<T, LstmError>;

/// `W ≈ left · right` with `left` m×r and `right` r×n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizedMatrix {
    pub left: Matrix,
    pub right: Matrix,
}

impl FactorizedMatrix {
    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.left.rows(), self.right.cols())
    }

    pub fn param_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn to_dense(&self) -> Matrix {
        self.left.matmul(&self.right)
    }
}

/// Best rank-`rank` approximation of `w` in Frobenius norm, as `U_r · (Σ_r V_rᵀ)`.
/// Requires `1 <= rank < min(m, n)`.
pub fn factorize(w: &Matrix, rank: usize) -> Result<FactorizedMatrix> {
    let (m, n) = w.shape();
    if rank == 0 || rank >= m.min(n) {
        return Err(LstmError::RankOutOfRange { rank, rows: m, cols: n });
    }
    Ok(truncate_svd(w, rank))
}

/// Truncated SVD factors for any `1 <= rank <= min(m, n)`, including the
/// lossless full-rank case that [`factorize`] rejects.
pub fn truncate_svd(w: &Matrix, rank: usize) -> FactorizedMatrix {
    let (m, n) = w.shape();
    let rank = rank.clamp(1, m.min(n));
    let s = linalg::svd(w);
    let mut left = Matrix::zeros(m, rank);
    let mut right = Matrix::zeros(rank, n);
    for k in 0..rank {
        for i in 0..m {
            left[(i, k)] = s.u[(i, k)];
        }
        for j in 0..n {
            right[(k, j)] = s.sigma[k] * s.v[(j, k)];
        }
    }
    FactorizedMatrix { left, right }
}

/// Stored weights: dense or factorized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightMatrix {
    Full(Matrix),
    Factorized(FactorizedMatrix),
}

impl WeightMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            WeightMatrix::Full(m) => m.shape(),
            WeightMatrix::Factorized(f) => f.shape(),
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            WeightMatrix::Full(_) => None,
            WeightMatrix::Factorized(f) => Some(f.rank()),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            WeightMatrix::Full(m) => m.len(),
            WeightMatrix::Factorized(f) => f.param_count(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            WeightMatrix::Full(m) => m.clone(),
            WeightMatrix::Factorized(f) => f.to_dense(),
        }
    }

    /// Value that multiplies a row of the stored left operand. For a full
    /// matrix this is `x`; for a factorized one it is `right · x`.
    fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            WeightMatrix::Full(_) => x.to_vec(),
            WeightMatrix::Factorized(f) => f.right.matvec(x),
        }
    }

    fn left(&self) -> &Matrix {
        match self {
            WeightMatrix::Full(m) => m,
            WeightMatrix::Factorized(f) => &f.left,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.left().matvec(&self.project(x))
    }

    /// Accumulates `∂L/∂W` for `y = W x` into `grad` and returns `Wᵀ dy`.
    fn backward(&self, dy: &[f64], x: &[f64], grad: &mut WeightMatrix) -> Vec<f64> {
        match (self, grad) {
            (WeightMatrix::Full(w), WeightMatrix::Full(g)) => {
                g.add_outer(dy, x);
                w.matvec_t(dy)
            }
            (WeightMatrix::Factorized(f), WeightMatrix::Factorized(g)) => {
                let u = f.right.matvec(x);
                g.left.add_outer(dy, &u);
                let du = f.left.matvec_t(dy);
                g.right.add_outer(&du, x);
                f.right.matvec_t(&du)
            }
            _ => unreachable!("gradient layout mirrors the parameters"),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            WeightMatrix::Full(m) => WeightMatrix::Full(Matrix::zeros(m.rows(), m.cols())),
            WeightMatrix::Factorized(f) => WeightMatrix::Factorized(FactorizedMatrix {
                left: Matrix::zeros(f.left.rows(), f.left.cols()),
                right: Matrix::zeros(f.right.rows(), f.right.cols()),
            }),
        }
    }

    fn tensors(&self) -> Vec<&[f64]> {
        match self {
            WeightMatrix::Full(m) => vec![m.as_slice()],
            WeightMatrix::Factorized(f) => vec![f.left.as_slice(), f.right.as_slice()],
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            WeightMatrix::Full(m) => vec![m.as_mut_slice()],
            WeightMatrix::Factorized(f) => vec![f.left.as_mut_slice(), f.right.as_mut_slice()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// 4h × n input weights.
    pub w_input: WeightMatrix,
    /// 4h × h recurrent weights.
    pub w_hidden: WeightMatrix,
    /// 4h stacked bias.
    pub bias: Vec<f64>,
    /// classes × h.
    pub head_weight: Matrix,
    pub head_bias: Vec<f64>,
    pub hidden_size: usize,
}

impl LstmParams {
    /// Glorot-uniform weights, forget-gate bias 1, other biases 0.
    pub fn new(input_dim: usize, hidden_size: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h4 = 4 * hidden_size;
        let s_in = (6.0 / (h4 + input_dim) as f64).sqrt();
        let s_rec = (6.0 / (h4 + hidden_size) as f64).sqrt();
        let s_head = (6.0 / (classes + hidden_size) as f64).sqrt();
        let mut bias = vec![0.0; h4];
        for b in &mut bias[hidden_size..2 * hidden_size] {
            *b = 1.0;
        }
        Self {
            w_input: WeightMatrix::Full(Matrix::random_uniform(h4, input_dim, s_in, &mut rng)),
            w_hidden: WeightMatrix::Full(Matrix::random_uniform(h4, hidden_size, s_rec, &mut rng)),
            bias,
            head_weight: Matrix::random_uniform(classes, hidden_size, s_head, &mut rng),
            head_bias: vec![0.0; classes],
            hidden_size,
        }
    }

    pub fn zeros(input_dim: usize, hidden_size: usize, classes: usize) -> Self {
        let h4 = 4 * hidden_size;
        Self {
            w_input: WeightMatrix::Full(Matrix::zeros(h4, input_dim)),
            w_hidden: WeightMatrix::Full(Matrix::zeros(h4, hidden_size)),
            bias: vec![0.0; h4],
            head_weight: Matrix::zeros(classes, hidden_size),
            head_bias: vec![0.0; classes],
            hidden_size,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.shape().1
    }

    pub fn classes(&self) -> usize {
        self.head_weight.rows()
    }

    /// Rank of the factorized stacked matrices, if any.
    pub fn rank(&self) -> Option<usize> {
        self.w_input.rank().or(self.w_hidden.rank())
    }

    /// Copy with both stacked matrices replaced by rank-`rank` truncated SVD
    /// factors. `rank` may equal `min(m, n)` (lossless).
    pub fn factorized(&self, rank: usize) -> Self {
        let mut out = self.clone();
        out.w_input = WeightMatrix::Factorized(truncate_svd(&self.w_input.to_dense(), rank));
        out.w_hidden = WeightMatrix::Factorized(truncate_svd(&self.w_hidden.to_dense(), rank));
        out
    }

    /// Number of stored scalars.
    pub fn param_count(&self) -> usize {
        self.w_input.param_count()
            + self.w_hidden.param_count()
            + self.bias.len()
            + self.head_weight.len()
            + self.head_bias.len()
    }

    /// Scalars the same model would hold with dense stacked matrices.
    pub fn full_param_count(&self) -> usize {
        let h4 = 4 * self.hidden_size;
        h4 * self.input_dim() + h4 * self.hidden_size + h4 + self.head_weight.len() + self.head_bias.len()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.w_input.tensors();
        t.extend(self.w_hidden.tensors());
        t.extend([self.bias.as_slice(), self.head_weight.as_slice(), self.head_bias.as_slice()]);
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.w_input.tensors_mut();
        t.extend(self.w_hidden.tensors_mut());
        t.push(self.bias.as_mut_slice());
        t.push(self.head_weight.as_mut_slice());
        t.push(self.head_bias.as_mut_slice());
        t
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w_input: self.w_input.zeros_like(),
            w_hidden: self.w_hidden.zeros_like(),
            bias: vec![0.0; self.bias.len()],
            head_weight: Matrix::zeros(self.head_weight.rows(), self.head_weight.cols()),
            head_bias: vec![0.0; self.head_bias.len()],
            hidden_size: self.hidden_size,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, training_seed: u64) -> Result<()> {
        let to_t = |m: &Matrix| Tensor::new(m.rows(), m.cols(), m.as_slice().to_vec());
        let mut tensors = Vec::new();
        for w in [&self.w_input, &self.w_hidden] {
            match w {
                WeightMatrix::Full(m) => tensors.push(to_t(m)),
                WeightMatrix::Factorized(f) => {
                    tensors.push(to_t(&f.left));
                    tensors.push(to_t(&f.right));
                }
            }
        }
        tensors.push(Tensor::new(self.bias.len(), 1, self.bias.clone()));
        tensors.push(to_t(&self.head_weight));
        tensors.push(Tensor::new(self.head_bias.len(), 1, self.head_bias.clone()));
        let sidecar = serde_json::json!({
            "kind": "lstm",
            "input_dim": self.input_dim(),
            "hidden": self.hidden_size,
            "classes": self.classes(),
            "rank": self.rank(),
            "seed": training_seed,
        });
        modelio::save(path, &tensors, &sidecar)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (tensors, sidecar) = modelio::load(path)?;
        let layout = |m: &str| LstmError::Io(modelio::ModelIoError::Layout(m.to_string()));
        if sidecar["kind"] != "lstm" {
            return Err(layout("not an LSTM model file"));
        }
        let factorized = !sidecar["rank"].is_null();
        let expected = if factorized { 7 } else { 5 };
        if tensors.len() != expected {
            return Err(layout("unexpected tensor count"));
        }
        let mut it = tensors.into_iter();
        let mut mat = || {
            let t = it.next().expect("length checked");
            Matrix::from_vec(t.rows, t.cols, t.data)
        };
        let weight = |mat: &mut dyn FnMut() -> Matrix| {
            if factorized {
                let left = mat();
                let right = mat();
                WeightMatrix::Factorized(FactorizedMatrix { left, right })
            } else {
                WeightMatrix::Full(mat())
            }
        };
        let w_input = weight(&mut mat);
        let w_hidden = weight(&mut mat);
        let bias = mat().into_vec();
        let head_weight = mat();
        let head_bias = mat().into_vec();
        let hidden_size = bias.len() / 4;
        Ok(Self {
            w_input,
            w_hidden,
            bias,
            head_weight,
            head_bias,
            hidden_size,
        })
    }
}

/// Cell and hidden vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            cell: vec![0.0; hidden_size],
            hidden: vec![0.0; hidden_size],
        }
    }
}

/// Activated gate values of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub cell: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_step(params: &LstmParams, input: &[f64], state: &LstmState) -> Result<()> {
    if input.len() != params.input_dim() {
        return Err(LstmError::DimensionMismatch {
            expected: params.input_dim(),
            actual: input.len(),
        });
    }
    if state.cell.len() != params.hidden_size || state.hidden.len() != params.hidden_size {
        return Err(LstmError::DimensionMismatch {
            expected: params.hidden_size,
            actual: state.cell.len().max(state.hidden.len()),
        });
    }
    Ok(())
}

fn activate(z: &[f64], h: usize) -> Gates {
    Gates {
        input: z[..h].iter().map(|&v| sigmoid(v)).collect(),
        forget: z[h..2 * h].iter().map(|&v| sigmoid(v)).collect(),
        cell: z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect(),
        output: z[3 * h..].iter().map(|&v| sigmoid(v)).collect(),
    }
}

fn combine(gates: &Gates, prev: &LstmState) -> LstmState {
    let h = prev.cell.len();
    let cell: Vec<f64> = (0..h)
        .map(|k| gates.forget[k] * prev.cell[k] + gates.input[k] * gates.cell[k])
        .collect();
    let hidden = (0..h).map(|k| gates.output[k] * cell[k].tanh()).collect();
    LstmState { cell, hidden }
}

/// Gates from the stacked form: one product with each stacked matrix.
pub fn fused_gates(params: &LstmParams, input: &[f64], state: &LstmState) -> Result<Gates> {
    check_step(params, input, state)?;
    let wx = params.w_input.matvec(input);
    let wh = params.w_hidden.matvec(&state.hidden);
    let z: Vec<f64> = (0..wx.len()).map(|r| wx[r] + wh[r] + params.bias[r]).collect();
    Ok(activate(&z, params.hidden_size))
}

/// Gates computed one gate at a time from row blocks of the stacked
/// matrices, as four independent affine maps.
pub fn separate_gates(params: &LstmParams, input: &[f64], state: &LstmState) -> Result<Gates> {
    check_step(params, input, state)?;
    let h = params.hidden_size;
    let px = params.w_input.project(input);
    let ph = params.w_hidden.project(&state.hidden);
    let gate = |block: usize, act: fn(f64) -> f64| -> Vec<f64> {
        (block * h..(block + 1) * h)
            .map(|r| {
                let z = dot(params.w_input.left().row(r), &px) + dot(params.w_hidden.left().row(r), &ph) + params.bias[r];
                act(z)
            })
            .collect()
    };
    Ok(Gates {
        input: gate(0, sigmoid),
        forget: gate(1, sigmoid),
        cell: gate(2, f64::tanh),
        output: gate(3, sigmoid),
    })
}

/// One recurrent step.
pub fn cell_step(params: &LstmParams, input: &[f64], state: &LstmState) -> Result<LstmState> {
    let gates = fused_gates(params, input, state)?;
    Ok(combine(&gates, state))
}

/// [`cell_step`] evaluated through [`separate_gates`].
pub fn cell_step_separate(params: &LstmParams, input: &[f64], state: &LstmState) -> Result<LstmState> {
    let gates = separate_gates(params, input, state)?;
    Ok(combine(&gates, state))
}

/// A window of consecutive inputs with the label of its last row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub steps: Vec<Vec<f64>>,
    pub label: usize,
}

/// Non-overlapping windows of `len` consecutive rows per device (ordered by
/// sequence number); trailing partial windows are dropped.
pub fn build_windows(txs: &[SensorTransaction], len: usize) -> Vec<LabeledSequence> {
    let mut streams: BTreeMap<&str, Vec<&SensorTransaction>> = BTreeMap::new();
    for tx in txs.iter().filter(|t| t.label.is_some()) {
        streams.entry(tx.device_id.as_str()).or_default().push(tx);
    }
    let mut out = Vec::new();
    for rows in streams.values_mut() {
        rows.sort_by_key(|t| t.seq);
        for chunk in rows.chunks_exact(len.max(1)) {
            out.push(LabeledSequence {
                steps: chunk.iter().map(|t| t.features.clone()).collect(),
                label: chunk.last().and_then(|t| t.label).expect("labeled rows only"),
            });
        }
    }
    out
}

struct StepCache {
    input: Vec<f64>,
    prev: LstmState,
    gates: Gates,
    tanh_cell: Vec<f64>,
}

fn run_sequence(params: &LstmParams, steps: &[Vec<f64>]) -> Result<(LstmState, Vec<StepCache>)> {
    let mut state = LstmState::zeros(params.hidden_size);
    let mut caches = Vec::with_capacity(steps.len());
    for x in steps {
        let gates = fused_gates(params, x, &state)?;
        let next = combine(&gates, &state);
        let tanh_cell = next.cell.iter().map(|c| c.tanh()).collect();
        caches.push(StepCache {
            input: x.clone(),
            prev: state,
            gates,
            tanh_cell,
        });
        state = next;
    }
    Ok((state, caches))
}

fn logits(params: &LstmParams, hidden: &[f64]) -> Vec<f64> {
    let mut z = params.head_weight.matvec(hidden);
    for (v, b) in z.iter_mut().zip(&params.head_bias) {
        *v += b;
    }
    z
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// Softmax class scores from the final hidden state.
pub fn predict(params: &LstmParams, steps: &[Vec<f64>]) -> Result<Prediction> {
    if steps.is_empty() {
        return Err(LstmError::EmptySequence);
    }
    let (state, _) = run_sequence(params, steps)?;
    let scores = softmax(&logits(params, &state.hidden));
    Ok(Prediction {
        class: argmax(&scores),
        scores,
    })
}

/// [`predict`] over many sequences, split across threads; results keep input
/// order.
pub fn predict_batch(params: &LstmParams, sequences: &[Vec<Vec<f64>>], threads: usize) -> Result<Vec<Prediction>> {
    let threads = threads.max(1).min(sequences.len().max(1));
    if threads == 1 {
        return sequences.iter().map(|s| predict(params, s)).collect();
    }
    let chunk = sequences.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = sequences
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| predict(params, s)).collect::<Result<Vec<_>>>()))
            .collect();
        let mut out = Vec::with_capacity(sequences.len());
        for h in handles {
            out.extend(h.join().expect("inference worker panicked")?);
        }
        Ok(out)
    })
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy over `batch` and its gradient (BPTT through
/// every window).
pub fn loss_and_gradient(params: &LstmParams, batch: &[&LabeledSequence]) -> Result<(f64, LstmParams, usize)> {
    let mut grad = params.zeros_like();
    let h = params.hidden_size;
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    let mut correct = 0;

    for seq in batch {
        if seq.label >= params.classes() {
            return Err(LstmError::BadLabel {
                label: seq.label,
                classes: params.classes(),
            });
        }
        if seq.steps.is_empty() {
            return Err(LstmError::EmptySequence);
        }
        let (last, caches) = run_sequence(params, &seq.steps)?;
        let probs = softmax(&logits(params, &last.hidden));
        loss -= probs[seq.label].max(f64::MIN_POSITIVE).ln();
        if argmax(&probs) == seq.label {
            correct += 1;
        }

        let mut dlogits: Vec<f64> = probs.iter().map(|p| p * scale).collect();
        dlogits[seq.label] -= scale;
        grad.head_weight.add_outer(&dlogits, &last.hidden);
        for (g, d) in grad.head_bias.iter_mut().zip(&dlogits) {
            *g += d;
        }
        let mut dh = params.head_weight.matvec_t(&dlogits);
        let mut dc = vec![0.0; h];

        for cache in caches.iter().rev() {
            let g = &cache.gates;
            let mut dz = vec![0.0; 4 * h];
            for k in 0..h {
                let tc = cache.tanh_cell[k];
                let d_out = dh[k] * tc;
                dc[k] += dh[k] * g.output[k] * (1.0 - tc * tc);
                let d_in = dc[k] * g.cell[k];
                let d_cand = dc[k] * g.input[k];
                let d_forget = dc[k] * cache.prev.cell[k];
                dz[k] = d_in * g.input[k] * (1.0 - g.input[k]);
                dz[h + k] = d_forget * g.forget[k] * (1.0 - g.forget[k]);
                dz[2 * h + k] = d_cand * (1.0 - g.cell[k] * g.cell[k]);
                dz[3 * h + k] = d_out * g.output[k] * (1.0 - g.output[k]);
                dc[k] *= g.forget[k];
            }
            for (gb, d) in grad.bias.iter_mut().zip(&dz) {
                *gb += d;
            }
            params.w_input.backward(&dz, &cache.input, &mut grad.w_input);
            dh = params.w_hidden.backward(&dz, &cache.prev.hidden, &mut grad.w_hidden);
        }
    }
    Ok((loss * scale, grad, correct))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Stop after this many epochs without a validation-accuracy gain.
    pub patience: Option<usize>,
    pub clip_norm: f64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.001,
            seed: 0,
            patience: Some(10),
            clip_norm: DEFAULT_CLIP_NORM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy (the last
    /// epoch when no validation set is given).
    pub params: LstmParams,
    pub trace: Vec<EpochStats>,
    pub stopped_early: bool,
}

pub fn accuracy(params: &LstmParams, data: &[LabeledSequence]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for s in data {
        if predict(params, &s.steps)?.class == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch Adam on softmax cross-entropy with global-norm clipping and
/// early stopping on validation accuracy.
pub fn train_classifier(
    params: &LstmParams,
    train: &[LabeledSequence],
    validation: &[LabeledSequence],
    cfg: &ClassifierTrainConfig,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(LstmError::EmptyTrainingSet);
    }
    let len = train[0].steps.len();
    if train.iter().chain(validation).any(|s| s.steps.len() != len) {
        return Err(LstmError::RaggedWindows);
    }
    if let Some(bad) = train.iter().chain(validation).find(|s| s.label >= params.classes()) {
        return Err(LstmError::BadLabel {
            label: bad.label,
            classes: params.classes(),
        });
    }
    let mut params = params.clone();
    let mut opt = Adam::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, LstmParams)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct, mut batches) = (0.0, 0, 0);
        for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let batch: Vec<&LabeledSequence> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, mut grad, ok) = loss_and_gradient(&params, &batch)?;
            if !loss.is_finite() {
                return Err(LstmError::NonFiniteLoss { epoch, batch: b });
            }
            clip_global_norm(grad.tensors_mut(), cfg.clip_norm);
            opt.step(params.tensors_mut(), grad.tensors());
            loss_sum += loss;
            correct += ok;
            batches += 1;
        }
        let validation_accuracy = if validation.is_empty() {
            None
        } else {
            Some(accuracy(&params, validation)?)
        };
        let stats = EpochStats {
            epoch,
            loss: loss_sum / batches as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            validation_accuracy,
        };
        log::debug!("lstm {stats:?}");
        trace.push(stats);

        if let Some(acc) = validation_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience.is_some_and(|p| since_best >= p) {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome {
        params: best.map(|(_, p)| p).unwrap_or(params),
        trace,
        stopped_early,
    })
}
