//! Gaussian variational autoencoder used as a privacy transform.
//!
//! Encoder: `x → tanh(W₁x + b₁) → [μ; log σ²]`. Decoder:
//! `z → tanh(W₃z + b₃) → x̂ = W₄h + b₄`. The prior is the standard normal and
//! the observation model a unit-variance Gaussian, so
//!
//! ```text
//! KL    = ½ Σⱼ (μⱼ² + exp(lvⱼ) − lvⱼ − 1)
//! recon = −½ ‖x − x̂‖² − ½ n ln 2π
//! ELBO  = recon − KL
//! ```
//!
//! Training minimizes `−mean ELBO + λ‖W‖²` with Adam, backpropagating through
//! the reparameterized sample `z = μ + exp(lv/2) ⊙ ε`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::modelio::{self, Tensor};
use crate::optim::Adam;

/// Bounds applied to the encoder's log-variance output.
pub const LOG_VAR_CLAMP: (f64, f64) = (-10.0, 10.0);

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error)]
pub enum VaeError {
    #[error("input has {actual} features, model expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value in layer {0}")]
    NonFinite(&'static str),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("training data is empty")]
    EmptyData,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] modelio::ModelIoError),
}

pub type Result<T> = std::result::Result<T, VaeError>;

/// Affine layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            weight: Matrix::zeros(out, inp),
            bias: vec![0.0; out],
        }
    }

    fn glorot<R: Rng>(out: usize, inp: usize, rng: &mut R) -> Self {
        let scale = (6.0 / (out + inp) as f64).sqrt();
        Self {
            weight: Matrix::random_uniform(out, inp, scale, rng),
            bias: vec![0.0; out],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weight.matvec(x);
        for (v, b) in y.iter_mut().zip(&self.bias) {
            *v += b;
        }
        y
    }

    fn accumulate(&mut self, dy: &[f64], x: &[f64]) {
        self.weight.add_outer(dy, x);
        for (g, d) in self.bias.iter_mut().zip(dy) {
            *g += d;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeParams {
    pub enc_hidden: Dense,
    /// Rows `0..latent` give μ, rows `latent..2·latent` the log-variance.
    pub enc_out: Dense,
    pub dec_hidden: Dense,
    pub dec_out: Dense,
    pub latent_dim: usize,
    pub l2_coefficient: f64,
    pub noise_sigma: f64,
}

/// Hyperparameters for a fresh model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VaeConfig {
    pub hidden: usize,
    pub latent_dim: usize,
    pub l2_coefficient: f64,
    pub noise_sigma: f64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            latent_dim: 8,
            l2_coefficient: 1e-4,
            noise_sigma: 0.05,
        }
    }
}

impl VaeParams {
    /// Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, config: &VaeConfig, seed: u64) -> Result<Self> {
        if config.latent_dim == 0 || config.latent_dim > input_dim || config.hidden == 0 {
            return Err(VaeError::InvalidConfig(format!(
                "need 1 <= latent_dim <= input_dim ({input_dim}) and hidden >= 1"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, l) = (config.hidden, config.latent_dim);
        Ok(Self {
            enc_hidden: Dense::glorot(h, input_dim, &mut rng),
            enc_out: Dense::glorot(2 * l, h, &mut rng),
            dec_hidden: Dense::glorot(h, l, &mut rng),
            dec_out: Dense::glorot(input_dim, h, &mut rng),
            latent_dim: l,
            l2_coefficient: config.l2_coefficient,
            noise_sigma: config.noise_sigma,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.enc_hidden.weight.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.enc_hidden.weight.rows()
    }

    fn layers(&self) -> [&Dense; 4] {
        [&self.enc_hidden, &self.enc_out, &self.dec_hidden, &self.dec_out]
    }

    fn layers_mut(&mut self) -> [&mut Dense; 4] {
        [&mut self.enc_hidden, &mut self.enc_out, &mut self.dec_hidden, &mut self.dec_out]
    }

    /// All parameters as flat tensors: weight then bias for each layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .into_iter()
            .flat_map(|d| [d.weight.as_slice(), d.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .into_iter()
            .flat_map(|d| [d.weight.as_mut_slice(), d.bias.as_mut_slice()])
            .collect()
    }

    /// Same shapes, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let z = |d: &Dense| Dense::zeros(d.weight.rows(), d.weight.cols());
        Self {
            enc_hidden: z(&self.enc_hidden),
            enc_out: z(&self.enc_out),
            dec_hidden: z(&self.dec_hidden),
            dec_out: z(&self.dec_out),
            ..self.clone()
        }
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers()
            .iter()
            .map(|d| d.weight.as_slice().iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(VaeError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Encoder outputs `(μ, log σ²)`, log-variance clamped.
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let h1 = tanh_all(self.enc_hidden.forward(x));
        finite(&h1, "encoder hidden")?;
        let out = self.enc_out.forward(&h1);
        finite(&out, "encoder output")?;
        let (mu, lv) = out.split_at(self.latent_dim);
        Ok((mu.to_vec(), lv.iter().map(|&v| clamp_log_var(v)).collect()))
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.latent_dim {
            return Err(VaeError::DimensionMismatch {
                expected: self.latent_dim,
                actual: z.len(),
            });
        }
        let h3 = tanh_all(self.dec_hidden.forward(z));
        finite(&h3, "decoder hidden")?;
        let xhat = self.dec_out.forward(&h3);
        finite(&xhat, "decoder output")?;
        Ok(xhat)
    }

    pub fn to_tensors(&self) -> Vec<Tensor> {
        self.layers()
            .iter()
            .flat_map(|d| {
                [
                    Tensor::new(d.weight.rows(), d.weight.cols(), d.weight.as_slice().to_vec()),
                    Tensor::new(d.bias.len(), 1, d.bias.clone()),
                ]
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>, training_seed: u64) -> Result<()> {
        let sidecar = serde_json::json!({
            "kind": "vae",
            "input_dim": self.input_dim(),
            "hidden": self.hidden_dim(),
            "latent_dim": self.latent_dim,
            "l2_coefficient": self.l2_coefficient,
            "noise_sigma": self.noise_sigma,
            "seed": training_seed,
        });
        modelio::save(path, &self.to_tensors(), &sidecar)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (tensors, sidecar) = modelio::load(path)?;
        let layout = |msg: &str| VaeError::Io(modelio::ModelIoError::Layout(msg.to_string()));
        if sidecar["kind"] != "vae" || tensors.len() != 8 {
            return Err(layout("not a VAE model file"));
        }
        let mut it = tensors.into_iter();
        let mut dense = || {
            let w = it.next().expect("8 tensors");
            let b = it.next().expect("8 tensors");
            Dense {
                weight: Matrix::from_vec(w.rows, w.cols, w.data),
                bias: b.data,
            }
        };
        let (enc_hidden, enc_out, dec_hidden, dec_out) = (dense(), dense(), dense(), dense());
        Ok(Self {
            enc_hidden,
            enc_out,
            dec_hidden,
            dec_out,
            latent_dim: sidecar["latent_dim"].as_u64().ok_or_else(|| layout("latent_dim"))? as usize,
            l2_coefficient: sidecar["l2_coefficient"].as_f64().unwrap_or(0.0),
            noise_sigma: sidecar["noise_sigma"].as_f64().unwrap_or(0.0),
        })
    }
}

fn clamp_log_var(v: f64) -> f64 {
    v.clamp(LOG_VAR_CLAMP.0, LOG_VAR_CLAMP.1)
}

fn tanh_all(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = x.tanh();
    }
    v
}

fn finite(v: &[f64], layer: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(VaeError::NonFinite(layer))
    }
}

/// Closed-form `KL(N(μ, diag e^lv) ‖ N(0, I))`.
pub fn gaussian_kl(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| m * m + lv.exp() - lv - 1.0)
        .sum::<f64>()
}

/// `log N(x; mean, I)`.
pub fn unit_gaussian_log_likelihood(x: &[f64], mean: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * sq - 0.5 * x.len() as f64 * LN_2PI
}

pub fn standard_normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    pub elbo: f64,
    pub kl: f64,
    pub reconstruction: f64,
}

/// Single-sample ELBO with `ε` drawn from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn elbo(params: &VaeParams, x: &[f64], seed: u64) -> Result<ElboTerms> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = standard_normal_vec(&mut rng, params.latent_dim);
    elbo_with_noise(params, x, &eps)
}

pub fn elbo_with_noise(params: &VaeParams, x: &[f64], eps: &[f64]) -> Result<ElboTerms> {
    let (mu, lv) = params.encode(x)?;
    let z: Vec<f64> = mu
        .iter()
        .zip(&lv)
        .zip(eps)
        .map(|((m, l), e)| m + (0.5 * l).exp() * e)
        .collect();
    let xhat = params.decode(&z)?;
    let kl = gaussian_kl(&mu, &lv);
    let reconstruction = unit_gaussian_log_likelihood(x, &xhat);
    Ok(ElboTerms {
        elbo: reconstruction - kl,
        kl,
        reconstruction,
    })
}

/// Batch objective `mean(−ELBO) + λ‖W‖²` and its gradient with respect to
/// every parameter, for fixed noise draws `eps[i]`.
pub fn loss_and_gradient(params: &VaeParams, batch: &[&[f64]], eps: &[Vec<f64>]) -> Result<(f64, VaeParams)> {
    assert_eq!(batch.len(), eps.len(), "one noise vector per sample");
    let mut grad = params.zeros_like();
    let l = params.latent_dim;
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut total = 0.0;

    for (x, e) in batch.iter().zip(eps) {
        params.check_input(x)?;
        let h1 = tanh_all(params.enc_hidden.forward(x));
        let out = params.enc_out.forward(&h1);
        finite(&out, "encoder output")?;
        let mu = &out[..l];
        let lv_raw = &out[l..];
        let lv: Vec<f64> = lv_raw.iter().map(|&v| clamp_log_var(v)).collect();
        let sd: Vec<f64> = lv.iter().map(|v| (0.5 * v).exp()).collect();
        let z: Vec<f64> = (0..l).map(|j| mu[j] + sd[j] * e[j]).collect();
        let h3 = tanh_all(params.dec_hidden.forward(&z));
        let xhat = params.dec_out.forward(&h3);
        finite(&xhat, "decoder output")?;

        let kl = gaussian_kl(mu, &lv);
        let recon = unit_gaussian_log_likelihood(x, &xhat);
        total += -(recon - kl);

        // d(−ELBO)/dx̂ = x̂ − x
        let dxhat: Vec<f64> = xhat.iter().zip(x.iter()).map(|(a, b)| (a - b) * scale).collect();
        grad.dec_out.accumulate(&dxhat, &h3);
        let dh3 = params.dec_out.weight.matvec_t(&dxhat);
        let da3: Vec<f64> = dh3.iter().zip(&h3).map(|(d, h)| d * (1.0 - h * h)).collect();
        grad.dec_hidden.accumulate(&da3, &z);
        let dz = params.dec_hidden.weight.matvec_t(&da3);

        let mut dout = vec![0.0; 2 * l];
        for j in 0..l {
            dout[j] = dz[j] + mu[j] * scale;
            let inside = lv_raw[j] > LOG_VAR_CLAMP.0 && lv_raw[j] < LOG_VAR_CLAMP.1;
            dout[l + j] = if inside {
                dz[j] * e[j] * 0.5 * sd[j] + 0.5 * (lv[j].exp() - 1.0) * scale
            } else {
                0.0
            };
        }
        grad.enc_out.accumulate(&dout, &h1);
        let dh1 = params.enc_out.weight.matvec_t(&dout);
        let da1: Vec<f64> = dh1.iter().zip(&h1).map(|(d, h)| d * (1.0 - h * h)).collect();
        grad.enc_hidden.accumulate(&da1, x);
    }

    let mut loss = total * scale;
    if params.l2_coefficient > 0.0 {
        loss += params.l2_coefficient * params.weight_norm_sq();
        let lam2 = 2.0 * params.l2_coefficient;
        for (g, p) in grad.layers_mut().into_iter().zip(params.layers()) {
            for (gw, w) in g.weight.as_mut_slice().iter_mut().zip(p.weight.as_slice()) {
                *gw += lam2 * w;
            }
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

/// Trains with Adam; returns the fitted parameters and the mean batch loss
/// of every epoch.
pub fn train(params: &VaeParams, data: &[Vec<f64>], cfg: &TrainConfig) -> Result<(VaeParams, Vec<f64>)> {
    if data.is_empty() {
        return Err(VaeError::EmptyData);
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(VaeError::InvalidConfig("epochs and batch_size must be >= 1".into()));
    }
    let mut params = params.clone();
    let mut opt = Adam::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let eps: Vec<Vec<f64>> = chunk
                .iter()
                .map(|_| standard_normal_vec(&mut rng, params.latent_dim))
                .collect();
            let (loss, grad) = loss_and_gradient(&params, &batch, &eps).map_err(|e| match e {
                VaeError::NonFinite(_) => VaeError::NonFiniteLoss { epoch, batch: b },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(VaeError::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += loss;
            batches += 1;
            opt.step(params.tensors_mut(), grad.tensors());
        }
        trace.push(epoch_loss / batches as f64);
        log::debug!("vae epoch {epoch}: loss {:.5}", trace[epoch]);
    }
    Ok((params, trace))
}

/// Latent representation of one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentCode {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
    /// `mean + exp(log_var/2) ⊙ ε + noise_sigma · ε′`.
    pub sample: Vec<f64>,
}

/// Encodes `x` into a noised latent code. `ε` and `ε′` are the first and
/// second draws from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn transform(params: &VaeParams, x: &[f64], seed: u64) -> Result<LatentCode> {
    let (mean, log_var) = params.encode(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = standard_normal_vec(&mut rng, params.latent_dim);
    let eps2 = standard_normal_vec(&mut rng, params.latent_dim);
    let sample = (0..params.latent_dim)
        .map(|j| mean[j] + (0.5 * log_var[j]).exp() * eps[j] + params.noise_sigma * eps2[j])
        .collect();
    Ok(LatentCode { mean, log_var, sample })
}

/// Four-state discrete latent model with Gaussian emissions, small enough to
/// enumerate exactly. Used to check `log p(x) = ELBO(q) + KL(q ‖ p(·|x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSurrogate {
    pub prior: [f64; 4],
    /// Emission means; `p(x | k) = N(x; means[k], I)`.
    pub means: [Vec<f64>; 4],
}

impl DiscreteSurrogate {
    fn log_joint(&self, x: &[f64], k: usize) -> f64 {
        self.prior[k].ln() + unit_gaussian_log_likelihood(x, &self.means[k])
    }

    /// `log Σₖ p(k) p(x|k)` via log-sum-exp.
    pub fn log_evidence(&self, x: &[f64]) -> f64 {
        let lj: Vec<f64> = (0..4).map(|k| self.log_joint(x, k)).collect();
        let m = lj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + lj.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    pub fn posterior(&self, x: &[f64]) -> [f64; 4] {
        let le = self.log_evidence(x);
        let mut p = [0.0; 4];
        for (k, slot) in p.iter_mut().enumerate() {
            *slot = (self.log_joint(x, k) - le).exp();
        }
        p
    }

    /// `Σₖ q(k) (log p(x, k) − log q(k))`.
    pub fn elbo(&self, x: &[f64], q: &[f64; 4]) -> f64 {
        (0..4)
            .filter(|&k| q[k] > 0.0)
            .map(|k| q[k] * (self.log_joint(x, k) - q[k].ln()))
            .sum()
    }

    /// `KL(q ‖ p(· | x))`.
    pub fn posterior_kl(&self, x: &[f64], q: &[f64; 4]) -> f64 {
        let le = self.log_evidence(x);
        (0..4)
            .filter(|&k| q[k] > 0.0)
            .map(|k| q[k] * (q[k].ln() - (self.log_joint(x, k) - le)))
            .sum()
    }
}
