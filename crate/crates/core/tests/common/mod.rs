//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use sha2::{Digest, Sha256};

/// Trust category name by brute-force counting, written straight from the
/// range definitions.
pub fn trust_oracle(features: &[f64], mins: &[f64], maxs: &[f64]) -> &'static str {
    let mut inside = 0usize;
    let mut j = 0;
    while j < features.len() {
        if features[j] >= mins[j] && features[j] <= maxs[j] {
            inside += 1;
        }
        j += 1;
    }
    let ts = inside as f64 / features.len() as f64;
    if ts > 0.8 && ts <= 1.0 {
        "valid"
    } else if (0.5..=0.8).contains(&ts) {
        "reliable"
    } else {
        "malevolent"
    }
}

/// Eigenvalues of a symmetric matrix (row-major, n×n) by cyclic two-sided
/// Jacobi rotations, sorted descending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += m[p * n + q] * m[p * n + q];
                }
            }
        }
        let scale: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// The min(m, n) singular values of a row-major m×n matrix via the
/// eigenvalues of WᵀW, descending.
pub fn singular_values_oracle(w: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..m {
                s += w[k * n + i] * w[k * n + j];
            }
            gram[i * n + j] = s;
        }
    }
    symmetric_eigenvalues(&gram, n)
        .into_iter()
        .take(m.min(n))
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

pub fn leading_zeros_oracle(hash: &[u8]) -> u32 {
    let mut count = 0;
    for byte in hash {
        for bit in (0..8).rev() {
            if byte >> bit & 1 == 1 {
                return count;
            }
            count += 1;
        }
    }
    count
}

/// Smallest nonce whose header hash has `difficulty` leading zero bits,
/// scanning from 0. `prefix` is everything before the nonce.
pub fn exhaustive_nonce(prefix: &[u8], difficulty: u32) -> u64 {
    let mut nonce = 0u64;
    loop {
        let mut bytes = prefix.to_vec();
        bytes.extend_from_slice(&nonce.to_be_bytes());
        let hash = Sha256::digest(&bytes);
        if leading_zeros_oracle(&hash) >= difficulty {
            return nonce;
        }
        nonce += 1;
    }
}

/// Six per-class metrics and the macro means, from first principles.
pub struct MetricsOracle {
    pub per_class: Vec<[f64; 6]>,
    pub macro_avg: [f64; 6],
    pub overall_accuracy: f64,
}

pub fn metrics_oracle(cm: &[Vec<u64>]) -> MetricsOracle {
    let k = cm.len();
    let mut total = 0u64;
    let mut diag = 0u64;
    for (i, row) in cm.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            total += v;
            if i == j {
                diag += v;
            }
        }
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let mut per_class = Vec::new();
    for c in 0..k {
        let tp = cm[c][c] as f64;
        let mut predicted_c = 0.0;
        let mut actual_c = 0.0;
        for i in 0..k {
            predicted_c += cm[i][c] as f64;
            actual_c += cm[c][i] as f64;
        }
        let fp = predicted_c - tp;
        let fn_ = actual_c - tp;
        let tn = total as f64 - tp - fp - fn_;
        let precision = div(tp, tp + fp);
        let recall = div(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let accuracy = div(tp + tn, total as f64);
        let dr = div(tp, tp + fn_);
        let far = div(fp, fp + tn);
        per_class.push([precision, recall, f1, accuracy, dr, far]);
    }
    let mut macro_avg = [0.0; 6];
    for m in 0..6 {
        let mut s = 0.0;
        for row in &per_class {
            s += row[m];
        }
        macro_avg[m] = s / k as f64;
    }
    MetricsOracle {
        per_class,
        macro_avg,
        overall_accuracy: div(diag as f64, total as f64),
    }
}

pub mod fd {
    //! Central finite differences over every parameter.

    use medledger::lstm::{self, LabeledSequence, LstmParams};
    use medledger::vae::{self, VaeConfig, VaeParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const STEP: f64 = 1e-5;
    pub const TOL: f64 = 1e-4;
    /// Gradients smaller than this are compared absolutely; relative error
    /// is meaningless when both sides are rounding noise.
    pub const FLOOR: f64 = 1e-7;

    pub fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
    }

    /// Worst relative error and the number of parameters checked.
    pub struct Check {
        pub worst: f64,
        pub checked: usize,
    }

    fn sweep<P: Clone>(
        params: &P,
        analytic: &[f64],
        tensors: impl Fn(&P) -> Vec<usize>,
        bump: impl Fn(&mut P, usize, usize, f64),
        loss: impl Fn(&P) -> f64,
    ) -> Check {
        let mut worst: f64 = 0.0;
        let mut k = 0;
        for (t, len) in tensors(params).into_iter().enumerate() {
            for i in 0..len {
                let mut plus = params.clone();
                bump(&mut plus, t, i, STEP);
                let mut minus = params.clone();
                bump(&mut minus, t, i, -STEP);
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
                worst = worst.max(rel_err(analytic[k], numeric));
                k += 1;
            }
        }
        assert_eq!(k, analytic.len());
        Check { worst, checked: k }
    }

    pub fn toy_sequences(seed: u64) -> Vec<LabeledSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..4)
            .map(|k| LabeledSequence {
                steps: (0..5).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
                label: k % 2,
            })
            .collect()
    }

    /// The 3-input, 4-hidden, 2-class toy model with randomized biases.
    pub fn toy_lstm(seed: u64) -> LstmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
        let mut params = LstmParams::new(3, 4, 2, seed);
        // nonzero biases so every gate sits away from its symmetric point
        for b in params.bias.iter_mut().chain(params.head_bias.iter_mut()) {
            *b = rng.random_range(-0.5..0.5);
        }
        params
    }

    pub fn check_lstm(params: &LstmParams, seqs: &[LabeledSequence]) -> Check {
        let batch: Vec<&LabeledSequence> = seqs.iter().collect();
        let (_, grad, _) = lstm::loss_and_gradient(params, &batch).unwrap();
        sweep(
            params,
            &grad.tensors().concat(),
            |p| p.tensors().iter().map(|t| t.len()).collect(),
            |p, t, i, d| p.tensors_mut()[t][i] += d,
            |p| lstm::loss_and_gradient(p, &batch).unwrap().0,
        )
    }

    pub fn toy_vae(seed: u64) -> VaeParams {
        let cfg = VaeConfig {
            hidden: 3,
            latent_dim: 2,
            l2_coefficient: 1e-2,
            noise_sigma: 0.05,
        };
        VaeParams::new(4, &cfg, seed).unwrap()
    }

    pub fn check_vae(params: &VaeParams, seed: u64) -> Check {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let eps: Vec<Vec<f64>> = (0..3).map(|_| vae::standard_normal_vec(&mut rng, params.latent_dim)).collect();
        let batch: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, grad) = vae::loss_and_gradient(params, &batch, &eps).unwrap();
        sweep(
            params,
            &grad.tensors().concat(),
            |p| p.tensors().iter().map(|t| t.len()).collect(),
            |p, t, i, d| p.tensors_mut()[t][i] += d,
            |p| vae::loss_and_gradient(p, &batch, &eps).unwrap().0,
        )
    }
}
