mod common;

use medledger::linalg::{self, Matrix};
use medledger::lstm::{self, LstmParams, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::random_uniform(m, n, 1.0, rng)
}

fn tail_energy(sigma: &[f64], r: usize) -> f64 {
    sigma[r..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

#[test]
fn singular_values_match_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let m = rng.random_range(2..24);
        let n = rng.random_range(2..24);
        let w = random_matrix(&mut rng, m, n);
        let got = linalg::svd(&w).sigma;
        let want = common::singular_values_oracle(w.as_slice(), m, n);
        assert_eq!(got.len(), want.len());
        for (g, o) in got.iter().zip(&want) {
            assert!((g - o).abs() < 1e-7, "{m}x{n}: {g} vs {o}");
        }
    }
}

#[test]
fn truncation_error_is_the_tail_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let m = rng.random_range(3..40);
        let n = rng.random_range(3..40);
        let r = rng.random_range(1..m.min(n));
        let w = random_matrix(&mut rng, m, n);
        let f = lstm::factorize(&w, r).unwrap();
        let err = w.sub(&f.to_dense()).frobenius_norm();
        let oracle = common::singular_values_oracle(w.as_slice(), m, n);
        assert!((err - tail_energy(&oracle, r)).abs() < 1e-7);
    }
}

#[test]
fn no_nearby_rank_r_matrix_does_better() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w = random_matrix(&mut rng, 12, 9);
    let r = 3;
    let f = lstm::factorize(&w, r).unwrap();
    let best = w.sub(&f.to_dense()).frobenius_norm();
    for _ in 0..100 {
        let mut left = f.left.clone();
        let mut right = f.right.clone();
        for v in left.as_mut_slice().iter_mut().chain(right.as_mut_slice()) {
            *v += rng.random_range(-0.05..0.05);
        }
        let other = left.matmul(&right);
        assert!(w.sub(&other).frobenius_norm() >= best - 1e-12);
    }
}

#[test]
fn factor_parameter_count_is_m_r_plus_r_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (m, n, r) in [(128, 41, 8), (64, 64, 16), (10, 3, 1), (7, 30, 2)] {
        let f = lstm::factorize(&random_matrix(&mut rng, m, n), r).unwrap();
        let tally: usize = (0..m).map(|_| r).sum::<usize>() + (0..r).map(|_| n).sum::<usize>();
        assert_eq!(f.param_count(), tally);
        assert_eq!(f.left.shape(), (m, r));
        assert_eq!(f.right.shape(), (r, n));
    }
}

#[test]
fn exact_low_rank_matrix_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = random_matrix(&mut rng, 20, 4);
    let b = random_matrix(&mut rng, 4, 15);
    let w = a.matmul(&b);
    let f = lstm::factorize(&w, 4).unwrap();
    assert!(w.sub(&f.to_dense()).frobenius_norm() < 1e-9);
}

#[test]
fn identity_has_unit_singular_values() {
    let s = linalg::svd(&Matrix::identity(6));
    assert!(s.sigma.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn rank_out_of_range_is_an_error() {
    let w = Matrix::identity(5);
    assert!(lstm::factorize(&w, 0).is_err());
    assert!(lstm::factorize(&w, 5).is_err());
}

#[test]
fn factorized_lstm_counts_fewer_parameters() {
    let p = LstmParams::new(41, 32, 5, 0);
    let f = p.factorized(8);
    assert_eq!(f.rank(), Some(8));
    assert_eq!(p.param_count(), p.full_param_count());
    let h4 = 128;
    let expected = (h4 * 8 + 8 * 41) + (h4 * 8 + 8 * 32) + h4 + 5 * 32 + 5;
    assert_eq!(f.param_count(), expected);
    assert!(matches!(f.w_input, WeightMatrix::Factorized(_)));
}
