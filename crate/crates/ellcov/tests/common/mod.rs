//! Helpers shared by the integration test targets. Each target uses its own
//! subset, so the module as a whole allows dead code.
#![allow(dead_code)]

use ellcov::detect::gen_noise;
use ellcov::estimators::{EstimateResult, EstimatorConfig, SampleBatch};
use ellcov::matlin::{sqrt_psd, Mat};
use ellcov::{EstimError, HpdMatrix, Scalar};

pub type Estimator<S> =
    fn(&HpdMatrix<S>, &SampleBatch<S>, &EstimatorConfig) -> Result<EstimateResult<S>, EstimError>;

/// Reproducible random Hermitian positive-definite matrix: a ridge-stabilized
/// sample covariance of seeded unit noise.
pub fn seeded_hpd<S: Scalar>(dim: usize, seed: u64) -> HpdMatrix<S> {
    let batch = gen_noise::<S>(dim, 2 * dim + 4, seed).unwrap();
    let mut m = Mat::<S>::identity(dim).scale(0.05);
    for x in batch.iter() {
        m.add_outer_scaled(x, 1.0 / batch.len() as f64);
    }
    HpdMatrix::new(m).unwrap()
}

/// Reproducible random unitary (orthogonal over the real field): the
/// eigenbasis of a seeded random Hermitian positive-definite matrix.
pub fn seeded_unitary<S: Scalar>(dim: usize, seed: u64) -> Mat<S> {
    seeded_hpd::<S>(dim, seed).eigh().vectors
}

/// `n` samples of zero-mean noise with covariance `sigma` (unit noise pushed
/// through the Hermitian square root).
pub fn seeded_batch<S: Scalar>(sigma: &HpdMatrix<S>, n: usize, seed: u64) -> SampleBatch<S> {
    let root = sqrt_psd(sigma);
    let z = gen_noise::<S>(sigma.dim(), n, seed).unwrap();
    let rows: Vec<Vec<S>> = z.iter().map(|x| root.as_mat().mul_vec(x)).collect();
    SampleBatch::from_rows(&rows).unwrap()
}

/// Batch with every sample rotated by `u`.
pub fn rotated_batch<S: Scalar>(batch: &SampleBatch<S>, u: &Mat<S>) -> SampleBatch<S> {
    let rows: Vec<Vec<S>> = batch.iter().map(|x| u.mul_vec(x)).collect();
    SampleBatch::from_rows(&rows).unwrap()
}

/// `u m u^H` as a validated positive-definite matrix.
pub fn conjugated<S: Scalar>(m: &HpdMatrix<S>, u: &Mat<S>) -> HpdMatrix<S> {
    HpdMatrix::new(u.matmul(m.as_mat()).matmul(&u.adjoint())).unwrap()
}

/// Explicit inverse through the eigendecomposition (test-side oracle; the
/// library itself never forms inverses).
pub fn inverse_of<S: Scalar>(m: &HpdMatrix<S>) -> Mat<S> {
    let ep = m.eigh();
    let inv: Vec<f64> = ep.values.iter().map(|&l| 1.0 / l).collect();
    Mat::herm_reconstruct(&ep.vectors, &inv)
}

/// Quadratic form `x^H a x` for Hermitian `a` (real part).
pub fn quad<S: Scalar>(a: &Mat<S>, x: &[S]) -> f64 {
    let y = a.mul_vec(x);
    x.iter().zip(&y).map(|(xi, yi)| (xi.conj() * *yi).re()).sum()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_entry_dist<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    let d = a.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs_sq().sqrt());
        }
    }
    worst
}

/// Standard error of the difference of two independent proportions.
pub fn se_diff(p1: f64, p2: f64, n1: usize, n2: usize) -> f64 {
    (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt()
}
