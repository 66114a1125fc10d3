//! Shared helpers for the crate's unit tests: seeded RNGs and random
//! Hermitian / HPD matrices with well-spread spectra.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::matlin::{HpdMatrix, Mat};
use crate::scalar::Scalar;

pub(crate) fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn random_mat<S: Scalar, R: Rng + ?Sized>(dim: usize, r: &mut R) -> Mat<S> {
    let data: Vec<S> = (0..dim * dim).map(|_| S::standard_normal(r)).collect();
    Mat::from_vec(dim, data).unwrap()
}

/// Random Hermitian matrix with entries of order one (indefinite in general).
pub(crate) fn random_herm<S: Scalar, R: Rng + ?Sized>(dim: usize, r: &mut R) -> Mat<S> {
    random_mat::<S, R>(dim, r).hermitian_part()
}

/// Random Hermitian positive-definite matrix `A A^H / dim + u I` with
/// `u` in `[0.1, 1.1)`, so the spectrum is responsibly bounded away from 0.
pub(crate) fn random_hpd<S: Scalar, R: Rng + ?Sized>(dim: usize, r: &mut R) -> HpdMatrix<S> {
    let a = random_mat::<S, R>(dim, r);
    let mut g = a.matmul(&a.adjoint()).scale(1.0 / dim as f64);
    let shift: f64 = 0.1 + r.gen::<f64>();
    for i in 0..dim {
        g[(i, i)] += S::from_re(shift);
    }
    HpdMatrix::new(g.hermitian_part()).unwrap()
}

/// Random unitary matrix: modified Gram-Schmidt on a random matrix, with a
/// second orthogonalization pass for numerical cleanliness.
pub(crate) fn random_unitary<S: Scalar, R: Rng + ?Sized>(dim: usize, r: &mut R) -> Mat<S> {
    let a = random_mat::<S, R>(dim, r);
    let mut cols: Vec<Vec<S>> = (0..dim)
        .map(|j| (0..dim).map(|i| a[(i, j)]).collect())
        .collect();
    for _pass in 0..2 {
        for j in 0..dim {
            let (done, rest) = cols.split_at_mut(j);
            let vj = &mut rest[0];
            for qk in done.iter() {
                // proj = <q_k, v_j>
                let mut proj = S::zero();
                for (qi, vi) in qk.iter().zip(vj.iter()) {
                    proj += qi.conj() * *vi;
                }
                for (qi, vi) in qk.iter().zip(vj.iter_mut()) {
                    let t = *qi * proj;
                    *vi -= t;
                }
            }
            let norm: f64 = vj
                .iter()
                .map(|z| z.abs_sq())
                .sum::<f64>()
                .max(1e-300);
            let inv = 1.0 / num_traits::Float::sqrt(norm);
            for z in vj.iter_mut() {
                *z = z.scale(inv);
            }
        }
    }
    let mut q = Mat::zeros(dim);
    for j in 0..dim {
        for i in 0..dim {
            q[(i, j)] = cols[j][i];
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn random_unitary_is_unitary() {
        let mut r = rng(5);
        for d in [2usize, 5, 8] {
            let q = random_unitary::<Complex64, _>(d, &mut r);
            let qhq = q.adjoint().matmul(&q);
            assert!(qhq.frob_dist(&Mat::identity(d)) < 1e-13);
        }
    }

    #[test]
    fn random_hpd_validates() {
        let mut r = rng(6);
        let m = random_hpd::<f64, _>(6, &mut r);
        assert_eq!(m.dim(), 6);
        assert!(m.eigh().values[0] > 0.0);
    }
}
