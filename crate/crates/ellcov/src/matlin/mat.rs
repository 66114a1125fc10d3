use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use crate::error::MatError;
use crate::scalar::Scalar;

/// Dense square matrix in row-major order over a [`Scalar`] field.
///
/// This is deliberately a small, allocation-backed container: every matrix in
/// the crate is a `d x d` scatter/covariance-sized object with `d` rarely
/// above a few dozen, so naive `O(d^3)` kernels are both fast enough and easy
/// to keep deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    /// Zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        Mat {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Build from a row-major slice of length `dim * dim`.
    pub fn from_slice(dim: usize, data: &[S]) -> Result<Self, MatError> {
        Self::from_vec(dim, data.to_vec())
    }

    /// Build from a row-major vector of length `dim * dim`.
    pub fn from_vec(dim: usize, data: Vec<S>) -> Result<Self, MatError> {
        if dim == 0 {
            return Err(MatError::Empty);
        }
        if data.len() != dim * dim {
            return Err(MatError::BadShape {
                dim,
                len: data.len(),
            });
        }
        if !data.iter().all(|z| z.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Mat { dim, data })
    }

    /// Diagonal matrix with real diagonal entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = S::from_re(x);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `self + rhs` (dimensions must match; enforced by callers).
    pub fn add(&self, rhs: &Mat<S>) -> Mat<S> {
        debug_assert_eq!(self.dim, rhs.dim);
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Mat {
            dim: self.dim,
            data,
        }
    }

    /// `self - rhs`.
    pub fn sub(&self, rhs: &Mat<S>) -> Mat<S> {
        debug_assert_eq!(self.dim, rhs.dim);
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Mat {
            dim: self.dim,
            data,
        }
    }

    /// Multiply every entry by a real factor.
    pub fn scale(&self, c: f64) -> Mat<S> {
        let data = self.data.iter().map(|&a| a.scale(c)).collect();
        Mat {
            dim: self.dim,
            data,
        }
    }

    /// `self += rhs * c`.
    pub fn add_scaled(&mut self, rhs: &Mat<S>, c: f64) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b.scale(c);
        }
    }

    /// Rank-one update `self += w * x x^H`, mirroring the upper triangle so
    /// exact Hermitian symmetry of `self` is preserved bit for bit.
    pub fn add_outer_scaled(&mut self, x: &[S], w: f64) {
        debug_assert_eq!(self.dim, x.len());
        for i in 0..self.dim {
            for j in i..self.dim {
                let t = (x[i] * x[j].conj()).scale(w);
                self[(i, j)] += t;
                if j != i {
                    self[(j, i)] += t.conj();
                }
            }
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Mat<S>) -> Mat<S> {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                if aik == S::zero() {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * d..(i + 1) * d];
                for j in 0..d {
                    orow[j] += aik * rrow[j];
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(self.dim, x.len());
        let d = self.dim;
        let mut out = vec![S::zero(); d];
        for (i, oi) in out.iter_mut().enumerate() {
            let mut acc = S::zero();
            for (rj, xj) in self.row(i).iter().zip(x) {
                acc += *rj * *xj;
            }
            *oi = acc;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat<S> {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Trace (sum of diagonal entries).
    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.dim {
            t += self[(i, i)];
        }
        t
    }

    /// Real part of the trace (the trace itself for Hermitian matrices).
    pub fn trace_re(&self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.dim {
            t += self[(i, i)].re();
        }
        t
    }

    /// Frobenius norm.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.abs_sq()).sum::<f64>().sqrt()
    }

    /// Frobenius distance `||self - rhs||_F`.
    pub fn frob_dist(&self, rhs: &Mat<S>) -> f64 {
        debug_assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| (a - b).abs_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.abs_sq())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Largest deviation from Hermitian symmetry, `max_ij |M_ij - conj(M_ji)|`.
    pub fn max_asym(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let delta = self[(i, j)] - self[(j, i)].conj();
                worst = worst.max(delta.abs_sq());
            }
        }
        worst.sqrt()
    }

    /// Hermitian part `(M + M^H) / 2`, built exactly symmetric (the diagonal
    /// is forced real, off-diagonal pairs are exact conjugates).
    pub fn hermitian_part(&self) -> Mat<S> {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            out[(i, i)] = S::from_re(self[(i, i)].re());
            for j in (i + 1)..d {
                let avg = (self[(i, j)] + self[(j, i)].conj()).scale(0.5);
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        out
    }

    /// Reconstruct `U diag(w) U^H` from a column basis and real weights.
    ///
    /// Only the upper triangle is computed; the lower triangle is its exact
    /// conjugate, so the result is Hermitian to the last bit.
    pub fn herm_reconstruct(u: &Mat<S>, w: &[f64]) -> Mat<S> {
        let d = u.dim;
        debug_assert_eq!(d, w.len());
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = S::zero();
                for (k, &wk) in w.iter().enumerate() {
                    acc += (u[(i, k)] * u[(j, k)].conj()).scale(wk);
                }
                if i == j {
                    out[(i, i)] = S::from_re(acc.re());
                } else {
                    out[(i, j)] = acc;
                    out[(j, i)] = acc.conj();
                }
            }
        }
        out
    }
}

impl<S: Scalar> Index<(usize, usize)> for Mat<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.dim + j]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.dim + j]
    }
}
