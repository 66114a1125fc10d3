use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use crate::error::MatError;
use crate::matlin::Mat;
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `M = L L^H`.
///
/// Used internally for linear solves against Hermitian positive-definite
/// matrices (convergence residuals, Mahalanobis forms, log-determinants);
/// factoring is the cheapest reliable positive-definiteness probe.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky<S> {
    l: Mat<S>,
}

impl<S: Scalar> Cholesky<S> {
    /// Factor a Hermitian matrix; fails if any pivot is not strictly positive.
    pub(crate) fn new(m: &Mat<S>) -> Result<Self, MatError> {
        let d = m.dim();
        let mut l = Mat::<S>::zeros(d);
        for j in 0..d {
            let mut diag = m[(j, j)].re();
            for k in 0..j {
                diag -= l[(j, k)].abs_sq();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(MatError::NotPositiveDefinite {
                    min_eig: diag,
                    tol: 0.0,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = S::from_re(ljj);
            let inv = 1.0 / ljj;
            for i in j + 1..d {
                let mut acc = m[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc.scale(inv);
            }
        }
        Ok(Cholesky { l })
    }

    #[inline]
    pub(crate) fn dim(&self) -> usize {
        self.l.dim()
    }

    /// The lower-triangular factor `L` with `L L^H = M`.
    #[inline]
    pub(crate) fn factor(&self) -> &Mat<S> {
        &self.l
    }

    /// Forward substitution: solve `L y = x`.
    pub(crate) fn solve_lower(&self, x: &[S]) -> Vec<S> {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let mut y = x.to_vec();
        for i in 0..d {
            for k in 0..i {
                let lik = self.l[(i, k)];
                y[i] = y[i] - lik * y[k];
            }
            y[i] = y[i].scale(1.0 / self.l[(i, i)].re());
        }
        y
    }

    /// Back substitution: solve `L^H z = y`.
    pub(crate) fn solve_upper(&self, y: &[S]) -> Vec<S> {
        let d = self.dim();
        debug_assert_eq!(y.len(), d);
        let mut z = y.to_vec();
        for i in (0..d).rev() {
            for k in i + 1..d {
                let lki_conj = self.l[(k, i)].conj();
                z[i] = z[i] - lki_conj * z[k];
            }
            z[i] = z[i].scale(1.0 / self.l[(i, i)].re());
        }
        z
    }

    /// Solve `M z = x`.
    pub(crate) fn solve(&self, x: &[S]) -> Vec<S> {
        self.solve_upper(&self.solve_lower(x))
    }

    /// The Mahalanobis-type quadratic form `x^H M^{-1} x = ||L^{-1} x||^2`.
    pub(crate) fn quad_form_inv(&self, x: &[S]) -> f64 {
        self.solve_lower(x).iter().map(|z| z.abs_sq()).sum()
    }

    /// Solve `M Z = B` column-wise for a full matrix `B`.
    pub(crate) fn solve_mat(&self, b: &Mat<S>) -> Mat<S> {
        let d = self.dim();
        debug_assert_eq!(b.dim(), d);
        let mut out = Mat::<S>::zeros(d);
        let mut col = alloc::vec![S::zero(); d];
        for j in 0..d {
            for i in 0..d {
                col[i] = b[(i, j)];
            }
            let sol = self.solve(&col);
            for i in 0..d {
                out[(i, j)] = sol[i];
            }
        }
        out
    }

    /// `log det M` (real; the determinant of an HPD matrix is positive).
    pub(crate) fn log_det(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            acc += self.l[(i, i)].re().ln();
        }
        2.0 * acc
    }
}
