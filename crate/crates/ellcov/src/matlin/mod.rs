//! Dense Hermitian linear algebra sized for scatter/covariance work.
//!
//! Everything spectral ([`sqrt_psd`], [`inv_sqrt_psd`], [`expm_herm`]) is
//! routed through one eigendecomposition ([`eigh`], cyclic Jacobi), so the
//! numerical behaviour is identical across call sites, and
//! [`convergence_residual`] supplies the single stopping rule shared by all
//! iterative estimators in the crate.

mod chol;
mod eigh;
mod mat;

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

pub(crate) use chol::Cholesky;
pub use mat::Mat;

use crate::error::MatError;
use crate::scalar::Scalar;

/// Relative tolerance below which a numerically asymmetric matrix is
/// silently replaced by its Hermitian part; above it, the input is rejected.
const HERM_REL_TOL: f64 = 1e-12;

/// Relative tolerance (against the mean eigenvalue) for the strict
/// positive-definiteness check on [`HpdMatrix`] construction.
const PD_REL_TOL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenPair<S> {
    /// Eigenvalues in ascending order (real for Hermitian input).
    pub values: Vec<f64>,
    /// Unitary matrix whose `k`-th column is the eigenvector of `values[k]`.
    pub vectors: Mat<S>,
}

/// A Hermitian positive-definite matrix, validated on construction.
///
/// Construction symmetrizes inputs whose asymmetry is within `1e-12`
/// relative (and rejects anything worse), then requires every eigenvalue to
/// exceed `1e-12 * trace / dim`. All estimator outputs in the crate are
/// carried as this type.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdMatrix<S> {
    mat: Mat<S>,
}

impl<S: Scalar> HpdMatrix<S> {
    /// Validate and wrap a matrix.
    pub fn new(mat: Mat<S>) -> Result<Self, MatError> {
        let herm = hermitian_checked(&mat)?;
        let ep = eigh_unchecked(&herm);
        let min_eig = ep.values[0];
        let tol = PD_REL_TOL * herm.trace_re().max(0.0) / herm.dim() as f64;
        if !(min_eig > tol) {
            return Err(MatError::NotPositiveDefinite { min_eig, tol });
        }
        Ok(HpdMatrix { mat: herm })
    }

    /// Validate and wrap a row-major slice.
    pub fn from_slice(dim: usize, data: &[S]) -> Result<Self, MatError> {
        Self::new(Mat::from_slice(dim, data)?)
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        HpdMatrix {
            mat: Mat::identity(dim),
        }
    }

    /// `c * I` for a strictly positive `c`.
    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self, MatError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(MatError::NotPositiveDefinite {
                min_eig: c,
                tol: 0.0,
            });
        }
        Ok(HpdMatrix {
            mat: Mat::identity(dim).scale(c),
        })
    }

    /// Wrap a matrix already known to be Hermitian positive definite
    /// (outputs of the spectral builders, convex blends of HPD matrices).
    pub(crate) fn new_unchecked(mat: Mat<S>) -> Self {
        debug_assert!(mat.max_asym() <= 1e-10 * mat.max_abs().max(1e-300));
        HpdMatrix { mat }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn as_mat(&self) -> &Mat<S> {
        &self.mat
    }

    #[inline]
    pub fn into_mat(self) -> Mat<S> {
        self.mat
    }

    /// Eigendecomposition (no re-validation; the wrapper is Hermitian).
    pub fn eigh(&self) -> EigenPair<S> {
        eigh_unchecked(&self.mat)
    }

    /// Same matrix rescaled to unit trace.
    pub fn trace_normalized(&self) -> HpdMatrix<S> {
        HpdMatrix {
            mat: self.mat.scale(1.0 / self.mat.trace_re()),
        }
    }

    /// Cholesky factor (internal solve handle).
    pub(crate) fn cholesky(&self) -> Result<Cholesky<S>, MatError> {
        Cholesky::new(&self.mat)
    }
}

/// Check Hermitian symmetry to `1e-12` relative and return the exactly
/// Hermitian part, or an error when the asymmetry is structural.
fn hermitian_checked<S: Scalar>(m: &Mat<S>) -> Result<Mat<S>, MatError> {
    if !m.data().iter().all(|z| z.is_finite()) {
        return Err(MatError::NonFinite);
    }
    let asym = m.max_asym();
    let scale = m.max_abs();
    let tol = HERM_REL_TOL * scale;
    if asym > tol {
        return Err(MatError::NotHermitian {
            max_asym: asym,
            tol,
        });
    }
    Ok(m.hermitian_part())
}

fn eigh_unchecked<S: Scalar>(herm: &Mat<S>) -> EigenPair<S> {
    let mut work = herm.clone();
    let (values, vectors) = eigh::jacobi_hermitian(&mut work);
    EigenPair { values, vectors }
}

/// Eigendecomposition of a Hermitian matrix, ascending eigenvalue order.
///
/// The input is validated (and symmetrized) as in [`HpdMatrix::new`], but
/// positive definiteness is not required: indefinite Hermitian matrices are
/// fine, which is what [`expm_herm`] needs.
pub fn eigh<S: Scalar>(m: &Mat<S>) -> Result<EigenPair<S>, MatError> {
    Ok(eigh_unchecked(&hermitian_checked(m)?))
}

/// Apply a real function to the spectrum: `U diag(f(lambda)) U^H`.
fn spectral_map<S: Scalar>(ep: &EigenPair<S>, f: impl Fn(f64) -> f64) -> Mat<S> {
    let w: Vec<f64> = ep.values.iter().map(|&x| f(x)).collect();
    Mat::herm_reconstruct(&ep.vectors, &w)
}

/// Principal matrix square root of an HPD matrix.
pub fn sqrt_psd<S: Scalar>(m: &HpdMatrix<S>) -> HpdMatrix<S> {
    HpdMatrix::new_unchecked(spectral_map(&m.eigh(), f64::sqrt))
}

/// Inverse principal square root of an HPD matrix.
pub fn inv_sqrt_psd<S: Scalar>(m: &HpdMatrix<S>) -> HpdMatrix<S> {
    HpdMatrix::new_unchecked(spectral_map(&m.eigh(), |x| 1.0 / x.sqrt()))
}

/// Matrix exponential of a Hermitian matrix (of any sign pattern).
///
/// The result is always Hermitian positive definite.
pub fn expm_herm<S: Scalar>(m: &Mat<S>) -> Result<HpdMatrix<S>, MatError> {
    let ep = eigh(m)?;
    Ok(HpdMatrix::new_unchecked(spectral_map(&ep, f64::exp)))
}

/// Squared whitened step size `tr((M_prev^{-1} M - I)^2)`.
///
/// This is the convergence residual every iterative estimator in the crate
/// stops on: it is zero exactly when `M = M_prev` and grows quadratically in
/// the whitened difference.
pub fn convergence_residual<S: Scalar>(
    m_prev: &HpdMatrix<S>,
    m: &HpdMatrix<S>,
) -> Result<f64, MatError> {
    let d = m_prev.dim();
    if m.dim() != d {
        return Err(MatError::DimensionMismatch {
            expected: d,
            actual: m.dim(),
        });
    }
    // Equal inputs give zero exactly; the solve below would leave rounding
    // noise on the order of the squared unit roundoff instead.
    if m_prev.as_mat().data() == m.as_mat().data() {
        return Ok(0.0);
    }
    let ch = m_prev.cholesky()?;
    let mut w = ch.solve_mat(m.as_mat());
    for i in 0..d {
        w[(i, i)] -= S::one();
    }
    // tr(W^2) = sum_ij W_ij W_ji; W is similar to a Hermitian matrix, so the
    // trace is real up to rounding.
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (w[(i, j)] * w[(j, i)]).re();
        }
    }
    Ok(acc.max(0.0))
}
