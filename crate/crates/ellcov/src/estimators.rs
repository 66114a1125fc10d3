//! Regularized maximum-likelihood scatter and covariance estimators for
//! elliptical and Gaussian data, with outlier-rejecting partial variants.
//!
//! All estimators blend a prior matrix with a training batch under a weight
//! `alpha` (`0` = prior only, `1` = data only) and come in two families:
//!
//! * **Scatter (Tyler-type)** — [`reg_tyler`], [`reg_ptyler`]: scale-free
//!   shape estimation for elliptical data of unknown radial distribution.
//!   The fixed-point iteration matches the expected normalized sample
//!   covariance of the prior against the normalized training samples, and
//!   the output is trace-normalized.
//! * **Covariance (Gaussian-type)** — [`reg_scm`], [`reg_partial_scm`],
//!   [`reg_cg_cov`], [`reg_pcg_cov`]: scale-carrying covariance estimation;
//!   the `cg` pair solves a penalized Gaussian likelihood by the same
//!   matrix-exponential fixed-point scheme.
//!
//! The partial variants rank samples each iteration by how typical they are
//! under the current iterate (quadratic form for the scatter and plain
//! covariance families, likelihood contribution for the Gaussian family) and
//! keep only the fraction `p` with the smallest rank key, which rejects
//! high-leverage outliers. With `p = 1` each partial variant runs the exact
//! code path of its full counterpart and reproduces it bit for bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use crate::anscm::{anscm_eigs_mc, eigs_map_stable, MIN_MC_SAMPLES};
use crate::error::{AnscmError, EstimError};
use crate::matlin::{convergence_residual, HpdMatrix, Mat};
use crate::rng::{derive_seed, SeedRole};
use crate::scalar::{Field, Scalar};

/// Output normalization for the scale-free (Tyler-type) estimators.
///
/// Covariance-type estimators carry a meaningful scale and ignore this
/// setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Rescale the output to unit trace (the default).
    TraceOne,
    /// Rescale the output to unit determinant.
    DetOne,
}

/// Configuration shared by all estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Blend weight in `[0, 1]`: `0` keeps the prior, `1` uses data only.
    pub alpha: f64,
    /// Fraction of samples kept by the partial variants, in `(0, 1]`.
    pub p: f64,
    /// Convergence threshold on the squared whitened step
    /// `tr((R_prev^{-1} R - I)^2)`.
    pub eps: f64,
    /// Iteration cap.
    pub k_max: usize,
    /// Output normalization for Tyler-type estimators.
    pub normalization: Normalization,
    /// Monte-Carlo sample count for the real-field scatter expectation.
    pub mc_samples: usize,
    /// Seed for the real-field Monte-Carlo scatter expectation.
    pub seed: u64,
}

impl EstimatorConfig {
    /// Defaults for the scatter (Tyler-type) family with blend weight
    /// `alpha`: keep everything (`p = 1`), converge to `1e-9`.
    pub fn new(alpha: f64) -> Self {
        EstimatorConfig {
            alpha,
            p: 1.0,
            eps: 1e-9,
            k_max: 100,
            normalization: Normalization::TraceOne,
            mc_samples: 100_000,
            seed: 0,
        }
    }

    /// Defaults for the Gaussian covariance family with blend weight
    /// `alpha`: keep everything, converge to `1e-8`.
    pub fn cg(alpha: f64) -> Self {
        EstimatorConfig {
            eps: 1e-8,
            ..EstimatorConfig::new(alpha)
        }
    }

    fn validate(&self) -> Result<(), EstimError> {
        fn bad(msg: String) -> Result<(), EstimError> {
            Err(EstimError::InvalidConfig(msg))
        }
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return bad(format!("alpha = {} must lie in [0, 1]", self.alpha));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p = {} must lie in (0, 1]", self.p));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad(format!("eps = {} must be a positive number", self.eps));
        }
        if self.k_max == 0 {
            return bad(String::from("k_max must be at least 1"));
        }
        Ok(())
    }
}

/// Result of an estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<S> {
    /// The estimated matrix (Hermitian positive definite).
    pub matrix: HpdMatrix<S>,
    /// Update steps performed (at least 1).
    pub iterations: usize,
    /// Last computed convergence residual (zero at an exact fixed point).
    pub final_residual: f64,
    /// Whether the stopping rule was met within the iteration cap.
    pub converged: bool,
    /// For partial variants: the kept samples of the final iteration,
    /// 0-based, ordered from most to least typical. `None` for full
    /// variants.
    pub kept_indices: Option<Vec<usize>>,
}

/// A batch of training samples, one vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<S> {
    dim: usize,
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SampleBatch<S> {
    /// Build from per-sample rows. Rows must be nonempty, equal length,
    /// finite, and nonzero.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self, EstimError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(EstimError::EmptyBatch);
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(EstimError::RaggedBatch {
                    index,
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    /// Build from a flat row-major buffer of `n * dim` scalars.
    pub fn from_flat(dim: usize, data: Vec<S>) -> Result<Self, EstimError> {
        if dim == 0 || data.is_empty() {
            return Err(EstimError::EmptyBatch);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(EstimError::RaggedBatch {
                index: data.len() / dim,
                expected: dim,
                actual: data.len() % dim,
            });
        }
        let n = data.len() / dim;
        for (index, row) in data.chunks_exact(dim).enumerate() {
            if !row.iter().all(|z| z.is_finite()) {
                return Err(EstimError::Mat(crate::MatError::NonFinite));
            }
            if row.iter().all(|&z| z == S::zero()) {
                return Err(EstimError::ZeroSample { index });
            }
        }
        Ok(SampleBatch { dim, n, data })
    }

    /// Vector dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of samples.
    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    /// Whether the batch is empty (never true for a constructed batch).
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The `i`-th sample.
    #[inline]
    pub fn sample(&self, i: usize) -> &[S] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Mutable view of the `i`-th sample.
    #[inline]
    pub fn sample_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterate over samples in index order.
    pub fn iter(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Map the blend weight of a complex-circular Tyler-type estimator onto the
/// weight the fixed-point update actually uses:
/// `alpha (d - 1) / (d - (1 + alpha) / 2)`.
///
/// Both endpoints are preserved exactly (`0 -> 0`, `1 -> 1`); interior
/// values are pushed up to compensate for the smaller effective dimension of
/// a normalized complex sample.
pub fn alpha_remap_complex(alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    alpha * (d - 1.0) / (d - (1.0 + alpha) / 2.0)
}

/// Number of samples kept by a partial variant: `ceil(p * n)`, guarded
/// against floating-point noise when `p * n` is within rounding of an
/// integer, and clamped to `[1, n]`.
fn kept_count(p: f64, n: usize) -> usize {
    let t = p * n as f64;
    let r = t.round();
    let m = if (t - r).abs() <= 1e-9 * n as f64 {
        r as usize
    } else {
        t.ceil() as usize
    };
    m.clamp(1, n)
}

/// Indices sorted ascending by `key`, ties kept in index order.
fn rank_ascending(key: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).expect("finite rank key"));
    idx
}

/// The first `m` ranked indices, re-sorted ascending by index so every
/// summation over the kept set runs in the same order as a full-batch sum.
fn kept_in_index_order(ranking: &[usize], m: usize) -> Vec<usize> {
    let mut kept = ranking[..m].to_vec();
    kept.sort_unstable();
    kept
}

fn check_dims<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
) -> Result<(), EstimError> {
    if prior.dim() != batch.dim() {
        return Err(EstimError::DimensionMismatch {
            prior: prior.dim(),
            batch: batch.dim(),
        });
    }
    Ok(())
}

/// Kullback-Leibler divergence between zero-mean Gaussians with covariances
/// `sigma1` (true) and `sigma2` (model):
/// `(c/2) (tr(sigma2^{-1} sigma1) + logdet sigma2 - logdet sigma1 - d)`
/// with `c = 1` over the real field and `c = 2` over the complex-circular
/// field.
pub fn gaussian_kl<S: Scalar>(
    sigma1: &HpdMatrix<S>,
    sigma2: &HpdMatrix<S>,
) -> Result<f64, EstimError> {
    let d = sigma1.dim();
    if sigma2.dim() != d {
        return Err(EstimError::Mat(crate::MatError::DimensionMismatch {
            expected: d,
            actual: sigma2.dim(),
        }));
    }
    let c1 = sigma1.cholesky()?;
    let c2 = sigma2.cholesky()?;
    let trace = c2.solve_mat(sigma1.as_mat()).trace_re();
    let c_field = match S::FIELD {
        Field::Real => 1.0,
        Field::ComplexCircular => 2.0,
    };
    Ok(0.5 * c_field * (trace + c2.log_det() - c1.log_det() - d as f64))
}

/// Eigendecomposition-backed pair of matrix roots sharing one basis.
struct Roots<S> {
    sqrt: Mat<S>,
    inv_sqrt: Mat<S>,
}

fn roots_of<S: Scalar>(m: &HpdMatrix<S>) -> Roots<S> {
    let ep = m.eigh();
    let sq: Vec<f64> = ep.values.iter().map(|&l| l.sqrt()).collect();
    let isq: Vec<f64> = sq.iter().map(|&s| 1.0 / s).collect();
    Roots {
        sqrt: Mat::herm_reconstruct(&ep.vectors, &sq),
        inv_sqrt: Mat::herm_reconstruct(&ep.vectors, &isq),
    }
}

/// Spectrum map `E[y y^H / (y^H y)]` of a whitened prior, evaluated in the
/// eigenbasis of `w`: closed form over the complex field, seeded Monte Carlo
/// over the real field.
fn scatter_expectation<S: Scalar>(
    w: &Mat<S>,
    config: &EstimatorConfig,
    mc_seed: u64,
) -> Result<Mat<S>, EstimError> {
    let ep = crate::matlin::eigh(w)?;
    // A degenerate iterate (for example a blend too weak to keep a
    // too-small kept set full rank) can drive the whitened prior numerically
    // singular; surface that instead of mapping a non-positive spectrum.
    if ep.values[0] <= 0.0 {
        return Err(EstimError::Anscm(AnscmError::NonPositiveEigenvalue {
            index: 0,
            value: ep.values[0],
        }));
    }
    let mu = match S::FIELD {
        Field::ComplexCircular => {
            let trace: f64 = ep.values.iter().sum();
            let lam: Vec<f64> = ep.values.iter().map(|&l| l / trace).collect();
            eigs_map_stable(&lam)
        }
        Field::Real => {
            if config.mc_samples < MIN_MC_SAMPLES {
                return Err(EstimError::InvalidConfig(format!(
                    "mc_samples = {} is below the minimum of {} required by real-field \
                     scatter estimation",
                    config.mc_samples, MIN_MC_SAMPLES
                )));
            }
            anscm_eigs_mc(&ep.values, config.mc_samples, mc_seed)
        }
    };
    Ok(Mat::herm_reconstruct(&ep.vectors, &mu))
}

fn apply_normalization<S: Scalar>(
    r: HpdMatrix<S>,
    normalization: Normalization,
) -> Result<HpdMatrix<S>, EstimError> {
    match normalization {
        Normalization::TraceOne => Ok(r),
        Normalization::DetOne => {
            let log_det = r.cholesky()?.log_det();
            let c = (-log_det / r.dim() as f64).exp();
            Ok(HpdMatrix::new_unchecked(r.as_mat().scale(c)))
        }
    }
}

/// Shared fixed-point engine for the scatter (Tyler-type) family.
///
/// `p_opt = None` runs the full estimator; `Some(p)` the partial one. With
/// `p = 1` the partial path keeps every sample and the summation order
/// matches the full path exactly, so the two are bit-for-bit identical.
fn tyler_engine<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
    p_opt: Option<f64>,
) -> Result<EstimateResult<S>, EstimError> {
    config.validate()?;
    check_dims(prior, batch)?;
    let d = prior.dim();
    let n = batch.len();
    let p = p_opt.unwrap_or(1.0);
    let m = kept_count(p, n);
    let alpha = match S::FIELD {
        Field::ComplexCircular => alpha_remap_complex(config.alpha, d),
        Field::Real => config.alpha,
    };
    // One Monte-Carlo stream per call, replayed identically in every
    // iteration, so the real-field fixed point is exact rather than a
    // stochastic equilibrium.
    let mc_seed = derive_seed(config.seed, SeedRole::AnscmMc, &[]);

    let mut r = prior.trace_normalized();

    if alpha == 0.0 {
        let kept_indices = p_opt.map(|_| {
            let ch = r.cholesky().expect("validated HPD prior");
            let tau: Vec<f64> = batch.iter().map(|x| ch.quad_form_inv(x)).collect();
            rank_ascending(&tau)[..m].to_vec()
        });
        return Ok(EstimateResult {
            matrix: apply_normalization(r, config.normalization)?,
            iterations: 1,
            final_residual: 0.0,
            converged: true,
            kept_indices,
        });
    }

    let prior_weight = 1.0 - alpha;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut kept_ranked: Vec<usize> = Vec::new();
    let mut z = vec![S::zero(); d];

    while iterations < config.k_max {
        let roots = roots_of(&r);

        // Whitened samples and their quadratic forms under the current
        // iterate; the ranking happens before the update it feeds.
        let mut zs: Vec<S> = Vec::with_capacity(n * d);
        let mut tau = vec![0.0f64; n];
        for (i, x) in batch.iter().enumerate() {
            for (row, zi) in z.iter_mut().enumerate() {
                let mut acc = S::zero();
                for (c, &xc) in x.iter().enumerate() {
                    acc += roots.inv_sqrt[(row, c)] * xc;
                }
                *zi = acc;
            }
            tau[i] = z.iter().map(|v| v.abs_sq()).sum();
            zs.extend_from_slice(&z);
        }
        let ranking = rank_ascending(&tau);
        kept_ranked = ranking[..m].to_vec();
        let kept = kept_in_index_order(&ranking, m);

        // S = (1 - alpha) E[y y^H / y^H y] + (alpha / m) sum z z^H / tau,
        // rescaled to trace d; the update is R^{1/2} exp(S - I) R^{1/2}.
        let mut s = if prior_weight > 0.0 {
            let w = roots
                .inv_sqrt
                .matmul(prior.as_mat())
                .matmul(&roots.inv_sqrt)
                .hermitian_part();
            scatter_expectation(&w, config, mc_seed)?.scale(prior_weight)
        } else {
            Mat::zeros(d)
        };
        for &i in &kept {
            let zi = &zs[i * d..(i + 1) * d];
            s.add_outer_scaled(zi, alpha / (m as f64 * tau[i]));
        }
        let s = s.scale(d as f64 / s.trace_re());

        let mut exponent = s;
        for i in 0..d {
            exponent[(i, i)] -= S::one();
        }
        let e = crate::matlin::expm_herm(&exponent)?;
        let next = roots
            .sqrt
            .matmul(e.as_mat())
            .matmul(&roots.sqrt)
            .hermitian_part();
        let next = HpdMatrix::new_unchecked(next.scale(1.0 / next.trace_re()));

        residual = convergence_residual(&r, &next)?;
        r = next;
        iterations += 1;
        if residual <= config.eps {
            converged = true;
            break;
        }
    }

    Ok(EstimateResult {
        matrix: apply_normalization(r, config.normalization)?,
        iterations,
        final_residual: residual,
        converged,
        kept_indices: p_opt.map(|_| kept_ranked),
    })
}

/// Regularized scatter (shape) estimator for elliptical data: blends the
/// expected normalized covariance of `prior` with the normalized training
/// samples under weight `config.alpha` and iterates the matrix-exponential
/// fixed point to convergence. At `alpha = 1` this is the classic
/// distribution-free scatter fixed point. Output is trace-normalized.
pub fn reg_tyler<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    tyler_engine(prior, batch, config, None)
}

/// Outlier-rejecting variant of [`reg_tyler`]: each iteration ranks samples
/// by their whitened quadratic form under the current iterate and keeps only
/// the fraction `config.p` with the smallest values. `kept_indices` reports
/// the final kept set, most typical first.
pub fn reg_ptyler<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    tyler_engine(prior, batch, config, Some(config.p))
}

/// Shared engine for the plain covariance blend.
fn scm_engine<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
    p_opt: Option<f64>,
) -> Result<EstimateResult<S>, EstimError> {
    config.validate()?;
    check_dims(prior, batch)?;
    let n = batch.len();
    let p = p_opt.unwrap_or(1.0);
    let m = kept_count(p, n);
    let alpha = config.alpha;

    // Blend of the prior with the average outer product of a sample subset,
    // summed in ascending index order.
    let blend = |kept: &[usize], divisor: usize| -> Result<HpdMatrix<S>, EstimError> {
        let mut acc = prior.as_mat().scale(1.0 - alpha);
        if alpha > 0.0 {
            for &i in kept {
                acc.add_outer_scaled(batch.sample(i), alpha / divisor as f64);
            }
        }
        Ok(HpdMatrix::new(acc.hermitian_part())?)
    };

    let all: Vec<usize> = (0..n).collect();
    let mut r = blend(&all, n)?;
    let mut iterations = 1;
    let mut residual = 0.0;
    let mut converged = m == n;
    let mut prev_kept: Vec<usize> = all;
    let mut kept_ranked: Vec<usize> = Vec::new();

    if p_opt.is_some() {
        // Re-rank and re-blend until the kept set stops changing; once it
        // does, the blend is an exact fixed point of the ranking.
        loop {
            let ch = r.cholesky()?;
            let tau: Vec<f64> = batch.iter().map(|x| ch.quad_form_inv(x)).collect();
            let ranking = rank_ascending(&tau);
            kept_ranked = ranking[..m].to_vec();
            let kept = kept_in_index_order(&ranking, m);
            if kept == prev_kept {
                residual = 0.0;
                converged = true;
                break;
            }
            if iterations >= config.k_max {
                converged = false;
                break;
            }
            let next = blend(&kept, m)?;
            residual = convergence_residual(&r, &next)?;
            r = next;
            prev_kept = kept;
            iterations += 1;
        }
    }

    Ok(EstimateResult {
        matrix: r,
        iterations,
        final_residual: residual,
        converged,
        kept_indices: p_opt.map(|_| kept_ranked),
    })
}

/// Regularized sample covariance: the one-shot blend
/// `(1 - alpha) prior + (alpha / n) sum_i x_i x_i^H`.
pub fn reg_scm<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    scm_engine(prior, batch, config, None)
}

/// Outlier-rejecting variant of [`reg_scm`]: alternates ranking samples by
/// their quadratic form under the current blend with re-blending over the
/// kept fraction `config.p`, until the kept set is stable (an exact fixed
/// point) or the iteration cap is hit.
pub fn reg_partial_scm<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    scm_engine(prior, batch, config, Some(config.p))
}

/// Shared fixed-point engine for the penalized Gaussian covariance family.
fn cg_engine<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
    p_opt: Option<f64>,
) -> Result<EstimateResult<S>, EstimError> {
    config.validate()?;
    check_dims(prior, batch)?;
    let d = prior.dim();
    let n = batch.len();
    let p = p_opt.unwrap_or(1.0);
    let m = kept_count(p, n);
    let alpha = config.alpha;

    if alpha == 0.0 {
        let kept_indices = p_opt.map(|_| {
            let ch = prior.cholesky().expect("validated HPD prior");
            let key: Vec<f64> = batch
                .iter()
                .map(|x| {
                    let tau = ch.quad_form_inv(x);
                    tau - 0.5 * tau.ln()
                })
                .collect();
            rank_ascending(&key)[..m].to_vec()
        });
        return Ok(EstimateResult {
            matrix: prior.clone(),
            iterations: 1,
            final_residual: 0.0,
            converged: true,
            kept_indices,
        });
    }

    // Initialization: the plain blend over the full batch must itself be
    // positive definite.
    let mut init = prior.as_mat().scale(1.0 - alpha);
    for x in batch.iter() {
        init.add_outer_scaled(x, alpha / n as f64);
    }
    let mut sigma =
        HpdMatrix::new(init.hermitian_part()).map_err(|_| EstimError::IndefiniteInit)?;

    let gain = 1.0 / (1.0 - alpha / (2.0 * d as f64));
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut kept_ranked: Vec<usize> = Vec::new();

    while iterations < config.k_max {
        let roots = roots_of(&sigma);
        let ch = sigma.cholesky()?;
        let tau: Vec<f64> = batch.iter().map(|x| ch.quad_form_inv(x)).collect();
        let key: Vec<f64> = tau.iter().map(|&t| t - 0.5 * t.ln()).collect();
        let ranking = rank_ascending(&key);
        kept_ranked = ranking[..m].to_vec();
        let kept = kept_in_index_order(&ranking, m);

        // S = gain [ (1 - alpha) prior + (alpha / m) sum (1 - 1/(2 tau)) x x^H ].
        let mut s = prior.as_mat().scale(1.0 - alpha);
        let mut min_weight = f64::INFINITY;
        for &i in &kept {
            let w = 1.0 - 1.0 / (2.0 * tau[i]);
            min_weight = min_weight.min(w);
            s.add_outer_scaled(batch.sample(i), alpha * w / m as f64);
        }
        let s = s.scale(gain).hermitian_part();
        if min_weight < 0.0 {
            // Small quadratic forms give negative sample weights; the update
            // target is only usable if it stayed positive definite.
            let min_eig = crate::matlin::eigh(&s)?.values[0];
            if min_eig <= 0.0 {
                return Err(EstimError::IndefiniteUpdate {
                    iteration: iterations + 1,
                    min_weight,
                });
            }
        }

        let mut exponent = roots
            .inv_sqrt
            .matmul(&s)
            .matmul(&roots.inv_sqrt)
            .hermitian_part();
        for i in 0..d {
            exponent[(i, i)] -= S::one();
        }
        let e = crate::matlin::expm_herm(&exponent)?;
        let next = roots
            .sqrt
            .matmul(e.as_mat())
            .matmul(&roots.sqrt)
            .hermitian_part();
        let next = HpdMatrix::new_unchecked(next);

        residual = convergence_residual(&sigma, &next)?;
        sigma = next;
        iterations += 1;
        if residual <= config.eps {
            converged = true;
            break;
        }
    }

    Ok(EstimateResult {
        matrix: sigma,
        iterations,
        final_residual: residual,
        converged,
        kept_indices: p_opt.map(|_| kept_ranked),
    })
}

/// Penalized Gaussian covariance estimator: solves the fixed point of the
/// `alpha`-blended Gaussian likelihood with a covariance-scale penalty by
/// matrix-exponential iteration. Unlike the scatter family the output keeps
/// its scale (no trace normalization).
pub fn reg_cg_cov<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    cg_engine(prior, batch, config, None)
}

/// Outlier-rejecting variant of [`reg_cg_cov`]: ranks samples by their
/// Gaussian likelihood contribution `tau - ln(tau)/2` under the current
/// iterate and keeps the fraction `config.p` with the smallest values.
pub fn reg_pcg_cov<S: Scalar>(
    prior: &HpdMatrix<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
) -> Result<EstimateResult<S>, EstimError> {
    cg_engine(prior, batch, config, Some(config.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hpd, random_unitary, rng};
    use num_complex::Complex64;


    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gaussian batch with scatter `sigma`, reproducible from `seed`.
    fn gaussian_batch<S: Scalar>(sigma: &HpdMatrix<S>, n: usize, seed: u64) -> SampleBatch<S> {
        let d = sigma.dim();
        let ch = sigma.cholesky().unwrap();
        let mut r = rng(seed);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let g: Vec<S> = (0..d).map(|_| S::standard_normal(&mut r)).collect();
            for i in 0..d {
                let mut acc = S::zero();
                for (j, &gj) in g.iter().enumerate().take(i + 1) {
                    acc += ch.factor()[(i, j)] * gj;
                }
                data.push(acc);
            }
        }
        SampleBatch::from_flat(d, data).unwrap()
    }

    #[test]
    fn batch_validation() {
        assert!(matches!(
            SampleBatch::<f64>::from_rows(&[]),
            Err(EstimError::EmptyBatch)
        ));
        assert!(matches!(
            SampleBatch::from_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(EstimError::RaggedBatch {
                index: 1,
                expected: 2,
                actual: 1
            })
        ));
        assert!(matches!(
            SampleBatch::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]),
            Err(EstimError::ZeroSample { index: 1 })
        ));
        assert!(matches!(
            SampleBatch::from_rows(&[vec![1.0, f64::NAN]]),
            Err(EstimError::Mat(crate::MatError::NonFinite))
        ));
        let b = SampleBatch::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!((b.dim(), b.len()), (2, 2));
        assert_eq!(b.sample(1), &[3.0, 4.0]);
    }

    #[test]
    fn config_validation() {
        let prior = HpdMatrix::<f64>::identity(2);
        let batch = SampleBatch::from_rows(&[vec![1.0, 0.0]]).unwrap();
        for bad in [
            EstimatorConfig {
                alpha: -0.1,
                ..EstimatorConfig::new(0.0)
            },
            EstimatorConfig {
                alpha: 1.5,
                ..EstimatorConfig::new(0.0)
            },
            EstimatorConfig {
                p: 0.0,
                ..EstimatorConfig::new(0.5)
            },
            EstimatorConfig {
                eps: 0.0,
                ..EstimatorConfig::new(0.5)
            },
            EstimatorConfig {
                k_max: 0,
                ..EstimatorConfig::new(0.5)
            },
        ] {
            assert!(matches!(
                reg_tyler(&prior, &batch, &bad),
                Err(EstimError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let prior = HpdMatrix::<f64>::identity(3);
        let batch = SampleBatch::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            reg_tyler(&prior, &batch, &EstimatorConfig::new(0.5)),
            Err(EstimError::DimensionMismatch { prior: 3, batch: 2 })
        ));
    }

    #[test]
    fn kept_count_guards_rounding() {
        assert_eq!(kept_count(0.75, 8), 6);
        assert_eq!(kept_count(0.1, 10), 1); // 0.1 * 10 is 1.0000000000000002
        assert_eq!(kept_count(0.75, 11), 9); // ceil(8.25)
        assert_eq!(kept_count(1.0, 13), 13);
        assert_eq!(kept_count(1e-9, 5), 1); // clamped up
    }

    #[test]
    fn remap_hand_values_and_exact_endpoints() {
        assert_eq!(alpha_remap_complex(0.0, 8), 0.0);
        assert_eq!(alpha_remap_complex(1.0, 8), 1.0);
        assert_eq!(alpha_remap_complex(1.0, 3), 1.0);
        let got = alpha_remap_complex(0.5, 8);
        assert!((got - 3.5 / 7.25).abs() < 1e-16);
    }

    #[test]
    fn scm_blend_hand_value() {
        // prior = I, samples (2,0) and (0,1), alpha = 1/2:
        // (1/2) I + (1/2) diag((4 + 0)/2, (0 + 1)/2) = diag(1.5, 0.75).
        let prior = HpdMatrix::<f64>::identity(2);
        let batch = SampleBatch::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = reg_scm(&prior, &batch, &EstimatorConfig::new(0.5)).unwrap();
        assert_eq!(out.matrix.as_mat(), &Mat::from_diag(&[1.5, 0.75]));
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert_eq!(out.kept_indices, None);
    }

    #[test]
    fn tyler_alpha_zero_returns_normalized_prior() {
        let mut r = rng(101);
        let prior = random_hpd::<Complex64, _>(4, &mut r);
        let batch = gaussian_batch(&HpdMatrix::identity(4), 10, 1);
        let out = reg_tyler(&prior, &batch, &EstimatorConfig::new(0.0)).unwrap();
        assert_eq!(out.matrix.as_mat(), prior.trace_normalized().as_mat());
        assert_eq!(out.iterations, 1);
        assert_eq!(out.final_residual, 0.0);
        assert!(out.converged);
    }

    #[test]
    fn cg_alpha_zero_returns_prior_exactly() {
        let mut r = rng(102);
        let prior = random_hpd::<Complex64, _>(3, &mut r);
        let batch = gaussian_batch(&HpdMatrix::identity(3), 8, 2);
        let out = reg_cg_cov(&prior, &batch, &EstimatorConfig::cg(0.0)).unwrap();
        assert_eq!(out.matrix.as_mat(), prior.as_mat());
        assert!(out.converged);
    }

    #[test]
    fn tyler_alpha_one_solves_classic_fixed_point() {
        // At alpha = 1 the iterate must satisfy R = c * sum x x^H / (x^H R^{-1} x)
        // after trace normalization.
        let mut r = rng(103);
        let sigma = random_hpd::<Complex64, _>(3, &mut r);
        let batch = gaussian_batch(&sigma, 60, 3);
        let out = reg_tyler(
            &HpdMatrix::identity(3),
            &batch,
            &EstimatorConfig::new(1.0),
        )
        .unwrap();
        assert!(out.converged, "residual {}", out.final_residual);
        let est = &out.matrix;
        let ch = est.cholesky().unwrap();
        let mut picard = Mat::<Complex64>::zeros(3);
        for x in batch.iter() {
            picard.add_outer_scaled(x, 1.0 / ch.quad_form_inv(x));
        }
        let picard = picard.scale(1.0 / picard.trace_re());
        assert!(
            picard.frob_dist(est.as_mat()) < 1e-4,
            "distance {}",
            picard.frob_dist(est.as_mat())
        );
        assert!((est.as_mat().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_alpha_one_solves_gaussian_fixed_point() {
        // At alpha = 1: Sigma = gain * (1/n) sum (1 - 1/(2 tau)) x x^H.
        let mut r = rng(104);
        let sigma = random_hpd::<Complex64, _>(3, &mut r);
        let batch = gaussian_batch(&sigma, 50, 4);
        let out = reg_cg_cov(
            &HpdMatrix::identity(3),
            &batch,
            &EstimatorConfig::cg(1.0),
        )
        .unwrap();
        assert!(out.converged);
        let est = &out.matrix;
        let ch = est.cholesky().unwrap();
        let gain = 1.0 / (1.0 - 1.0 / 6.0);
        let mut picard = Mat::<Complex64>::zeros(3);
        for x in batch.iter() {
            let tau = ch.quad_form_inv(x);
            picard.add_outer_scaled(x, gain * (1.0 - 1.0 / (2.0 * tau)) / 50.0);
        }
        let rel = picard.frob_dist(est.as_mat()) / est.as_mat().frob_norm();
        assert!(rel < 1e-3, "relative fixed-point gap {rel}");
    }

    #[test]
    fn partial_variants_with_full_keep_match_bitwise() {
        let mut r = rng(105);
        let sigma = random_hpd::<Complex64, _>(4, &mut r);
        let prior = random_hpd::<Complex64, _>(4, &mut r);
        let batch = gaussian_batch(&sigma, 12, 5);
        let config = EstimatorConfig {
            p: 1.0,
            ..EstimatorConfig::new(0.4)
        };

        let full = reg_tyler(&prior, &batch, &config).unwrap();
        let part = reg_ptyler(&prior, &batch, &config).unwrap();
        assert_eq!(full.matrix.as_mat(), part.matrix.as_mat());
        assert_eq!(full.iterations, part.iterations);
        assert_eq!(part.kept_indices.as_ref().unwrap().len(), 12);

        let cfg_cg = EstimatorConfig {
            p: 1.0,
            ..EstimatorConfig::cg(0.4)
        };
        let full = reg_cg_cov(&prior, &batch, &cfg_cg).unwrap();
        let part = reg_pcg_cov(&prior, &batch, &cfg_cg).unwrap();
        assert_eq!(full.matrix.as_mat(), part.matrix.as_mat());

        let full = reg_scm(&prior, &batch, &config).unwrap();
        let part = reg_partial_scm(&prior, &batch, &config).unwrap();
        assert_eq!(full.matrix.as_mat(), part.matrix.as_mat());
        assert_eq!(part.iterations, 1);
        assert!(part.converged);
    }

    #[test]
    fn real_field_matches_structure_of_complex_path() {
        // Smoke test of the real-field Monte-Carlo expectation inside the
        // scatter iteration: converges, unit trace, deterministic in seed.
        let mut r = rng(106);
        let sigma = random_hpd::<f64, _>(3, &mut r);
        let batch = gaussian_batch(&sigma, 40, 6);
        let config = EstimatorConfig {
            mc_samples: 5000,
            ..EstimatorConfig::new(0.5)
        };
        let a = reg_tyler(&HpdMatrix::identity(3), &batch, &config).unwrap();
        let b = reg_tyler(&HpdMatrix::identity(3), &batch, &config).unwrap();
        assert!(a.converged, "residual {}", a.final_residual);
        assert_eq!(a.matrix.as_mat(), b.matrix.as_mat());
        assert!((a.matrix.as_mat().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_field_rejects_insufficient_mc_samples() {
        let batch = SampleBatch::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]).unwrap();
        let config = EstimatorConfig {
            mc_samples: 10,
            ..EstimatorConfig::new(0.5)
        };
        assert!(matches!(
            reg_tyler(&HpdMatrix::<f64>::identity(2), &batch, &config),
            Err(EstimError::InvalidConfig(_))
        ));
    }

    #[test]
    fn partial_variants_reject_planted_outliers() {
        // Plant two huge outliers; every partial variant must drop exactly
        // those from its kept set.
        let d = 4;
        let sigma = HpdMatrix::<Complex64>::identity(d);
        let clean = gaussian_batch(&sigma, 16, 7);
        let mut rows: Vec<Vec<Complex64>> = clean.iter().map(|s| s.to_vec()).collect();
        for &i in &[3usize, 11] {
            for z in rows[i].iter_mut() {
                *z = z.scale(40.0);
            }
        }
        let batch = SampleBatch::from_rows(&rows).unwrap();
        let config = EstimatorConfig {
            p: 0.75,
            ..EstimatorConfig::new(0.5)
        };

        for out in [
            reg_ptyler(&sigma, &batch, &config).unwrap(),
            reg_partial_scm(&sigma, &batch, &config).unwrap(),
            reg_pcg_cov(
                &sigma,
                &batch,
                &EstimatorConfig {
                    p: 0.75,
                    ..EstimatorConfig::cg(0.5)
                },
            )
            .unwrap(),
        ] {
            let kept = out.kept_indices.unwrap();
            assert_eq!(kept.len(), 12);
            assert!(!kept.contains(&3), "kept {kept:?}");
            assert!(!kept.contains(&11), "kept {kept:?}");
        }
    }

    #[test]
    fn cg_init_rejects_rank_deficient_data_only_blend() {
        // alpha = 1 with fewer samples than dimensions: the initial blend is
        // singular.
        let batch = SampleBatch::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        assert!(matches!(
            reg_cg_cov(
                &HpdMatrix::<Complex64>::identity(3),
                &batch,
                &EstimatorConfig::cg(1.0)
            ),
            Err(EstimError::IndefiniteInit)
        ));
    }

    #[test]
    fn cg_flags_indefinite_update_targets() {
        // One large sample inflates the initial blend along the second
        // coordinate; the partial ranking then drops it and keeps only
        // samples whose small quadratic forms carry strongly negative
        // likelihood weights, so the update target loses definiteness.
        let mut rows = vec![vec![0.0, 30.0]];
        rows.extend(core::iter::repeat_n(vec![1e-3, 4.0], 4));
        let batch = SampleBatch::from_rows(&rows).unwrap();
        let out = reg_pcg_cov(
            &HpdMatrix::<f64>::identity(2),
            &batch,
            &EstimatorConfig {
                p: 0.8,
                ..EstimatorConfig::cg(0.9)
            },
        );
        assert!(
            matches!(
                out,
                Err(EstimError::IndefiniteUpdate {
                    iteration: 1,
                    min_weight
                }) if min_weight < 0.0
            ),
            "got {out:?}"
        );
    }

    #[test]
    fn unitary_equivariance_of_scatter_estimate() {
        // Rotating prior and data must rotate the estimate.
        let mut r = rng(107);
        let d = 3;
        let sigma = random_hpd::<Complex64, _>(d, &mut r);
        let prior = random_hpd::<Complex64, _>(d, &mut r);
        let batch = gaussian_batch(&sigma, 25, 8);
        let q = random_unitary::<Complex64, _>(d, &mut r);
        let config = EstimatorConfig::new(0.6);

        let plain = reg_tyler(&prior, &batch, &config).unwrap();

        let prior_q = HpdMatrix::new(q.matmul(prior.as_mat()).matmul(&q.adjoint())).unwrap();
        let rows_q: Vec<Vec<Complex64>> = batch.iter().map(|x| q.mul_vec(x)).collect();
        let batch_q = SampleBatch::from_rows(&rows_q).unwrap();
        let rotated = reg_tyler(&prior_q, &batch_q, &config).unwrap();

        let expected = q.matmul(plain.matrix.as_mat()).matmul(&q.adjoint());
        assert!(
            rotated.matrix.as_mat().frob_dist(&expected) < 1e-9,
            "equivariance gap {}",
            rotated.matrix.as_mat().frob_dist(&expected)
        );
    }

    #[test]
    fn det_one_normalization_gives_unit_determinant() {
        let mut r = rng(108);
        let sigma = random_hpd::<Complex64, _>(3, &mut r);
        let batch = gaussian_batch(&sigma, 30, 9);
        let config = EstimatorConfig {
            normalization: Normalization::DetOne,
            ..EstimatorConfig::new(0.7)
        };
        let out = reg_tyler(&HpdMatrix::identity(3), &batch, &config).unwrap();
        let log_det = out.matrix.cholesky().unwrap().log_det();
        assert!(log_det.abs() < 1e-10, "log det {log_det}");
    }

    #[test]
    fn kl_hand_values_and_properties() {
        // Real, d = 1: KL(2, 1) = (2 - ln 2 - 1) / 2 = (1 - ln 2) / 2.
        let two = HpdMatrix::<f64>::scaled_identity(1, 2.0).unwrap();
        let one = HpdMatrix::<f64>::identity(1);
        let got = gaussian_kl(&two, &one).unwrap();
        assert!((got - 0.5 * (1.0 - core::f64::consts::LN_2)).abs() < 1e-15);

        // Complex doubles the divergence.
        let two_c = HpdMatrix::<Complex64>::scaled_identity(1, 2.0).unwrap();
        let one_c = HpdMatrix::<Complex64>::identity(1);
        let got_c = gaussian_kl(&two_c, &one_c).unwrap();
        assert!((got_c - (1.0 - core::f64::consts::LN_2)).abs() < 1e-15);

        // Non-negativity, zero at equality, asymmetry in general.
        let mut r = rng(109);
        let a = random_hpd::<Complex64, _>(4, &mut r);
        let b = random_hpd::<Complex64, _>(4, &mut r);
        assert!(gaussian_kl(&a, &b).unwrap() > 0.0);
        assert!(gaussian_kl(&a, &a).unwrap().abs() < 1e-12);
        assert!(matches!(
            gaussian_kl(&a, &HpdMatrix::identity(3)),
            Err(EstimError::Mat(_))
        ));
    }

    #[test]
    fn estimators_are_deterministic() {
        let mut r = rng(110);
        let sigma = random_hpd::<Complex64, _>(4, &mut r);
        let prior = random_hpd::<Complex64, _>(4, &mut r);
        let batch = gaussian_batch(&sigma, 15, 10);
        let config = EstimatorConfig {
            p: 0.8,
            ..EstimatorConfig::new(0.3)
        };
        let a = reg_ptyler(&prior, &batch, &config).unwrap();
        let b = reg_ptyler(&prior, &batch, &config).unwrap();
        assert_eq!(a.matrix.as_mat(), b.matrix.as_mat());
        assert_eq!(a.kept_indices, b.kept_indices);
    }

    #[test]
    fn shrinkage_pulls_toward_prior_as_alpha_decreases() {
        let mut r = rng(111);
        let sigma = random_hpd::<Complex64, _>(4, &mut r);
        let batch = gaussian_batch(&sigma, 10, 11);
        let prior = HpdMatrix::<Complex64>::identity(4);
        let near_prior = reg_tyler(&prior, &batch, &EstimatorConfig::new(0.1)).unwrap();
        let near_data = reg_tyler(&prior, &batch, &EstimatorConfig::new(0.95)).unwrap();
        let id = prior.trace_normalized();
        let d_prior = near_prior.matrix.as_mat().frob_dist(id.as_mat());
        let d_data = near_data.matrix.as_mat().frob_dist(id.as_mat());
        assert!(
            d_prior < d_data,
            "alpha = 0.1 distance {d_prior} vs alpha = 0.95 distance {d_data}"
        );
    }

    #[test]
    fn iterations_and_residual_reporting() {
        let mut r = rng(112);
        let sigma = random_hpd::<Complex64, _>(3, &mut r);
        let batch = gaussian_batch(&sigma, 20, 12);
        let prior = HpdMatrix::<Complex64>::identity(3);

        // A one-iteration cap cannot converge from a far prior.
        let capped = reg_tyler(
            &prior,
            &batch,
            &EstimatorConfig {
                k_max: 1,
                ..EstimatorConfig::new(0.9)
            },
        )
        .unwrap();
        assert_eq!(capped.iterations, 1);
        assert!(!capped.converged);
        assert!(capped.final_residual > 1e-9);

        let free = reg_tyler(&prior, &batch, &EstimatorConfig::new(0.9)).unwrap();
        assert!(free.converged);
        assert!(free.final_residual <= 1e-9);
        assert!(free.iterations > 1);
    }

    #[test]
    fn ranking_keys_use_batch_order_for_ties() {
        // Identical samples: ranking must keep earlier indices first.
        let rows = vec![vec![1.0, 0.0]; 5];
        let batch = SampleBatch::from_rows(&rows).unwrap();
        let out = reg_ptyler(
            &HpdMatrix::<f64>::identity(2),
            &batch,
            &EstimatorConfig {
                p: 0.6,
                alpha: 0.0,
                ..EstimatorConfig::new(0.0)
            },
        )
        .unwrap();
        assert_eq!(out.kept_indices.unwrap(), vec![0, 1, 2]);
    }
}
