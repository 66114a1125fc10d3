//! Monte-Carlo harness for adaptive detection with sequentially estimated
//! covariance matrices.
//!
//! The harness maintains a bank of independent sequential estimation streams
//! ("states"). Each stream starts from a fixed prior, consumes `burn_in`
//! training batches of unit-covariance circular noise — optionally
//! contaminated with amplified outliers — and feeds every estimate back as
//! the prior of the next step. The post-burn-in matrices then act as the
//! adaptive filters of a matched-filter ([`DetectorKind::Mf`]) or normalized
//! matched-filter ([`DetectorKind::Nmf`]) detector:
//!
//! * [`calibrate_threshold`] takes the empirical `1 - pfa` quantile of the
//!   detection statistic over target-free cells;
//! * [`estimate_pfa`] re-measures the false-alarm rate of a given threshold
//!   on an independent set of target-free cells;
//! * [`detection_curve`] measures, for each signal-to-noise point of a grid,
//!   the fraction of target-bearing cells whose statistic exceeds the
//!   threshold.
//!
//! Every random draw derives from `master_seed` through per-role,
//! per-counter seed derivation, so any trial, batch, or stream can be
//! regenerated in isolation and results are bit-reproducible. Calibration
//! always runs on clean training streams; the detection-probability pool
//! honors the scenario's contamination model, which is how the harness
//! exposes the robustness (or fragility) of each estimator.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{DetectError, MatError};
use crate::estimators::{
    reg_cg_cov, reg_partial_scm, reg_pcg_cov, reg_ptyler, reg_scm, reg_tyler, EstimateResult,
    EstimatorConfig, SampleBatch,
};
use crate::matlin::{Cholesky, HpdMatrix};
use crate::rng::{derive_seed, rng_from_seed, SeedRole};
use crate::scalar::Scalar;

/// Estimator family driving a sequential stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum EstimatorKind {
    /// Regularized scatter fixed point ([`reg_tyler`]).
    RegTyler,
    /// Outlier-rejecting regularized scatter fixed point ([`reg_ptyler`]).
    RegPtyler,
    /// Regularized sample covariance blend ([`reg_scm`]).
    RegScm,
    /// Outlier-rejecting sample covariance blend ([`reg_partial_scm`]).
    RegPartialScm,
    /// Penalized Gaussian-likelihood covariance ([`reg_cg_cov`]).
    RegCgCov,
    /// Outlier-rejecting penalized Gaussian-likelihood covariance
    /// ([`reg_pcg_cov`]).
    RegPcgCov,
}

impl EstimatorKind {
    /// Whether the estimator returns a normalized shape matrix (the
    /// scale-free scatter family) rather than a covariance carrying the
    /// data's own scale.
    ///
    /// Shape streams start from the trace-one prior `I/d`; covariance
    /// streams start from `I`, the true noise covariance scale.
    pub fn is_shape_estimator(self) -> bool {
        matches!(self, EstimatorKind::RegTyler | EstimatorKind::RegPtyler)
    }

    /// Whether the estimator solves the penalized Gaussian likelihood (and
    /// therefore uses that family's default stopping tolerance).
    fn is_gaussian_likelihood(self) -> bool {
        matches!(self, EstimatorKind::RegCgCov | EstimatorKind::RegPcgCov)
    }

    /// Stable lowercase identifier, matching the serialized spelling.
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::RegTyler => "reg_tyler",
            EstimatorKind::RegPtyler => "reg_ptyler",
            EstimatorKind::RegScm => "reg_scm",
            EstimatorKind::RegPartialScm => "reg_partial_scm",
            EstimatorKind::RegCgCov => "reg_cg_cov",
            EstimatorKind::RegPcgCov => "reg_pcg_cov",
        }
    }

    /// Run one update of this estimator kind.
    pub fn run<S: Scalar>(
        self,
        prior: &HpdMatrix<S>,
        batch: &SampleBatch<S>,
        config: &EstimatorConfig,
    ) -> Result<EstimateResult<S>, crate::error::EstimError> {
        match self {
            EstimatorKind::RegTyler => reg_tyler(prior, batch, config),
            EstimatorKind::RegPtyler => reg_ptyler(prior, batch, config),
            EstimatorKind::RegScm => reg_scm(prior, batch, config),
            EstimatorKind::RegPartialScm => reg_partial_scm(prior, batch, config),
            EstimatorKind::RegCgCov => reg_cg_cov(prior, batch, config),
            EstimatorKind::RegPcgCov => reg_pcg_cov(prior, batch, config),
        }
    }
}

/// Detection statistic applied to each test cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum DetectorKind {
    /// Matched filter `|s^H R^{-1} x|^2 / (s^H R^{-1} s)`.
    Mf,
    /// Normalized matched filter, the matched filter further divided by
    /// `x^H R^{-1} x`; invariant to the overall scale of both `R` and `x`.
    Nmf,
}

impl DetectorKind {
    /// Stable lowercase identifier, matching the serialized spelling.
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Mf => "mf",
            DetectorKind::Nmf => "nmf",
        }
    }
}

/// Training-data contamination model: in every batch, a fixed fraction of
/// the samples is replaced by amplified independent noise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct Contamination {
    /// Fraction of each batch to replace, in `[0, 1)`; `floor(rate *
    /// n_train)` samples (with a tolerance snap for fractions that are exact
    /// up to rounding).
    pub rate: f64,
    /// Amplitude multiplier of the replacement noise, greater than one
    /// (`2` quadruples the outlier power relative to the background).
    pub scale: f64,
}

/// Check a contamination model's parameter ranges.
fn validate_contamination(c: Contamination) -> Result<(), DetectError> {
    if !(c.rate.is_finite() && (0.0..1.0).contains(&c.rate)) {
        return Err(DetectError::InvalidScenario(format!(
            "contamination rate must lie in [0, 1), got {}",
            c.rate
        )));
    }
    if !(c.scale.is_finite() && c.scale > 1.0) {
        return Err(DetectError::InvalidScenario(format!(
            "contamination scale must exceed 1, got {}",
            c.scale
        )));
    }
    Ok(())
}

/// Complete description of one simulation: data model, estimator, detector,
/// trial counts, and the master seed all draws derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Data dimension `d`.
    pub dim: usize,
    /// Samples per training batch.
    pub n_train: usize,
    /// Blend weight between prior and data (`0` = prior only, `1` = data
    /// only).
    pub alpha: f64,
    /// Fraction of samples the outlier-rejecting estimators keep.
    pub p: f64,
    /// Estimator driving every sequential stream.
    pub estimator: EstimatorKind,
    /// Detection statistic under test.
    pub detector: DetectorKind,
    /// Steering (signal signature) vector; must have unit Euclidean norm so
    /// the signal-to-noise grid fixes the injected power unambiguously.
    pub steering: Vec<Complex64>,
    /// Signal-to-noise grid, in dB, for the detection-probability curve.
    pub sinr_grid_db: Vec<f64>,
    /// Target false-alarm probability.
    pub pfa: f64,
    /// Target-free cells used to calibrate (and to re-test) the threshold.
    pub n_trials_pfa: usize,
    /// Target-bearing cells per signal-to-noise point.
    pub n_trials_pd: usize,
    /// Sequential updates each stream performs before its estimate is used;
    /// at least one.
    pub burn_in: usize,
    /// Number of independent streams; trial `t` uses stream `t % n_states`.
    pub n_states: usize,
    /// Optional training-data contamination (applied to detection streams
    /// only; calibration streams are always clean).
    pub contamination: Option<Contamination>,
    /// Master seed; every batch, trial, and outlier draw derives from it.
    pub master_seed: u64,
}

/// Unit-norm flat steering vector `(1, ..., 1) / sqrt(d)`.
pub fn default_steering(dim: usize) -> Vec<Complex64> {
    let a = 1.0 / (dim as f64).sqrt();
    alloc::vec![Complex64::new(a, 0.0); dim]
}

impl Scenario {
    /// Scenario with the stock simulation protocol: regularized scatter
    /// estimation (`alpha = 0.25`, `p = 0.75`) feeding a normalized matched
    /// filter at `pfa = 1e-2`, flat steering, a 0–25 dB grid, 128 streams of
    /// 50 burn-in batches, and no contamination.
    pub fn new(dim: usize, n_train: usize) -> Self {
        Scenario {
            dim,
            n_train,
            alpha: 0.25,
            p: 0.75,
            estimator: EstimatorKind::RegTyler,
            detector: DetectorKind::Nmf,
            steering: default_steering(dim),
            sinr_grid_db: alloc::vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            pfa: 1e-2,
            n_trials_pfa: 100_000,
            n_trials_pd: 10_000,
            burn_in: 50,
            n_states: 128,
            contamination: None,
            master_seed: 0,
        }
    }

    /// Check every field for consistency.
    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |msg: alloc::string::String| Err(DetectError::InvalidScenario(msg));
        if self.dim == 0 {
            return bad(format!("dimension must be positive, got {}", self.dim));
        }
        if self.n_train == 0 {
            return bad("training batches must hold at least one sample".into());
        }
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.p.is_finite() && self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.pfa.is_finite() && self.pfa > 0.0 && self.pfa < 1.0) {
            return bad(format!("pfa must lie in (0, 1), got {}", self.pfa));
        }
        if self.n_trials_pfa == 0 || self.n_trials_pd == 0 {
            return bad("trial counts must be positive".into());
        }
        if self.n_states == 0 {
            return bad("need at least one estimation stream".into());
        }
        if self.burn_in == 0 {
            return bad("streams need at least one burn-in update".into());
        }
        if self.steering.len() != self.dim {
            return bad(format!(
                "steering vector has {} entries, expected {}",
                self.steering.len(),
                self.dim
            ));
        }
        let norm_sq: f64 = self.steering.iter().map(|s| s.abs_sq()).sum();
        if !norm_sq.is_finite() || !self.steering.iter().all(|s| Scalar::is_finite(*s)) {
            return bad("steering vector must be finite".into());
        }
        if (norm_sq.sqrt() - 1.0).abs() > 1e-6 {
            return bad(format!(
                "steering vector must have unit norm, got {:e}",
                norm_sq.sqrt()
            ));
        }
        if self.sinr_grid_db.is_empty() {
            return bad("signal-to-noise grid must be nonempty".into());
        }
        if !self.sinr_grid_db.iter().all(|s| s.is_finite()) {
            return bad("signal-to-noise grid must be finite".into());
        }
        if let Some(c) = self.contamination {
            validate_contamination(c)?;
        }
        Ok(())
    }

    /// Estimator configuration implied by the scenario.
    fn config(&self) -> EstimatorConfig {
        let mut config = if self.estimator.is_gaussian_likelihood() {
            EstimatorConfig::cg(self.alpha)
        } else {
            EstimatorConfig::new(self.alpha)
        };
        config.p = self.p;
        config.seed = self.master_seed;
        config
    }

    /// Starting prior of every stream: `I/d` for shape estimators, `I` for
    /// covariance estimators.
    fn initial_prior(&self) -> Result<HpdMatrix<Complex64>, DetectError> {
        if self.estimator.is_shape_estimator() {
            Ok(HpdMatrix::scaled_identity(self.dim, 1.0 / self.dim as f64)?)
        } else {
            Ok(HpdMatrix::identity(self.dim))
        }
    }
}

/// One point of a detection-probability curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Signal-to-noise ratio of the injected target, in dB.
    pub sinr_db: f64,
    /// Fraction of target-bearing cells whose statistic exceeded the
    /// threshold.
    pub pd: f64,
}

/// Detection probability against signal-to-noise ratio at a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCurve {
    /// Threshold every cell was compared against.
    pub threshold: f64,
    /// Target-bearing cells measured per point.
    pub trials_per_point: usize,
    /// Measured points, in grid order.
    pub points: Vec<CurvePoint>,
}

/// Bank of post-burn-in adaptive matrices, one per independent stream.
#[derive(Debug, Clone)]
pub struct StatePool {
    matrices: Vec<HpdMatrix<Complex64>>,
}

impl StatePool {
    /// Run `scenario.n_states` independent streams for `scenario.burn_in`
    /// sequential updates each and keep the final estimates.
    ///
    /// Pass `contaminated = false` for calibration pools (always clean) and
    /// `contaminated = true` for detection pools, which honor the scenario's
    /// contamination model. With no contamination configured the flag is a
    /// no-op and both pools are identical.
    pub fn build(scenario: &Scenario, contaminated: bool) -> Result<Self, DetectError> {
        scenario.validate()?;
        let config = scenario.config();
        let mut matrices = Vec::with_capacity(scenario.n_states);
        for state in 0..scenario.n_states {
            let mut prior = scenario.initial_prior()?;
            for step in 0..scenario.burn_in {
                prior = stream_update(scenario, &config, &prior, state as u64, step, contaminated)?;
            }
            matrices.push(prior);
        }
        Ok(StatePool { matrices })
    }

    /// Number of streams in the pool.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    /// Whether the pool holds no streams.
    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Final estimate of stream `i`.
    pub fn matrix(&self, i: usize) -> &HpdMatrix<Complex64> {
        &self.matrices[i]
    }
}

/// Run one sequential stream for `n_steps` updates, returning every
/// intermediate estimate (oldest first).
///
/// The stream honors the scenario's contamination model, like the detection
/// pools do; stream `state_index` regenerates exactly the batches
/// [`StatePool::build`] sees, so a pool stream can be inspected step by step.
pub fn sequential_stream(
    scenario: &Scenario,
    state_index: u64,
    n_steps: usize,
) -> Result<Vec<HpdMatrix<Complex64>>, DetectError> {
    stream_estimates(scenario, state_index, n_steps, true)
}

/// [`sequential_stream`] with contamination explicitly enabled or suppressed
/// (calibration pools run clean even in contaminated scenarios).
fn stream_estimates(
    scenario: &Scenario,
    state_index: u64,
    n_steps: usize,
    contaminated: bool,
) -> Result<Vec<HpdMatrix<Complex64>>, DetectError> {
    scenario.validate()?;
    let config = scenario.config();
    let mut prior = scenario.initial_prior()?;
    let mut estimates = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        prior = stream_update(scenario, &config, &prior, state_index, step, contaminated)?;
        estimates.push(prior.clone());
    }
    Ok(estimates)
}

/// One estimator update along a stream: draw the step's batch, contaminate
/// it if asked, and advance the prior.
fn stream_update(
    scenario: &Scenario,
    config: &EstimatorConfig,
    prior: &HpdMatrix<Complex64>,
    state: u64,
    step: usize,
    contaminated: bool,
) -> Result<HpdMatrix<Complex64>, DetectError> {
    let batch = stream_batch(scenario, state, step as u64, contaminated)
        .map_err(|source| DetectError::StreamStep { step, source })?;
    let result = scenario
        .estimator
        .run(prior, &batch, config)
        .map_err(|source| DetectError::StreamStep { step, source })?;
    Ok(result.matrix)
}

/// Training batch of stream `state` at `step`: `n_train` unit-covariance
/// circular noise samples, contaminated when asked and configured.
fn stream_batch(
    scenario: &Scenario,
    state: u64,
    step: u64,
    contaminated: bool,
) -> Result<SampleBatch<Complex64>, crate::error::EstimError> {
    let seed = derive_seed(scenario.master_seed, SeedRole::StreamBatch, &[state, step]);
    let mut batch = gen_noise::<Complex64>(scenario.dim, scenario.n_train, seed)?;
    if contaminated {
        if let Some(c) = scenario.contamination {
            let seed = derive_seed(scenario.master_seed, SeedRole::Contaminate, &[state, step]);
            let mut crng = rng_from_seed(seed);
            contaminate_in_place(&mut batch, c, &mut crng);
        }
    }
    Ok(batch)
}

/// Batch of `n` independent samples of `dim`-variate unit-covariance noise,
/// reproducible from `seed`: standard normal when `S` is real, circular
/// standard complex normal when `S` is complex.
pub fn gen_noise<S: Scalar>(
    dim: usize,
    n: usize,
    seed: u64,
) -> Result<SampleBatch<S>, crate::error::EstimError> {
    let mut rng = rng_from_seed(seed);
    let data = draw_noise::<S, _>(&mut rng, dim * n);
    SampleBatch::from_flat(dim, data)
}

/// Draw `len` independent standard-normal scalars (circular when complex).
fn draw_noise<S: Scalar, R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<S> {
    (0..len).map(|_| S::standard_normal(rng)).collect()
}

/// Number of samples a contamination rate replaces in a batch of `n`:
/// `floor(rate * n)`, snapping to the nearest integer when the product is
/// exact up to floating-point rounding.
fn contaminated_count(rate: f64, n: usize) -> usize {
    let t = rate * n as f64;
    let r = t.round();
    let k = if (t - r).abs() <= 1e-9 * n as f64 { r } else { t.floor() };
    (k as usize).min(n)
}

/// Copy of `batch` with `floor(rate * n)` randomly chosen samples replaced
/// by noise amplified by `scale`, reproducible from `seed`; also returns the
/// indices of the replaced samples, in increasing order.
pub fn contaminate<S: Scalar>(
    batch: &SampleBatch<S>,
    c: Contamination,
    seed: u64,
) -> Result<(SampleBatch<S>, Vec<usize>), DetectError> {
    validate_contamination(c)?;
    let mut out = batch.clone();
    let mut rng = rng_from_seed(seed);
    let indices = contaminate_in_place(&mut out, c, &mut rng);
    Ok((out, indices))
}

/// Replace `floor(rate * n)` randomly chosen distinct samples of a batch
/// with fresh noise amplified by `scale`, returning the replaced indices in
/// increasing order.
fn contaminate_in_place<S: Scalar, R: Rng + ?Sized>(
    batch: &mut SampleBatch<S>,
    c: Contamination,
    rng: &mut R,
) -> Vec<usize> {
    let n = batch.len();
    let k = contaminated_count(c.rate, n);
    if k == 0 {
        return Vec::new();
    }
    let mut indices = rand::seq::index::sample(rng, n, k).into_vec();
    indices.sort_unstable();
    for &i in &indices {
        for entry in batch.sample_mut(i) {
            *entry = S::standard_normal(rng).scale(c.scale);
        }
    }
    indices
}

/// Add a fluctuating target along the unit-norm steering direction:
/// `x += a s` with `a` circular normal of power `10^(sinr_db / 10)`, the
/// amplitude drawn reproducibly from `seed`.
pub fn inject_target(
    x: &mut [Complex64],
    steering: &[Complex64],
    sinr_db: f64,
    seed: u64,
) -> Result<(), DetectError> {
    if steering.len() != x.len() {
        return Err(MatError::DimensionMismatch {
            expected: x.len(),
            actual: steering.len(),
        }
        .into());
    }
    let norm = steering.iter().map(|s| s.abs_sq()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(DetectError::InvalidScenario(format!(
            "steering vector must have unit norm, got {norm:e}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    inject_with_rng(x, steering, sinr_db, &mut rng);
    Ok(())
}

/// [`inject_target`] drawing the amplitude from a live generator (the
/// per-trial path, which shares the cell's generator).
fn inject_with_rng<R: Rng + ?Sized>(
    x: &mut [Complex64],
    unit_steering: &[Complex64],
    sinr_db: f64,
    rng: &mut R,
) {
    let power = 10f64.powf(sinr_db / 10.0);
    let a = <Complex64 as Scalar>::standard_normal(rng).scale(power.sqrt());
    for (xi, si) in x.iter_mut().zip(unit_steering) {
        *xi += a * *si;
    }
}

/// Matched-filter statistic `|s^H R^{-1} x|^2 / (s^H R^{-1} s)`.
///
/// Invariant to the scale of `s`; scales like `x` in power.
pub fn mf_stat<S: Scalar>(cov: &HpdMatrix<S>, steering: &[S], x: &[S]) -> Result<f64, DetectError> {
    let p = PreparedDetector::for_matrix(cov, steering)?;
    check_cell_dim(cov.dim(), x)?;
    Ok(p.stat(DetectorKind::Mf, x))
}

/// Normalized matched-filter statistic
/// `|s^H R^{-1} x|^2 / ((s^H R^{-1} s)(x^H R^{-1} x))`.
///
/// Invariant to the scale of `s`, of `x`, and of `R`; always in `[0, 1]`.
pub fn nmf_stat<S: Scalar>(
    cov: &HpdMatrix<S>,
    steering: &[S],
    x: &[S],
) -> Result<f64, DetectError> {
    let p = PreparedDetector::for_matrix(cov, steering)?;
    check_cell_dim(cov.dim(), x)?;
    if !(x.iter().map(|v| v.abs_sq()).sum::<f64>() > 0.0) {
        return Err(DetectError::InvalidScenario(
            "test cell must be nonzero for the normalized detector".into(),
        ));
    }
    Ok(p.stat(DetectorKind::Nmf, x))
}

fn check_cell_dim<S: Scalar>(dim: usize, x: &[S]) -> Result<(), DetectError> {
    if x.len() != dim {
        return Err(MatError::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        }
        .into());
    }
    Ok(())
}

/// One stream's adaptive matrix with the per-cell work pre-factored: the
/// Cholesky factor of `R`, the whitened steering `w = R^{-1} s`, and the
/// steering quadratic form `s^H R^{-1} s`.
struct PreparedDetector<S> {
    chol: Cholesky<S>,
    w: Vec<S>,
    s_qf: f64,
}

impl<S: Scalar> PreparedDetector<S> {
    fn for_matrix(matrix: &HpdMatrix<S>, steering: &[S]) -> Result<Self, DetectError> {
        if steering.len() != matrix.dim() {
            return Err(MatError::DimensionMismatch {
                expected: matrix.dim(),
                actual: steering.len(),
            }
            .into());
        }
        let chol = matrix.cholesky()?;
        let w = chol.solve(steering);
        let s_qf: f64 = steering
            .iter()
            .zip(&w)
            .map(|(si, wi)| (si.conj() * *wi).re())
            .sum();
        if !(s_qf > 0.0) {
            return Err(DetectError::InvalidScenario(
                "steering vector must be nonzero".into(),
            ));
        }
        Ok(PreparedDetector { chol, w, s_qf })
    }

    /// Detection statistic of one test cell.
    fn stat(&self, detector: DetectorKind, x: &[S]) -> f64 {
        // w^H x = s^H R^{-1} x because R^{-1} is Hermitian.
        let mut sx = S::zero();
        for (wi, xi) in self.w.iter().zip(x) {
            sx += wi.conj() * *xi;
        }
        let num = sx.abs_sq();
        match detector {
            DetectorKind::Mf => num / self.s_qf,
            DetectorKind::Nmf => num / (self.s_qf * self.chol.quad_form_inv(x)),
        }
    }
}

/// Pre-factor every pool matrix against the scenario's steering vector.
fn prepare_pool(
    scenario: &Scenario,
    pool: &StatePool,
) -> Result<Vec<PreparedDetector<Complex64>>, DetectError> {
    if pool.is_empty() {
        return Err(DetectError::InvalidScenario("state pool is empty".into()));
    }
    pool.matrices
        .iter()
        .map(|m| {
            if m.dim() != scenario.dim {
                return Err(MatError::DimensionMismatch {
                    expected: scenario.dim,
                    actual: m.dim(),
                }
                .into());
            }
            PreparedDetector::for_matrix(m, &scenario.steering)
        })
        .collect()
}

/// Fewest target-free cells that can resolve a false-alarm rate: `10 / pfa`.
fn min_calibration_trials(pfa: f64) -> usize {
    (10.0 / pfa).ceil() as usize
}

/// Linear-interpolation quantile of an ascending-sorted sample (the
/// convention whose order statistic `k` sits at probability `k / (n - 1)`).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let i = (h.floor() as usize).min(n - 2);
    let frac = h - i as f64;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Calibrate the detection threshold: the empirical `1 - pfa` quantile of
/// the statistic over `n_trials_pfa` target-free cells, with trial `t`
/// tested against pool stream `t % n_states`.
///
/// Fails with [`DetectError::TooFewTrials`] when `n_trials_pfa < 10 / pfa`,
/// below which the tail quantile rests on fewer than ~10 exceedances.
pub fn calibrate_threshold(scenario: &Scenario, pool: &StatePool) -> Result<f64, DetectError> {
    scenario.validate()?;
    let min = min_calibration_trials(scenario.pfa);
    if scenario.n_trials_pfa < min {
        return Err(DetectError::TooFewTrials {
            trials: scenario.n_trials_pfa,
            pfa: scenario.pfa,
            min,
        });
    }
    let prepared = prepare_pool(scenario, pool)?;
    let mut stats = Vec::with_capacity(scenario.n_trials_pfa);
    for t in 0..scenario.n_trials_pfa {
        let seed = derive_seed(
            scenario.master_seed,
            SeedRole::CalibrationTrial,
            &[t as u64],
        );
        let mut rng = rng_from_seed(seed);
        let x = draw_noise(&mut rng, scenario.dim);
        stats.push(prepared[t % prepared.len()].stat(scenario.detector, &x));
    }
    stats.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&stats, 1.0 - scenario.pfa))
}

/// Re-measure the false-alarm rate of a fixed threshold on `n_trials_pfa`
/// fresh target-free cells (independent of the calibration draws).
pub fn estimate_pfa(
    scenario: &Scenario,
    pool: &StatePool,
    threshold: f64,
) -> Result<f64, DetectError> {
    scenario.validate()?;
    let prepared = prepare_pool(scenario, pool)?;
    let mut hits = 0usize;
    for t in 0..scenario.n_trials_pfa {
        let seed = derive_seed(scenario.master_seed, SeedRole::RetestTrial, &[t as u64]);
        let mut rng = rng_from_seed(seed);
        let x = draw_noise(&mut rng, scenario.dim);
        if prepared[t % prepared.len()].stat(scenario.detector, &x) > threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / scenario.n_trials_pfa as f64)
}

/// Measure detection probability at every signal-to-noise point of the
/// scenario's grid, at a fixed threshold.
///
/// Each cell is unit-covariance noise plus a fluctuating target along the
/// steering direction; trial `t` of point `j` derives its draws from the
/// counters `(j, t)` and is tested against pool stream `t % n_states`.
pub fn detection_curve(
    scenario: &Scenario,
    pool: &StatePool,
    threshold: f64,
) -> Result<DetectionCurve, DetectError> {
    scenario.validate()?;
    let prepared = prepare_pool(scenario, pool)?;
    let mut points = Vec::with_capacity(scenario.sinr_grid_db.len());
    for (j, &sinr_db) in scenario.sinr_grid_db.iter().enumerate() {
        let mut hits = 0usize;
        for t in 0..scenario.n_trials_pd {
            let seed = derive_seed(
                scenario.master_seed,
                SeedRole::DetectionTrial,
                &[j as u64, t as u64],
            );
            let mut rng = rng_from_seed(seed);
            let mut x = draw_noise::<Complex64, _>(&mut rng, scenario.dim);
            inject_with_rng(&mut x, &scenario.steering, sinr_db, &mut rng);
            if prepared[t % prepared.len()].stat(scenario.detector, &x) > threshold {
                hits += 1;
            }
        }
        points.push(CurvePoint {
            sinr_db,
            pd: hits as f64 / scenario.n_trials_pd as f64,
        });
    }
    Ok(DetectionCurve {
        threshold,
        trials_per_point: scenario.n_trials_pd,
        points,
    })
}

/// Full pipeline: burn in a clean pool, calibrate the threshold on it, burn
/// in the detection pool (honoring contamination), and measure the curve.
pub fn run_scenario(scenario: &Scenario) -> Result<DetectionCurve, DetectError> {
    scenario.validate()?;
    let clean = StatePool::build(scenario, false)?;
    let threshold = calibrate_threshold(scenario, &clean)?;
    let detection_pool = if scenario.contamination.is_some() {
        StatePool::build(scenario, true)?
    } else {
        clean
    };
    detection_curve(scenario, &detection_pool, threshold)
}
