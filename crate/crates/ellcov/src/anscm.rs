//! Expected normalized sample covariance of an elliptical vector.
//!
//! For a zero-mean elliptical vector `y` with scatter matrix `Sigma`, this
//! module evaluates `M = E[y y^H / (y^H y)]`. `M` shares the eigenvectors of
//! `Sigma`, has unit trace, and depends only on the shape (not the scale or
//! the radial distribution) of `Sigma`, so everything reduces to mapping the
//! spectrum of `Sigma` to the spectrum of `M`.
//!
//! Over the complex-circular field the map has a closed form in terms of
//! eigenvalue ratios. The closed form cancels catastrophically when
//! eigenvalues cluster, so every evaluation carries a running error estimate
//! and falls back to an adaptive Gauss-Legendre evaluation of the equivalent
//! one-dimensional integral
//!
//! ```text
//! mu_k = lambda_k * Int_0^inf (1 + t lambda_k)^{-2} prod_{j != k} (1 + t lambda_j)^{-1} dt
//! ```
//!
//! whenever the estimate degrades. Over the real field no closed form is
//! provided; use the Monte-Carlo evaluator.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use crate::error::AnscmError;
use crate::matlin::{HpdMatrix, Mat};
use crate::rng::{derive_seed, rng_from_seed, SeedRole};
use crate::scalar::{Field, Scalar};

/// Default relative spacing enforced by [`respace`] before the closed form.
pub const DEFAULT_SPACING: f64 = 1e-6;

/// Minimum sample count accepted by [`anscm_mc`].
pub const MIN_MC_SAMPLES: usize = 1000;

/// Absolute accuracy demanded of the closed form before falling back to
/// quadrature (the spectrum of the result lives in `(0, 1)`).
const CLOSED_FORM_ACC: f64 = 1e-13;

/// How to evaluate the normalized-covariance expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnscmMethod {
    /// Eigenvalue-ratio closed form (complex-circular field only), guarded
    /// by a numerically stable quadrature for clustered spectra.
    ClosedForm,
    /// Average of `samples` draws `y y^H / (y^H y)`, reproducible from
    /// `seed`. Works over both fields.
    MonteCarlo { samples: usize, seed: u64 },
}

fn validate_spectrum(eigs: &[f64]) -> Result<(), AnscmError> {
    if eigs.is_empty() {
        return Err(AnscmError::EmptySpectrum);
    }
    for (index, &value) in eigs.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(AnscmError::NonPositiveEigenvalue { index, value });
        }
    }
    Ok(())
}

/// Indices that sort `eigs` ascending, ties kept in input order.
fn argsort(eigs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eigs.len()).collect();
    idx.sort_by(|&a, &b| eigs[a].partial_cmp(&eigs[b]).expect("finite eigenvalues"));
    idx
}

/// Push strictly positive eigenvalues apart until every consecutive pair
/// (in ascending order) satisfies `larger >= (1 + eps_spacing) * smaller`.
///
/// Values are only ever increased, the input order of positions is kept, and
/// the map is idempotent: re-spacing an already spaced spectrum returns it
/// bit for bit.
pub fn respace(eigs: &[f64], eps_spacing: f64) -> Result<Vec<f64>, AnscmError> {
    validate_spectrum(eigs)?;
    if !(eps_spacing >= 0.0) || !eps_spacing.is_finite() {
        return Err(AnscmError::InvalidSpacing { eps: eps_spacing });
    }
    let mut out = eigs.to_vec();
    let order = argsort(eigs);
    let mut prev = out[order[0]];
    for &k in order.iter().skip(1) {
        let floor = prev * (1.0 + eps_spacing);
        if out[k] < floor {
            out[k] = floor;
        }
        prev = out[k];
    }
    Ok(out)
}

/// Closed form via eigenvalue ratios, with a per-component estimate of the
/// cancellation error. Requires pairwise distinct eigenvalues.
fn eigs_closed_form(eigs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = eigs.len();
    // c_j = prod_{k != j} 1 / (1 - lambda_k / lambda_j)
    let mut c = vec![1.0f64; d];
    for j in 0..d {
        for k in 0..d {
            if k != j {
                c[j] *= eigs[j] / (eigs[j] - eigs[k]);
            }
        }
    }
    let mut mu = vec![0.0f64; d];
    let mut err = vec![0.0f64; d];
    for i in 0..d {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        for j in 0..d {
            if j == i {
                continue;
            }
            // delta = lambda_j / lambda_i - 1, formed from the difference to
            // keep ln(1 + delta) / delta accurate for close pairs.
            let delta = (eigs[j] - eigs[i]) / eigs[i];
            let e_ij = delta.ln_1p() / delta - 1.0 / (1.0 + delta);
            let term = e_ij * c[j];
            sum += term;
            abs_sum += term.abs();
        }
        mu[i] = sum;
        err[i] = 1e-15 * abs_sum;
    }
    (mu, err)
}

/// Gauss-Legendre nodes (ascending, in `(-1, 1)`) and weights for `n` points,
/// computed by Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0f64; n];
    let mut ws = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = pk;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Evaluate all `d` integrands at `u` in `(0, 1)` and accumulate `w * f_k(u)`.
///
/// After the substitution `t = u / (1 - u)` the spectrum map becomes, for
/// each `k`,
///
/// ```text
/// mu_k = Int_0^1 lambda_k (1-u)^{d-1} / ( ((1-u) + u lambda_k)^2
///          * prod_{j != k} ((1-u) + u lambda_j) ) du
/// ```
///
/// and the product over all `j` is shared between the `d` integrands.
fn accumulate_integrands(eigs: &[f64], u: f64, w: f64, acc: &mut [f64]) {
    let d = eigs.len();
    let v = 1.0 - u;
    let mut prod_all = 1.0f64;
    for &l in eigs {
        prod_all *= v + u * l;
    }
    let common = w * v.powi(d as i32 - 1) / prod_all;
    for k in 0..d {
        acc[k] += common * eigs[k] / (v + u * eigs[k]);
    }
}

/// Adaptive vector-valued quadrature of the spectrum map: exact for every
/// spectrum including exact ties, at roughly machine-precision accuracy.
fn eigs_quadrature(eigs: &[f64]) -> Vec<f64> {
    let d = eigs.len();
    // Rescale to mean one so the integrand's length scale is order one; the
    // map itself is scale-invariant.
    let mean = eigs.iter().sum::<f64>() / d as f64;
    let lam: Vec<f64> = eigs.iter().map(|&l| l / mean).collect();

    let (x7, w7) = gauss_legendre(7);
    let (x15, w15) = gauss_legendre(15);
    let mut out = vec![0.0f64; d];

    // Depth-first bisection with a per-interval error estimate from the
    // embedded 7/15-point pair; tolerance is budgeted by interval width.
    const TOL: f64 = 1e-14;
    const MAX_DEPTH: usize = 48;
    #[allow(clippy::too_many_arguments)] // recursion kernel; the quadrature
    // rule pair travels as plain slices rather than a one-off struct
    fn recurse(
        lam: &[f64],
        a: f64,
        b: f64,
        depth: usize,
        x7: &[f64],
        w7: &[f64],
        x15: &[f64],
        w15: &[f64],
        out: &mut [f64],
    ) {
        let d = lam.len();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut i7 = vec![0.0f64; d];
        let mut i15 = vec![0.0f64; d];
        for (x, w) in x7.iter().zip(w7) {
            accumulate_integrands(lam, mid + half * x, w * half, &mut i7);
        }
        for (x, w) in x15.iter().zip(w15) {
            accumulate_integrands(lam, mid + half * x, w * half, &mut i15);
        }
        let err = i7
            .iter()
            .zip(&i15)
            .map(|(a7, a15)| (a7 - a15).abs())
            .fold(0.0f64, f64::max);
        if err <= TOL * (b - a) || depth >= MAX_DEPTH {
            for (o, v) in out.iter_mut().zip(&i15) {
                *o += v;
            }
        } else {
            recurse(lam, a, mid, depth + 1, x7, w7, x15, w15, out);
            recurse(lam, mid, b, depth + 1, x7, w7, x15, w15, out);
        }
    }
    recurse(&lam, 0.0, 1.0, 0, &x7, &w7, &x15, &w15, &mut out);
    out
}

/// Spectrum map for an ascending strictly positive spectrum, choosing the
/// evaluation automatically: the exact integral for spectra with degenerate
/// consecutive eigenvalues (ratio gap at or below `1e-14`), otherwise the
/// closed form with its cancellation guard. The output sums to one and
/// exactly tied inputs get exactly tied outputs (group averaging), so any
/// reconstruction is invariant to the basis chosen inside degenerate
/// eigenspaces.
pub(crate) fn eigs_map_stable(lam: &[f64]) -> Vec<f64> {
    debug_assert!(!lam.is_empty() && lam.iter().all(|&l| l > 0.0));
    debug_assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    let d = lam.len();
    if d == 1 {
        return vec![1.0];
    }
    let degenerate = lam.windows(2).any(|w| (w[1] - w[0]) / w[0] <= 1e-14);
    let mut mu = if degenerate {
        eigs_quadrature(lam)
    } else {
        let (cf, err) = eigs_closed_form(lam);
        if closed_form_ok(lam, &cf, &err) {
            cf
        } else {
            eigs_quadrature(lam)
        }
    };
    let inv_sum = 1.0 / mu.iter().sum::<f64>();
    for m in mu.iter_mut() {
        *m *= inv_sum;
    }
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && lam[end] == lam[start] {
            end += 1;
        }
        if end - start > 1 {
            let avg = mu[start..end].iter().sum::<f64>() / (end - start) as f64;
            for m in mu[start..end].iter_mut() {
                *m = avg;
            }
        }
        start = end;
    }
    mu
}

/// Whether a closed-form evaluation is trustworthy: finite, positive,
/// accurate per the cancellation estimate, unit sum, and ordered like the
/// input spectrum.
fn closed_form_ok(eigs: &[f64], mu: &[f64], err: &[f64]) -> bool {
    if !mu
        .iter()
        .zip(err)
        .all(|(&m, &e)| m.is_finite() && m > 0.0 && e <= CLOSED_FORM_ACC)
    {
        return false;
    }
    let sum: f64 = mu.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return false;
    }
    let order = argsort(eigs);
    order
        .windows(2)
        .all(|w| mu[w[1]] >= mu[w[0]] - CLOSED_FORM_ACC)
}

/// Map the spectrum of a complex-circular scatter matrix to the spectrum of
/// its normalized-covariance expectation. The result is scale-invariant in
/// the input and sums to one.
///
/// Eigenvalue pairs closer than `1e-14` relative are rejected; run the
/// spectrum through [`respace`] first. Clustered-but-distinct spectra are
/// handled by an internal numerically stable evaluation.
pub fn anscm_eigs_complex(eigs: &[f64]) -> Result<Vec<f64>, AnscmError> {
    validate_spectrum(eigs)?;
    let d = eigs.len();
    if d == 1 {
        return Ok(vec![1.0]);
    }
    let order = argsort(eigs);
    for w in order.windows(2) {
        let (lo, hi) = (eigs[w[0]], eigs[w[1]]);
        let gap = (hi - lo) / lo;
        if gap <= 1e-14 {
            return Err(AnscmError::DegenerateEigenvalues {
                i: w[0],
                j: w[1],
                gap,
            });
        }
    }
    let (mu, err) = eigs_closed_form(eigs);
    let mut mu = if closed_form_ok(eigs, &mu, &err) {
        mu
    } else {
        eigs_quadrature(eigs)
    };
    let inv_sum = 1.0 / mu.iter().sum::<f64>();
    for m in mu.iter_mut() {
        *m *= inv_sum;
    }
    Ok(mu)
}

/// Spectrum map over the real field in the eigenbasis, by Monte Carlo with
/// the squared coordinates of `y` Rao-Blackwellized onto the given
/// eigenvalues: each sample contributes `lambda_k z_k^2 / sum_j lambda_j z_j^2`.
///
/// `eigs` must be ascending (as produced by the eigendecomposition); tied
/// eigenvalues (relative gap below `1e-8`) get identical outputs by group
/// averaging, which keeps estimators built on top exactly rotation
/// equivariant on degenerate subspaces. The caller supplies a fully derived
/// seed. The output is ascending and sums to one.
pub(crate) fn anscm_eigs_mc(eigs: &[f64], samples: usize, seed: u64) -> Vec<f64> {
    debug_assert!(!eigs.is_empty() && samples > 0);
    debug_assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
    let d = eigs.len();
    let mut rng = rng_from_seed(seed);
    let mut acc = vec![0.0f64; d];
    let mut zsq = vec![0.0f64; d];
    for _ in 0..samples {
        let mut denom = 0.0;
        for (z, &l) in zsq.iter_mut().zip(eigs) {
            let g: f64 = <f64 as Scalar>::standard_normal(&mut rng);
            *z = l * g * g;
            denom += *z;
        }
        if denom <= 0.0 {
            continue;
        }
        let inv = 1.0 / denom;
        for (a, &z) in acc.iter_mut().zip(&zsq) {
            *a += z * inv;
        }
    }
    // Group-average numerically tied eigenvalues.
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eigs[end] - eigs[end - 1] <= 1e-8 * eigs[end - 1] {
            end += 1;
        }
        if end - start > 1 {
            let avg = acc[start..end].iter().sum::<f64>() / (end - start) as f64;
            for a in acc[start..end].iter_mut() {
                *a = avg;
            }
        }
        start = end;
    }
    // Enforce the ascending order the exact map guarantees (Monte-Carlo
    // noise on close-but-untied eigenvalues can locally invert it).
    for k in 1..d {
        if acc[k] < acc[k - 1] {
            acc[k] = acc[k - 1];
        }
    }
    let inv_sum = 1.0 / acc.iter().sum::<f64>();
    for a in acc.iter_mut() {
        *a *= inv_sum;
    }
    acc
}

/// Monte-Carlo evaluation of `E[y y^H / (y^H y)]` for `y` drawn Gaussian
/// with scatter `sigma`, averaged over `samples` draws from a stream
/// reproducible from `seed`. Works over both fields; the result has unit
/// trace and is validated positive definite.
pub fn anscm_mc<S: Scalar>(
    sigma: &HpdMatrix<S>,
    samples: usize,
    seed: u64,
) -> Result<HpdMatrix<S>, AnscmError> {
    if samples < MIN_MC_SAMPLES {
        return Err(AnscmError::TooFewSamples {
            given: samples,
            min: MIN_MC_SAMPLES,
        });
    }
    let d = sigma.dim();
    let chol = sigma.cholesky()?;
    let mut rng = rng_from_seed(derive_seed(seed, SeedRole::AnscmMc, &[]));
    let mut acc = Mat::<S>::zeros(d);
    let mut g = vec![S::zero(); d];
    let mut y = vec![S::zero(); d];
    for _ in 0..samples {
        for gi in g.iter_mut() {
            *gi = S::standard_normal(&mut rng);
        }
        // y = L g for the Cholesky factor L of sigma.
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = S::zero();
            for (j, &gj) in g.iter().enumerate().take(i + 1) {
                s += chol.factor()[(i, j)] * gj;
            }
            *yi = s;
        }
        let norm_sq: f64 = y.iter().map(|z| z.abs_sq()).sum();
        if norm_sq <= 0.0 {
            continue;
        }
        acc.add_outer_scaled(&y, 1.0 / norm_sq);
    }
    let avg = acc.scale(1.0 / samples as f64).hermitian_part();
    let normalized = avg.scale(1.0 / avg.trace_re());
    Ok(HpdMatrix::new(normalized)?)
}

/// Normalized-covariance expectation `E[y y^H / (y^H y)]` of an elliptical
/// vector with scatter matrix `sigma`.
///
/// With [`AnscmMethod::ClosedForm`] (complex-circular field only) the
/// trace-normalized spectrum of `sigma` is mapped through
/// [`anscm_eigs_complex`] and reassembled in the eigenbasis of `sigma`;
/// spectra with numerically degenerate eigenvalues go straight to the stable
/// integral evaluation of the same map, which handles ties exactly (so no
/// accuracy is lost to artificial eigenvalue spacing). With
/// [`AnscmMethod::MonteCarlo`] this is [`anscm_mc`].
///
/// Either way the result has unit trace, is positive definite, commutes with
/// `sigma` up to the method's accuracy, and is invariant under positive
/// rescaling of `sigma`.
pub fn anscm<S: Scalar>(
    sigma: &HpdMatrix<S>,
    method: &AnscmMethod,
) -> Result<HpdMatrix<S>, AnscmError> {
    match *method {
        AnscmMethod::MonteCarlo { samples, seed } => anscm_mc(sigma, samples, seed),
        AnscmMethod::ClosedForm => {
            if S::FIELD == Field::Real {
                return Err(AnscmError::ClosedFormRealField);
            }
            let ep = sigma.eigh();
            let trace: f64 = ep.values.iter().sum();
            let lam: Vec<f64> = ep.values.iter().map(|&l| l / trace).collect();
            let mu = eigs_map_stable(&lam);
            let m = Mat::herm_reconstruct(&ep.vectors, &mu);
            let normalized = m.scale(1.0 / m.trace_re());
            Ok(HpdMatrix::new_unchecked(normalized))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hpd, rng};
    use num_complex::Complex64;

    const LN2: f64 = core::f64::consts::LN_2;

    #[test]
    fn respace_spreads_clustered_values_upward() {
        let out = respace(&[2.0, 1.0, 1.0000001], 1e-3).unwrap();
        assert_eq!(out[0], 2.0);
        assert_eq!(out[1], 1.0);
        assert!((out[2] - 1.001).abs() < 1e-15);
    }

    #[test]
    fn respace_orders_exact_ties_by_position() {
        let eps = 1e-6;
        let out = respace(&[1.0, 1.0, 1.0], eps).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 1.0 + eps);
        assert_eq!(out[2], (1.0 + eps) * (1.0 + eps));
    }

    #[test]
    fn respace_is_idempotent_bitwise() {
        let once = respace(&[0.3, 0.1, 0.100000001, 0.5, 0.1], 1e-6).unwrap();
        let twice = respace(&once, 1e-6).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn respace_leaves_spaced_spectra_untouched() {
        let eigs = [0.125, 0.5, 2.0];
        assert_eq!(respace(&eigs, 1e-6).unwrap(), eigs.to_vec());
    }

    #[test]
    fn respace_validates_input() {
        assert!(matches!(respace(&[], 1e-6), Err(AnscmError::EmptySpectrum)));
        assert!(matches!(
            respace(&[1.0, 0.0], 1e-6),
            Err(AnscmError::NonPositiveEigenvalue { index: 1, .. })
        ));
        assert!(matches!(
            respace(&[1.0], -1.0),
            Err(AnscmError::InvalidSpacing { .. })
        ));
    }

    #[test]
    fn eigs_map_matches_two_dimensional_hand_solution() {
        // For eigenvalues (1, 2): mu = (2 ln 2 - 1, 2 - 2 ln 2).
        let mu = anscm_eigs_complex(&[1.0, 2.0]).unwrap();
        assert!((mu[0] - (2.0 * LN2 - 1.0)).abs() < 1e-14);
        assert!((mu[1] - (2.0 - 2.0 * LN2)).abs() < 1e-14);
    }

    #[test]
    fn eigs_map_is_scale_invariant() {
        let a = anscm_eigs_complex(&[1.0, 2.0]).unwrap();
        let b = anscm_eigs_complex(&[4.0, 8.0]).unwrap();
        assert_eq!(a, b);
        let c = anscm_eigs_complex(&[core::f64::consts::PI, 2.0 * core::f64::consts::PI]).unwrap();
        assert!((a[0] - c[0]).abs() < 1e-13);
    }

    #[test]
    fn eigs_map_rejects_degenerate_pairs() {
        assert!(matches!(
            anscm_eigs_complex(&[1.0, 1.0]),
            Err(AnscmError::DegenerateEigenvalues { .. })
        ));
        assert!(matches!(
            anscm_eigs_complex(&[2.0, 1.0, 1.0 + 1e-15]),
            Err(AnscmError::DegenerateEigenvalues { .. })
        ));
    }

    #[test]
    fn eigs_map_single_eigenvalue_is_one() {
        assert_eq!(anscm_eigs_complex(&[7.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn quadrature_matches_hand_solution_and_ties() {
        let q = eigs_quadrature(&[1.0, 2.0]);
        assert!((q[0] - (2.0 * LN2 - 1.0)).abs() < 1e-13);
        assert!((q[1] - (2.0 - 2.0 * LN2)).abs() < 1e-13);

        let t = eigs_quadrature(&[0.5; 8]);
        for &m in &t {
            assert!((m - 0.125).abs() < 1e-13);
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_form_on_spread_spectra() {
        // Two independent evaluations of the same map must coincide.
        let eigs = [0.05, 0.2, 0.3, 0.45];
        let (cf, err) = eigs_closed_form(&eigs);
        assert!(closed_form_ok(&eigs, &cf, &err));
        let q = eigs_quadrature(&eigs);
        for (a, b) in cf.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12, "closed {a:e} vs quad {b:e}");
        }
    }

    #[test]
    fn eigs_map_survives_tight_clusters() {
        // A four-fold cluster defeats the ratio form; the guarded path must
        // still produce the uniform answer.
        let spaced = respace(&[1.0, 1.0, 1.0, 1.0], DEFAULT_SPACING).unwrap();
        let mu = anscm_eigs_complex(&spaced).unwrap();
        for &m in &mu {
            assert!((m - 0.25).abs() < 1e-6, "mu = {mu:?}");
        }
        let sum: f64 = mu.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_map_identity_gives_scaled_identity() {
        for d in [2usize, 3, 8] {
            let m = anscm(&HpdMatrix::<Complex64>::identity(d), &AnscmMethod::ClosedForm).unwrap();
            let want = Mat::<Complex64>::identity(d).scale(1.0 / d as f64);
            assert!(
                m.as_mat().frob_dist(&want) < 1e-12,
                "d = {d}: {:?}",
                m.as_mat()
            );
        }
    }

    #[test]
    fn matrix_map_diagonal_matches_eigenvalue_map() {
        let sigma = HpdMatrix::<Complex64>::new(Mat::from_diag(&[1.0, 2.0])).unwrap();
        let m = anscm(&sigma, &AnscmMethod::ClosedForm).unwrap();
        assert!((m.as_mat()[(0, 0)].re - (2.0 * LN2 - 1.0)).abs() < 1e-13);
        assert!((m.as_mat()[(1, 1)].re - (2.0 - 2.0 * LN2)).abs() < 1e-13);
        assert!(m.as_mat()[(0, 1)].norm() < 1e-15);
        assert!((m.as_mat().trace_re() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn matrix_map_power_of_two_rescale_is_bitwise_invariant() {
        let mut r = rng(91);
        let sigma = random_hpd::<Complex64, _>(5, &mut r);
        let scaled = HpdMatrix::new(sigma.as_mat().scale(4.0)).unwrap();
        let a = anscm(&sigma, &AnscmMethod::ClosedForm).unwrap();
        let b = anscm(&scaled, &AnscmMethod::ClosedForm).unwrap();
        assert_eq!(a.as_mat(), b.as_mat());
    }

    #[test]
    fn matrix_map_general_rescale_is_invariant_to_tolerance() {
        let mut r = rng(92);
        let sigma = random_hpd::<Complex64, _>(5, &mut r);
        let scaled = HpdMatrix::new(sigma.as_mat().scale(core::f64::consts::E)).unwrap();
        let a = anscm(&sigma, &AnscmMethod::ClosedForm).unwrap();
        let b = anscm(&scaled, &AnscmMethod::ClosedForm).unwrap();
        assert!(a.as_mat().frob_dist(b.as_mat()) < 1e-12);
    }

    #[test]
    fn matrix_map_commutes_with_input_and_orders_like_it() {
        let mut r = rng(93);
        let sigma = random_hpd::<Complex64, _>(6, &mut r);
        let m = anscm(&sigma, &AnscmMethod::ClosedForm).unwrap();
        let sm = sigma.as_mat().matmul(m.as_mat());
        let ms = m.as_mat().matmul(sigma.as_mat());
        assert!(sm.frob_dist(&ms) < 1e-11 * sigma.as_mat().frob_norm());
        let mu = m.eigh().values;
        assert!(mu.windows(2).all(|w| w[0] <= w[1]));
        assert!((m.as_mat().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_rejects_real_field() {
        let sigma = HpdMatrix::<f64>::identity(3);
        assert!(matches!(
            anscm(&sigma, &AnscmMethod::ClosedForm),
            Err(AnscmError::ClosedFormRealField)
        ));
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let mut r = rng(94);
        let sigma = random_hpd::<Complex64, _>(4, &mut r);
        let exact = anscm(&sigma, &AnscmMethod::ClosedForm).unwrap();
        let mc = anscm(
            &sigma,
            &AnscmMethod::MonteCarlo {
                samples: 200_000,
                seed: 7,
            },
        )
        .unwrap();
        let dist = exact.as_mat().frob_dist(mc.as_mat());
        assert!(dist < 0.02, "closed-form vs Monte-Carlo distance {dist}");
    }

    #[test]
    fn monte_carlo_is_reproducible_and_seed_sensitive() {
        let sigma = HpdMatrix::<Complex64>::identity(3);
        let method = AnscmMethod::MonteCarlo {
            samples: 2000,
            seed: 5,
        };
        let a = anscm(&sigma, &method).unwrap();
        let b = anscm(&sigma, &method).unwrap();
        assert_eq!(a.as_mat(), b.as_mat());
        let c = anscm(
            &sigma,
            &AnscmMethod::MonteCarlo {
                samples: 2000,
                seed: 6,
            },
        )
        .unwrap();
        assert_ne!(a.as_mat(), c.as_mat());
    }

    #[test]
    fn monte_carlo_real_field_identity() {
        let sigma = HpdMatrix::<f64>::identity(4);
        let m = anscm_mc(&sigma, 100_000, 3).unwrap();
        let want = Mat::<f64>::identity(4).scale(0.25);
        assert!(m.as_mat().frob_dist(&want) < 0.02);
        assert!((m.as_mat().trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_real_identity_tightens_with_samples() {
        let sigma = HpdMatrix::<f64>::identity(2);
        let m = anscm_mc(&sigma, 1_000_000, 9).unwrap();
        let want = Mat::<f64>::identity(2).scale(0.5);
        let mut dev: f64 = 0.0;
        for r in 0..2 {
            for s in 0..2 {
                dev = dev.max((m.as_mat()[(r, s)] - want[(r, s)]).abs());
            }
        }
        assert!(dev < 2e-3, "max entry deviation {dev}");
    }

    #[test]
    fn monte_carlo_real_diagonal_orders_weights() {
        let sigma = HpdMatrix::<f64>::new(Mat::from_diag(&[1.0, 4.0])).unwrap();
        let m = anscm_mc(&sigma, 1_000_000, 13).unwrap();
        let a = m.as_mat();
        assert!(a[(0, 1)].abs() < 3e-3, "off-diagonal {}", a[(0, 1)]);
        assert!(
            a[(1, 1)] > a[(0, 0)],
            "larger eigenvalue must keep the larger weight"
        );
        assert!((a.trace_re() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_conjugates_like_its_argument() {
        // Conjugating the scatter by a unitary moves the Monte-Carlo output
        // by the same conjugation, up to twice the sampling noise of either
        // run (the two runs draw different samples of identical law).
        let mut r = rng(57);
        let sigma = random_hpd::<Complex64, _>(3, &mut r);
        let q = crate::test_util::random_unitary::<Complex64, _>(3, &mut r);
        let rotated =
            HpdMatrix::new(q.matmul(sigma.as_mat()).matmul(&q.adjoint())).unwrap();

        let samples = 400_000;
        let base = anscm_mc(&sigma, samples, 31).unwrap();
        let moved = anscm_mc(&rotated, samples, 32).unwrap();
        let expect = q.matmul(base.as_mat()).matmul(&q.adjoint());

        // Calibrate the tolerance from the observed noise of an independent
        // repeat of the base run.
        let repeat = anscm_mc(&sigma, samples, 33).unwrap();
        let noise = base.as_mat().frob_dist(repeat.as_mat());
        let dist = moved.as_mat().frob_dist(&expect);
        assert!(
            dist < (2.0 * noise).max(4e-3),
            "conjugation moved the output by {dist}, sampling noise {noise}"
        );
    }

    #[test]
    fn eigs_map_commutes_with_permutations() {
        let eigs = [0.3, 2.0, 0.9, 4.5, 1.4];
        let base = anscm_eigs_complex(&eigs).unwrap();
        // Rotate and reverse the spectrum; outputs must follow their inputs.
        let perms: [[usize; 5]; 3] = [[4, 3, 2, 1, 0], [1, 2, 3, 4, 0], [2, 0, 4, 1, 3]];
        for perm in perms {
            let shuffled: Vec<f64> = perm.iter().map(|&i| eigs[i]).collect();
            let mu = anscm_eigs_complex(&shuffled).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                let rel = (mu[k] - base[i]).abs() / base[i];
                assert!(rel < 1e-13, "entry {k} (source {i}) moved by {rel:e}");
            }
        }
    }

    #[test]
    fn monte_carlo_rejects_undersampling() {
        let sigma = HpdMatrix::<Complex64>::identity(2);
        assert!(matches!(
            anscm_mc(&sigma, 10, 0),
            Err(AnscmError::TooFewSamples { given: 10, min }) if min == MIN_MC_SAMPLES
        ));
    }

    #[test]
    fn eigenbasis_mc_tracks_exact_map_and_groups_ties() {
        // Ascending spectrum with an exact tie: outputs for the tied pair
        // must be identical, the whole vector ascending with unit sum.
        let eigs = [1.0, 1.0, 2.0, 4.0];
        let mu = anscm_eigs_mc(&eigs, 200_000, 11);
        assert_eq!(mu[0], mu[1]);
        assert!(mu.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = mu.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);

        // Real-field reference for the same spectrum by a direct full-matrix
        // Monte Carlo on the diagonal scatter.
        let sigma = HpdMatrix::<f64>::new(Mat::from_diag(&eigs)).unwrap();
        let full = anscm_mc(&sigma, 200_000, 12).unwrap();
        for (k, &m) in mu.iter().enumerate() {
            assert!((m - full.as_mat()[(k, k)]).abs() < 0.01);
        }
    }

    #[test]
    fn eigenbasis_mc_is_deterministic_in_seed() {
        let eigs = [0.5, 1.5, 3.0];
        assert_eq!(
            anscm_eigs_mc(&eigs, 5000, 21),
            anscm_eigs_mc(&eigs, 5000, 21)
        );
    }
}
