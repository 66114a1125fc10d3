use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods replace the trait under std
use num_traits::Float;

use crate::matlin::Mat;
use crate::scalar::Scalar;

/// Hard cap on Jacobi sweeps. Cyclic Jacobi converges quadratically once the
/// off-diagonal mass is small; well-conditioned inputs finish in < 12 sweeps
/// even at dimension 64, so hitting the cap indicates pathological input and
/// is surfaced through the residual rather than an error.
const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// `a` must already be exactly Hermitian (see [`Mat::hermitian_part`]); it is
/// overwritten in place. Returns the eigenvalues in ascending order and the
/// matching unitary column basis. The rotation sequence is a pure function of
/// the input bits, so output is deterministic, and eigenvector columns for
/// repeated eigenvalues come out in a fixed orthonormal order (stable sort by
/// eigenvalue, then original diagonal position).
pub(crate) fn jacobi_hermitian<S: Scalar>(a: &mut Mat<S>) -> (Vec<f64>, Mat<S>) {
    let d = a.dim();
    let mut v = Mat::<S>::identity(d);
    if d > 1 {
        for sweep in 0..MAX_SWEEPS {
            // L1 off-diagonal mass of the upper triangle.
            let mut sm = 0.0f64;
            for p in 0..d - 1 {
                for q in p + 1..d {
                    sm += a[(p, q)].abs();
                }
            }
            if sm == 0.0 {
                break;
            }
            // During the first few sweeps only attack entries above a
            // threshold; afterwards rotate on everything that still matters.
            let thresh = if sweep < 3 {
                0.2 * sm / (d * d) as f64
            } else {
                0.0
            };
            let mut rotated = false;
            for p in 0..d - 1 {
                for q in p + 1..d {
                    let apq = a[(p, q)];
                    let b = apq.abs();
                    let app = a[(p, p)].re();
                    let aqq = a[(q, q)].re();
                    // Entries that can no longer influence the diagonal at
                    // working precision are flushed to zero.
                    let g = 100.0 * b;
                    if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                        a[(p, q)] = S::zero();
                        a[(q, p)] = S::zero();
                        continue;
                    }
                    if b <= thresh || b == 0.0 {
                        continue;
                    }
                    rotate(a, &mut v, p, q, apq, b, app, aqq);
                    rotated = true;
                }
            }
            if !rotated {
                break;
            }
        }
    }

    // Ascending eigenvalue order with a stable tie-break on the original
    // diagonal position.
    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a[(i, i)].re()).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::<S>::zeros(d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..d {
            vectors[(r, new_col)] = v[(r, old_col)];
        }
    }
    (values, vectors)
}

/// One unitary plane rotation zeroing `a[(p, q)]`.
///
/// Writing the off-diagonal entry as `|b| * u` with `u` a unit phase, the
/// rotation is the classic real Jacobi rotation on `(a_pp, |b|, a_qq)` with
/// the phase folded into the mixing terms:
/// `G[p][p] = c`, `G[p][q] = s*u`, `G[q][p] = -s*conj(u)`, `G[q][q] = c`.
#[allow(clippy::too_many_arguments)]
fn rotate<S: Scalar>(a: &mut Mat<S>, v: &mut Mat<S>, p: usize, q: usize, apq: S, b: f64, app: f64, aqq: f64) {
    let d = a.dim();
    let u = apq.scale(1.0 / b);
    let tau = (aqq - app) / (2.0 * b);
    // Smaller-angle root of t^2 + 2 tau t - 1 = 0; for very large |tau| the
    // direct formula would square it into overflow, so switch to the
    // asymptotic form.
    let t = if tau.abs() > 1e100 {
        1.0 / (2.0 * tau)
    } else {
        let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
        sign / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let su = u.scale(s);
    let su_conj = u.conj().scale(s);

    for k in 0..d {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = akp.scale(c) - akq * su_conj;
        let new_kq = akp * su + akq.scale(c);
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp.conj();
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq.conj();
    }
    a[(p, p)] = S::from_re(app - t * b);
    a[(q, q)] = S::from_re(aqq + t * b);
    a[(p, q)] = S::zero();
    a[(q, p)] = S::zero();

    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp.scale(c) - vkq * su_conj;
        v[(k, q)] = vkp * su + vkq.scale(c);
    }
}
