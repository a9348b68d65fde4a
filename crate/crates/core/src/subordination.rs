//! Subordination solvers: `w(eps; lambda, t)`, `w(0; lambda, t)`, the
//! `Xi_t` membership test, and the scalar free-convolution oracle.

use crate::error::Error;
use crate::measure::{cauchy_transform, Measure1D};
use crate::operator::{OperatorModel, ShiftedOperator};
use crate::roots::solve_monotone;
use crate::{Result, C64};

/// Solved subordination value with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SubordinationResult {
    pub w: f64,
    /// `k(w, eps) - t` for the regularized solve, `f1(w) - 1/t` at `eps = 0`.
    pub residual: f64,
    pub iterations: u32,
    /// Meaningful only for `eps = 0`.
    pub in_xi_t: bool,
}

/// `lambda_1(mu)^2 = (int u^{-2} d mu_{|x0 - lambda|})^{-1}`, 0 when divergent.
pub fn lambda1_squared(op: &OperatorModel, lambda: C64) -> f64 {
    match op.shifted(lambda).inv_square_moment() {
        Some(m) => 1.0 / m,
        None => 0.0,
    }
}

/// `lambda` lies in `Xi_t` iff `int u^{-2} d mu_{|x0 - lambda|} > 1/t`
/// (divergent integrals count as inside).
pub fn in_xi_t(op: &OperatorModel, lambda: C64, t: f64) -> bool {
    assert!(t > 0.0, "t must be positive");
    match op.shifted(lambda).inv_square_moment() {
        Some(m) => m > 1.0 / t,
        None => true,
    }
}

/// Solves `k(w, eps) = (w - eps) / h_mu(w) = t` on `(eps, inf)` for `eps > 0`.
pub fn solve_w(op: &OperatorModel, lambda: C64, t: f64, eps: f64) -> Result<SubordinationResult> {
    assert!(t > 0.0 && eps > 0.0);
    let shifted = op.shifted(lambda);
    solve_w_shifted(&shifted, t, eps)
}

pub(crate) fn solve_w_shifted(
    shifted: &ShiftedOperator<'_>,
    t: f64,
    eps: f64,
) -> Result<SubordinationResult> {
    // k(s,eps) = (s - eps) / (s f1(s)); k' via f1' = -2 s f3
    let k = |s: f64| -> Result<f64> { Ok((s - eps) / (s * shifted.f1(s)?)) };
    let lo = eps * (1.0 + 1e-12);
    // s (s - eps) <= t at the root since h_mu(s) <= 1/s
    let mut hi = eps + t.sqrt() + 1.0;
    let mut guard = 0;
    while k(hi)? <= t {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::BracketFailure {
                context: "solve_w upper bracket",
                lo,
                hi,
                flo: k(lo)? - t,
                fhi: k(hi)? - t,
            });
        }
    }
    if k(lo)? >= t {
        return Err(Error::BracketFailure {
            context: "solve_w lower bracket",
            lo,
            hi,
            flo: k(lo)? - t,
            fhi: k(hi)? - t,
        });
    }
    let root = solve_monotone(
        |s| (s - eps) / (s * shifted.f1(s).expect("f1 finite for s > 0")) - t,
        |s| {
            let (f1, f3) = shifted.f1_f3(s).expect("functionals finite for s > 0");
            let h = s * f1;
            let hprime = f1 - 2.0 * s * s * f3;
            (h - (s - eps) * hprime) / (h * h)
        },
        lo,
        hi,
        1e-3,
        1e-13,
        200,
    );
    Ok(SubordinationResult {
        w: root.x,
        residual: root.residual,
        iterations: root.iterations,
        in_xi_t: false,
    })
}

/// Solves `f1(w) = 1/t` for `lambda` in `Xi_t`; returns `w = 0` outside.
pub fn solve_w0(op: &OperatorModel, lambda: C64, t: f64) -> Result<SubordinationResult> {
    assert!(t > 0.0);
    let shifted = op.shifted(lambda);
    solve_w0_shifted(&shifted, t)
}

pub(crate) fn solve_w0_shifted(
    shifted: &ShiftedOperator<'_>,
    t: f64,
) -> Result<SubordinationResult> {
    let inside = match shifted.inv_square_moment() {
        Some(m) => m > 1.0 / t,
        None => true,
    };
    if !inside {
        return Ok(SubordinationResult {
            w: 0.0,
            residual: 0.0,
            iterations: 0,
            in_xi_t: false,
        });
    }
    // f1 is strictly decreasing in w with f1(0) > 1/t; since
    // f1(w) >= 1/(m2 + w^2) fails only past w^2 ~ t, a doubling bracket is cheap
    let mut hi = t.sqrt();
    let mut guard = 0;
    while shifted.f1(hi)? >= 1.0 / t {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::BracketFailure {
                context: "solve_w0 upper bracket",
                lo: 0.0,
                hi,
                flo: 0.0,
                fhi: shifted.f1(hi)? - 1.0 / t,
            });
        }
    }
    // -f1 is increasing; solve -f1(w) + 1/t = 0
    let root = solve_monotone(
        |w| 1.0 / t - shifted.f1(w).expect("f1 finite for w > 0"),
        |w| {
            let (_, f3) = shifted.f1_f3(w).expect("functionals finite for w > 0");
            2.0 * w * f3
        },
        0.0,
        hi,
        1e-3,
        1e-13,
        200,
    );
    Ok(SubordinationResult {
        w: root.x,
        residual: -root.residual,
        iterations: root.iterations,
        in_xi_t: true,
    })
}

/// Symmetrization `mu~(B) = (mu(B) + mu(-B)) / 2` of a measure on `[0, inf)`.
pub fn symmetrize(mu: &Measure1D) -> Result<Measure1D> {
    mu.symmetrized()
}

/// Subordination function `omega_1` of `mu_1 boxplus semicircle(t)` via the
/// Belinschi-Bercovici fixed point
/// `omega_1(z) = z + H_2(z + H_1(omega_1(z)))` with `H_2(z) = -t G_semi(z)`.
///
/// `mu1` must be symmetric; `Im z > 0`.
pub fn scalar_omega1(mu1: &Measure1D, t: f64, z: C64) -> Result<C64> {
    assert!(t > 0.0);
    assert!(z.im > 0.0, "z must be in the upper half-plane");
    let h1 = |w: C64| -> Result<C64> {
        let g = cauchy_transform(mu1, w)?;
        Ok(1.0 / g - w)
    };
    let h2 = |w: C64| {
        // -t G_semi(w) = (sqrt(w^2 - 4t) - w) / 2 with the branch G ~ 1/w
        let mut sq = (w * w - 4.0 * t).sqrt();
        if (sq.conj() * w).re < 0.0 {
            sq = -sq;
        }
        (sq - w) / 2.0
    };

    let max_iter = 100_000usize;
    let tol = 1e-13;
    let mut omega = z;
    let mut damped = false;
    let mut sign_flips = 0u32;
    let mut prev_diff_re = 0.0f64;
    for iter in 0..max_iter {
        let target = z + h2(z + h1(omega)?);
        let next = if damped { 0.5 * (omega + target) } else { target };
        let diff = next - omega;
        if diff.norm() < tol {
            return Ok(next);
        }
        // oscillation watchdog: repeated sign alternation of Re(diff)
        if !damped {
            if diff.re * prev_diff_re < 0.0 {
                sign_flips += 1;
                if sign_flips >= 10 {
                    damped = true;
                }
            } else {
                sign_flips = 0;
            }
            prev_diff_re = diff.re;
        }
        omega = next;
        if iter == max_iter - 1 {
            return Err(Error::NonConvergence(max_iter));
        }
    }
    Err(Error::NonConvergence(max_iter))
}
