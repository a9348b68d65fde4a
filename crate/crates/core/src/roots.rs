//! Bracketed bisection + Newton polish for strictly monotone scalar equations.
//!
//! Every subordination equation in this crate reduces to a strictly
//! increasing (or decreasing) function with a known bracket, so the solver is
//! a guaranteed bisection down to a coarse width followed by Newton steps for
//! the quadratic tail.

/// Outcome of a monotone solve.
#[derive(Debug, Clone, Copy)]
pub struct MonotoneRoot {
    pub x: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Solves `f(x) = 0` for strictly increasing `f` on `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`. `df` is the derivative used for the Newton polish.
///
/// Bisects until the bracket width falls below `bisect_width`, then applies
/// Newton capped at `max_newton` steps, falling back to bisection whenever a
/// step leaves the bracket. Stops when `|f| <= residual_tol` or the step
/// stalls at floating-point resolution.
pub fn solve_monotone<F, D>(
    mut f: F,
    mut df: D,
    mut lo: f64,
    mut hi: f64,
    bisect_width: f64,
    residual_tol: f64,
    max_newton: u32,
) -> MonotoneRoot
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut iterations = 0u32;
    while hi - lo > bisect_width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..max_newton {
        iterations += 1;
        if fx.abs() <= residual_tol {
            break;
        }
        // keep the bracket current
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let mut next = if d != 0.0 && d.is_finite() {
            x - fx / d
        } else {
            0.5 * (lo + hi)
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            break;
        }
        x = next;
        fx = f(x);
    }
    MonotoneRoot {
        x,
        residual: fx,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = solve_monotone(
            |x| x * x * x - 2.0,
            |x| 3.0 * x * x,
            0.0,
            2.0,
            1e-3,
            1e-14,
            100,
        );
        assert!((r.x - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(r.residual.abs() <= 1e-14);
    }

    #[test]
    fn steep_root_stays_bracketed() {
        // f is increasing but extremely steep near the root
        let r = solve_monotone(
            |x: f64| (50.0 * (x - 1.0)).tanh(),
            |x: f64| 50.0 / (50.0 * (x - 1.0)).cosh().powi(2),
            0.0,
            3.0,
            1e-3,
            1e-13,
            200,
        );
        assert!((r.x - 1.0).abs() < 1e-10);
    }
}
