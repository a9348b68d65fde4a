//! Closed-form machinery for selfadjoint `x0`: the vertical-extent function
//! `v_t`, the homeomorphisms `psi_t` and `delta`, the shear `h_t`, and the
//! explicit circular/elliptic densities they produce.

use crate::error::Error;
use crate::measure::{cauchy_transform, Measure1D};
use crate::roots::solve_monotone;
use crate::{Result, C64};
use std::f64::consts::PI;

const QUAD_TOL: f64 = 1e-13;

/// `int (a - x)^{-2} d mu`; `None` when divergent (`a` carries mass).
fn inv_square_at(mu: &Measure1D, a: f64) -> Option<f64> {
    if mu.atoms().iter().any(|&(l, w)| l == a && w > 0.0) {
        return None;
    }
    let inside_positive = mu.densities().iter().any(|p| {
        if a < p.lo || a > p.hi {
            return false;
        }
        let h = p.step();
        let pos = (a - p.lo) / h;
        let idx = (pos.floor() as usize).min(p.samples.len() - 2);
        p.samples[idx] > 0.0
            || p.samples[idx + 1] > 0.0
            || (pos.fract() == 0.0 && idx > 0 && p.samples[idx - 1] > 0.0)
    });
    if inside_positive {
        return None;
    }
    Some(mu.integrate_singular(|u| 1.0 / ((u - a) * (u - a)), a, QUAD_TOL))
}

/// Vertical extent of `Xi_t` over `a`: the unique `y > 0` with
/// `int ((a - x)^2 + y^2)^{-1} d mu = 1/t`, or `0` outside `U_t`.
pub fn v_t(mu: &Measure1D, t: f64, a: f64) -> f64 {
    assert!(t > 0.0);
    let inside = match inv_square_at(mu, a) {
        Some(m) => m > 1.0 / t,
        None => true,
    };
    if !inside {
        return 0.0;
    }
    let f1 = |y: f64| mu.integrate(|u| 1.0 / ((u - a) * (u - a) + y * y));
    let mut hi = t.sqrt();
    while f1(hi) >= 1.0 / t {
        hi *= 2.0;
    }
    let root = solve_monotone(
        |y| 1.0 / t - f1(y),
        |y| {
            2.0 * y
                * mu.integrate(|u| {
                    let d = (u - a) * (u - a) + y * y;
                    1.0 / (d * d)
                })
        },
        0.0,
        hi,
        1e-3,
        1e-13,
        200,
    );
    root.x
}

/// `h_t(a) = t int (a - u) / ((a - u)^2 + v_t(a)^2) d mu`.
pub fn h_t(mu: &Measure1D, t: f64, a: f64) -> f64 {
    let v = v_t(mu, t, a);
    let f = |u: f64| (a - u) / ((a - u) * (a - u) + v * v);
    t * if v == 0.0 {
        mu.integrate_singular(f, a, QUAD_TOL)
    } else {
        mu.integrate(f)
    }
}

/// `psi_t(a) = a + h_t(a)`, an increasing homeomorphism of the real line.
pub fn psi_t(mu: &Measure1D, t: f64, a: f64) -> f64 {
    a + h_t(mu, t, a)
}

/// 5-point central-difference derivative.
fn d5<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn fd_step(a: f64) -> f64 {
    1e-3 * a.abs().max(1.0)
}

/// Brown density of `x0 + c_t` on the vertical segment over `a`:
/// `psi_t'(a) / (2 pi t)`. Errors outside `U_t`.
pub fn density_circular_sa(mu: &Measure1D, t: f64, a: f64) -> Result<f64> {
    if v_t(mu, t, a) <= 0.0 {
        return Err(Error::OutsideUt(a));
    }
    Ok(d5(|x| psi_t(mu, t, x), a, fd_step(a)) / (2.0 * PI * t))
}

/// Inverts the increasing map `f` by pure bisection (to width 1e-12).
fn invert_increasing<F: Fn(f64) -> f64>(f: F, target: f64, seed: f64, spread: f64) -> f64 {
    let mut lo = seed - spread.max(1.0);
    let mut hi = seed + spread.max(1.0);
    while f(lo) > target {
        lo -= spread.max(1.0);
    }
    while f(hi) < target {
        hi += spread.max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-12 {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Density of the free additive convolution `mu boxplus semicircle(t)` at `x`:
/// inverts `x = psi_t(a)` and returns `v_t(a) / (pi t)`.
pub fn semicircle_add_density(mu: &Measure1D, t: f64, x: f64) -> f64 {
    assert!(t > 0.0);
    let a = invert_increasing(|b| psi_t(mu, t, b), x, x, 2.0 * t.sqrt() + 1.0);
    v_t(mu, t, a) / (PI * t)
}

fn tau_parts(t: f64, gamma: C64) -> Result<(C64, f64, f64)> {
    let tau = C64::new(t, 0.0) - gamma;
    if tau.re <= 1e-15 * t {
        return Err(Error::GammaEqualsT);
    }
    Ok((tau, tau.re, tau.im))
}

/// Shear coefficient `1 - |tau|^2 / (t tau_1)` (lies in `[-1, 1]`).
fn shear(t: f64, gamma: C64) -> Result<f64> {
    let (tau, tau1, _) = tau_parts(t, gamma)?;
    Ok(1.0 - tau.norm_sqr() / (t * tau1))
}

/// Pushforward map for selfadjoint `x0`:
/// `psi_t(a) - (tau/t) h_t(a) + i tau b / t` inside `Xi_t`,
/// `lambda + gamma G_mu(lambda)` outside.
pub fn phi_sa(mu: &Measure1D, t: f64, gamma: C64, lambda: C64) -> Result<C64> {
    let (tau, _, _) = tau_parts(t, gamma)?;
    let (a, b) = (lambda.re, lambda.im);
    let v = v_t(mu, t, a);
    if b.abs() < v {
        let h = h_t(mu, t, a);
        Ok(C64::new(a + h, 0.0) - tau * (h / t) + C64::new(0.0, 1.0) * tau * (b / t))
    } else {
        Ok(lambda + gamma * cauchy_transform(mu, lambda)?)
    }
}

/// The real homeomorphism `delta(a) = a + (1 - |tau|^2/(t tau_1)) h_t(a)`.
pub fn delta_sa(mu: &Measure1D, t: f64, gamma: C64, a: f64) -> Result<f64> {
    Ok(a + shear(t, gamma)? * h_t(mu, t, a))
}

/// Closed-form Jacobian determinant of `Phi_{t,gamma}`:
/// `(tau_1/t) [1 + (1 - |tau|^2/(t tau_1)) h_t'(a)]`, strictly positive on `U_t`.
pub fn det_jac_sa(mu: &Measure1D, t: f64, gamma: C64, a: f64) -> Result<f64> {
    let (_, tau1, _) = tau_parts(t, gamma)?;
    let hp = d5(|x| h_t(mu, t, x), a, fd_step(a));
    Ok(tau1 / t * (1.0 + shear(t, gamma)? * hp))
}

/// Brown density of `x0 + g_{t,gamma}` at `z` in the image of `Xi_t`:
/// recovers `a` from `delta(a) = z1 + (tau_2/tau_1) z2`, checks `|b| < v_t(a)`,
/// and returns `psi_t'(a) / (2 pi tau_1 delta'(a))`.
pub fn density_elliptic_sa(mu: &Measure1D, t: f64, gamma: C64, z: C64) -> Result<f64> {
    let (_, tau1, tau2) = tau_parts(t, gamma)?;
    let target = z.re + (tau2 / tau1) * z.im;
    let a = invert_increasing(
        |x| delta_sa(mu, t, gamma, x).expect("gamma != t checked"),
        target,
        target,
        2.0 * t.sqrt() + 1.0,
    );
    let v = v_t(mu, t, a);
    if v <= 0.0 {
        return Err(Error::OutsideImage);
    }
    // z2 = -(tau2/t) h_t(a) + (tau1/t) b
    let b = (z.im + tau2 / t * h_t(mu, t, a)) * t / tau1;
    if b.abs() >= v {
        return Err(Error::OutsideImage);
    }
    let psi_p = d5(|x| psi_t(mu, t, x), a, fd_step(a));
    let delta_p = d5(
        |x| delta_sa(mu, t, gamma, x).expect("gamma != t checked"),
        a,
        fd_step(a),
    );
    Ok(psi_p / (2.0 * PI * tau1 * delta_p))
}

/// Sampled profile of `v_t`, `psi_t`, `h_t` on an adaptive grid over the
/// enlarged support. Grid points are refined where `psi'` jumps by more than
/// 5% between neighbors (corners of `v_t` at the boundary of `U_t`).
#[derive(Debug, Clone)]
pub struct BianeProfile {
    pub t: f64,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub psi: Vec<f64>,
    pub h: Vec<f64>,
}

impl BianeProfile {
    pub fn build(mu: &Measure1D, t: f64) -> Result<Self> {
        let (lo, hi) = mu
            .support_bounds()
            .ok_or_else(|| Error::InvalidModel("empty measure".into()))?;
        let pad = 3.0 * t.sqrt();
        let (lo, hi) = (lo - pad, hi + pad);
        let base = 512usize;
        let mut grid: Vec<f64> = (0..base)
            .map(|i| lo + (hi - lo) * i as f64 / (base - 1) as f64)
            .collect();
        // refinement passes on the psi' relative jump
        for _ in 0..4 {
            let psi: Vec<f64> = grid.iter().map(|&a| psi_t(mu, t, a)).collect();
            let mut insert = Vec::new();
            for i in 0..grid.len() - 1 {
                let slope = (psi[i + 1] - psi[i]) / (grid[i + 1] - grid[i]);
                if i > 0 {
                    let prev = (psi[i] - psi[i - 1]) / (grid[i] - grid[i - 1]);
                    if (slope - prev).abs() > 0.05 * prev.abs().max(0.05) {
                        insert.push(0.5 * (grid[i] + grid[i + 1]));
                        insert.push(0.5 * (grid[i - 1] + grid[i]));
                    }
                }
            }
            if insert.is_empty() || grid.len() > 4096 {
                break;
            }
            grid.extend(insert);
            grid.sort_by(f64::total_cmp);
            grid.dedup();
        }
        let v: Vec<f64> = grid.iter().map(|&a| v_t(mu, t, a)).collect();
        let h: Vec<f64> = grid.iter().map(|&a| h_t(mu, t, a)).collect();
        let psi: Vec<f64> = grid.iter().zip(&h).map(|(&a, &hh)| a + hh).collect();
        Ok(BianeProfile { t, a: grid, v, psi, h })
    }

    /// CSV dump `a,v,psi,h,delta` for the given `gamma`.
    pub fn to_csv(&self, gamma: C64) -> Result<String> {
        let coeff = shear(self.t, gamma)?;
        let mut out = String::from("a,v,psi,h,delta\n");
        for i in 0..self.a.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.a[i],
                self.v[i],
                self.psi[i],
                self.h[i],
                self.a[i] + coeff * self.h[i]
            ));
        }
        Ok(out)
    }
}
