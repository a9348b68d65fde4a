//! Closed-form machinery: Haagerup-Schultz profiles for R-diagonal operators,
//! the Haar-unitary formulas, and the quasi-nilpotent DT operator.

use crate::error::Error;
use crate::measure::Measure1D;
use crate::operator::ResolventFunctionals;
use crate::roots::solve_monotone;
use crate::{Result, C64};

/// Haar-unitary closed forms.
///
/// All formulas are driven by the contour integrals
/// `(1/2pi) int d theta / (|e^{i theta} - lambda|^2 + s^2) = 1 / sqrt(delta^2 - 4 |lambda|^2)`
/// with `delta = |lambda|^2 + 1 + s^2`.
pub mod haar {
    use super::*;

    #[inline]
    fn delta_r(lambda_sq: f64, w: f64) -> (f64, f64) {
        let delta = lambda_sq + 1.0 + w * w;
        // delta^2 - 4|lambda|^2 = (|lambda|^2 - 1)^2 + stuff >= 0
        let r2 = (delta - 2.0 * lambda_sq.sqrt()) * (delta + 2.0 * lambda_sq.sqrt());
        (delta, r2.max(0.0).sqrt())
    }

    /// Inner and outer radii of the support annulus of `u + c_t`.
    pub fn annulus(t: f64) -> (f64, f64) {
        ((1.0 - t).max(0.0).sqrt(), (1.0 + t).sqrt())
    }

    /// `w(0; lambda, t)^2 = sqrt(4 |lambda|^2 + t^2) - (|lambda|^2 + 1)` on the annulus.
    pub fn w0(r: f64, t: f64) -> Result<f64> {
        let (l1, l2) = annulus(t);
        if !(r > l1 && r < l2) {
            return Err(Error::OutsideAnnulus(r));
        }
        let w0sq = (4.0 * r * r + t * t).sqrt() - (r * r + 1.0);
        Ok(w0sq.max(0.0).sqrt())
    }

    /// Radial CDF of the Brown measure of `u + c_t`:
    /// `r^2 (1/t + 1/(2 r^2) - sqrt(4 r^2 + t^2) / (2 r^2 t))`, clamped to `[0, 1]`
    /// outside the annulus.
    pub fn cdf(r: f64, t: f64) -> f64 {
        let (l1, l2) = annulus(t);
        if r <= l1 {
            return 0.0;
        }
        if r >= l2 {
            return 1.0;
        }
        r * r / t + 0.5 - (4.0 * r * r + t * t).sqrt() / (2.0 * t)
    }

    /// Semi-axes of the image ellipse of the circle `|lambda|^2 = 1 + s` under
    /// the semicircular pushforward (`gamma = t`). `a` is the real-axis
    /// (long) semi-axis, `b` the imaginary-axis (short) one.
    pub fn axes(s: f64, t: f64) -> Result<(f64, f64)> {
        let (s_lo, s_hi) = ((1.0 - t).max(0.0) - 1.0, t);
        if !(s >= s_lo && s <= s_hi) {
            return Err(Error::OutsideAnnulus((1.0 + s).max(0.0).sqrt()));
        }
        let root = (1.0 + s).sqrt();
        let b = ((4.0 * (1.0 + s) + t * t).sqrt() - t) / (2.0 * root);
        let a = 2.0 * root - b;
        Ok((a, b))
    }

    /// Semi-axes of the twisted-elliptic image (`|gamma| <= t`):
    /// `f(s) = ((t - |gamma|)/t) sqrt(s+1) + (|gamma|/t) a(s)` and the same with `b(s)`.
    pub fn axes_gamma(s: f64, t: f64, gamma_abs: f64) -> Result<(f64, f64)> {
        let (a, b) = axes(s, t)?;
        let root = (1.0 + s).sqrt();
        let base = (t - gamma_abs) / t * root;
        Ok((base + gamma_abs / t * a, base + gamma_abs / t * b))
    }

    /// Resolvent functionals of the Haar unitary at `(lambda, w)`.
    pub(crate) fn functionals(lambda: C64, w: f64) -> Result<ResolventFunctionals> {
        let lsq = lambda.norm_sqr();
        let (delta, r) = delta_r(lsq, w);
        if r == 0.0 {
            return Err(Error::DivergentIntegral("|lambda| = 1 with w = 0"));
        }
        let f1 = 1.0 / r;
        let f3 = delta / (r * r * r);
        // (delta - R) / (2 |lambda|^2) = 2 / (delta + R), stable as lambda -> 0
        let q = 2.0 / (delta + r);
        let f2 = lambda.conj() * ((1.0 - q) / r);
        let f5 = lambda * ((delta - 2.0) / (r * r * r));
        Ok(ResolventFunctionals { f1, f2, f3, f4: f3, f5 })
    }

    /// `log Delta((u - lambda)^* (u - lambda) + w^2) = log((delta + R)/2)`.
    pub(crate) fn log_fk_det(lambda: C64, w: f64) -> f64 {
        let (delta, r) = delta_r(lambda.norm_sqr(), w);
        ((delta + r) / 2.0).ln()
    }

    /// `int u^{-2} d mu_{|u - lambda|}`; `None` when `|lambda| = 1`.
    pub(crate) fn inv_square_moment(lambda: C64) -> Option<f64> {
        let d = (1.0 - lambda.norm_sqr()).abs();
        (d != 0.0).then(|| 1.0 / d)
    }

    /// Trapezoid contour quadrature of the three §-integrals; an independent
    /// transcription oracle for the closed forms above (tests only).
    pub fn contour_quadrature(lambda: C64, s: f64, n: usize) -> (f64, C64, C64) {
        let mut i0 = 0.0;
        let mut ip = C64::new(0.0, 0.0);
        let mut im = C64::new(0.0, 0.0);
        for k in 0..n {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let e = C64::from_polar(1.0, theta);
            let d = (e - lambda).norm_sqr() + s * s;
            i0 += 1.0 / d;
            ip += e / d;
            im += e.conj() / d;
        }
        let scale = 1.0 / n as f64;
        (i0 * scale, ip * scale, im * scale)
    }
}

/// Quasi-nilpotent DT operator closed forms (Aagaard-Haagerup identities).
///
/// The identities are parametrized by `sigma < 0` with `1 + |lambda|^2 sigma > 0`
/// and `w^2 = -e^sigma (1/sigma + |lambda|^2)`:
/// `phi[h^{-1}] = e^{-sigma} - 1`, `phi[(T - lambda)^* k^{-1}] = conj(lambda) sigma`.
pub mod dt {
    use super::*;

    /// Radius of the uniform Brown measure disk of `T + c_t`.
    pub fn disk_radius(t: f64) -> f64 {
        1.0 / (1.0 + 1.0 / t).ln().sqrt()
    }

    /// Constant density of the Brown measure of `T + c_t` on its disk.
    pub fn density(t: f64) -> f64 {
        (1.0 + 1.0 / t).ln() / std::f64::consts::PI
    }

    /// Pushforward map `Phi_{t,gamma}(lambda) = lambda + conj(lambda) gamma log(1 + 1/t)`.
    pub fn phi(lambda: C64, t: f64, gamma: C64) -> C64 {
        lambda + lambda.conj() * gamma * (1.0 + 1.0 / t).ln()
    }

    /// `w^2` as a function of `sigma` (the Aagaard-Haagerup parametrization).
    #[inline]
    fn wsq_of_sigma(sigma: f64, lsq: f64) -> f64 {
        -sigma.exp() * (1.0 / sigma + lsq)
    }

    /// `d w^2 / d sigma = e^sigma (1/sigma^2 - 1/sigma - |lambda|^2) > 0` on the domain.
    #[inline]
    fn dwsq_dsigma(sigma: f64, lsq: f64) -> f64 {
        sigma.exp() * (1.0 / (sigma * sigma) - 1.0 / sigma - lsq)
    }

    /// Solves `w^2 = -e^sigma (1/sigma + |lambda|^2)` for `sigma` in
    /// `(-1/|lambda|^2, 0)` (all of `(-inf, 0)` when `lambda = 0`).
    pub(crate) fn solve_sigma(lambda: C64, w: f64) -> f64 {
        let lsq = lambda.norm_sqr();
        let wsq = w * w;
        let lo = if lsq > 0.0 {
            -1.0 / lsq * (1.0 - 1e-14)
        } else {
            // w^2 ~ -e^sigma / sigma: go far enough left that w^2(lo) < wsq
            let mut lo = -2.0;
            while wsq_of_sigma(lo, 0.0) > wsq && lo > -700.0 {
                lo *= 2.0;
            }
            lo
        };
        let mut hi = -1e-18;
        while wsq_of_sigma(hi, lsq) < wsq {
            hi *= 0.5;
        }
        let root = solve_monotone(
            |s| wsq_of_sigma(s, lsq) - wsq,
            |s| dwsq_dsigma(s, lsq),
            lo,
            hi,
            (hi - lo).abs() * 1e-3,
            wsq * 1e-14 + 1e-300,
            200,
        );
        root.x
    }

    pub(crate) fn functionals(lambda: C64, w: f64) -> Result<ResolventFunctionals> {
        if w <= 0.0 {
            // only the inverse-square moment is available in closed form at w = 0
            return Err(Error::DivergentIntegral(
                "DT functionals require w > 0 (w = 0 traces are unbounded)",
            ));
        }
        let lsq = lambda.norm_sqr();
        let sigma = solve_sigma(lambda, w);
        let f1 = (-sigma).exp_m1(); // e^{-sigma} - 1
        let f2 = -lambda.conj() * sigma;
        let gp = dwsq_dsigma(sigma, lsq);
        let f3 = (-sigma).exp() / gp;
        let f5 = lambda / gp;
        // Backed out of the density identity: the two density formulas of the
        // circular addition agree for every model, which pins phi(h^{-1} k^{-1})
        // at w = w0(lambda, 1/f1) down to this expression.
        let f4 = (-sigma - lsq * sigma.exp() / gp) / (w * w);
        Ok(ResolventFunctionals { f1, f2, f3, f4, f5 })
    }

    pub(crate) fn log_fk_det(lambda: C64, w: f64) -> Result<f64> {
        let lsq = lambda.norm_sqr();
        if w == 0.0 {
            if lsq == 0.0 {
                return Err(Error::NegativeInfinity);
            }
            return Ok(lsq.ln());
        }
        let sigma = solve_sigma(lambda, w);
        Ok(-1.0 / sigma - (-sigma).ln() - lsq * sigma - w * w - 1.0 - lsq)
    }

    /// `int u^{-2} d mu_{|T - lambda|} = e^{1/|lambda|^2} - 1`; `None` at `lambda = 0`.
    pub(crate) fn inv_square_moment(lambda: C64) -> Option<f64> {
        let lsq = lambda.norm_sqr();
        (lsq > 0.0).then(|| (1.0 / lsq).exp_m1())
    }
}

/// Result of the Haagerup-Schultz radial solve `s(r, 0)`: the limit is `0`
/// below the inner radius and `+infinity` above the outer one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialS {
    Zero,
    Finite(f64),
    Infinite,
}

/// Radial profile of an R-diagonal operator: the gradient function
/// `h_T(s) = s phi((T^* T + s^2)^{-1})` together with the single-ring radii.
#[derive(Debug, Clone)]
pub struct RDiagonalProfile {
    law: ProfileLaw,
    lambda1: f64,
    lambda2: f64,
}

#[derive(Debug, Clone)]
enum ProfileLaw {
    /// Singular-value law of `T` as a measure table.
    Measure(Measure1D),
    /// `T = c_t`: Marchenko-Pastur closed form `h(s) = (sqrt(s^2 + 4t) - s) / (2t)`.
    CircularQuarter { t: f64 },
    /// `T = u + c_t`: the radial CDF comes from the Haar closed form instead
    /// of the gradient function.
    HaarPlusCircular { t: f64 },
}

impl RDiagonalProfile {
    /// Builds a profile from the singular-value distribution of `T`.
    /// `lambda1 = 1/sqrt(int u^{-2} d mu)` (0 when the integral diverges),
    /// `lambda2 = sqrt(int u^2 d mu)`.
    pub fn from_singular_law(mu: Measure1D) -> Result<Self> {
        if let Some((lo, _)) = mu.support_bounds() {
            if lo < 0.0 {
                return Err(Error::InvalidModel(
                    "singular-value law must be supported on [0, inf)".into(),
                ));
            }
        }
        let lambda2 = mu.integrate(|u| u * u).sqrt();
        // divergent inverse-square moment <=> an atom at 0 or density touching 0
        let divergent = mu.atoms().iter().any(|&(l, w)| l == 0.0 && w > 0.0)
            || mu
                .densities()
                .iter()
                .any(|p| p.lo <= 0.0 && p.samples.iter().take(2).any(|&s| s > 0.0));
        let lambda1 = if divergent {
            0.0
        } else {
            let m = mu.integrate_singular(|u| 1.0 / (u * u), 0.0, 1e-13);
            1.0 / m.sqrt()
        };
        Ok(RDiagonalProfile {
            law: ProfileLaw::Measure(mu),
            lambda1,
            lambda2,
        })
    }

    /// Profile of the circular operator `c_t` itself.
    pub fn circular(t: f64) -> Self {
        RDiagonalProfile {
            law: ProfileLaw::CircularQuarter { t },
            lambda1: 0.0,
            lambda2: t.sqrt(),
        }
    }

    /// Profile of `u + c_t` for a free Haar unitary `u`; the radial CDF is the
    /// closed form of the Haar section.
    pub fn haar_plus_circular(t: f64) -> Self {
        let (l1, l2) = haar::annulus(t);
        RDiagonalProfile {
            law: ProfileLaw::HaarPlusCircular { t },
            lambda1: l1,
            lambda2: l2,
        }
    }

    pub fn inner_radius(&self) -> f64 {
        self.lambda1
    }

    pub fn outer_radius(&self) -> f64 {
        self.lambda2
    }

    /// The gradient function `h_T(s)`, `s > 0`.
    pub fn h(&self, s: f64) -> f64 {
        match &self.law {
            ProfileLaw::Measure(mu) => s * mu.integrate(|u| 1.0 / (u * u + s * s)),
            ProfileLaw::CircularQuarter { t } => ((s * s + 4.0 * t).sqrt() - s) / (2.0 * t),
            ProfileLaw::HaarPlusCircular { .. } => {
                unreachable!("h_T is not materialized for the Haar + circular profile")
            }
        }
    }

    fn h_prime(&self, s: f64) -> f64 {
        match &self.law {
            ProfileLaw::Measure(mu) => mu.integrate(|u| {
                let d = u * u + s * s;
                (u * u - s * s) / (d * d)
            }),
            ProfileLaw::CircularQuarter { t } => (s / (s * s + 4.0 * t).sqrt() - 1.0) / (2.0 * t),
            ProfileLaw::HaarPlusCircular { .. } => unreachable!(),
        }
    }
}

/// Unique positive solution `s` of `(s - eps)^2 - (s - eps)/h_T(s) + r^2 = 0`.
///
/// For `eps = 0` the solution exists only on the open ring
/// `lambda1 < r < lambda2`; the limits outside are encoded in [`RadialS`].
pub fn solve_s(profile: &RDiagonalProfile, r: f64, eps: f64) -> RadialS {
    assert!(r > 0.0, "radius must be positive");
    assert!(eps >= 0.0);
    if eps == 0.0 {
        if r <= profile.lambda1 {
            return RadialS::Zero;
        }
        if r >= profile.lambda2 {
            return RadialS::Infinite;
        }
    }
    // F(s) = (s - eps)/h(s) - (s - eps)^2 - r^2, F(eps+) < 0 < F(upper)
    let f = |s: f64| {
        let se = s - eps;
        se / profile.h(s) - se * se - r * r
    };
    let df = |s: f64| {
        let h = profile.h(s);
        let se = s - eps;
        (h - se * profile.h_prime(s)) / (h * h) - 2.0 * se
    };
    let lo = eps + 1e-300;
    let mut hi = eps + r + profile.lambda2 + 1.0;
    let mut guard = 0;
    while f(hi) <= 0.0 && guard < 200 {
        hi *= 2.0;
        guard += 1;
    }
    let root = solve_monotone(f, df, lo, hi, (hi - lo) * 1e-6, 1e-12 * (1.0 + r * r), 200);
    RadialS::Finite(root.x)
}

/// Radial CDF of the Brown measure of the R-diagonal operator behind `profile`:
/// `mu{ |z| <= r } = s(r,0)^2 / (s(r,0)^2 + r^2)` on the ring, `0`/`1` outside.
///
/// The ratio orientation is pinned by the circular-law oracle
/// (`mu_{c_t}{|z| <= r} = r^2 / t`), which the printed formula reproduces.
pub fn brown_cdf_rdiag(profile: &RDiagonalProfile, r: f64) -> f64 {
    if r <= profile.lambda1 || r <= 0.0 {
        return 0.0;
    }
    if r >= profile.lambda2 {
        return 1.0;
    }
    if let ProfileLaw::HaarPlusCircular { t } = profile.law {
        return haar::cdf(r, t);
    }
    match solve_s(profile, r, 0.0) {
        RadialS::Zero => 0.0,
        RadialS::Infinite => 1.0,
        RadialS::Finite(s) => s * s / (s * s + r * r),
    }
}

/// Semi-axes `(a(r), b(r))` of the image of the circle `|lambda| = r` under
/// `Phi_{t,gamma}` for `x0 = T + c_t` R-diagonal:
/// `a(r) = r - |gamma| g(r)/r`, `b(r) = r + |gamma| g(r)/r` with
/// `g(r) = mu_{T + c_t}{ |z| <= r }`.
pub fn phi_rdiag(profile: &RDiagonalProfile, r: f64, gamma_abs: f64) -> (f64, f64) {
    let g = brown_cdf_rdiag(profile, r);
    (r - gamma_abs * g / r, r + gamma_abs * g / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_w0_closed_form() {
        let w = haar::w0(1.0, 0.5).unwrap();
        assert!((w * w - (4.25f64.sqrt() - 2.0)).abs() < 1e-15);
        assert!((w - 0.248099).abs() < 1e-6);
        assert!(haar::w0(0.4, 0.5).is_err());
        assert!(haar::w0(1.5, 0.5).is_err());
    }

    #[test]
    fn haar_cdf_values() {
        assert!((haar::cdf(1.0, 0.5) - (2.5 - 4.25f64.sqrt())).abs() < 1e-15);
        let (l1, l2) = haar::annulus(0.5);
        assert_eq!(haar::cdf(l1, 0.5), 0.0);
        assert_eq!(haar::cdf(l2, 0.5), 1.0);
        // continuity at the edges
        assert!(haar::cdf(l1 + 1e-9, 0.5) < 1e-8);
        assert!(haar::cdf(l2 - 1e-9, 0.5) > 1.0 - 1e-8);
    }

    #[test]
    fn haar_axes_at_outer_edge() {
        let t = 0.5;
        let (a, b) = haar::axes(t, t).unwrap();
        assert!((a - (2.0 * t + 1.0) / (t + 1.0).sqrt()).abs() < 1e-14);
        assert!((b - 1.0 / (1.0 + t).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn haar_contour_oracle_matches_closed_forms() {
        let lambda = C64::new(0.7, -0.3);
        let s = 0.4;
        let (i0, ip, im) = haar::contour_quadrature(lambda, s, 64);
        let delta = lambda.norm_sqr() + 1.0 + s * s;
        let r = (delta * delta - 4.0 * lambda.norm_sqr()).sqrt();
        assert!((i0 - 1.0 / r).abs() < 1e-12, "i0");
        let expect_ip = lambda / r * ((delta - r) / (2.0 * lambda.norm_sqr()));
        assert!((ip - expect_ip).norm() < 1e-12, "ip={ip} expect={expect_ip}");
        assert!((im - expect_ip.conj()).norm() < 1e-12);
        // f2 = conj(lambda) * i0 - im
        let f = haar::functionals(lambda, s).unwrap();
        assert!((f.f2 - (lambda.conj() * i0 - im)).norm() < 1e-12);
    }

    #[test]
    fn dt_sigma_solve_roundtrip() {
        let lambda = C64::new(0.5, 0.2);
        for &w in &[1e-3, 0.1, 1.0, 10.0] {
            let sigma = dt::solve_sigma(lambda, w);
            let lsq = lambda.norm_sqr();
            let wsq = -sigma.exp() * (1.0 / sigma + lsq);
            assert!(
                (wsq - w * w).abs() <= 1e-12 * w * w.max(1.0),
                "w={w} wsq={wsq}"
            );
            assert!(sigma < 0.0 && 1.0 + lsq * sigma > 0.0);
        }
    }

    #[test]
    fn dt_log_det_at_w0_is_brown_potential() {
        // Delta(T - lambda) = |lambda| since the Brown measure of T is delta_0
        let v = dt::log_fk_det(C64::new(2.0, 0.0), 0.0).unwrap();
        assert!((v - 4.0f64.ln()).abs() < 1e-15);
        assert!(matches!(
            dt::log_fk_det(C64::new(0.0, 0.0), 0.0),
            Err(Error::NegativeInfinity)
        ));
    }

    #[test]
    fn dt_radius_density() {
        assert!((dt::disk_radius(1.0) - 1.0 / 2.0f64.ln().sqrt()).abs() < 1e-15);
        assert!((dt::disk_radius(1.0) - 1.20112).abs() < 1e-5);
        assert!((dt::density(1.0) - 2.0f64.ln() / std::f64::consts::PI).abs() < 1e-15);
        assert!((dt::density(1.0) - 0.220636).abs() < 1e-6);
        // t -> infinity: radius ~ sqrt(t)
        for &t in &[1e3, 1e4] {
            assert!((dt::disk_radius(t) / t.sqrt() - 1.0).abs() < 1e-3 * 0.6);
        }
    }

    #[test]
    fn circular_profile_reproduces_circular_law() {
        // independent oracle: mu_{c_t}{|z| <= r} = r^2 / t
        let t = 1.0;
        let profile = RDiagonalProfile::circular(t);
        for &r in &[0.2, 0.5, 0.9] {
            let cdf = brown_cdf_rdiag(&profile, r);
            assert!(
                (cdf - r * r / t).abs() < 1e-10,
                "r={r} cdf={cdf} expect={}",
                r * r / t
            );
        }
        assert_eq!(brown_cdf_rdiag(&profile, 1.0), 1.0);
    }

    #[test]
    fn quarter_circle_measure_matches_closed_form_h() {
        let t = 0.7;
        let closed = RDiagonalProfile::circular(t);
        let mu = Measure1D::quarter_circle(t, 20001).unwrap();
        let tabulated = RDiagonalProfile::from_singular_law(mu).unwrap();
        for &s in &[0.1, 0.5, 1.3] {
            assert!(
                (closed.h(s) - tabulated.h(s)).abs() < 1e-6,
                "h mismatch at s={s}: {} vs {}",
                closed.h(s),
                tabulated.h(s)
            );
        }
        assert!(tabulated.inner_radius() == 0.0);
        assert!((tabulated.outer_radius() - t.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn solve_s_limits() {
        let profile = RDiagonalProfile::haar_plus_circular(0.5);
        assert_eq!(solve_s(&profile, 0.5, 0.0), RadialS::Zero);
        assert_eq!(solve_s(&profile, 1.5, 0.0), RadialS::Infinite);
    }

    #[test]
    fn haar_unit_atom_profile() {
        // T = u itself: singular-value law delta_1, single ring degenerates to the circle
        let profile = RDiagonalProfile::from_singular_law(Measure1D::dirac(1.0)).unwrap();
        assert!((profile.inner_radius() - 1.0).abs() < 1e-14);
        assert!((profile.outer_radius() - 1.0).abs() < 1e-14);
        // h(s) = s / (s^2 + 1)
        assert!((profile.h(0.7) - 0.7 / 1.49).abs() < 1e-15);
        if let RadialS::Finite(s) = solve_s(&profile, 0.9, 0.05) {
            let se = s - 0.05;
            let resid = se * se - se / profile.h(s) + 0.81;
            assert!(resid.abs() < 1e-9, "resid={resid}");
        } else {
            panic!("expected finite s for eps > 0");
        }
    }

    #[test]
    fn phi_rdiag_nondecreasing_axes() {
        let profile = RDiagonalProfile::haar_plus_circular(0.5);
        let gamma = 0.4;
        let mut prev = (0.0f64, 0.0f64);
        for k in 0..64 {
            let r = 0.3 + 1.1 * k as f64 / 63.0;
            let (a, b) = phi_rdiag(&profile, r, gamma);
            if k > 0 {
                assert!(a >= prev.0 - 1e-12, "a not monotone at r={r}");
                assert!(b >= prev.1 - 1e-12, "b not monotone at r={r}");
            }
            prev = (a, b);
        }
    }
}
