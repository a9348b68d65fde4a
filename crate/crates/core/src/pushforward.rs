//! The pushforward map `Phi_{t,gamma}`, its regularization, Jacobians, the
//! elliptic Fuglede-Kadison determinant, and the two transport realizations
//! (density when the map is non-singular, point clouds always).

use crate::brown::{density_circular, xi_bounding_box, DensityGrid, GridSpec};
use crate::error::Error;
use crate::operator::OperatorModel;
use crate::rng::CounterRng;
use crate::subordination::{in_xi_t, solve_w_shifted, solve_w0_shifted};
use crate::{Result, C64};
use rayon::prelude::*;

/// Refuse density transport below this Jacobian determinant magnitude.
pub const SINGULAR_FLOOR: f64 = 1e-10;

/// Twisted-elliptic parameters `(t, gamma)` with `|gamma| <= t`.
#[derive(Debug, Clone, Copy)]
pub struct EllipticParams {
    pub t: f64,
    pub gamma: C64,
}

impl EllipticParams {
    pub fn new(t: f64, gamma: C64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidModel(format!("t must be positive, got {t}")));
        }
        if gamma.norm() > t + 1e-15 {
            return Err(Error::InvalidModel(format!(
                "|gamma| = {} exceeds t = {t}",
                gamma.norm()
            )));
        }
        Ok(EllipticParams { t, gamma })
    }
}

/// `p_lambda^(0)(w(0; lambda, t))`, the gradient functional at the solved `w0`.
pub(crate) fn p_at_w0(op: &OperatorModel, lambda: C64, t: f64) -> Result<C64> {
    let shifted = op.shifted(lambda);
    let w0 = solve_w0_shifted(&shifted, t)?;
    match shifted.functionals(w0.w) {
        Ok(f) => Ok(f.f2),
        Err(Error::DivergentIntegral(_)) => Err(Error::DivergentFunctional {
            re: lambda.re,
            im: lambda.im,
        }),
        Err(e) => Err(e),
    }
}

/// `Phi_{t,gamma}(lambda) = lambda + gamma p_lambda^(0)(w(0; lambda, t))`.
pub fn phi(op: &OperatorModel, lambda: C64, params: EllipticParams) -> Result<C64> {
    Ok(lambda + params.gamma * p_at_w0(op, lambda, params.t)?)
}

/// Regularized map `Phi^(eps)_{t,gamma}` (a self-homeomorphism of the plane).
pub fn phi_eps(op: &OperatorModel, lambda: C64, params: EllipticParams, eps: f64) -> Result<C64> {
    assert!(eps > 0.0);
    let shifted = op.shifted(lambda);
    let w = solve_w_shifted(&shifted, params.t, eps)?;
    let f = shifted.functionals(w.w)?;
    Ok(lambda + params.gamma * f.f2)
}

/// Jacobian of `(Re Phi, Im Phi)` in the coordinates `(Re lambda, Im lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct JacobianPhi {
    /// Central-difference Jacobian matrix (rows: d Re Phi, d Im Phi).
    pub matrix: [[f64; 2]; 2],
    /// Authoritative determinant: the selfadjoint closed form when available,
    /// otherwise the finite-difference value.
    pub det: f64,
    /// Determinant of `matrix`, always finite-difference.
    pub fd_det: f64,
}

/// Central-difference Jacobian of the pushforward map; selfadjoint operators
/// use the closed-form determinant with the stencil value kept for
/// cross-checking.
pub fn jacobian_phi(op: &OperatorModel, lambda: C64, params: EllipticParams) -> Result<JacobianPhi> {
    let h = 1e-5 * lambda.norm().max(1.0);
    let stencil = [
        lambda + C64::new(h, 0.0),
        lambda - C64::new(h, 0.0),
        lambda + C64::new(0.0, h),
        lambda - C64::new(0.0, h),
    ];
    if !in_xi_t(op, lambda, params.t)
        || !stencil.iter().all(|&p| in_xi_t(op, p, params.t))
    {
        return Err(Error::StencilOutsideDomain {
            re: lambda.re,
            im: lambda.im,
        });
    }
    let vals: Vec<C64> = stencil
        .iter()
        .map(|&p| phi(op, p, params))
        .collect::<Result<_>>()?;
    let ddx = (vals[0] - vals[1]) / (2.0 * h);
    let ddy = (vals[2] - vals[3]) / (2.0 * h);
    let matrix = [[ddx.re, ddy.re], [ddx.im, ddy.im]];
    let fd_det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let det = match op {
        OperatorModel::SelfAdjoint(mu) => {
            crate::selfadjoint::det_jac_sa(mu, params.t, params.gamma, lambda.re)?
        }
        _ => fd_det,
    };
    Ok(JacobianPhi { matrix, det, fd_det })
}

/// `log Delta(x0 + g_{t,gamma} - z)` at `z = Phi(lambda)`:
/// the circular value plus `Re(gamma p^2) / 2`. Requires `Phi` non-singular at
/// `lambda`.
pub fn log_fk_det_elliptic(
    op: &OperatorModel,
    lambda: C64,
    params: EllipticParams,
) -> Result<(C64, f64)> {
    let jac = jacobian_phi(op, lambda, params)?;
    if jac.det.abs() <= SINGULAR_FLOOR {
        return Err(Error::SingularPushforward {
            jac: jac.det,
            floor: SINGULAR_FLOOR,
        });
    }
    let p = p_at_w0(op, lambda, params.t)?;
    let z = lambda + params.gamma * p;
    let circ = crate::brown::log_fk_det_circular(op, lambda, params.t)?;
    Ok((z, circ + 0.5 * (params.gamma * p * p).re))
}

/// One transported grid point.
#[derive(Debug, Clone, Copy)]
pub struct PushPoint {
    pub lambda: C64,
    pub z: C64,
    pub jac_det: f64,
    pub src_density: f64,
    /// `src / |jac|`; NaN sentinel when the cell is flagged.
    pub dst_density: f64,
    pub flagged: bool,
}

/// The pushforward field over a source grid.
#[derive(Debug, Clone)]
pub struct PushforwardField {
    pub points: Vec<PushPoint>,
    pub cell_area: f64,
}

impl PushforwardField {
    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| p.flagged).count()
    }

    pub fn source_mass(&self) -> f64 {
        self.points.iter().map(|p| p.src_density * self.cell_area).sum()
    }

    /// Mass transported through unflagged cells: `sum dst |jac| cell_area`.
    pub fn transported_mass(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| !p.flagged)
            .map(|p| p.dst_density * p.jac_det.abs() * self.cell_area)
            .sum()
    }

    /// CSV dump `lx,ly,zx,zy,jac,src,dst` (NaN dst as empty field).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lx,ly,zx,zy,jac,src,dst\n");
        for p in &self.points {
            let dst = if p.dst_density.is_nan() {
                String::new()
            } else {
                format!("{:.16e}", p.dst_density)
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                p.lambda.re, p.lambda.im, p.z.re, p.z.im, p.jac_det, p.src_density, dst
            ));
        }
        out
    }
}

/// Transports the source density grid through `Phi`: `dst = src / |jac|` where
/// the Jacobian clears [`SINGULAR_FLOOR`]; other cells are flagged.
pub fn pushforward_density(
    op: &OperatorModel,
    params: EllipticParams,
    grid: &DensityGrid,
) -> Result<PushforwardField> {
    let spec = grid.spec();
    let cells: Vec<(usize, usize)> = (0..spec.ny)
        .flat_map(|iy| (0..spec.nx).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| grid.masked(ix, iy) && grid.value(ix, iy).is_finite())
        .collect();
    let points: Vec<PushPoint> = cells
        .par_iter()
        .map(|&(ix, iy)| {
            let lambda = spec.center(ix, iy);
            let src = grid.value(ix, iy);
            let z = phi(op, lambda, params).unwrap_or(C64::new(f64::NAN, f64::NAN));
            match jacobian_phi(op, lambda, params) {
                Ok(jac) if jac.det.abs() > SINGULAR_FLOOR => PushPoint {
                    lambda,
                    z,
                    jac_det: jac.det,
                    src_density: src,
                    dst_density: src / jac.det.abs(),
                    flagged: false,
                },
                Ok(jac) => PushPoint {
                    lambda,
                    z,
                    jac_det: jac.det,
                    src_density: src,
                    dst_density: f64::NAN,
                    flagged: true,
                },
                Err(_) => PushPoint {
                    lambda,
                    z,
                    jac_det: f64::NAN,
                    src_density: src,
                    dst_density: f64::NAN,
                    flagged: true,
                },
            }
        })
        .collect();
    Ok(PushforwardField {
        points,
        cell_area: grid.cell_area,
    })
}

/// Draws `n_samples` from `mu_{x0 + c_t}` by rejection sampling against a
/// density-grid envelope and maps each through `Phi`. Valid even when `Phi`
/// is singular (`gamma = +/- t`). Reproducible for a given seed regardless of
/// worker count (counter-based streams).
pub fn pushforward_pointcloud(
    op: &OperatorModel,
    params: EllipticParams,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<C64>> {
    assert!(n_samples >= 1);
    let (x_min, x_max, y_min, y_max) = xi_bounding_box(op, params.t);
    let spec = GridSpec {
        x_min,
        x_max,
        y_min,
        y_max,
        nx: 201,
        ny: 201,
    };
    let grid = crate::brown::density_grid(op, params.t, spec)?;
    let envelope = 1.05 * grid.max_density();
    if !(envelope > 0.0) {
        return Err(Error::EnvelopeFailure(0.0));
    }

    let samples: Vec<Result<(C64, u64)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let rng = CounterRng::new(seed, i as u64);
            let mut attempts = 0u64;
            loop {
                let x = x_min + (x_max - x_min) * rng.uniform(3 * attempts);
                let y = y_min + (y_max - y_min) * rng.uniform(3 * attempts + 1);
                let u = rng.uniform(3 * attempts + 2);
                attempts += 1;
                let lambda = C64::new(x, y);
                let d = density_circular(op, lambda, params.t)?;
                if d > envelope {
                    return Err(Error::EnvelopeFailure(envelope / d));
                }
                if u * envelope < d {
                    let z = phi(op, lambda, params)?;
                    return Ok((z, attempts));
                }
                if attempts > 40_000 {
                    return Err(Error::EnvelopeFailure(1.0 / attempts as f64));
                }
            }
        })
        .collect();

    let mut cloud = Vec::with_capacity(n_samples);
    let mut total_attempts = 0u64;
    for s in samples {
        let (z, attempts) = s?;
        cloud.push(z);
        total_attempts += attempts;
    }
    let acceptance = n_samples as f64 / total_attempts.max(1) as f64;
    if acceptance < 1e-4 {
        return Err(Error::EnvelopeFailure(acceptance));
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure1D;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(t: f64, gre: f64, gim: f64) -> EllipticParams {
        EllipticParams::new(t, c(gre, gim)).unwrap()
    }

    fn three_atom() -> OperatorModel {
        OperatorModel::SelfAdjoint(
            Measure1D::from_atoms(&[(-2.0, 0.4), (-0.8, 0.1), (1.0, 0.5)]).unwrap(),
        )
    }

    #[test]
    fn params_validation() {
        assert!(EllipticParams::new(1.0, c(0.8, 0.7)).is_err());
        assert!(EllipticParams::new(1.0, c(1.0, 0.0)).is_ok());
        assert!(EllipticParams::new(0.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn phi_zero_operator_closed_form() {
        // Phi(lambda) = lambda + gamma conj(lambda) / t inside the disk
        let p = params(1.0, 1.0, 0.0);
        let z = phi(&OperatorModel::Zero, c(0.5, 0.0), p).unwrap();
        assert!((z - c(1.0, 0.0)).norm() < 1e-12, "z = {z}");
        let z = phi(&OperatorModel::Zero, c(0.2, 0.3), params(1.0, 0.5, 0.0)).unwrap();
        assert!((z - (c(0.2, 0.3) + 0.5 * c(0.2, -0.3))).norm() < 1e-12);
        // gamma = 0 is the identity
        let z = phi(&three_atom(), c(0.3, 0.1), params(1.0, 0.0, 0.0)).unwrap();
        assert!((z - c(0.3, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn phi_dt_closed_form() {
        let p = params(1.0, 0.4, 0.2);
        let lam = c(0.5, -0.1);
        let z = phi(&OperatorModel::QuasiNilpotentDT, lam, p).unwrap();
        let expect = crate::special::dt::phi(lam, 1.0, p.gamma);
        assert!((z - expect).norm() < 1e-10, "z = {z} expect {expect}");
    }

    #[test]
    fn phi_eps_uniform_convergence() {
        // Lemma 5.3: max deviation shrinks monotonically with eps
        let op = three_atom();
        let p = params(1.0, 0.25, 0.25);
        let mut prev = f64::INFINITY;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let mut worst = 0.0f64;
            for k in 0..40 {
                let lam = c(-2.5 + 4.0 * k as f64 / 39.0, 0.2 * ((k % 5) as f64 - 2.0));
                let a = phi_eps(&op, lam, p, eps).unwrap();
                let b = phi(&op, lam, p).unwrap();
                worst = worst.max((a - b).norm());
            }
            assert!(worst < prev + 1e-6, "deviation should shrink: {worst} vs {prev}");
            prev = worst;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn phi_eps_far_field_identity() {
        // Phi^(eps)(lambda) = lambda + O(1/lambda)
        let p = params(1.0, 1.0, 0.0);
        let lam = c(40.0, 0.0);
        let z = phi_eps(&OperatorModel::Zero, lam, p, 1e-3).unwrap();
        assert!((z - lam).norm() < 0.05);
    }

    #[test]
    fn jacobian_zero_operator() {
        // Phi = lambda + gamma conj(lambda): matrix [[1+g, 0], [0, 1-g]]
        let p = params(1.0, 0.5, 0.0);
        let j = jacobian_phi(&OperatorModel::Zero, c(0.2, 0.1), p).unwrap();
        assert!((j.matrix[0][0] - 1.5).abs() < 1e-6);
        assert!((j.matrix[1][1] - 0.5).abs() < 1e-6);
        assert!(j.matrix[0][1].abs() < 1e-6 && j.matrix[1][0].abs() < 1e-6);
        assert!((j.det - 0.75).abs() < 1e-6);
        // identity at gamma = 0
        let j = jacobian_phi(&OperatorModel::Zero, c(0.2, 0.1), params(1.0, 0.0, 0.0)).unwrap();
        assert!((j.det - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jacobian_selfadjoint_closed_form_matches_fd() {
        let op = three_atom();
        let p = params(2.0, 1.0, 0.0);
        let j = jacobian_phi(&op, c(0.1, 0.2), p).unwrap();
        assert!(
            (j.det - j.fd_det).abs() < 1e-6,
            "closed form {} vs stencil {}",
            j.det,
            j.fd_det
        );
    }

    #[test]
    fn log_fk_det_elliptic_reduces_at_gamma_zero() {
        let op = three_atom();
        let lam = c(0.9, 0.1);
        let (z, logdet) = log_fk_det_elliptic(&op, lam, params(1.0, 0.0, 0.0)).unwrap();
        assert!((z - lam).norm() < 1e-14);
        let circ = crate::brown::log_fk_det_circular(&op, lam, 1.0).unwrap();
        assert!((logdet - circ).abs() < 1e-13);
    }

    #[test]
    fn log_fk_det_elliptic_center_symmetry() {
        // Zero at lambda = 0: p = 0, z = 0, logdet = -1/2
        let (z, logdet) =
            log_fk_det_elliptic(&OperatorModel::Zero, c(0.0, 0.0), params(1.0, 0.3, 0.4)).unwrap();
        assert!(z.norm() < 1e-12);
        assert!((logdet + 0.5).abs() < 1e-12);
    }

    #[test]
    fn derivative_transport() {
        // Lemma 5.5: the z-gradient of the elliptic log-determinant equals p
        let op = three_atom();
        let p = params(1.0, 0.25, 0.25);
        let lam = c(1.05, 0.12);
        let jac = jacobian_phi(&op, lam, p).unwrap();
        let h = 1e-5;
        let s = |q: C64| {
            let (_, logdet) = log_fk_det_elliptic(&op, q, p).unwrap();
            2.0 * logdet
        };
        let dsda = (s(lam + c(h, 0.0)) - s(lam - c(h, 0.0))) / (2.0 * h);
        let dsdb = (s(lam + c(0.0, h)) - s(lam - c(0.0, h))) / (2.0 * h);
        // grad_z S = J^{-T} grad_lambda (S o Phi)
        let det = jac.fd_det;
        let gz1 = (jac.matrix[1][1] * dsda - jac.matrix[1][0] * dsdb) / det;
        let gz2 = (-jac.matrix[0][1] * dsda + jac.matrix[0][0] * dsdb) / det;
        // p_z = (dS/dz1 - i dS/dz2) / 2
        let p_z = 0.5 * c(gz1, -gz2);
        let p_direct = p_at_w0(&op, lam, p.t).unwrap();
        assert!(
            (p_z - p_direct).norm() < 1e-6,
            "transported {p_z} vs direct {p_direct}"
        );
    }

    #[test]
    fn pushforward_density_uniform_ellipse() {
        let p = params(1.0, 0.5, 0.0);
        let grid = crate::brown::density_grid(
            &OperatorModel::Zero,
            1.0,
            GridSpec::square(1.2, 121),
        )
        .unwrap();
        let field = pushforward_density(&OperatorModel::Zero, p, &grid).unwrap();
        let expect = 1.0 / (std::f64::consts::PI * 0.75);
        let mut checked = 0;
        for pt in &field.points {
            if pt.lambda.norm() < 0.95 {
                assert!(!pt.flagged);
                assert!(
                    (pt.dst_density - expect).abs() < 1e-6,
                    "dst = {} expect {expect}",
                    pt.dst_density
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
        // mass conservation
        assert!((field.transported_mass() - field.source_mass()).abs() < 1e-3);
        // gamma = 0: dst = src everywhere unflagged
        let field = pushforward_density(&OperatorModel::Zero, params(1.0, 0.0, 0.0), &grid).unwrap();
        for pt in field.points.iter().filter(|p| !p.flagged) {
            assert!((pt.dst_density - pt.src_density).abs() < 1e-9 * pt.src_density.max(1.0));
        }
    }

    #[test]
    fn injectivity_on_nonsingular_grid() {
        let op = three_atom();
        let p = params(1.0, 0.25, 0.25);
        let mut images = Vec::new();
        for i in 0..24 {
            for j in 0..8 {
                let lam = c(-2.6 + 4.4 * i as f64 / 23.0, -0.45 + 0.9 * j as f64 / 7.0);
                if !in_xi_t(&op, lam, p.t) {
                    continue;
                }
                if let Ok(jac) = jacobian_phi(&op, lam, p) {
                    if jac.det > 1e-8 {
                        images.push((lam, phi(&op, lam, p).unwrap()));
                    }
                }
            }
        }
        assert!(images.len() > 50);
        for a in 0..images.len() {
            for b in (a + 1)..images.len() {
                let dz = (images[a].1 - images[b].1).norm();
                assert!(
                    dz > 1e-6,
                    "images collide: {} and {}",
                    images[a].0,
                    images[b].0
                );
            }
        }
    }

    #[test]
    fn pointcloud_gamma_zero_matches_grid() {
        let p = params(1.0, 0.0, 0.0);
        let cloud = pushforward_pointcloud(&OperatorModel::Zero, p, 20_000, 7).unwrap();
        assert_eq!(cloud.len(), 20_000);
        // radial CDF at a few radii vs the circular law r^2
        for &r in &[0.4, 0.7, 0.9] {
            let frac = cloud.iter().filter(|z| z.norm() <= r).count() as f64 / 2e4;
            assert!((frac - r * r).abs() < 0.015, "r={r} frac={frac}");
        }
        // reproducibility
        let again = pushforward_pointcloud(&OperatorModel::Zero, p, 64, 7).unwrap();
        let first = pushforward_pointcloud(&OperatorModel::Zero, p, 64, 7).unwrap();
        assert_eq!(again, first);
    }

    #[test]
    fn pointcloud_degenerate_gamma_collapses_to_real_line() {
        // gamma = t = 1 on the zero operator: Phi(lambda) = 2 Re lambda
        let p = params(1.0, 1.0, 0.0);
        let cloud = pushforward_pointcloud(&OperatorModel::Zero, p, 5000, 3).unwrap();
        for z in &cloud {
            assert!(z.im.abs() < 1e-12);
            assert!(z.re.abs() <= 2.0 + 1e-9);
        }
    }
}
