//! Brown measure of `x0 + c_t`: log Fuglede-Kadison determinants, the two
//! density formulas on `Xi_t`, and density grids.

use crate::error::Error;
use crate::operator::OperatorModel;
use crate::subordination::{in_xi_t, solve_w0_shifted};
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// `log Delta(x0 + c_t - lambda)`.
///
/// Inside `Xi_t`:
/// `2 log Delta = log Delta((x0 - lambda)^*(x0 - lambda) + w0^2) - w0^2 / t`;
/// outside, `Delta(x0 + c_t - lambda) = Delta(x0 - lambda)`.
pub fn log_fk_det_circular(op: &OperatorModel, lambda: C64, t: f64) -> Result<f64> {
    let shifted = op.shifted(lambda);
    let w0 = solve_w0_shifted(&shifted, t)?;
    if w0.in_xi_t {
        Ok(0.5 * (shifted.log_fk_det(w0.w)? - w0.w * w0.w / t))
    } else {
        Ok(0.5 * shifted.log_fk_det(0.0)?)
    }
}

/// Brown density of `x0 + c_t` at `lambda` by the positive-form formula
/// `(1/pi) (|f5|^2 / f3 + w0^2 f4)`; returns 0 outside `Xi_t`.
pub fn density_circular(op: &OperatorModel, lambda: C64, t: f64) -> Result<f64> {
    let shifted = op.shifted(lambda);
    let w0 = solve_w0_shifted(&shifted, t)?;
    if !w0.in_xi_t {
        return Ok(0.0);
    }
    let f = shifted.functionals(w0.w)?;
    Ok((f.f5.norm_sqr() / f.f3 + w0.w * w0.w * f.f4) / PI)
}

/// Brown density by the derivative formula
/// `(1/pi)(1/t - d/d conj(lambda) phi[x0^* h^{-1}])`, with the Wirtinger
/// derivative taken by central differences (each stencil point re-solves `w0`).
pub fn density_circular_fd(op: &OperatorModel, lambda: C64, t: f64) -> Result<f64> {
    density_circular_fd_with(op, lambda, t, false)
}

/// As [`density_circular_fd`], optionally with one Richardson extrapolation step.
pub fn density_circular_fd_with(
    op: &OperatorModel,
    lambda: C64,
    t: f64,
    richardson: bool,
) -> Result<f64> {
    let h = 1e-5 * lambda.norm().max(1.0);
    let stencil_ok = |step: f64| {
        [
            lambda + C64::new(step, 0.0),
            lambda - C64::new(step, 0.0),
            lambda + C64::new(0.0, step),
            lambda - C64::new(0.0, step),
        ]
        .iter()
        .all(|&p| in_xi_t(op, p, t))
    };
    if !in_xi_t(op, lambda, t) || !stencil_ok(2.0 * h) {
        return Err(Error::StencilOutsideDomain {
            re: lambda.re,
            im: lambda.im,
        });
    }
    // T(lambda) = phi[x0^* h^{-1}] = conj(lambda) f1 - f2, at w = w0(lambda)
    let trace = |p: C64| -> Result<C64> {
        let shifted = op.shifted(p);
        let w0 = solve_w0_shifted(&shifted, t)?;
        let f = shifted.functionals(w0.w)?;
        Ok(p.conj() * f.f1 - f.f2)
    };
    let wirtinger = |step: f64| -> Result<C64> {
        let dda = (trace(lambda + C64::new(step, 0.0))? - trace(lambda - C64::new(step, 0.0))?)
            / (2.0 * step);
        let ddb = (trace(lambda + C64::new(0.0, step))? - trace(lambda - C64::new(0.0, step))?)
            / (2.0 * step);
        Ok(0.5 * (dda + C64::new(0.0, 1.0) * ddb))
    };
    let d = if richardson {
        let d1 = wirtinger(h)?;
        let d2 = wirtinger(0.5 * h)?;
        (4.0 * d2 - d1) / 3.0
    } else {
        wirtinger(h)?
    };
    Ok((1.0 / t - d.re) / PI)
}

/// Rectangular grid specification (cell-centered samples).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        GridSpec {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: n,
            ny: n,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Center of cell `(ix, iy)`.
    pub fn center(&self, ix: usize, iy: usize) -> C64 {
        C64::new(
            self.x_min + (ix as f64 + 0.5) * self.dx(),
            self.y_min + (iy as f64 + 0.5) * self.dy(),
        )
    }
}

/// Brown density sampled on a rectangular grid. `values` is row-major in `iy`
/// (index `iy * nx + ix`) with a NaN sentinel outside `Xi_t`.
#[derive(Debug, Clone, Serialize)]
pub struct DensityGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub cell_area: f64,
    pub mass: f64,
}

impl DensityGrid {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
            nx: self.nx,
            ny: self.ny,
        }
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    #[inline]
    pub fn masked(&self, ix: usize, iy: usize) -> bool {
        self.mask[iy * self.nx + ix]
    }

    /// Largest finite density value on the grid.
    pub fn max_density(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |acc, &v| acc.max(v))
    }

    /// CSV dump, header `x,y,in_xi,density`, row-major; NaN as empty field.
    pub fn to_csv(&self) -> String {
        let spec = self.spec();
        let mut out = String::from("x,y,in_xi,density\n");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let p = spec.center(ix, iy);
                let v = self.value(ix, iy);
                let field = if v.is_nan() {
                    String::new()
                } else {
                    format!("{v:.16e}")
                };
                out.push_str(&format!(
                    "{:.16e},{:.16e},{},{}\n",
                    p.re,
                    p.im,
                    u8::from(self.masked(ix, iy)),
                    field
                ));
            }
        }
        out
    }
}

/// A rectangle guaranteed to contain `Xi_t` (with a 5% margin).
///
/// `Xi_t` lies within distance `sqrt(t)` of the spectrum of `x0` because the
/// defining integral is bounded by the inverse squared distance.
pub fn xi_bounding_box(op: &OperatorModel, t: f64) -> (f64, f64, f64, f64) {
    let r = t.sqrt();
    let (x_lo, x_hi, y_lo, y_hi) = match op {
        OperatorModel::Zero => (0.0, 0.0, 0.0, 0.0),
        OperatorModel::SelfAdjoint(mu) => {
            let (lo, hi) = mu.support_bounds().unwrap_or((0.0, 0.0));
            (lo, hi, 0.0, 0.0)
        }
        OperatorModel::PlanarAtomic(atoms) => {
            let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for (z, w) in atoms {
                if *w > 0.0 {
                    b.0 = b.0.min(z.re);
                    b.1 = b.1.max(z.re);
                    b.2 = b.2.min(z.im);
                    b.3 = b.3.max(z.im);
                }
            }
            b
        }
        OperatorModel::FiniteMatrix(m) => {
            let norm = m.frobenius_norm();
            (-norm, norm, -norm, norm)
        }
        OperatorModel::HaarUnitary => {
            let outer = (1.0 + t).sqrt();
            (-outer + r, outer - r, -outer + r, outer - r)
        }
        OperatorModel::QuasiNilpotentDT => {
            let radius = crate::special::dt::disk_radius(t);
            (-radius + r, radius - r, -radius + r, radius - r)
        }
    };
    let margin = 0.05 * ((x_hi - x_lo) + (y_hi - y_lo) + 2.0 * r).max(1e-3);
    (
        x_lo - r - margin,
        x_hi + r + margin,
        y_lo - r - margin,
        y_hi + r + margin,
    )
}

/// Evaluates `in_xi_t` and `density_circular` at cell centers; the mass is the
/// masked cell sum. Cells are distributed over the rayon pool.
pub fn density_grid(op: &OperatorModel, t: f64, spec: GridSpec) -> Result<DensityGrid> {
    assert!(spec.nx >= 2 && spec.ny >= 2, "resolution must be >= 2");
    let cells: Vec<(usize, usize)> = (0..spec.ny)
        .flat_map(|iy| (0..spec.nx).map(move |ix| (ix, iy)))
        .collect();
    let evaluated: Vec<(bool, f64)> = cells
        .par_iter()
        .map(|&(ix, iy)| {
            let lambda = spec.center(ix, iy);
            if in_xi_t(op, lambda, t) {
                let d = density_circular(op, lambda, t).unwrap_or(f64::NAN);
                (true, d)
            } else {
                (false, f64::NAN)
            }
        })
        .collect();
    let mask: Vec<bool> = evaluated.iter().map(|e| e.0).collect();
    let values: Vec<f64> = evaluated.iter().map(|e| e.1).collect();
    let cell_area = spec.dx() * spec.dy();
    let mass = values
        .iter()
        .zip(&mask)
        .filter(|(v, &m)| m && v.is_finite())
        .map(|(v, _)| v * cell_area)
        .sum();
    Ok(DensityGrid {
        x_min: spec.x_min,
        x_max: spec.x_max,
        y_min: spec.y_min,
        y_max: spec.y_max,
        nx: spec.nx,
        ny: spec.ny,
        values,
        mask,
        cell_area,
        mass,
    })
}
