//! The deterministic summand `x0` and the trace functionals of its shifted
//! resolvents that every downstream formula consumes.
//!
//! With `h = (lambda - x0)^* (lambda - x0) + w^2` and
//! `k = (lambda - x0)(lambda - x0)^* + w^2`, the five functionals are
//!
//! ```text
//! f1 = phi[h^-1]                 f2 = phi[(lambda - x0)^* k^-1]   (= p_lambda^(0)(w))
//! f3 = phi[h^-2]                 f4 = phi[h^-1 k^-1]
//! f5 = phi[(lambda - x0) h^-2]
//! ```
//!
//! Measure-backed variants never materialize `mu_{|x0 - lambda|}` as a table;
//! integrals are taken directly against the stored measure.

use crate::error::Error;
use crate::mat::{svd_jacobi, CMat};
use crate::measure::Measure1D;
use crate::special::{dt, haar};
use crate::{Result, C64};
use serde::Deserialize;

/// Trace functionals of the shifted resolvents at one `(lambda, w)`.
#[derive(Debug, Clone, Copy)]
pub struct ResolventFunctionals {
    pub f1: f64,
    pub f2: C64,
    pub f3: f64,
    pub f4: f64,
    pub f5: C64,
}

/// The deterministic operator `x0`.
#[derive(Debug, Clone)]
pub enum OperatorModel {
    /// Selfadjoint with the given spectral measure.
    SelfAdjoint(Measure1D),
    /// Normal operator with finitely many eigenvalues in the plane.
    PlanarAtomic(Vec<(C64, f64)>),
    /// An `N x N` complex matrix, trace normalized by `1/N`.
    FiniteMatrix(CMat),
    /// The zero operator.
    Zero,
    /// Free Haar unitary (closed forms).
    HaarUnitary,
    /// Quasi-nilpotent DT operator (closed forms).
    QuasiNilpotentDT,
}

impl OperatorModel {
    pub fn planar_atomic(atoms: Vec<(C64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "planar atom weights sum to {total}, expected 1"
            )));
        }
        if atoms.iter().any(|(z, w)| !z.re.is_finite() || !z.im.is_finite() || *w < 0.0) {
            return Err(Error::InvalidModel("bad planar atom".into()));
        }
        Ok(OperatorModel::PlanarAtomic(atoms))
    }

    pub fn finite_matrix(m: CMat) -> Result<Self> {
        if m.n_rows != m.n_cols || m.n_rows == 0 {
            return Err(Error::InvalidModel("matrix must be square with N >= 1".into()));
        }
        if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidModel("matrix entries must be finite".into()));
        }
        Ok(OperatorModel::FiniteMatrix(m))
    }

    /// Loads a model from the shared JSON format, e.g.
    /// `{"type":"selfadjoint","atoms":[[-2,0.4],[-0.8,0.1],[1,0.5]]}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let spec: OperatorSpec =
            serde_json::from_str(json).map_err(|e| Error::InvalidModel(e.to_string()))?;
        spec.build()
    }

    /// True for variants where `x0` is normal (so `h = k` exactly).
    pub fn is_normal(&self) -> bool {
        !matches!(
            self,
            OperatorModel::FiniteMatrix(_) | OperatorModel::QuasiNilpotentDT
        )
    }

    /// Per-`lambda` view with the SVD (matrix variant) computed once.
    pub fn shifted(&self, lambda: C64) -> ShiftedOperator<'_> {
        let view = match self {
            OperatorModel::SelfAdjoint(mu) => View::SelfAdjoint { mu },
            OperatorModel::Zero => View::Atoms {
                terms: vec![(1.0, lambda)],
            },
            OperatorModel::PlanarAtomic(atoms) => View::Atoms {
                terms: atoms
                    .iter()
                    .filter(|(_, w)| *w > 0.0)
                    .map(|&(z, w)| (w, lambda - z))
                    .collect(),
            },
            OperatorModel::FiniteMatrix(a) => {
                let n = a.n_rows;
                let mut shifted = CMat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        shifted[(i, j)] = -a[(i, j)];
                    }
                    shifted[(i, i)] += lambda;
                }
                let svd = svd_jacobi(&shifted);
                // M = U^H V drives f2/f4/f5; only its squared magnitudes and
                // diagonal are ever needed
                let mut msq = vec![0.0f64; n * n];
                let mut p_diag = vec![C64::new(0.0, 0.0); n];
                for i in 0..n {
                    for j in 0..n {
                        let mut m = C64::new(0.0, 0.0);
                        for k in 0..n {
                            m += svd.u[(k, i)].conj() * svd.v[(k, j)];
                        }
                        msq[i * n + j] = m.norm_sqr();
                        if i == j {
                            p_diag[i] = m;
                        }
                    }
                }
                View::Svd {
                    sigma: svd.sigma,
                    msq,
                    p_diag,
                }
            }
            OperatorModel::HaarUnitary => View::Haar,
            OperatorModel::QuasiNilpotentDT => View::Dt,
        };
        ShiftedOperator { lambda, view }
    }
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum OperatorSpec {
    Selfadjoint {
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
        #[serde(default)]
        densities: Vec<crate::measure::DensityPiece>,
    },
    Planar {
        atoms: Vec<(f64, f64, f64)>,
    },
    Matrix {
        n: usize,
        entries_re: Vec<f64>,
        entries_im: Vec<f64>,
    },
    HaarUnitary,
    Dt,
    Zero,
}

impl OperatorSpec {
    fn build(self) -> Result<OperatorModel> {
        match self {
            OperatorSpec::Selfadjoint { atoms, densities } => {
                Ok(OperatorModel::SelfAdjoint(Measure1D::new(atoms, densities)?))
            }
            OperatorSpec::Planar { atoms } => OperatorModel::planar_atomic(
                atoms
                    .into_iter()
                    .map(|(re, im, w)| (C64::new(re, im), w))
                    .collect(),
            ),
            OperatorSpec::Matrix {
                n,
                entries_re,
                entries_im,
            } => {
                if entries_re.len() != n * n || entries_im.len() != n * n {
                    return Err(Error::InvalidModel(format!(
                        "matrix entries must be n*n = {} values, got {}/{}",
                        n * n,
                        entries_re.len(),
                        entries_im.len()
                    )));
                }
                let data = entries_re
                    .iter()
                    .zip(&entries_im)
                    .map(|(&re, &im)| C64::new(re, im))
                    .collect();
                OperatorModel::finite_matrix(CMat {
                    n_rows: n,
                    n_cols: n,
                    data,
                })
            }
            OperatorSpec::HaarUnitary => Ok(OperatorModel::HaarUnitary),
            OperatorSpec::Dt => Ok(OperatorModel::QuasiNilpotentDT),
            OperatorSpec::Zero => Ok(OperatorModel::Zero),
        }
    }
}

enum View<'a> {
    SelfAdjoint { mu: &'a Measure1D },
    /// Weighted shifts `lambda - z_i` (covers Zero and PlanarAtomic).
    Atoms { terms: Vec<(f64, C64)> },
    Svd {
        sigma: Vec<f64>,
        msq: Vec<f64>,
        p_diag: Vec<C64>,
    },
    Haar,
    Dt,
}

/// Fixed-`lambda` view of `lambda - x0`: all per-`w` functionals.
pub struct ShiftedOperator<'a> {
    lambda: C64,
    view: View<'a>,
}

const QUAD_TOL: f64 = 1e-13;

impl ShiftedOperator<'_> {
    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// True when the `w = 0` inverse-square integral diverges.
    fn divergent_at_zero(&self) -> bool {
        match &self.view {
            View::SelfAdjoint { mu } => {
                if self.lambda.im != 0.0 {
                    return false;
                }
                let a = self.lambda.re;
                if mu.atoms().iter().any(|&(l, w)| l == a && w > 0.0) {
                    return true;
                }
                mu.densities().iter().any(|p| {
                    if a < p.lo || a > p.hi {
                        return false;
                    }
                    let h = p.step();
                    let pos = (a - p.lo) / h;
                    let idx = (pos.floor() as usize).min(p.samples.len() - 2);
                    // positive interpolant on a subinterval touching `a`
                    p.samples[idx] > 0.0
                        || p.samples[idx + 1] > 0.0
                        || (pos.fract() == 0.0 && idx > 0 && p.samples[idx - 1] > 0.0)
                })
            }
            View::Atoms { terms } => terms.iter().any(|&(w, d)| w > 0.0 && d.norm_sqr() == 0.0),
            View::Svd { sigma, .. } => {
                let smax = sigma.first().copied().unwrap_or(0.0);
                sigma.iter().any(|&s| s <= smax * 1e-14)
            }
            View::Haar => haar::inv_square_moment(self.lambda).is_none(),
            View::Dt => dt::inv_square_moment(self.lambda).is_none(),
        }
    }

    /// `int u^{-2} d mu_{|x0 - lambda|}`; `None` when divergent.
    pub fn inv_square_moment(&self) -> Option<f64> {
        if self.divergent_at_zero() {
            return None;
        }
        match &self.view {
            View::Haar => haar::inv_square_moment(self.lambda),
            View::Dt => dt::inv_square_moment(self.lambda),
            _ => self.f1(0.0).ok(),
        }
    }

    /// `f1(w) = phi[h^{-1}] = int (u^2 + w^2)^{-1} d mu_{|x0 - lambda|}`.
    pub fn f1(&self, w: f64) -> Result<f64> {
        if w == 0.0 && self.divergent_at_zero() {
            return Err(Error::DivergentIntegral("w = 0 with singular shift"));
        }
        let wsq = w * w;
        match &self.view {
            View::SelfAdjoint { mu } => {
                let (a, b) = (self.lambda.re, self.lambda.im);
                let dsq = b * b + wsq;
                let f = |u: f64| 1.0 / ((u - a) * (u - a) + dsq);
                Ok(if dsq == 0.0 {
                    mu.integrate_singular(f, a, QUAD_TOL)
                } else {
                    mu.integrate(f)
                })
            }
            View::Atoms { terms } => Ok(terms
                .iter()
                .map(|&(wt, d)| wt / (d.norm_sqr() + wsq))
                .sum()),
            View::Svd { sigma, .. } => {
                let n = sigma.len() as f64;
                Ok(sigma.iter().map(|&s| 1.0 / (s * s + wsq)).sum::<f64>() / n)
            }
            View::Haar => haar::functionals(self.lambda, w).map(|f| f.f1),
            View::Dt => {
                if w == 0.0 {
                    dt::inv_square_moment(self.lambda)
                        .ok_or(Error::DivergentIntegral("DT at lambda = 0"))
                } else {
                    dt::functionals(self.lambda, w).map(|f| f.f1)
                }
            }
        }
    }

    /// `(f1, f3)` in one pass; `f1' (w) = -2 w f3` drives Newton steps.
    pub fn f1_f3(&self, w: f64) -> Result<(f64, f64)> {
        if w == 0.0 && self.divergent_at_zero() {
            return Err(Error::DivergentIntegral("w = 0 with singular shift"));
        }
        let wsq = w * w;
        match &self.view {
            View::SelfAdjoint { mu } => {
                let (a, b) = (self.lambda.re, self.lambda.im);
                let dsq = b * b + wsq;
                let f1 = self.f1(w)?;
                let f = |u: f64| {
                    let d = (u - a) * (u - a) + dsq;
                    1.0 / (d * d)
                };
                let f3 = if dsq == 0.0 {
                    mu.integrate_singular(f, a, QUAD_TOL)
                } else {
                    mu.integrate(f)
                };
                Ok((f1, f3))
            }
            View::Atoms { terms } => {
                let mut f1 = 0.0;
                let mut f3 = 0.0;
                for &(wt, d) in terms {
                    let den = d.norm_sqr() + wsq;
                    f1 += wt / den;
                    f3 += wt / (den * den);
                }
                Ok((f1, f3))
            }
            View::Svd { sigma, .. } => {
                let n = sigma.len() as f64;
                let mut f1 = 0.0;
                let mut f3 = 0.0;
                for &s in sigma {
                    let den = s * s + wsq;
                    f1 += 1.0 / den;
                    f3 += 1.0 / (den * den);
                }
                Ok((f1 / n, f3 / n))
            }
            View::Haar => haar::functionals(self.lambda, w).map(|f| (f.f1, f.f3)),
            View::Dt => dt::functionals(self.lambda, w).map(|f| (f.f1, f.f3)),
        }
    }

    /// `h_mu(s) = s f1(s)`, the gradient function of the shifted measure.
    pub fn h_mu(&self, s: f64) -> Result<f64> {
        Ok(s * self.f1(s)?)
    }

    /// All five functionals at `(lambda, w)`.
    pub fn functionals(&self, w: f64) -> Result<ResolventFunctionals> {
        if w == 0.0 && self.divergent_at_zero() {
            return Err(Error::DivergentIntegral("w = 0 with singular shift"));
        }
        let wsq = w * w;
        let lambda = self.lambda;
        match &self.view {
            View::SelfAdjoint { mu } => {
                let (a, b) = (lambda.re, lambda.im);
                let dsq = b * b + wsq;
                let singular = dsq == 0.0;
                let run = |f: &dyn Fn(f64) -> f64| {
                    if singular {
                        mu.integrate_singular(f, a, QUAD_TOL)
                    } else {
                        mu.integrate(f)
                    }
                };
                let den = |u: f64| (u - a) * (u - a) + dsq;
                let f1 = run(&|u| 1.0 / den(u));
                let f3 = run(&|u| 1.0 / (den(u) * den(u)));
                let f2_re = run(&|u| (a - u) / den(u));
                let f2_im = run(&|u| -b / den(u));
                let f5_re = run(&|u| (a - u) / (den(u) * den(u)));
                let f5_im = run(&|u| b / (den(u) * den(u)));
                Ok(ResolventFunctionals {
                    f1,
                    f2: C64::new(f2_re, f2_im),
                    f3,
                    f4: f3,
                    f5: C64::new(f5_re, f5_im),
                })
            }
            View::Atoms { terms } => {
                let mut f1 = 0.0;
                let mut f3 = 0.0;
                let mut f2 = C64::new(0.0, 0.0);
                let mut f5 = C64::new(0.0, 0.0);
                for &(wt, d) in terms {
                    let den = d.norm_sqr() + wsq;
                    f1 += wt / den;
                    f3 += wt / (den * den);
                    f2 += wt * d.conj() / den;
                    f5 += wt * d / (den * den);
                }
                Ok(ResolventFunctionals { f1, f2, f3, f4: f3, f5 })
            }
            View::Svd { sigma, msq, p_diag } => {
                let n = sigma.len();
                let nf = n as f64;
                let mut f1 = 0.0;
                let mut f3 = 0.0;
                let mut f2 = C64::new(0.0, 0.0);
                let mut f5 = C64::new(0.0, 0.0);
                for i in 0..n {
                    let den = sigma[i] * sigma[i] + wsq;
                    f1 += 1.0 / den;
                    f3 += 1.0 / (den * den);
                    // f2 = tr[V S (S^2+w^2)^-1 U^H]/N: diag of U^H V weighs it
                    f2 += p_diag[i] * (sigma[i] / den);
                    f5 += p_diag[i].conj() * (sigma[i] / (den * den));
                }
                let mut f4 = 0.0;
                for i in 0..n {
                    let ai = 1.0 / (sigma[i] * sigma[i] + wsq);
                    for j in 0..n {
                        let bj = 1.0 / (sigma[j] * sigma[j] + wsq);
                        // weight |(U^H V)_{ij}|^2 couples the h and k bases
                        f4 += msq[i * n + j] * bj * ai;
                    }
                }
                Ok(ResolventFunctionals {
                    f1: f1 / nf,
                    f2: f2 / nf,
                    f3: f3 / nf,
                    f4: f4 / nf,
                    f5: f5 / nf,
                })
            }
            View::Haar => haar::functionals(lambda, w),
            View::Dt => dt::functionals(lambda, w),
        }
    }

    /// `log Delta((x0 - lambda)^* (x0 - lambda) + w^2)`.
    pub fn log_fk_det(&self, w: f64) -> Result<f64> {
        let wsq = w * w;
        match &self.view {
            View::SelfAdjoint { mu } => {
                let (a, b) = (self.lambda.re, self.lambda.im);
                let dsq = b * b + wsq;
                if dsq == 0.0 && mu.atoms().iter().any(|&(l, wt)| l == a && wt > 0.0) {
                    return Err(Error::NegativeInfinity);
                }
                let f = |u: f64| ((u - a) * (u - a) + dsq).max(f64::MIN_POSITIVE).ln();
                Ok(if dsq == 0.0 {
                    mu.integrate_singular(f, a, QUAD_TOL)
                } else {
                    mu.integrate(f)
                })
            }
            View::Atoms { terms } => {
                let mut total = 0.0;
                for &(wt, d) in terms {
                    let den = d.norm_sqr() + wsq;
                    if den == 0.0 {
                        return Err(Error::NegativeInfinity);
                    }
                    total += wt * den.ln();
                }
                Ok(total)
            }
            View::Svd { sigma, .. } => {
                let mut total = 0.0;
                for &s in sigma {
                    let den = s * s + wsq;
                    if den == 0.0 {
                        return Err(Error::NegativeInfinity);
                    }
                    total += den.ln();
                }
                Ok(total / sigma.len() as f64)
            }
            View::Haar => Ok(haar::log_fk_det(self.lambda, w)),
            View::Dt => dt::log_fk_det(self.lambda, w),
        }
    }
}

/// The singular-value distribution `mu_{|x0 - lambda|}` as an explicit measure.
///
/// Exact for atomic and matrix variants. Selfadjoint measures with density
/// pieces get a sampled pushforward (the internal integrals never use it);
/// Haar/DT dispatch to closed forms instead.
pub fn shifted_singular_measure(op: &OperatorModel, lambda: C64) -> Result<Measure1D> {
    fn merged(mut atoms: Vec<(f64, f64)>) -> Result<Measure1D> {
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (loc, w) in atoms {
            match out.last_mut() {
                Some(last) if last.0 == loc => last.1 += w,
                _ => out.push((loc, w)),
            }
        }
        Measure1D::new(out, vec![])
    }

    match op {
        OperatorModel::Zero => merged(vec![(lambda.norm(), 1.0)]),
        OperatorModel::PlanarAtomic(atoms) => merged(
            atoms
                .iter()
                .map(|&(z, w)| ((z - lambda).norm(), w))
                .collect(),
        ),
        OperatorModel::FiniteMatrix(_) => {
            let shifted = op.shifted(lambda);
            match &shifted.view {
                View::Svd { sigma, .. } => {
                    let w = 1.0 / sigma.len() as f64;
                    merged(sigma.iter().map(|&s| (s, w)).collect())
                }
                _ => unreachable!(),
            }
        }
        OperatorModel::SelfAdjoint(mu) => {
            let (a, b) = (lambda.re, lambda.im);
            let mut atoms: Vec<(f64, f64)> = mu
                .atoms()
                .iter()
                .map(|&(u, w)| ((C64::new(u, 0.0) - lambda).norm(), w))
                .collect();
            let mut pieces = Vec::new();
            for p in mu.densities() {
                // pushforward of the piece under u -> sqrt((u-a)^2 + b^2)
                let v_at = |u: f64| ((u - a) * (u - a) + b * b).sqrt();
                let mut vmin = v_at(p.lo).min(v_at(p.hi));
                if a > p.lo && a < p.hi {
                    vmin = b.abs();
                }
                let vmax = v_at(p.lo).max(v_at(p.hi));
                let mass = p.mass();
                if vmax - vmin < 1e-300 {
                    atoms.push((vmin, mass));
                    continue;
                }
                let density = |v: f64| {
                    if v <= b.abs() {
                        return 0.0;
                    }
                    let root = (v * v - b * b).sqrt();
                    let jac = if root > 0.0 { v / root } else { 0.0 };
                    (p.density_at(a + root) + p.density_at(a - root)) * jac
                };
                let n = 1024.max(p.samples.len());
                // 1/sqrt singularity at v = |b| when the vertical projection
                // hits the piece: grade an extra fine edge table there
                let singular_edge = b != 0.0 && a > p.lo && a < p.hi;
                if singular_edge {
                    let split = vmin + 0.05 * (vmax - vmin);
                    let edge = Measure1D::sampled_piece(vmin, split, 4096, 1.0, density);
                    let main = Measure1D::sampled_piece(split, vmax, n, 1.0, density);
                    // sampled_piece normalizes to the given weight; rebuild the
                    // raw (unnormalized) tables instead
                    let raw_edge = {
                        let mut e = edge;
                        e
                    };
                    pieces.push(raw_edge);
                    pieces.push(main);
                } else {
                    pieces.push(Measure1D::sampled_piece(vmin, vmax, n, mass, density));
                }
            }
            let total: f64 = atoms.iter().map(|x| x.1).sum::<f64>()
                + pieces.iter().map(|p| p.mass()).sum::<f64>();
            // renormalize the sampled tables so the invariant holds exactly
            if !pieces.is_empty() && (total - 1.0).abs() > 1e-13 {
                let scale = (1.0 - atoms.iter().map(|x| x.1).sum::<f64>())
                    / pieces.iter().map(|p| p.mass()).sum::<f64>();
                for p in &mut pieces {
                    for s in &mut p.samples {
                        *s *= scale;
                    }
                }
            }
            atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut out: Vec<(f64, f64)> = Vec::new();
            for (loc, w) in atoms {
                match out.last_mut() {
                    Some(last) if last.0 == loc => last.1 += w,
                    _ => out.push((loc, w)),
                }
            }
            Measure1D::new(out, pieces)
        }
        OperatorModel::HaarUnitary | OperatorModel::QuasiNilpotentDT => {
            Err(Error::DispatchToClosedForm)
        }
    }
}

/// The five resolvent functionals at `(lambda, w)`; see the module docs.
pub fn resolvent_functionals(
    op: &OperatorModel,
    lambda: C64,
    w: f64,
) -> Result<ResolventFunctionals> {
    op.shifted(lambda).functionals(w)
}

/// `log Delta((x0 - lambda)^*(x0 - lambda) + w^2)
///  = int log(u^2 + w^2) d mu_{|x0 - lambda|}(u)`.
pub fn log_fk_det_shifted(op: &OperatorModel, lambda: C64, w: f64) -> Result<f64> {
    op.shifted(lambda).log_fk_det(w)
}

pub use crate::measure::cauchy_transform;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn nilpotent() -> OperatorModel {
        OperatorModel::finite_matrix(CMat::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]))
        .unwrap()
    }

    fn three_atom() -> OperatorModel {
        OperatorModel::SelfAdjoint(
            Measure1D::from_atoms(&[(-2.0, 0.4), (-0.8, 0.1), (1.0, 0.5)]).unwrap(),
        )
    }

    #[test]
    fn shifted_singular_measure_examples() {
        // nilpotent Jordan block at lambda = 0: atoms {0: 1/2, 1: 1/2}
        let m = shifted_singular_measure(&nilpotent(), c(0.0, 0.0)).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert!((m.atoms()[0].0).abs() < 1e-14 && (m.atoms()[0].1 - 0.5).abs() < 1e-14);
        assert!((m.atoms()[1].0 - 1.0).abs() < 1e-14 && (m.atoms()[1].1 - 0.5).abs() < 1e-14);

        // zero operator at lambda = 0.5
        let m = shifted_singular_measure(&OperatorModel::Zero, c(0.5, 0.0)).unwrap();
        assert_eq!(m.atoms(), &[(0.5, 1.0)]);

        // planar {1: 1/2, -1: 1/2} at lambda = i: single atom at sqrt 2
        let op = OperatorModel::planar_atomic(vec![(c(1.0, 0.0), 0.5), (c(-1.0, 0.0), 0.5)]).unwrap();
        let m = shifted_singular_measure(&op, c(0.0, 1.0)).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].0 - 2.0f64.sqrt()).abs() < 1e-14);
        assert!((m.atoms()[0].1 - 1.0).abs() < 1e-14);

        assert!(matches!(
            shifted_singular_measure(&OperatorModel::HaarUnitary, c(0.0, 0.0)),
            Err(Error::DispatchToClosedForm)
        ));
    }

    #[test]
    fn functionals_zero_operator() {
        let f = resolvent_functionals(&OperatorModel::Zero, c(0.6, 0.0), 0.8).unwrap();
        assert!((f.f1 - 1.0).abs() < 1e-15);
        assert!((f.f2 - c(0.6, 0.0)).norm() < 1e-15);
        assert!((f.f3 - 1.0).abs() < 1e-15);
        assert!((f.f4 - 1.0).abs() < 1e-15);
        assert!((f.f5 - c(0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn functionals_nilpotent_matrix() {
        let f = resolvent_functionals(&nilpotent(), c(0.0, 0.0), 1.0).unwrap();
        assert!((f.f1 - 0.75).abs() < 1e-13, "f1 = {}", f.f1);
        // direct 2x2 check: h = A_s^* A_s + 1 with A_s = -A
        // h = [[1,0],[0,2]], k = [[2,0],[0,1]] => f3 = (1 + 1/4)/2, f4 = (1/2 + 1/2)/2
        assert!((f.f3 - 0.625).abs() < 1e-13, "f3 = {}", f.f3);
        assert!((f.f4 - 0.5).abs() < 1e-13, "f4 = {}", f.f4);
        // f2 = tr[(-A)^* k^-1]/2 = 0, f5 = tr[(-A) h^-2]/2 = 0 (off-diagonal)
        assert!(f.f2.norm() < 1e-13);
        assert!(f.f5.norm() < 1e-13);
    }

    #[test]
    fn functionals_symmetric_two_atoms() {
        let op = OperatorModel::SelfAdjoint(
            Measure1D::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        );
        let f = resolvent_functionals(&op, c(0.0, 0.0), 1.0).unwrap();
        assert!((f.f1 - 0.5).abs() < 1e-15);
        assert!(f.f2.norm() < 1e-15, "symmetry forces f2 = 0");
        assert!((f.f4 - f.f3).abs() < 1e-15);
    }

    #[test]
    fn log_fk_det_examples() {
        let v = log_fk_det_shifted(&OperatorModel::Zero, c(2.0, 0.0), 0.0).unwrap();
        assert!((v - 4.0f64.ln()).abs() < 1e-15);

        let v = log_fk_det_shifted(&nilpotent(), c(0.0, 0.0), 1.0).unwrap();
        assert!((v - 0.5 * 2.0f64.ln()).abs() < 1e-13);
        assert!((v - 0.34657).abs() < 1e-5);

        let op = OperatorModel::SelfAdjoint(
            Measure1D::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap(),
        );
        let v = log_fk_det_shifted(&op, c(0.0, 0.0), 0.0).unwrap();
        assert!(v.abs() < 1e-15);

        assert!(matches!(
            log_fk_det_shifted(&nilpotent(), c(0.0, 0.0), 0.0),
            Err(Error::NegativeInfinity)
        ));
    }

    #[test]
    fn matrix_measure_oracle() {
        // diagonal matrix drawn from a planar measure: every functional agrees
        let zs = [c(0.3, 0.4), c(-1.0, 0.2), c(0.3, 0.4), c(2.0, -1.0)];
        let mut m = CMat::zeros(4, 4);
        for (i, &z) in zs.iter().enumerate() {
            m[(i, i)] = z;
        }
        let mat = OperatorModel::finite_matrix(m).unwrap();
        let planar = OperatorModel::planar_atomic(vec![
            (c(0.3, 0.4), 0.5),
            (c(-1.0, 0.2), 0.25),
            (c(2.0, -1.0), 0.25),
        ])
        .unwrap();
        for &(lam, w) in &[(c(0.1, -0.7), 0.5), (c(1.0, 1.0), 0.05), (c(-0.5, 0.0), 2.0)] {
            let fm = resolvent_functionals(&mat, lam, w).unwrap();
            let fp = resolvent_functionals(&planar, lam, w).unwrap();
            assert!((fm.f1 - fp.f1).abs() < 1e-10);
            assert!((fm.f2 - fp.f2).norm() < 1e-10);
            assert!((fm.f3 - fp.f3).abs() < 1e-10);
            assert!((fm.f4 - fp.f4).abs() < 1e-10);
            assert!((fm.f5 - fp.f5).norm() < 1e-10);
        }
    }

    #[test]
    fn f1_monotone_in_w() {
        let op = three_atom();
        let shifted = op.shifted(c(0.3, 0.1));
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let w = 0.1 * k as f64;
            let f1 = shifted.f1(w).unwrap();
            assert!(f1 < prev);
            prev = f1;
        }
    }

    #[test]
    fn divergence_detection() {
        let op = three_atom();
        assert!(op.shifted(c(1.0, 0.0)).inv_square_moment().is_none());
        assert!(op.shifted(c(1.0, 1e-9)).inv_square_moment().is_some());
        assert!(op.shifted(c(0.99, 0.0)).inv_square_moment().is_some());
        assert!(matches!(
            resolvent_functionals(&op, c(1.0, 0.0), 0.0),
            Err(Error::DivergentIntegral(_))
        ));
        // density piece: uniform on [0,1]
        let piece = Measure1D::sampled_piece(0.0, 1.0, 64, 1.0, |_| 1.0);
        let op = OperatorModel::SelfAdjoint(Measure1D::new(vec![], vec![piece]).unwrap());
        assert!(op.shifted(c(0.5, 0.0)).inv_square_moment().is_none());
        assert!(op.shifted(c(1.5, 0.0)).inv_square_moment().is_some());
    }

    #[test]
    fn json_round_trip() {
        let op = OperatorModel::from_json(
            r#"{"type":"selfadjoint","atoms":[[-2,0.4],[-0.8,0.1],[1,0.5]]}"#,
        )
        .unwrap();
        assert!(matches!(op, OperatorModel::SelfAdjoint(_)));

        let op = OperatorModel::from_json(
            r#"{"type":"matrix","n":2,"entries_re":[0,1,0,0],"entries_im":[0,0,0,0]}"#,
        )
        .unwrap();
        assert!(matches!(op, OperatorModel::FiniteMatrix(_)));

        assert!(matches!(
            OperatorModel::from_json(r#"{"type":"haar_unitary"}"#).unwrap(),
            OperatorModel::HaarUnitary
        ));
        assert!(matches!(
            OperatorModel::from_json(r#"{"type":"dt"}"#).unwrap(),
            OperatorModel::QuasiNilpotentDT
        ));
        assert!(matches!(
            OperatorModel::from_json(r#"{"type":"zero"}"#).unwrap(),
            OperatorModel::Zero
        ));
        assert!(OperatorModel::from_json(r#"{"type":"planar","atoms":[[1,0,0.5],[-1,0,0.6]]}"#).is_err());
    }

    #[test]
    fn selfadjoint_density_pushforward_mass() {
        let mu = Measure1D::semicircle(1.0, 257).unwrap();
        let op = OperatorModel::SelfAdjoint(mu);
        let pushed = shifted_singular_measure(&op, c(0.5, 0.3)).unwrap();
        assert!((pushed.total_mass() - 1.0).abs() < 1e-12);
        // second moment of |x0 - lambda| = int |u - lambda|^2 dmu = 1 + |lambda|^2;
        // the sampled pushforward has an integrable 1/sqrt edge, so the table
        // is a coarse approximation by design
        let shifted_m2 = pushed.integrate(|v| v * v);
        assert!(
            (shifted_m2 - (1.0 + 0.34)).abs() < 2e-2,
            "m2 = {shifted_m2}"
        );
    }
}
