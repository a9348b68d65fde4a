//! Monte Carlo lab: deformed random-matrix ensembles, their spectra, and
//! comparison of empirical spectral distributions against computed theory.

pub mod eig;

use crate::brown::DensityGrid;
use crate::error::Error;
use crate::mat::CMat;
use crate::rng::CounterRng;
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;

pub use eig::eigenvalues;

/// Ensemble kinds of the deformation lab.
#[derive(Debug, Clone)]
pub enum EnsembleKind {
    /// iid complex Gaussian entries of variance `t/n` (matches `c_t`).
    Ginibre { t: f64 },
    /// `e^{i theta}(H_1 + i H_2)` with independent Hermitian Gaussian factors,
    /// `t_1 + t_2 = t`, `t_1 - t_2 = |gamma|`, `e^{2 i theta} = gamma / |gamma|`.
    Elliptic { t: f64, gamma: C64 },
    /// Haar-distributed unitary (QR of a Ginibre sample with phase fixing).
    HaarUnitary,
    /// Strictly upper-triangular Gaussian (quasi-nilpotent DT model):
    /// `Re`/`Im` of each entry have variance `1/(2n)`.
    DtUpper,
    /// A stored deterministic matrix.
    Deterministic(CMat),
}

/// A fully specified ensemble draw.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub n: usize,
    pub kind: EnsembleKind,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, kind: EnsembleKind, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel("ensemble size must be >= 2".into()));
        }
        if let EnsembleKind::Elliptic { t, gamma } = &kind {
            if gamma.norm() > *t + 1e-15 {
                return Err(Error::InvalidModel(format!(
                    "elliptic ensemble needs |gamma| <= t, got |gamma| = {}",
                    gamma.norm()
                )));
            }
        }
        if let EnsembleKind::Deterministic(m) = &kind {
            if m.n_rows != n || m.n_cols != n {
                return Err(Error::InvalidModel("deterministic matrix size mismatch".into()));
            }
        }
        Ok(EnsembleSpec { n, kind, seed })
    }
}

// stream ids per matrix factor keep draws independent
const STREAM_GINIBRE: u64 = 1;
const STREAM_HERM1: u64 = 2;
const STREAM_HERM2: u64 = 3;
const STREAM_HAAR: u64 = 4;
const STREAM_DT: u64 = 5;

fn fill_ginibre(n: usize, seed: u64, stream: u64, t: f64) -> CMat {
    let rng = CounterRng::new(seed, stream);
    let sd = (t / (2.0 * n as f64)).sqrt();
    let mut m = CMat::zeros(n, n);
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (re, im) = rng.gaussian_pair((i * n + j) as u64);
                    C64::new(re * sd, im * sd)
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, z) in row.into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    m
}

/// Hermitian Gaussian with `E|H_ij|^2 = variance / n` (semicircle of that
/// variance in the large-`n` limit).
fn fill_hermitian(n: usize, seed: u64, stream: u64, variance: f64) -> CMat {
    let rng = CounterRng::new(seed, stream);
    let off_sd = (variance / (2.0 * n as f64)).sqrt();
    let diag_sd = (variance / n as f64).sqrt();
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (re, im) = rng.gaussian_pair((i * n + j) as u64);
            if i == j {
                m[(i, i)] = C64::new(re * diag_sd, 0.0);
            } else {
                let z = C64::new(re * off_sd, im * off_sd);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
    }
    m
}

/// Householder QR; returns `(Q, diag(R))`.
fn qr_q(a: &CMat) -> (CMat, Vec<C64>) {
    let n = a.n_rows;
    let mut r = a.clone();
    let mut q = CMat::identity(n);
    for k in 0..n {
        let m = n - k;
        let mut v = vec![C64::new(0.0, 0.0); m];
        for i in 0..m {
            v[i] = r[(k + i, k)];
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = v[0];
        let phase = if alpha.norm() > 0.0 {
            alpha / alpha.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let zeta = -phase * norm;
        v[0] -= zeta;
        let vns: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vns == 0.0 {
            continue;
        }
        let beta = 2.0 / vns;
        // R <- P R, Q <- Q P  (P = I - beta v v^H acting on rows/cols k..)
        for j in k..n {
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * r[(k + i, j)];
            }
            let dot = dot * beta;
            for i in 0..m {
                let vi = v[i];
                r[(k + i, j)] -= vi * dot;
            }
        }
        for i in 0..n {
            let mut dot = C64::new(0.0, 0.0);
            for j in 0..m {
                dot += q[(i, k + j)] * v[j];
            }
            let dot = dot * beta;
            for j in 0..m {
                let vj = v[j].conj();
                q[(i, k + j)] -= dot * vj;
            }
        }
    }
    let diag = (0..n).map(|i| r[(i, i)]).collect();
    (q, diag)
}

/// Draws the matrix described by `spec` (bitwise reproducible per seed).
pub fn sample(spec: &EnsembleSpec) -> CMat {
    let n = spec.n;
    match &spec.kind {
        EnsembleKind::Ginibre { t } => fill_ginibre(n, spec.seed, STREAM_GINIBRE, *t),
        EnsembleKind::Elliptic { t, gamma } => {
            let g = gamma.norm();
            let t1 = (t + g) / 2.0;
            let t2 = (t - g) / 2.0;
            let theta = if g > 0.0 { gamma.arg() / 2.0 } else { 0.0 };
            let h1 = fill_hermitian(n, spec.seed, STREAM_HERM1, t1);
            let h2 = if t2 > 0.0 {
                fill_hermitian(n, spec.seed, STREAM_HERM2, t2)
            } else {
                CMat::zeros(n, n)
            };
            let rot = C64::from_polar(1.0, theta);
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = rot * (h1[(i, j)] + C64::new(0.0, 1.0) * h2[(i, j)]);
                }
            }
            m
        }
        EnsembleKind::HaarUnitary => {
            let g = fill_ginibre(n, spec.seed, STREAM_HAAR, 1.0);
            let (q, diag) = qr_q(&g);
            // phase fixing makes the distribution exactly Haar
            let mut u = q;
            for j in 0..n {
                let d = diag[j];
                let phase = if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    C64::new(1.0, 0.0)
                };
                for i in 0..n {
                    u[(i, j)] *= phase;
                }
            }
            u
        }
        EnsembleKind::DtUpper => {
            let rng = CounterRng::new(spec.seed, STREAM_DT);
            let sd = (1.0 / (2.0 * n as f64)).sqrt();
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let (re, im) = rng.gaussian_pair((i * n + j) as u64);
                    m[(i, j)] = C64::new(re * sd, im * sd);
                }
            }
            m
        }
        EnsembleKind::Deterministic(m) => m.clone(),
    }
}

/// Sum of two independent draws, e.g. a deterministic part plus Ginibre noise.
pub fn sample_sum(a: &EnsembleSpec, b: &EnsembleSpec) -> CMat {
    assert_eq!(a.n, b.n);
    let ma = sample(a);
    let mb = sample(b);
    let mut out = ma;
    for (x, y) in out.data.iter_mut().zip(&mb.data) {
        *x += y;
    }
    out
}

/// Theory reference for an ESD comparison.
pub enum Theory<'a> {
    /// Brown density grid (2-D binned total variation).
    Grid(&'a DensityGrid),
    /// Rotation-invariant law given by its radial CDF.
    RadialCdf(&'a (dyn Fn(f64) -> f64 + Sync)),
}

/// Comparison metrics between an empirical spectrum and a theory reference.
#[derive(Debug, Clone, Serialize)]
pub struct EsdReport {
    pub n_eigenvalues: usize,
    /// Total variation on a shared 50x50 binning (grid theories).
    pub binned_tv: Option<f64>,
    /// Sup distance between radial CDFs (rotation-invariant theories).
    pub radial_ks: Option<f64>,
}

const TV_BINS: usize = 50;

/// Binned TV / radial KS between eigenvalues and the theory reference.
pub fn esd_compare(eigs: &[C64], theory: &Theory<'_>) -> Result<EsdReport> {
    if eigs.len() < 100 {
        return Err(Error::InvalidModel(format!(
            "need >= 100 eigenvalues for a meaningful comparison, got {}",
            eigs.len()
        )));
    }
    match theory {
        Theory::Grid(grid) => {
            // binning box: union of the masked theory support and the spectrum
            let spec = grid.spec();
            let mut x_lo = f64::INFINITY;
            let mut x_hi = f64::NEG_INFINITY;
            let mut y_lo = f64::INFINITY;
            let mut y_hi = f64::NEG_INFINITY;
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    if grid.masked(ix, iy) {
                        let p = spec.center(ix, iy);
                        x_lo = x_lo.min(p.re);
                        x_hi = x_hi.max(p.re);
                        y_lo = y_lo.min(p.im);
                        y_hi = y_hi.max(p.im);
                    }
                }
            }
            for e in eigs {
                x_lo = x_lo.min(e.re);
                x_hi = x_hi.max(e.re);
                y_lo = y_lo.min(e.im);
                y_hi = y_hi.max(e.im);
            }
            let pad_x = 1e-9 * (x_hi - x_lo).max(1.0);
            let pad_y = 1e-9 * (y_hi - y_lo).max(1.0);
            x_lo -= pad_x;
            x_hi += pad_x;
            y_lo -= pad_y;
            y_hi += pad_y;
            let bin = |z: C64| -> usize {
                let bx = (((z.re - x_lo) / (x_hi - x_lo) * TV_BINS as f64) as usize)
                    .min(TV_BINS - 1);
                let by = (((z.im - y_lo) / (y_hi - y_lo) * TV_BINS as f64) as usize)
                    .min(TV_BINS - 1);
                by * TV_BINS + bx
            };
            let mut p_theory = vec![0.0f64; TV_BINS * TV_BINS];
            let mut theory_mass = 0.0;
            // deposit each theory cell through a 4x4 subgrid so cells wider
            // than a bin do not alias into isolated bins
            let sub = 4usize;
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let v = grid.value(ix, iy);
                    if grid.masked(ix, iy) && v.is_finite() {
                        let mass = v * grid.cell_area;
                        let center = spec.center(ix, iy);
                        let frac = mass / (sub * sub) as f64;
                        for sy in 0..sub {
                            for sx in 0..sub {
                                let p = center
                                    + C64::new(
                                        spec.dx() * ((sx as f64 + 0.5) / sub as f64 - 0.5),
                                        spec.dy() * ((sy as f64 + 0.5) / sub as f64 - 0.5),
                                    );
                                p_theory[bin(p)] += frac;
                            }
                        }
                        theory_mass += mass;
                    }
                }
            }
            if theory_mass > 0.0 {
                for p in &mut p_theory {
                    *p /= theory_mass;
                }
            }
            let mut p_emp = vec![0.0f64; TV_BINS * TV_BINS];
            let w = 1.0 / eigs.len() as f64;
            for e in eigs {
                p_emp[bin(*e)] += w;
            }
            let tv = 0.5
                * p_theory
                    .iter()
                    .zip(&p_emp)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            Ok(EsdReport {
                n_eigenvalues: eigs.len(),
                binned_tv: Some(tv),
                radial_ks: None,
            })
        }
        Theory::RadialCdf(cdf) => {
            let mut radii: Vec<f64> = eigs.iter().map(|e| e.norm()).collect();
            radii.sort_by(f64::total_cmp);
            let n = radii.len() as f64;
            let mut ks = 0.0f64;
            for (i, &r) in radii.iter().enumerate() {
                let f = cdf(r);
                ks = ks.max(((i + 1) as f64 / n - f).abs());
                ks = ks.max((i as f64 / n - f).abs());
            }
            Ok(EsdReport {
                n_eigenvalues: eigs.len(),
                binned_tv: None,
                radial_ks: Some(ks),
            })
        }
    }
}

/// Eigenvalues CSV `re,im`.
pub fn eigenvalues_to_csv(eigs: &[C64]) -> String {
    let mut out = String::from("re,im\n");
    for e in eigs {
        out.push_str(&format!("{:.16e},{:.16e}\n", e.re, e.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ginibre_frobenius_matches_variance() {
        let spec = EnsembleSpec::new(256, EnsembleKind::Ginibre { t: 1.0 }, 42).unwrap();
        let m = sample(&spec);
        let fro = m.frobenius_norm();
        let normalized = fro * fro / 256.0;
        assert!((normalized - 1.0).abs() < 0.15, "tr(AA*)/n = {normalized}");
    }

    #[test]
    fn elliptic_gamma_equals_t_is_hermitian() {
        let spec = EnsembleSpec::new(
            64,
            EnsembleKind::Elliptic {
                t: 1.0,
                gamma: C64::new(1.0, 0.0),
            },
            7,
        )
        .unwrap();
        let m = sample(&spec);
        let mut asym = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        assert!(asym < 1e-12 * m.frobenius_norm(), "asym = {asym}");
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let spec = EnsembleSpec::new(64, EnsembleKind::HaarUnitary, 3).unwrap();
        let u = sample(&spec);
        let mut err = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let mut dot = C64::new(0.0, 0.0);
                for k in 0..64 {
                    dot += u[(k, i)].conj() * u[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - expect).norm());
            }
        }
        assert!(err < 1e-10, "||U*U - I|| = {err}");
    }

    #[test]
    fn reproducible_samples() {
        let spec = EnsembleSpec::new(32, EnsembleKind::Ginibre { t: 0.5 }, 99).unwrap();
        assert_eq!(sample(&spec).data, sample(&spec).data);
        let spec2 = EnsembleSpec::new(32, EnsembleKind::Ginibre { t: 0.5 }, 100).unwrap();
        assert_ne!(sample(&spec).data, sample(&spec2).data);
    }

    #[test]
    fn dt_upper_structure() {
        let spec = EnsembleSpec::new(32, EnsembleKind::DtUpper, 5).unwrap();
        let m = sample(&spec);
        for i in 0..32 {
            for j in 0..=i {
                assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn esd_synthetic_self_consistency() {
        // draw 10^4 points from a compact uniform-disk theory grid and compare
        let op = crate::operator::OperatorModel::Zero;
        let t = 0.09; // disk of radius 0.3 inside a wider binning box
        let grid = crate::brown::density_grid(
            &op,
            t,
            crate::brown::GridSpec {
                x_min: -2.0,
                x_max: 2.0,
                y_min: -2.0,
                y_max: 2.0,
                nx: 160,
                ny: 160,
            },
        )
        .unwrap();
        let rng = CounterRng::new(123, 0);
        let mut pts = Vec::new();
        let mut ctr = 0u64;
        while pts.len() < 10_000 {
            let x = -0.3 + 0.6 * rng.uniform(ctr);
            let y = -0.3 + 0.6 * rng.uniform(ctr + 1);
            ctr += 2;
            if x * x + y * y <= t {
                pts.push(C64::new(x, y));
            }
        }
        let report = esd_compare(&pts, &Theory::Grid(&grid)).unwrap();
        let tv = report.binned_tv.unwrap();
        assert!(tv < 0.05, "tv = {tv}");
    }

    #[test]
    fn radial_ks_of_exact_law_is_small() {
        // inverse-CDF sampling of the circular law: r = sqrt(u)
        let rng = CounterRng::new(9, 2);
        let pts: Vec<C64> = (0..20_000)
            .map(|k| {
                let r = rng.uniform(2 * k).sqrt();
                let th = 2.0 * std::f64::consts::PI * rng.uniform(2 * k + 1);
                C64::from_polar(r, th)
            })
            .collect();
        let cdf = |r: f64| (r * r).clamp(0.0, 1.0);
        let report = esd_compare(&pts, &Theory::RadialCdf(&cdf)).unwrap();
        let ks = report.radial_ks.unwrap();
        assert!(ks < 0.015, "ks = {ks}");
    }
}
