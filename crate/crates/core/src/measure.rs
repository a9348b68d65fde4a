//! Probability measures on the real line: atoms plus piecewise-linear
//! density tables. Hosts the spectral measures `mu_{x0}`, the shifted
//! singular-value measures `mu_{|x0 - lambda|}`, and their symmetrizations.

use crate::error::Error;
use crate::quad::{gk15, integrate_with};
use crate::{Result, C64};
use serde::{Deserialize, Serialize};

const MASS_TOL: f64 = 1e-12;

/// Minimum number of density samples per piece.
pub const MIN_PIECE_SAMPLES: usize = 64;

/// A density piece: piecewise-linear interpolation of `samples` on a uniform
/// grid over `[lo, hi]` (samples include both endpoints).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub samples: Vec<f64>,
}

impl DensityPiece {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.samples.len() - 1) as f64
    }

    /// Linear interpolation of the density at `u` (0 outside `[lo, hi]`).
    pub fn density_at(&self, u: f64) -> f64 {
        if u < self.lo || u > self.hi {
            return 0.0;
        }
        let h = self.step();
        let pos = (u - self.lo) / h;
        let idx = (pos.floor() as usize).min(self.samples.len() - 2);
        let frac = pos - idx as f64;
        self.samples[idx] * (1.0 - frac) + self.samples[idx + 1] * frac
    }

    /// Trapezoid mass of the piece (exact for the interpolant).
    pub fn mass(&self) -> f64 {
        let h = self.step();
        let n = self.samples.len();
        let mut m = 0.5 * (self.samples[0] + self.samples[n - 1]);
        for s in &self.samples[1..n - 1] {
            m += s;
        }
        m * h
    }
}

/// Probability measure on R: atoms (strictly increasing locations) plus
/// pairwise-disjoint density pieces. Total mass is 1 within 1e-12.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Measure1D {
    atoms: Vec<(f64, f64)>,
    densities: Vec<DensityPiece>,
}

impl Measure1D {
    /// Builds and validates a measure.
    pub fn new(mut atoms: Vec<(f64, f64)>, densities: Vec<DensityPiece>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for win in atoms.windows(2) {
            if win[0].0 >= win[1].0 {
                return Err(Error::InvalidModel(format!(
                    "atom locations must be strictly increasing, got {} then {}",
                    win[0].0, win[1].0
                )));
            }
        }
        for (loc, w) in &atoms {
            if !loc.is_finite() || !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidModel(format!("bad atom ({loc}, {w})")));
            }
        }
        for p in &densities {
            if !(p.lo < p.hi) || p.samples.len() < 2 {
                return Err(Error::InvalidModel(format!(
                    "bad density piece [{}, {}] with {} samples",
                    p.lo,
                    p.hi,
                    p.samples.len()
                )));
            }
            if p.samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return Err(Error::InvalidModel("negative or non-finite density sample".into()));
            }
        }
        let mut sorted: Vec<(f64, f64)> = densities.iter().map(|p| (p.lo, p.hi)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for win in sorted.windows(2) {
            if win[0].1 > win[1].0 + 1e-15 {
                return Err(Error::InvalidModel(format!(
                    "density intervals overlap: [{}, {}] and [{}, {}]",
                    win[0].0, win[0].1, win[1].0, win[1].1
                )));
            }
        }
        let m = Measure1D { atoms, densities };
        let mass = m.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidModel(format!("total mass {mass} differs from 1")));
        }
        Ok(m)
    }

    /// Single unit atom at `loc`.
    pub fn dirac(loc: f64) -> Self {
        Measure1D {
            atoms: vec![(loc, 1.0)],
            densities: vec![],
        }
    }

    /// Purely atomic measure; weights are normalized to total mass 1.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidModel("atom weights must have positive sum".into()));
        }
        Measure1D::new(
            atoms.iter().map(|&(l, w)| (l, w / total)).collect(),
            vec![],
        )
    }

    /// Samples `density` on `[lo, hi]` with `n >= MIN_PIECE_SAMPLES` points and
    /// normalizes the table to total mass `weight` (trapezoid-exact).
    pub fn sampled_piece<F: Fn(f64) -> f64>(
        lo: f64,
        hi: f64,
        n: usize,
        weight: f64,
        density: F,
    ) -> DensityPiece {
        let n = n.max(MIN_PIECE_SAMPLES);
        let h = (hi - lo) / (n - 1) as f64;
        let mut samples: Vec<f64> = (0..n).map(|i| density(lo + i as f64 * h).max(0.0)).collect();
        let piece = DensityPiece { lo, hi, samples: samples.clone() };
        let mass = piece.mass();
        if mass > 0.0 {
            let scale = weight / mass;
            for s in &mut samples {
                *s *= scale;
            }
        }
        DensityPiece { lo, hi, samples }
    }

    /// Semicircle law with variance `t` (support `[-2 sqrt t, 2 sqrt t]`).
    pub fn semicircle(t: f64, n_samples: usize) -> Result<Self> {
        let r = 2.0 * t.sqrt();
        let piece = Self::sampled_piece(-r, r, n_samples, 1.0, |u| {
            let d = 4.0 * t - u * u;
            if d > 0.0 {
                d.sqrt() / (2.0 * std::f64::consts::PI * t)
            } else {
                0.0
            }
        });
        Measure1D::new(vec![], vec![piece])
    }

    /// Quarter-circle law: the singular-value distribution of the variance-`t`
    /// circular operator, with density `sqrt(4t - u^2) / (pi t)` on `[0, 2 sqrt t]`.
    pub fn quarter_circle(t: f64, n_samples: usize) -> Result<Self> {
        let piece = Self::sampled_piece(0.0, 2.0 * t.sqrt(), n_samples, 1.0, |u| {
            let d = 4.0 * t - u * u;
            if d > 0.0 {
                d.sqrt() / (std::f64::consts::PI * t)
            } else {
                0.0
            }
        });
        Measure1D::new(vec![], vec![piece])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn densities(&self) -> &[DensityPiece] {
        &self.densities
    }

    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.1).sum();
        let d: f64 = self.densities.iter().map(|p| p.mass()).sum();
        a + d
    }

    /// Support bounds `(min, max)`; `None` for an empty measure.
    pub fn support_bounds(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(l, w) in &self.atoms {
            if w > 0.0 {
                lo = lo.min(l);
                hi = hi.max(l);
            }
        }
        for p in &self.densities {
            lo = lo.min(p.lo);
            hi = hi.max(p.hi);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// True when `u` carries an atom or sits inside a density interval.
    pub fn in_support(&self, u: f64) -> bool {
        self.atoms.iter().any(|&(l, w)| l == u && w > 0.0)
            || self.densities.iter().any(|p| u >= p.lo && u <= p.hi)
    }

    /// Integrates `f` against the measure. Density pieces are integrated with
    /// one Kronrod panel per sample subinterval, which is exact (to roundoff)
    /// for the piecewise-linear interpolant against smooth `f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for &(loc, w) in &self.atoms {
            if w > 0.0 {
                total += w * f(loc);
            }
        }
        for piece in &self.densities {
            let h = piece.step();
            for i in 0..piece.samples.len() - 1 {
                let a = piece.lo + i as f64 * h;
                let b = a + h;
                let s0 = piece.samples[i];
                let s1 = piece.samples[i + 1];
                let (v, _) = gk15(
                    &mut |u| {
                        let frac = (u - a) / h;
                        f(u) * (s0 * (1.0 - frac) + s1 * frac)
                    },
                    a,
                    b,
                );
                total += v;
            }
        }
        total
    }

    /// Integrates `f` adaptively over the density pieces, splitting at
    /// `singular` so endpoint singularities (e.g. `log`) are refined, and adds
    /// the atom sum. Used for integrands that are not smooth inside pieces.
    pub fn integrate_singular<F: Fn(f64) -> f64>(&self, f: F, singular: f64, tol: f64) -> f64 {
        let mut total = 0.0;
        for &(loc, w) in &self.atoms {
            if w > 0.0 {
                total += w * f(loc);
            }
        }
        for piece in &self.densities {
            let mut g = |u: f64| f(u) * piece.density_at(u);
            if singular > piece.lo && singular < piece.hi {
                total += integrate_with(&mut g, piece.lo, singular, 0.5 * tol, 4000);
                total += integrate_with(&mut g, singular, piece.hi, 0.5 * tol, 4000);
            } else {
                total += integrate_with(&mut g, piece.lo, piece.hi, tol, 4000);
            }
        }
        total
    }

    /// Symmetrization `mu~(B) = (mu(B) + mu(-B)) / 2` of a measure supported
    /// on `[0, inf)`.
    pub fn symmetrized(&self) -> Result<Self> {
        if let Some((lo, _)) = self.support_bounds() {
            if lo < -1e-15 {
                return Err(Error::InvalidModel(
                    "symmetrization requires support on [0, inf)".into(),
                ));
            }
        }
        let mut atoms = Vec::new();
        for &(loc, w) in &self.atoms {
            if loc == 0.0 {
                atoms.push((0.0, w));
            } else {
                atoms.push((loc, 0.5 * w));
                atoms.push((-loc, 0.5 * w));
            }
        }
        let mut densities = Vec::new();
        for p in &self.densities {
            let halved: Vec<f64> = p.samples.iter().map(|s| 0.5 * s).collect();
            let mirrored: Vec<f64> = halved.iter().rev().cloned().collect();
            densities.push(DensityPiece {
                lo: -p.hi,
                hi: -p.lo,
                samples: mirrored,
            });
            densities.push(DensityPiece {
                lo: p.lo,
                hi: p.hi,
                samples: halved,
            });
        }
        Measure1D::new(atoms, densities)
    }
}

/// Cauchy transform `G_mu(z) = int (z - u)^{-1} dmu(u)`.
///
/// For `Im z > 0` one has `Im G < 0`. Real `z` must avoid the closed support.
pub fn cauchy_transform(mu: &Measure1D, z: C64) -> Result<C64> {
    if z.im == 0.0 && mu.in_support(z.re) {
        return Err(Error::PoleOnContour);
    }
    let re = mu.integrate(|u| {
        let d = z - u;
        (d.conj() / d.norm_sqr()).re
    });
    let im = mu.integrate(|u| {
        let d = z - u;
        (d.conj() / d.norm_sqr()).im
    });
    Ok(C64::new(re, im))
}
