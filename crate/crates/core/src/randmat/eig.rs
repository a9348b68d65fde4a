//! Dense complex eigensolver: balancing, Householder Hessenberg reduction,
//! and single-shift (Wilkinson) QR iteration with deflation. Eigenvalues
//! only; recomputed eigenpairs (inverse iteration on the Hessenberg form)
//! validate residuals on a sample of the spectrum.

use crate::error::Error;
use crate::mat::CMat;
use crate::rng::CounterRng;
use crate::{Result, C64};

const MAX_N: usize = 4096;

/// All `n` eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let mut solver = Solver::new(a)?;
    solver.run()?;
    solver.residual_check(10)?;
    Ok(solver.eigs)
}

struct Solver {
    n: usize,
    original: CMat,
    /// Balanced matrix diagonal scaling (eigenvector unbalance factors).
    scale: Vec<f64>,
    /// Householder reflectors (k, v, beta) of the Hessenberg reduction.
    reflectors: Vec<(usize, Vec<C64>, f64)>,
    /// Hessenberg form kept for inverse iteration.
    hess: CMat,
    /// Working matrix destroyed by QR sweeps.
    work: CMat,
    eigs: Vec<C64>,
}

impl Solver {
    fn new(a: &CMat) -> Result<Self> {
        if a.n_rows != a.n_cols || a.n_rows == 0 {
            return Err(Error::InvalidModel("eigensolver needs a square matrix".into()));
        }
        if a.n_rows > MAX_N {
            return Err(Error::InvalidModel(format!(
                "matrix order {} exceeds desk scale {MAX_N}",
                a.n_rows
            )));
        }
        let n = a.n_rows;
        let mut solver = Solver {
            n,
            original: a.clone(),
            scale: vec![1.0; n],
            reflectors: Vec::new(),
            hess: CMat::zeros(0, 0),
            work: a.clone(),
            eigs: Vec::new(),
        };
        solver.balance();
        solver.hessenberg();
        solver.hess = solver.work.clone();
        Ok(solver)
    }

    /// Iterative diagonal scaling by powers of two (row/column norm balancing).
    fn balance(&mut self) {
        let n = self.n;
        let radix = 2.0f64;
        loop {
            let mut converged = true;
            for i in 0..n {
                let mut c: f64 = 0.0;
                let mut r: f64 = 0.0;
                for j in 0..n {
                    if j != i {
                        c += self.work[(j, i)].norm();
                        r += self.work[(i, j)].norm();
                    }
                }
                if c == 0.0 || r == 0.0 || !c.is_finite() || !r.is_finite() {
                    continue;
                }
                let start = c + r;
                let mut f = 1.0;
                let mut c2 = c;
                let mut r2 = r;
                while c2 < r2 / radix {
                    c2 *= radix;
                    r2 /= radix;
                    f *= radix;
                }
                while c2 >= r2 * radix {
                    c2 /= radix;
                    r2 *= radix;
                    f /= radix;
                }
                if (c2 + r2) < 0.95 * start && f != 1.0 {
                    converged = false;
                    self.scale[i] *= f;
                    // A <- D^-1 A D: column i times f, row i divided by f
                    for j in 0..n {
                        self.work[(j, i)] *= f;
                    }
                    let inv = 1.0 / f;
                    for j in 0..n {
                        self.work[(i, j)] *= inv;
                    }
                }
            }
            if converged {
                break;
            }
        }
    }

    /// Householder reduction to upper Hessenberg form, reflectors recorded.
    fn hessenberg(&mut self) {
        let n = self.n;
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1; // length of the column below the diagonal
            let mut x = vec![C64::new(0.0, 0.0); m];
            for i in 0..m {
                x[i] = self.work[(k + 1 + i, k)];
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = x[0];
            let phase = if alpha.norm() > 0.0 {
                alpha / alpha.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            let zeta = -phase * norm;
            let mut v = x;
            v[0] -= zeta;
            let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm_sq == 0.0 {
                continue;
            }
            let beta = 2.0 / vnorm_sq;

            // rows k+1.. : H <- H - beta v (v^H H)
            for j in 0..n {
                let mut dot = C64::new(0.0, 0.0);
                for i in 0..m {
                    dot += v[i].conj() * self.work[(k + 1 + i, j)];
                }
                let dot = dot * beta;
                for i in 0..m {
                    let vi = v[i];
                    self.work[(k + 1 + i, j)] -= vi * dot;
                }
            }
            // columns k+1.. : H <- H - beta (H v) v^H
            for i in 0..n {
                let mut dot = C64::new(0.0, 0.0);
                for j in 0..m {
                    dot += self.work[(i, k + 1 + j)] * v[j];
                }
                let dot = dot * beta;
                for j in 0..m {
                    let vj = v[j].conj();
                    self.work[(i, k + 1 + j)] -= dot * vj;
                }
            }
            // enforce exact zeros below the subdiagonal
            self.work[(k + 1, k)] = C64::new(zeta.re, zeta.im);
            for i in (k + 2)..n {
                self.work[(i, k)] = C64::new(0.0, 0.0);
            }
            self.reflectors.push((k, v, beta));
        }
    }

    /// Shifted QR with deflation on the Hessenberg working matrix.
    fn run(&mut self) -> Result<()> {
        let n = self.n;
        if n == 1 {
            self.eigs.push(self.work[(0, 0)]);
            return Ok(());
        }
        let mut hi = n - 1;
        let mut sweeps_in_window = 0usize;
        let mut total_sweeps = 0usize;
        let budget = 30 * n;
        loop {
            // deflate converged trailing entries
            loop {
                if hi == 0 {
                    self.eigs.push(self.work[(0, 0)]);
                    self.eigs.reverse();
                    return Ok(());
                }
                let sub = self.work[(hi, hi - 1)].norm();
                let diag = self.work[(hi - 1, hi - 1)].norm() + self.work[(hi, hi)].norm();
                if sub <= f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
                    self.work[(hi, hi - 1)] = C64::new(0.0, 0.0);
                    self.eigs.push(self.work[(hi, hi)]);
                    hi -= 1;
                    sweeps_in_window = 0;
                } else {
                    break;
                }
            }
            // find the start of the active window
            let mut lo = hi;
            while lo > 0 {
                let sub = self.work[(lo, lo - 1)].norm();
                let diag = self.work[(lo - 1, lo - 1)].norm() + self.work[(lo, lo)].norm();
                if sub <= f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
                    self.work[(lo, lo - 1)] = C64::new(0.0, 0.0);
                    break;
                }
                lo -= 1;
            }
            if hi - lo == 1 {
                // closed-form 2x2 block
                let (e1, e2) = eig2(
                    self.work[(lo, lo)],
                    self.work[(lo, hi)],
                    self.work[(hi, lo)],
                    self.work[(hi, hi)],
                );
                self.eigs.push(e2);
                self.eigs.push(e1);
                if lo == 0 {
                    self.eigs.reverse();
                    return Ok(());
                }
                hi = lo - 1;
                sweeps_in_window = 0;
                continue;
            }

            total_sweeps += 1;
            sweeps_in_window += 1;
            if total_sweeps > budget {
                return Err(Error::QrStagnation(total_sweeps));
            }
            let shift = if sweeps_in_window % 12 == 0 {
                // exceptional shift breaks symmetry-induced stalls
                self.work[(hi, hi)]
                    + C64::new(0.75 * self.work[(hi, hi - 1)].norm(), 0.0)
            } else {
                let (e1, e2) = eig2(
                    self.work[(hi - 1, hi - 1)],
                    self.work[(hi - 1, hi)],
                    self.work[(hi, hi - 1)],
                    self.work[(hi, hi)],
                );
                let d = self.work[(hi, hi)];
                if (e1 - d).norm() <= (e2 - d).norm() {
                    e1
                } else {
                    e2
                }
            };
            self.qr_sweep(lo, hi, shift);
        }
    }

    /// One implicit single-shift sweep on the window `[lo, hi]`.
    fn qr_sweep(&mut self, lo: usize, hi: usize, shift: C64) {
        let mut x = self.work[(lo, lo)] - shift;
        let mut y = self.work[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s, _r) = givens(x, y);
            // rows k, k+1 over columns max(lo, k-1)..=hi
            let col0 = if k > lo { k - 1 } else { lo };
            for j in col0..=hi {
                let a = self.work[(k, j)];
                let b = self.work[(k + 1, j)];
                self.work[(k, j)] = c * a + s * b;
                self.work[(k + 1, j)] = -s.conj() * a + c * b;
            }
            // columns k, k+1 over rows lo..=min(hi, k+2)
            let row1 = hi.min(k + 2);
            for i in lo..=row1 {
                let a = self.work[(i, k)];
                let b = self.work[(i, k + 1)];
                self.work[(i, k)] = c * a + s.conj() * b;
                self.work[(i, k + 1)] = -s * a + c * b;
            }
            if k + 2 <= hi {
                x = self.work[(k + 1, k)];
                y = self.work[(k + 2, k)];
            }
        }
    }

    /// Rechecks up to `count` eigenpairs: inverse iteration on the stored
    /// Hessenberg form, back-transformed and compared against the original.
    fn residual_check(&self, count: usize) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Ok(());
        }
        let norm_a = self.original.frobenius_norm();
        if norm_a == 0.0 {
            return Ok(());
        }
        let rng = CounterRng::new(0x5eed, 77);
        let m = count.min(self.eigs.len());
        for pick in 0..m {
            let idx = (rng.u64(pick as u64) % self.eigs.len() as u64) as usize;
            let lambda = self.eigs[idx];
            // tiny diagonal offset keeps the shifted solve well-posed
            let shifted = lambda + C64::new(1e-11 * norm_a.max(1e-300), 1e-11 * norm_a);
            let mut v: Vec<C64> = (0..n)
                .map(|i| {
                    let (g1, g2) = rng.gaussian_pair((pick * n + i) as u64);
                    C64::new(g1, g2)
                })
                .collect();
            for _ in 0..3 {
                v = hessenberg_shifted_solve(&self.hess, shifted, &v);
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                for z in &mut v {
                    *z /= norm;
                }
            }
            // back-transform through the Householder reflectors (reverse order)
            for (k, hv, beta) in self.reflectors.iter().rev() {
                let off = k + 1;
                let mut dot = C64::new(0.0, 0.0);
                for i in 0..hv.len() {
                    dot += hv[i].conj() * v[off + i];
                }
                let dot = dot * *beta;
                for i in 0..hv.len() {
                    let hvi = hv[i];
                    v[off + i] -= hvi * dot;
                }
            }
            // unbalance
            for i in 0..n {
                v[i] *= self.scale[i];
            }
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm == 0.0 || !vnorm.is_finite() {
                continue;
            }
            let av = self.original.matvec(&v);
            let mut resid = 0.0f64;
            for i in 0..n {
                resid += (av[i] - lambda * v[i]).norm_sqr();
            }
            let resid = resid.sqrt() / vnorm;
            let bound = 1e-8 * norm_a;
            if resid > bound {
                return Err(Error::ResidualCheckFailed {
                    residual: resid,
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let half_tr = 0.5 * (a + d);
    let disc = (0.5 * (a - d)) * (0.5 * (a - d)) + b * c;
    let root = disc.sqrt();
    (half_tr + root, half_tr - root)
}

/// Complex Givens rotation: returns `(c, s, r)` with real `c` such that
/// `[c s; -conj(s) c] [a; b] = [r; 0]` and `c^2 + |s|^2 = 1`.
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    if b.norm_sqr() == 0.0 {
        return (1.0, C64::new(0.0, 0.0), a);
    }
    if a.norm_sqr() == 0.0 {
        let s = b.conj() / b.norm();
        return (0.0, s, C64::new(b.norm(), 0.0));
    }
    let na = a.norm();
    let denom = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = na / denom;
    let phase = a / na;
    let s = phase * b.conj() / denom;
    (c, s, phase * denom)
}

/// Solves `(H - shift I) x = b` for upper Hessenberg `H` by Gaussian
/// elimination with partial pivoting on adjacent rows; `O(n^2)`.
fn hessenberg_shifted_solve(h: &CMat, shift: C64, b: &[C64]) -> Vec<C64> {
    let n = h.n_rows;
    let mut m = h.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let mut x = b.to_vec();
    for k in 0..n - 1 {
        if m[(k + 1, k)].norm() > m[(k, k)].norm() {
            for j in k..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(k + 1, j)];
                m[(k + 1, j)] = tmp;
            }
            x.swap(k, k + 1);
        }
        let diag = m[(k, k)];
        if diag.norm_sqr() == 0.0 {
            continue;
        }
        let factor = m[(k + 1, k)] / diag;
        for j in k..n {
            let v = m[(k, j)];
            m[(k + 1, j)] -= factor * v;
        }
        let xv = x[k];
        x[k + 1] -= factor * xv;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        let diag = m[(i, i)];
        x[i] = if diag.norm_sqr() > 0.0 {
            s / diag
        } else {
            C64::new(1.0, 0.0)
        };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted_by_norm(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| (a.norm(), a.re, a.im).partial_cmp(&(b.norm(), b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn identity_eigenvalues() {
        let eigs = eigenvalues(&CMat::identity(5)).unwrap();
        assert_eq!(eigs.len(), 5);
        for e in eigs {
            assert!((e - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_eigenvalues() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(0.0, 2.0);
        m[(2, 2)] = c(-3.0, 0.0);
        let eigs = sorted_by_norm(eigenvalues(&m).unwrap());
        let expect = sorted_by_norm(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        for (e, x) in eigs.iter().zip(&expect) {
            assert!((e - x).norm() < 1e-12, "{e} vs {x}");
        }
    }

    #[test]
    fn companion_cube_roots() {
        // companion matrix of z^3 - 1
        let mut m = CMat::zeros(3, 3);
        m[(0, 2)] = c(1.0, 0.0);
        m[(1, 0)] = c(1.0, 0.0);
        m[(2, 1)] = c(1.0, 0.0);
        let eigs = sorted_by_norm(eigenvalues(&m).unwrap());
        for e in &eigs {
            assert!((e.norm() - 1.0).abs() < 1e-10);
            assert!((e * e * e - c(1.0, 0.0)).norm() < 1e-10);
        }
        let re_sorted: Vec<f64> = {
            let mut v: Vec<f64> = eigs.iter().map(|e| e.re).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert!((re_sorted[0] + 0.5).abs() < 1e-10);
        assert!((re_sorted[2] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_preserved_random() {
        let n = 40;
        let rng = CounterRng::new(11, 5);
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = rng.gaussian_pair((i * n + j) as u64);
                m[(i, j)] = c(a, b) / (n as f64).sqrt();
            }
        }
        let eigs = eigenvalues(&m).unwrap();
        assert_eq!(eigs.len(), n);
        let sum: C64 = eigs.iter().sum();
        let tr = m.trace();
        assert!(
            (sum - tr).norm() < 1e-6 * n as f64 * m.frobenius_norm(),
            "sum {sum} vs trace {tr}"
        );
    }

    #[test]
    fn jordan_block_multiplicity() {
        // defective matrix: eigenvalue 2 with multiplicity 3
        let mut m = CMat::zeros(3, 3);
        for i in 0..3 {
            m[(i, i)] = c(2.0, 0.0);
            if i + 1 < 3 {
                m[(i, i + 1)] = c(1.0, 0.0);
            }
        }
        let eigs = eigenvalues(&m).unwrap();
        for e in eigs {
            // defective eigenvalues are accurate to ~eps^(1/3)
            assert!((e - c(2.0, 0.0)).norm() < 1e-4, "{e}");
        }
    }

    #[test]
    fn nilpotent_with_balancing_stress() {
        // wildly scaled matrix exercises the balancing pass
        let mut m = CMat::zeros(3, 3);
        m[(0, 1)] = c(1e8, 0.0);
        m[(1, 2)] = c(1e-8, 0.0);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(2.0, 0.0);
        m[(2, 2)] = c(3.0, 0.0);
        let eigs = sorted_by_norm(eigenvalues(&m).unwrap());
        for (e, x) in eigs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - c(x, 0.0)).norm() < 1e-9, "{e} vs {x}");
        }
    }
}
