//! Dense complex matrices: storage, one-sided Jacobi SVD, and an LU solve.
//!
//! Desk-scale only (N <= a few thousand). Row-major storage.

use crate::error::Error;
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CMat {
            n_rows,
            n_cols,
            data: vec![C64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols);
            data.extend_from_slice(r);
        }
        CMat { n_rows, n_cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn trace(&self) -> C64 {
        (0..self.n_rows.min(self.n_cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self * v` for a vector `v`.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum::<C64>()
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Singular value decomposition `A = U diag(sigma) V^H` with `sigma`
/// descending. `u` and `v` are square unitary.
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

/// One-sided Jacobi SVD. Rotations are applied to columns until all column
/// pairs are numerically orthogonal; zero singular directions are completed
/// to an orthonormal basis so `U` stays unitary.
pub fn svd_jacobi(a: &CMat) -> Svd {
    assert_eq!(a.n_rows, a.n_cols, "square matrices only");
    let n = a.n_rows;
    // column-major working copy
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)]).collect())
        .collect();
    let mut v = CMat::identity(n);

    let tol = 1e-30_f64; // on |<p,q>|^2 relative to |p|^2 |q|^2
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for i in 0..n {
                    alpha += cols[p][i].norm_sqr();
                    beta += cols[q][i].norm_sqr();
                    gamma += cols[p][i].conj() * cols[q][i];
                }
                let g2 = gamma.norm_sqr();
                if g2 <= tol * alpha * beta || g2 == 0.0 {
                    continue;
                }
                off = off.max(g2 / (alpha * beta).max(f64::MIN_POSITIVE));
                let abs_g = g2.sqrt();
                let phase = gamma / abs_g;
                let tau = (beta - alpha) / (2.0 * abs_g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // col_p <- c col_p - s conj(phase) col_q ; col_q <- s phase col_p + c col_q
                let sp = s * phase;
                let spc = s * phase.conj();
                for i in 0..n {
                    let ap = cols[p][i];
                    let aq = cols[q][i];
                    cols[p][i] = c * ap - spc * aq;
                    cols[q][i] = sp * ap + c * aq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - spc * vq;
                    v[(i, q)] = sp * vp + c * vq;
                }
            }
        }
        if off < 1e-28 {
            break;
        }
    }

    // extract singular values and sort descending
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut sigma = Vec::with_capacity(n);
    let mut u = CMat::zeros(n, n);
    let mut v_sorted = CMat::zeros(n, n);
    let sigma_max = norms.iter().cloned().fold(0.0f64, f64::max);
    let rank_tol = sigma_max * (n as f64) * 1e-15;
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if s > rank_tol {
            u_cols.push(cols[src].iter().map(|z| z / s).collect());
        } else {
            u_cols.push(vec![C64::new(0.0, 0.0); n]); // completed below
        }
    }
    // complete zero-sigma columns to an orthonormal basis
    for j in 0..n {
        if sigma[j] > rank_tol {
            continue;
        }
        sigma[j] = sigma[j].max(0.0);
        let mut best: Option<Vec<C64>> = None;
        let mut best_norm = -1.0;
        for k in 0..n {
            let mut cand = vec![C64::new(0.0, 0.0); n];
            cand[k] = C64::new(1.0, 0.0);
            for (jj, col) in u_cols.iter().enumerate() {
                if jj == j {
                    continue;
                }
                let proj: C64 = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    cand[i] -= proj * col[i];
                }
            }
            let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(cand);
            }
        }
        let mut col = best.expect("orthonormal completion");
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut col {
            *z /= nrm;
        }
        u_cols[j] = col;
    }
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    Svd { u, sigma, v: v_sorted }
}

/// LU factorization with partial pivoting; solves `A x = b` in place.
pub fn lu_solve(a: &CMat, b: &[C64]) -> Result<Vec<C64>> {
    assert_eq!(a.n_rows, a.n_cols);
    let n = a.n_rows;
    assert_eq!(b.len(), n);
    let mut lu = a.data.clone();
    let mut x: Vec<C64> = b.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pmax = k;
        let mut vmax = lu[piv[k] * n + k].norm_sqr();
        for i in (k + 1)..n {
            let v = lu[piv[i] * n + k].norm_sqr();
            if v > vmax {
                vmax = v;
                pmax = i;
            }
        }
        if vmax == 0.0 {
            return Err(Error::InvalidModel("singular matrix in LU solve".into()));
        }
        piv.swap(k, pmax);
        let pk = piv[k];
        let diag = lu[pk * n + k];
        for i in (k + 1)..n {
            let pi = piv[i];
            let m = lu[pi * n + k] / diag;
            lu[pi * n + k] = m;
            for j in (k + 1)..n {
                let v = lu[pk * n + j];
                lu[pi * n + j] -= m * v;
            }
        }
    }
    // forward
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = x[piv[i]];
        for j in 0..i {
            s -= lu[piv[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    // backward
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= lu[piv[i] * n + j] * x[j];
        }
        x[i] = s / lu[piv[i] * n + i];
    }
    Ok(x)
}
