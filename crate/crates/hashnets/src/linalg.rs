//! Dense column-major matrices, Jacobi decompositions, Gaussian sampling.
//!
//! Everything here is exact-arithmetic-free and desk-scale: the largest
//! matrices in this crate are a few thousand on a side, where Jacobi
//! iterations are robust and simple to reason about.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default absolute/relative tolerance pair used by comparisons across the
/// crate: `|a - b| <= atol + rtol * max(|a|, |b|)`.
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_RTOL: f64 = 1e-8;

pub fn close_to(a: f64, b: f64, atol: f64, rtol: f64) -> bool {
    (a - b).abs() <= atol + rtol * a.abs().max(b.abs())
}

pub fn close(a: f64, b: f64) -> bool {
    close_to(a, b, DEFAULT_ATOL, DEFAULT_RTOL)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sums values pairwise so the reduction tree is fixed by index order, not by
/// accumulation order. Keeps parallel and serial paths bit-identical.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Column-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds from column-major data, rejecting non-finite entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn gaussian(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let data = rng.gaussian_vec(rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "matvec dimension mismatch: {} cols vs x of length {}",
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (yi, &aij) in y.iter_mut().zip(self.col(j)) {
                *yi += aij * xj;
            }
        }
        Ok(y)
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::invalid(format!(
                "matvec_t dimension mismatch: {} rows vs x of length {}",
                self.rows,
                x.len()
            )));
        }
        Ok((0..self.cols).map(|j| dot(self.col(j), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::invalid("matmul dimension mismatch"));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let y = self.matvec(other.col(j))?;
            out.col_mut(j).copy_from_slice(&y);
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A_ij - A_ji| over all pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..j.min(self.rows) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Thin singular value decomposition `A = U diag(sigma) V^T`.
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Off-diagonal Gram terms below `JACOBI_TOL * ||A||_F^2` count as annihilated.
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;

/// One-sided Jacobi SVD. Robust for the dense, desk-scale matrices used
/// here; sweeps until every off-diagonal Gram term is below
/// `1e-12 * ||A||_F^2`.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::invalid("svd: non-finite entries"));
    }
    if a.rows().min(a.cols()) < 1 {
        return Err(Error::invalid("svd: empty matrix"));
    }
    // Work on the orientation with rows >= cols so the rotation set is small.
    if a.rows() < a.cols() {
        let s = svd(&a.transpose())?;
        return Ok(Svd {
            u: s.v,
            sigma: s.sigma,
            v: s.u,
        });
    }

    let n = a.cols();
    let mut b = a.clone();
    let mut v = DenseMatrix::identity(n);
    let fro2 = a.frobenius_norm().powi(2);
    let tol = JACOBI_TOL * fro2;

    if fro2 > 0.0 {
        let mut converged = false;
        for _sweep in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (app, aqq, apq) = {
                        let cp = b.col(p);
                        let cq = b.col(q);
                        (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                    };
                    if apq.abs() <= tol {
                        continue;
                    }
                    rotated = true;
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate_cols(&mut b, p, q, c, s);
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(
                "jacobi svd exceeded sweep budget".into(),
            ));
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm(b.col(j))).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = DenseMatrix::zeros(a.rows(), n);
    let mut v_sorted = DenseMatrix::zeros(n, n);
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    // Columns at the rounding floor have meaningless directions; they get an
    // orthonormal completion below instead of a normalized junk vector.
    let tiny = sigma_max * a.rows() as f64 * f64::EPSILON;
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.col_mut(dst).copy_from_slice(v.col(src));
        if norms[src] > tiny && norms[src] > 0.0 {
            let inv = 1.0 / norms[src];
            let col = b.col(src);
            for (ui, &bi) in u.col_mut(dst).iter_mut().zip(col) {
                *ui = bi * inv;
            }
        }
    }
    complete_orthonormal(&mut u, &sigma, tiny);
    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

fn rotate_cols(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    let (pc, qc) = if p < q {
        let (left, right) = m.data.split_at_mut(q * rows);
        (&mut left[p * rows..p * rows + rows], &mut right[..rows])
    } else {
        unreachable!("rotation indices are ordered")
    };
    for (bp, bq) in pc.iter_mut().zip(qc.iter_mut()) {
        let xp = *bp;
        let xq = *bq;
        *bp = c * xp - s * xq;
        *bq = s * xp + c * xq;
    }
}

/// Replaces numerically-zero singular directions of U with an orthonormal
/// completion so U^T U = I holds even for rank-deficient inputs.
fn complete_orthonormal(u: &mut DenseMatrix, sigma: &[f64], tiny: f64) {
    let rows = u.rows();
    for j in 0..u.cols() {
        if sigma[j] > tiny {
            continue;
        }
        let mut placed = false;
        for attempt in 0..rows {
            let mut cand = vec![0.0; rows];
            cand[(j + attempt) % rows] = 1.0;
            // Two orthogonalization passes against the established columns.
            for _ in 0..2 {
                for k in 0..u.cols() {
                    if k == j {
                        continue;
                    }
                    let proj = dot(&cand, u.col(k));
                    for (ci, &uk) in cand.iter_mut().zip(u.col(k)) {
                        *ci -= proj * uk;
                    }
                }
            }
            let nrm = norm(&cand);
            if nrm > 1e-6 {
                for c in cand.iter_mut() {
                    *c /= nrm;
                }
                u.col_mut(j).copy_from_slice(&cand);
                placed = true;
                break;
            }
        }
        debug_assert!(placed, "orthonormal completion failed");
    }
}

/// Eigenvalues of a symmetric matrix, sorted descending, by cyclic Jacobi
/// rotations. Rejects matrices asymmetric beyond `1e-8` relative.
pub fn sym_eig(h: &DenseMatrix) -> Result<Vec<f64>> {
    if !h.is_finite() {
        return Err(Error::invalid("sym_eig: non-finite entries"));
    }
    if h.rows() != h.cols() || h.rows() == 0 {
        return Err(Error::invalid("sym_eig: matrix must be square"));
    }
    let scale = h.max_abs();
    if h.asymmetry() > DEFAULT_ATOL + 1e-8 * scale {
        return Err(Error::invalid("sym_eig: matrix is not symmetric"));
    }
    let n = h.rows();
    let mut a = h.clone();
    // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, m);
            a.set(j, i, m);
        }
    }
    let tol = JACOBI_TOL * (a.frobenius_norm() + DEFAULT_ATOL);
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= tol {
            let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                jacobi_rotate_sym(&mut a, p, q, c, s);
            }
        }
    }
    Err(Error::NoConvergence(
        "jacobi eigenvalue iteration exceeded sweep budget".into(),
    ))
}

fn jacobi_rotate_sym(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let apq = a.get(p, q);
    a.set(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
    a.set(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, c * aip - s * aiq);
        a.set(p, i, c * aip - s * aiq);
        a.set(i, q, s * aip + c * aiq);
        a.set(q, i, s * aip + c * aiq);
    }
}

/// Vector of i.i.d. standard normals.
pub fn gaussian_vector(n: usize, rng: &mut Rng) -> Vec<f64> {
    rng.gaussian_vec(n)
}
