//! Independent numerical oracles used only by tests.
//!
//! These deliberately avoid the crate's own decomposition code paths:
//! eigenvalues come from a closed-form characteristic polynomial (3x3) or a
//! plain QR iteration, determinants from pivoted LU.

use crate::linalg::{dot, norm, DenseMatrix};

/// Eigenvalues of a symmetric 3x3 matrix via the trigonometric solution of
/// its characteristic polynomial. Returned in descending order.
pub fn sym_eig3_charpoly(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| y.partial_cmp(x).unwrap());
        return d;
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Unshifted QR iteration for symmetric matrices: A <- R Q until the
/// diagonal stabilizes. Slow but entirely independent of the Jacobi code.
pub fn qr_iteration_eigenvalues(h: &DenseMatrix, iters: usize) -> Vec<f64> {
    let n = h.rows();
    let mut a = h.clone();
    for _ in 0..iters {
        let (q, r) = qr_gram_schmidt(&a);
        a = r.matmul(&q).unwrap();
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

fn qr_gram_schmidt(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.cols();
    let m = a.rows();
    let mut q = DenseMatrix::zeros(m, n);
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = a.col(j).to_vec();
        for k in 0..j {
            let rkj = dot(q.col(k), a.col(j));
            r.set(k, j, rkj);
            for (vi, &qi) in v.iter_mut().zip(q.col(k)) {
                *vi -= rkj * qi;
            }
        }
        // Second orthogonalization pass for stability.
        for k in 0..j {
            let c = dot(q.col(k), &v);
            r.set(k, j, r.get(k, j) + c);
            for (vi, &qi) in v.iter_mut().zip(q.col(k)) {
                *vi -= c * qi;
            }
        }
        let nrm = norm(&v);
        r.set(j, j, nrm);
        if nrm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
        }
        q.col_mut(j).copy_from_slice(&v);
    }
    (q, r)
}

/// Determinant by LU with partial pivoting.
pub fn determinant(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut lu = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if lu.get(i, k).abs() > lu.get(piv, k).abs() {
                piv = i;
            }
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu.get(k, j);
                lu.set(k, j, lu.get(piv, j));
                lu.set(piv, j, tmp);
            }
            det = -det;
        }
        let pivot = lu.get(k, k);
        det *= pivot;
        if pivot == 0.0 {
            return 0.0;
        }
        for i in (k + 1)..n {
            let f = lu.get(i, k) / pivot;
            lu.set(i, k, f);
            for j in (k + 1)..n {
                lu.set(i, j, lu.get(i, j) - f * lu.get(k, j));
            }
        }
    }
    det
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + step;
        let fp = f(&xp);
        xp[i] = orig - step;
        let fm = f(&xp);
        xp[i] = orig;
        g.push((fp - fm) / (2.0 * step));
    }
    g
}
