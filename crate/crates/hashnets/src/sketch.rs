//! Sparse sketching matrices and empirical subspace-embedding distortion.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hashing::{KWiseHash, SignHash};
use crate::linalg::{dot, norm, DenseMatrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    CountSketch,
    SparseEmbedding,
    Identity,
}

impl SketchKind {
    pub fn parse(s: &str) -> Result<SketchKind> {
        match s {
            "count-sketch" => Ok(SketchKind::CountSketch),
            "sparse-embedding" => Ok(SketchKind::SparseEmbedding),
            "identity" => Ok(SketchKind::Identity),
            other => Err(Error::invalid(format!("unknown sketch kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            SketchKind::CountSketch => "count-sketch",
            SketchKind::SparseEmbedding => "sparse-embedding",
            SketchKind::Identity => "identity",
        })
    }
}

/// An s x n sketch stored column-sparse: each column holds a fixed number of
/// (row, signed value) entries.
#[derive(Debug, Clone)]
pub struct SketchMatrix {
    kind: SketchKind,
    rows: usize,
    cols: usize,
    entries_per_col: usize,
    /// Column j owns entries[j*epc .. (j+1)*epc].
    entries: Vec<(u32, f64)>,
}

impl SketchMatrix {
    /// Count-Sketch: one +-1 per column, row chosen by a pairwise-independent
    /// hash, sign by a 4-wise independent hash.
    pub fn count_sketch(s: usize, n: usize, rng: &mut Rng) -> Result<SketchMatrix> {
        if s < 1 || n < 1 {
            return Err(Error::invalid("count-sketch needs s, n >= 1"));
        }
        let h = KWiseHash::new(2, n as u64, s as u64, rng)?;
        let sigma = SignHash::new(n as u64, rng)?;
        let mut entries = Vec::with_capacity(n);
        for j in 0..n as u64 {
            entries.push((h.eval(j)? as u32, sigma.sign(j)?));
        }
        Ok(SketchMatrix {
            kind: SketchKind::CountSketch,
            rows: s,
            cols: n,
            entries_per_col: 1,
            entries,
        })
    }

    /// Sparse embedding: t distinct rows per column, each +-1/sqrt(t). Row
    /// positions come from a partial Fisher-Yates pass keyed by `rng`.
    pub fn sparse_embedding(s: usize, n: usize, t: usize, rng: &mut Rng) -> Result<SketchMatrix> {
        if s < 1 || n < 1 {
            return Err(Error::invalid("sparse embedding needs s, n >= 1"));
        }
        if t < 1 || t > s {
            return Err(Error::invalid(format!(
                "sparse embedding needs 1 <= t <= s, got t={t}, s={s}"
            )));
        }
        let val = 1.0 / (t as f64).sqrt();
        let mut scratch: Vec<u32> = (0..s as u32).collect();
        let mut swaps: Vec<(usize, usize)> = Vec::with_capacity(t);
        let mut entries = Vec::with_capacity(n * t);
        for _ in 0..n {
            swaps.clear();
            for i in 0..t {
                let r = i + rng.below((s - i) as u64) as usize;
                scratch.swap(i, r);
                swaps.push((i, r));
                entries.push((scratch[i], rng.sign() * val));
            }
            for &(i, r) in swaps.iter().rev() {
                scratch.swap(i, r);
            }
        }
        Ok(SketchMatrix {
            kind: SketchKind::SparseEmbedding,
            rows: s,
            cols: n,
            entries_per_col: t,
            entries,
        })
    }

    pub fn identity(n: usize) -> SketchMatrix {
        SketchMatrix {
            kind: SketchKind::Identity,
            rows: n,
            cols: n,
            entries_per_col: 1,
            entries: (0..n as u32).map(|j| (j, 1.0)).collect(),
        }
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries_per_col(&self) -> usize {
        self.entries_per_col
    }

    pub fn col_entries(&self, j: usize) -> &[(u32, f64)] {
        &self.entries[j * self.entries_per_col..(j + 1) * self.entries_per_col]
    }

    /// y = S x
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "sketch apply: expected length {}, got {}",
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for &(r, v) in self.col_entries(j) {
                y[r as usize] += v * xj;
            }
        }
        Ok(y)
    }

    /// y = S^T x
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::invalid(format!(
                "sketch apply_transpose: expected length {}, got {}",
                self.rows,
                x.len()
            )));
        }
        Ok((0..self.cols)
            .map(|j| {
                self.col_entries(j)
                    .iter()
                    .map(|&(r, v)| v * x[r as usize])
                    .sum()
            })
            .collect())
    }

    /// y = S^T S x, the rank-s projection-like map applied inside sketched
    /// forward passes.
    pub fn sts_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let sx = self.apply(x)?;
        self.apply_transpose(&sx)
    }

    /// Column-wise sketch of a matrix: S U.
    pub fn apply_matrix(&self, u: &DenseMatrix) -> Result<DenseMatrix> {
        if u.rows() != self.cols {
            return Err(Error::invalid("sketch apply_matrix: row count mismatch"));
        }
        let mut out = DenseMatrix::zeros(self.rows, u.cols());
        for j in 0..u.cols() {
            let y = self.apply(u.col(j))?;
            out.col_mut(j).copy_from_slice(&y);
        }
        Ok(out)
    }

    /// Materializes the sketch densely. Intended for small-n invariant tests.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            for &(r, v) in self.col_entries(j) {
                m.set(r as usize, j, v);
            }
        }
        m
    }
}

/// Orthonormal basis U of a d-dimensional subspace of R^n.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    u: DenseMatrix,
}

impl SubspaceBasis {
    /// Validates U^T U = I to 1e-8.
    pub fn new(u: DenseMatrix) -> Result<SubspaceBasis> {
        if u.rows() < u.cols() || u.cols() == 0 {
            return Err(Error::invalid("basis must be n x d with n >= d >= 1"));
        }
        for a in 0..u.cols() {
            for b in a..u.cols() {
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot(u.col(a), u.col(b)) - want).abs() > 1e-8 {
                    return Err(Error::invalid("basis columns are not orthonormal"));
                }
            }
        }
        Ok(SubspaceBasis { u })
    }

    /// Random d-dimensional subspace: Gaussian matrix orthonormalized by two
    /// rounds of modified Gram-Schmidt.
    pub fn random(n: usize, d: usize, rng: &mut Rng) -> Result<SubspaceBasis> {
        if n < d || d == 0 {
            return Err(Error::invalid("basis must be n x d with n >= d >= 1"));
        }
        let mut u = DenseMatrix::gaussian(n, d, rng);
        for j in 0..d {
            for _ in 0..2 {
                for k in 0..j {
                    let proj = dot(u.col(k), u.col(j));
                    let kcol: Vec<f64> = u.col(k).to_vec();
                    for (x, &y) in u.col_mut(j).iter_mut().zip(&kcol) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm(u.col(j));
            if nrm < 1e-12 {
                return Err(Error::invalid("degenerate random basis draw"));
            }
            for x in u.col_mut(j) {
                *x /= nrm;
            }
        }
        SubspaceBasis::new(u)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn ambient_dim(&self) -> usize {
        self.u.rows()
    }

    pub fn dim(&self) -> usize {
        self.u.cols()
    }

    /// x = U z
    pub fn lift(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.u.matvec(z)
    }

    /// Residual of x after projecting onto the column span.
    pub fn projection_residual(&self, x: &[f64]) -> Result<f64> {
        let z = self.u.matvec_t(x)?;
        let px = self.u.matvec(&z)?;
        Ok(dist(x, &px))
    }

    /// Random unit vector in the subspace.
    pub fn unit_vector(&self, rng: &mut Rng) -> Vec<f64> {
        loop {
            let z = rng.gaussian_vec(self.dim());
            let nrm = norm(&z);
            if nrm > 1e-12 {
                let z: Vec<f64> = z.iter().map(|v| v / nrm).collect();
                return self.u.matvec(&z).expect("dims fixed by construction");
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dist(a, b)
}

/// Worst distortions observed over sampled pairs from the subspace.
#[derive(Debug, Clone, Copy)]
pub struct DistortionReport {
    /// max |  ||Sx||^2 - 1 | over sampled unit vectors x.
    pub max_norm_distortion: f64,
    /// max | <Sx, Sx'> - <x, x'> | over sampled pairs.
    pub max_dot_distortion: f64,
}

/// Samples `pairs` pairs of random unit vectors from the subspace and
/// measures the worst squared-norm and inner-product distortion under S.
/// Each pair runs on its own derived rng stream, so the result does not
/// depend on thread count.
pub fn distortion(
    s: &SketchMatrix,
    basis: &SubspaceBasis,
    pairs: usize,
    rng: &Rng,
) -> Result<DistortionReport> {
    if s.cols() != basis.ambient_dim() {
        return Err(Error::invalid("sketch and basis dimension mismatch"));
    }
    let worst = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut local = rng.derive(i as u64);
            let x = basis.unit_vector(&mut local);
            let y = basis.unit_vector(&mut local);
            let sx = s.apply(&x).expect("dims checked");
            let sy = s.apply(&y).expect("dims checked");
            let nx = (dot(&sx, &sx) - 1.0).abs();
            let ny = (dot(&sy, &sy) - 1.0).abs();
            let dxy = (dot(&sx, &sy) - dot(&x, &y)).abs();
            (nx.max(ny), dxy)
        })
        .reduce(
            || (0.0f64, 0.0f64),
            |a, b| (a.0.max(b.0), a.1.max(b.1)),
        );
    Ok(DistortionReport {
        max_norm_distortion: worst.0,
        max_dot_distortion: worst.1,
    })
}

/// Row counts from the subspace-embedding theorems, hidden constant `c`
/// (default 1): count-sketch `c d^2 / (delta eps^2)`, sparse embedding
/// `c d ln^2(d / (eps delta)) / eps^2`.
pub fn suggest_sketch_rows(
    kind: SketchKind,
    d: usize,
    eps: f64,
    delta: f64,
    c: f64,
) -> Result<usize> {
    if !(0.0 < eps && eps < 1.0) || !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid("need 0 < eps < 1 and 0 < delta < 1"));
    }
    if d == 0 {
        return Err(Error::invalid("need d >= 1"));
    }
    let d = d as f64;
    let s = match kind {
        SketchKind::CountSketch => c * d * d / (delta * eps * eps),
        SketchKind::SparseEmbedding => {
            let lg = (d / (eps * delta)).ln();
            c * d * lg * lg / (eps * eps)
        }
        SketchKind::Identity => {
            return Err(Error::invalid("identity sketch has no row suggestion"))
        }
    };
    Ok(s.ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pairwise_sum;

    #[test]
    fn count_sketch_structure() {
        let mut rng = Rng::new(1);
        let s = SketchMatrix::count_sketch(7, 40, &mut rng).unwrap();
        for j in 0..40 {
            let es = s.col_entries(j);
            assert_eq!(es.len(), 1);
            assert_eq!(es[0].1.abs(), 1.0);
            assert!((es[0].0 as usize) < 7);
        }
        let mut rng2 = Rng::new(1);
        let s2 = SketchMatrix::count_sketch(7, 40, &mut rng2).unwrap();
        assert_eq!(s.entries, s2.entries);
    }

    #[test]
    fn count_sketch_single_row_is_signed_sum() {
        let mut rng = Rng::new(2);
        let s = SketchMatrix::count_sketch(1, 5, &mut rng).unwrap();
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = s.apply(&x).unwrap();
        let expect: f64 = (0..5).map(|j| s.col_entries(j)[0].1 * x[j]).sum();
        assert_eq!(y.len(), 1);
        assert!((y[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn sparse_embedding_structure() {
        let mut rng = Rng::new(3);
        let s = SketchMatrix::sparse_embedding(4, 30, 2, &mut rng).unwrap();
        let mag = 1.0 / 2.0f64.sqrt();
        for j in 0..30 {
            let es = s.col_entries(j);
            assert_eq!(es.len(), 2);
            assert_ne!(es[0].0, es[1].0, "rows within a column must be distinct");
            for &(r, v) in es {
                assert!((r as usize) < 4);
                assert!((v.abs() - mag).abs() < 1e-15);
            }
            let sq: f64 = es.iter().map(|&(_, v)| v * v).sum();
            assert!((sq - 1.0).abs() < 1e-12, "column norm^2 = {sq}");
        }
        assert!(SketchMatrix::sparse_embedding(4, 30, 5, &mut rng).is_err());
    }

    #[test]
    fn sparse_embedding_t1_matches_count_sketch_shape() {
        let mut rng = Rng::new(4);
        let s = SketchMatrix::sparse_embedding(6, 20, 1, &mut rng).unwrap();
        for j in 0..20 {
            let es = s.col_entries(j);
            assert_eq!(es.len(), 1);
            assert_eq!(es[0].1.abs(), 1.0);
        }
    }

    #[test]
    fn hand_evaluated_count_sketch_apply() {
        // n=4, s=2, h=(1,0,0,1), sigma=(+1,-1,+1,-1), x=(1,1,1,1)
        //   -> Sx = (-1+1, 1-1) = (0,0)
        let entries = vec![(1u32, 1.0), (0, -1.0), (0, 1.0), (1, -1.0)];
        let s = SketchMatrix {
            kind: SketchKind::CountSketch,
            rows: 2,
            cols: 4,
            entries_per_col: 1,
            entries,
        };
        let y = s.apply(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(s.apply(&[0.0; 4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_sketch_is_identity() {
        let s = SketchMatrix::identity(5);
        let x = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        assert_eq!(s.apply(&x).unwrap(), x);
        assert_eq!(s.sts_apply(&x).unwrap(), x);
        let u = DenseMatrix::gaussian(5, 3, &mut Rng::new(7));
        let su = s.apply_matrix(&u).unwrap();
        assert_eq!(su.data(), u.data());
    }

    #[test]
    fn apply_matrix_matches_per_column_apply() {
        let mut rng = Rng::new(8);
        let s = SketchMatrix::sparse_embedding(9, 16, 3, &mut rng).unwrap();
        let u = DenseMatrix::gaussian(16, 4, &mut rng);
        let su = s.apply_matrix(&u).unwrap();
        for j in 0..4 {
            let col = s.apply(u.col(j)).unwrap();
            assert_eq!(su.col(j), col.as_slice());
        }
        assert_eq!(s.apply_matrix(&DenseMatrix::zeros(16, 2)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sts_is_symmetric_when_materialized() {
        let mut rng = Rng::new(11);
        for s in [
            SketchMatrix::count_sketch(6, 24, &mut rng).unwrap(),
            SketchMatrix::sparse_embedding(8, 24, 4, &mut rng).unwrap(),
        ] {
            let dense = s.to_dense();
            let sts = dense.transpose().matmul(&dense).unwrap();
            assert_eq!(sts.asymmetry(), 0.0);
        }
    }

    #[test]
    fn sketch_norm_unbiased_over_seeds() {
        // E ||Sx||^2 = ||x||^2: mean over 10^4 seeds within 5%.
        let n = 8;
        let x: Vec<f64> = vec![0.6, -1.2, 0.3, 2.0, -0.5, 0.9, -1.4, 0.7];
        let x2 = dot(&x, &x);
        let seeds = 10_000u64;
        let mut samples = Vec::with_capacity(seeds as usize);
        for seed in 0..seeds {
            let mut rng = Rng::new(seed);
            let s = SketchMatrix::count_sketch(4, n, &mut rng).unwrap();
            let sx = s.apply(&x).unwrap();
            samples.push(dot(&sx, &sx));
        }
        let mean = pairwise_sum(&samples) / seeds as f64;
        assert!(
            (mean - x2).abs() <= 0.05 * x2,
            "mean ||Sx||^2 = {mean}, expected about {x2}"
        );
    }

    #[test]
    fn distortion_identity_is_zero() {
        let mut rng = Rng::new(13);
        let basis = SubspaceBasis::random(32, 4, &mut rng).unwrap();
        let s = SketchMatrix::identity(32);
        let r = distortion(&s, &basis, 64, &rng).unwrap();
        assert!(r.max_norm_distortion < 1e-12);
        assert!(r.max_dot_distortion < 1e-12);
    }

    #[test]
    fn distortion_is_thread_independent() {
        let mut rng = Rng::new(14);
        let basis = SubspaceBasis::random(64, 3, &mut rng).unwrap();
        let s = SketchMatrix::count_sketch(48, 64, &mut rng).unwrap();
        let a = distortion(&s, &basis, 100, &rng).unwrap();
        let b = distortion(&s, &basis, 100, &rng).unwrap();
        assert_eq!(a.max_norm_distortion.to_bits(), b.max_norm_distortion.to_bits());
        assert_eq!(a.max_dot_distortion.to_bits(), b.max_dot_distortion.to_bits());
    }

    #[test]
    fn median_distortion_shrinks_as_rows_double() {
        let n = 256;
        let d = 4;
        let mut medians = Vec::new();
        for s_rows in [32, 64, 128] {
            let mut per_seed = Vec::new();
            for seed in 0..20 {
                let mut rng = Rng::new(900 + seed);
                let basis = SubspaceBasis::random(n, d, &mut rng).unwrap();
                let s = SketchMatrix::count_sketch(s_rows, n, &mut rng).unwrap();
                per_seed.push(distortion(&s, &basis, 100, &rng).unwrap().max_norm_distortion);
            }
            per_seed.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(0.5 * (per_seed[9] + per_seed[10]));
        }
        assert!(
            medians[0] >= medians[1] && medians[1] >= medians[2],
            "medians not non-increasing: {medians:?}"
        );
    }

    #[test]
    fn row_suggestions() {
        assert_eq!(
            suggest_sketch_rows(SketchKind::CountSketch, 5, 0.25, 0.1, 1.0).unwrap(),
            4000
        );
        // halving eps exactly quadruples the pre-ceiling count-sketch rows
        let s1 = suggest_sketch_rows(SketchKind::CountSketch, 4, 0.2, 0.5, 1.0).unwrap();
        let s2 = suggest_sketch_rows(SketchKind::CountSketch, 4, 0.1, 0.5, 1.0).unwrap();
        assert_eq!(s2, 4 * s1);
        // sparse embedding grows linearly in d up to its squared log factor
        let a = suggest_sketch_rows(SketchKind::SparseEmbedding, 5, 0.25, 0.1, 1.0).unwrap();
        let b = suggest_sketch_rows(SketchKind::SparseEmbedding, 10, 0.25, 0.1, 1.0).unwrap();
        let ratio = b as f64 / a as f64;
        assert!((2.0..3.0).contains(&ratio), "ratio {ratio}");
        assert!(suggest_sketch_rows(SketchKind::CountSketch, 5, 1.5, 0.1, 1.0).is_err());
        assert!(suggest_sketch_rows(SketchKind::Identity, 5, 0.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn subspace_basis_validation() {
        let mut bad = DenseMatrix::zeros(4, 2);
        bad.set(0, 0, 1.0);
        bad.set(0, 1, 1.0); // not orthogonal
        bad.set(1, 1, 1.0);
        assert!(SubspaceBasis::new(bad).is_err());
    }
}
