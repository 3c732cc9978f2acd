//! One-hidden-layer networks with hashed weight sharing: teacher sampling,
//! empirical risk and its derivatives, the lifting reduction to the
//! fully-connected Hessian, spectral bound formulas, and gradient-descent
//! recovery of the bucket vector.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::hashing::{default_degree, BucketLoads, KWiseHash};
use crate::linalg::{self, dot, norm, pairwise_sum, DenseMatrix};
use crate::rng::Rng;

/// Shared-weight layer: a bucket vector w of length B and a hash from the
/// k*n virtual positions onto the buckets. The virtual weight matrix is
/// W[i][j] = w[h(i*n + j)].
#[derive(Debug, Clone)]
pub struct HashedLayer {
    n: usize,
    k: usize,
    b: usize,
    hash: Option<KWiseHash>,
    /// Cached hash table over the full virtual index space, length k*n.
    idx: Vec<u32>,
    pub w: Vec<f64>,
}

impl HashedLayer {
    /// Fresh t-wise hash with t = ceil(log2(k n)).
    pub fn new(n: usize, k: usize, b: usize, w: Vec<f64>, rng: &mut Rng) -> Result<HashedLayer> {
        let domain = (k * n) as u64;
        let t = default_degree(domain);
        let hash = KWiseHash::new(t, domain, b as u64, rng)?;
        Self::with_hash(n, k, w, hash)
    }

    pub fn with_hash(n: usize, k: usize, w: Vec<f64>, hash: KWiseHash) -> Result<HashedLayer> {
        if hash.domain() != (k * n) as u64 {
            return Err(Error::invalid("hash domain must equal k*n"));
        }
        let b = hash.range() as usize;
        if w.len() != b {
            return Err(Error::invalid("bucket vector length must equal B"));
        }
        let idx = hash.table();
        Ok(HashedLayer {
            n,
            k,
            b,
            hash: Some(hash),
            idx,
            w,
        })
    }

    /// Injective bucket map with B = k*n: position (i, j) owns bucket i*n+j.
    /// This is the uncompressed layer used by ratio-1 equivalence checks.
    pub fn with_identity_map(n: usize, k: usize, w: Vec<f64>) -> Result<HashedLayer> {
        if w.len() != k * n {
            return Err(Error::invalid("identity map needs B = k*n buckets"));
        }
        Ok(HashedLayer {
            n,
            k,
            b: k * n,
            hash: None,
            idx: (0..(k * n) as u32).collect(),
            w,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn buckets(&self) -> usize {
        self.b
    }

    pub fn hash(&self) -> Option<&KWiseHash> {
        self.hash.as_ref()
    }

    pub fn index_table(&self) -> &[u32] {
        &self.idx
    }

    #[inline]
    pub fn virtual_entry(&self, i: usize, j: usize) -> f64 {
        self.w[self.idx[i * self.n + j] as usize]
    }

    /// Materializes the k x n virtual weight matrix.
    pub fn expand_virtual(&self) -> DenseMatrix {
        expand_virtual(&self.idx, &self.w, self.k, self.n)
    }

    pub fn bucket_loads(&self) -> BucketLoads {
        BucketLoads::from_table(&self.idx, self.b as u64)
    }
}

pub fn expand_virtual(idx: &[u32], w: &[f64], k: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(k, n, |i, j| w[idx[i * n + j] as usize])
}

/// The lifting map R^B -> R^{kn}: b[i*n+j] = a[h(i,j)]. Connects hashed and
/// fully-connected quadratic forms; satisfies ||lift(a)||^2 = sum_p a_p^2 load(p).
pub fn lift_vector(a: &[f64], idx: &[u32]) -> Vec<f64> {
    idx.iter().map(|&p| a[p as usize]).collect()
}

/// Defaults used by `TeacherSpec::sample`. Ground-truth nets are normalized
/// to spectral norm 1/2 and conditioned at kappa <= 3 so the step size
/// 1/M0 prescribed by the recovery analysis both stays stable and contracts
/// the smallest Hessian mode within a few hundred iterations. For the
/// piecewise-linear activations used here the loss landscape around w* is
/// scale-free, so this is pure normalization.
pub const TEACHER_SPECTRAL_NORM: f64 = 0.5;
pub const TEACHER_KAPPA_MAX: f64 = 3.0;
const TEACHER_SAMPLE_TRIES: usize = 100_000;

/// Ground-truth one-hidden-layer hashed net: bucket vector w*, output
/// weights v* (all nonzero), and a piecewise-linear activation.
#[derive(Debug, Clone)]
pub struct TeacherSpec {
    pub layer: HashedLayer,
    pub v: Vec<f64>,
    pub activation: Activation,
    /// Growth power of the activation derivative as used by the smoothness
    /// formula; 1 for ReLU-family activations here.
    pub growth_p: u32,
}

impl TeacherSpec {
    /// Validates rank(W*) = k and v_i != 0.
    pub fn new(layer: HashedLayer, v: Vec<f64>, activation: Activation) -> Result<TeacherSpec> {
        if v.len() != layer.k() {
            return Err(Error::invalid("v* length must equal k"));
        }
        if v.contains(&0.0) {
            return Err(Error::invalid("v* entries must be nonzero"));
        }
        let svd = linalg::svd(&layer.expand_virtual())?;
        let k = layer.k();
        if svd.sigma[k - 1] <= 1e-6 * svd.sigma[0] {
            return Err(Error::RankDeficient(
                "virtual teacher matrix does not have rank k".into(),
            ));
        }
        Ok(TeacherSpec {
            layer,
            v,
            activation,
            growth_p: 1,
        })
    }

    /// Draws a well-posed random teacher: the hash is resampled until every
    /// bucket is used (an unused bucket is an unidentifiable parameter), the
    /// bucket vector until rank(W*) = k with kappa <= TEACHER_KAPPA_MAX, and
    /// w* is scaled so sigma_1(W*) = TEACHER_SPECTRAL_NORM. Output weights
    /// are random signs.
    pub fn sample(
        n: usize,
        k: usize,
        b: usize,
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<TeacherSpec> {
        if b > k * n {
            return Err(Error::invalid("need B <= k*n buckets"));
        }
        if b == k * n {
            // Every bucket map onto B = kn used positions is a bijection;
            // take the canonical one instead of rejection sampling.
            let (w, _) = Self::sample_conditioned_w(&(0..b as u32).collect::<Vec<_>>(), n, k, b, rng)?;
            let layer = HashedLayer::with_identity_map(n, k, w)?;
            let v = (0..k).map(|_| rng.sign()).collect();
            return Self::new(layer, v, activation);
        }
        for _ in 0..TEACHER_SAMPLE_TRIES {
            let domain = (k * n) as u64;
            let t = default_degree(domain);
            let hash = KWiseHash::new(t, domain, b as u64, rng)?;
            let idx = hash.table();
            let loads = BucketLoads::from_table(&idx, b as u64);
            if loads.min() < 1 {
                continue;
            }
            if let Ok((w, _sigma)) = Self::sample_conditioned_w(&idx, n, k, b, rng) {
                let layer = HashedLayer::with_hash(n, k, w, hash)?;
                let v = (0..k).map(|_| rng.sign()).collect();
                return Self::new(layer, v, activation);
            }
        }
        Err(Error::invalid(
            "teacher sampling failed: no surjective well-conditioned draw",
        ))
    }

    fn sample_conditioned_w(
        idx: &[u32],
        n: usize,
        k: usize,
        b: usize,
        rng: &mut Rng,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        for _ in 0..TEACHER_SAMPLE_TRIES {
            let w = rng.gaussian_vec(b);
            let virt = expand_virtual(idx, &w, k, n);
            let svd = linalg::svd(&virt)?;
            let s1 = svd.sigma[0];
            let sk = svd.sigma[k - 1];
            if sk <= 1e-6 * s1 || s1 / sk > TEACHER_KAPPA_MAX {
                continue;
            }
            let scale = TEACHER_SPECTRAL_NORM / s1;
            let w: Vec<f64> = w.iter().map(|x| x * scale).collect();
            let sigma: Vec<f64> = svd.sigma.iter().map(|s| s * scale).collect();
            return Ok((w, sigma));
        }
        Err(Error::invalid("could not condition teacher weights"))
    }

    pub fn n(&self) -> usize {
        self.layer.n()
    }

    pub fn k(&self) -> usize {
        self.layer.k()
    }

    pub fn buckets(&self) -> usize {
        self.layer.buckets()
    }

    /// y = sum_i v_i phi(sum_j w[h(i,j)] x_j) at the teacher's own buckets.
    pub fn label(&self, x: &[f64]) -> f64 {
        self.predict(&self.layer.w, x)
    }

    /// Network output at an arbitrary bucket vector w.
    pub fn predict(&self, w: &[f64], x: &[f64]) -> f64 {
        let n = self.n();
        let idx = self.layer.index_table();
        let mut out = 0.0;
        for i in 0..self.k() {
            let row = &idx[i * n..(i + 1) * n];
            let z: f64 = row
                .iter()
                .zip(x)
                .map(|(&p, &xj)| w[p as usize] * xj)
                .sum();
            out += self.v[i] * self.activation.eval(z);
        }
        out
    }
}

/// m labelled samples with row-major features.
#[derive(Debug, Clone)]
pub struct SampleSet {
    n: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampleSet {
    pub fn new(n: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<SampleSet> {
        if xs.len() != n * ys.len() {
            return Err(Error::invalid("feature buffer does not match m*n"));
        }
        if !xs.iter().chain(ys.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("samples contain non-finite values"));
        }
        Ok(SampleSet { n, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.n..(i + 1) * self.n]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }
}

/// Draws m i.i.d. standard Gaussian inputs labelled by the teacher.
pub fn sample_dataset(teacher: &TeacherSpec, m: usize, rng: &mut Rng) -> SampleSet {
    let n = teacher.n();
    let xs = rng.gaussian_vec(m * n);
    let ys = (0..m)
        .map(|i| teacher.label(&xs[i * n..(i + 1) * n]))
        .collect();
    SampleSet { n, xs, ys }
}

const RISK_CHUNK: usize = 4096;

/// Splits [0, m) into fixed chunks, maps each to a partial value (in
/// parallel), and combines partials pairwise in index order. The reduction
/// tree depends only on m, so results are identical for any thread count.
fn chunked_reduce<T, F, C>(m: usize, map_chunk: F, combine: C) -> Option<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    C: Fn(T, T) -> T + Copy,
{
    let ranges: Vec<std::ops::Range<usize>> = (0..m)
        .step_by(RISK_CHUNK)
        .map(|s| s..(s + RISK_CHUNK).min(m))
        .collect();
    let mut partials: Vec<T> = ranges.into_par_iter().map(map_chunk).collect();
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        let mut it = partials.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        partials = next;
    }
    partials.into_iter().next()
}

impl TeacherSpec {
    /// Empirical risk F_S(w) = (1/2m) sum (prediction - y)^2. The mean
    /// convention makes F_S converge to the population risk as m grows.
    pub fn empirical_risk(&self, w: &[f64], samples: &SampleSet) -> f64 {
        assert_eq!(samples.dim(), self.n(), "sample dimension mismatch");
        let m = samples.len();
        if m == 0 {
            return 0.0;
        }
        let total = chunked_reduce(
            m,
            |range| {
                let vals: Vec<f64> = range
                    .map(|i| {
                        let r = self.predict(w, samples.x(i)) - samples.y(i);
                        r * r
                    })
                    .collect();
                pairwise_sum(&vals)
            },
            |a, b| a + b,
        )
        .unwrap_or(0.0);
        total / (2.0 * m as f64)
    }

    /// Analytic gradient of F_S: per bucket p, the residual times
    /// sum_i v_i phi'(z_i) (sum_{j: h(i,j)=p} x_j), averaged over samples.
    pub fn risk_gradient(&self, w: &[f64], samples: &SampleSet) -> Vec<f64> {
        assert_eq!(samples.dim(), self.n(), "sample dimension mismatch");
        let b = self.buckets();
        let m = samples.len();
        if m == 0 {
            return vec![0.0; b];
        }
        let n = self.n();
        let k = self.k();
        let idx = self.layer.index_table();
        let mut g = chunked_reduce(
            m,
            |range| {
                let mut part = vec![0.0f64; b];
                let mut z = vec![0.0f64; k];
                for i in range {
                    let x = samples.x(i);
                    let mut pred = 0.0;
                    for (unit, zi) in z.iter_mut().enumerate() {
                        let row = &idx[unit * n..(unit + 1) * n];
                        *zi = row
                            .iter()
                            .zip(x)
                            .map(|(&p, &xj)| w[p as usize] * xj)
                            .sum();
                        pred += self.v[unit] * self.activation.eval(*zi);
                    }
                    let r = pred - samples.y(i);
                    if r == 0.0 {
                        continue;
                    }
                    for (unit, &zi) in z.iter().enumerate() {
                        let c = r * self.v[unit] * self.activation.deriv(zi);
                        if c == 0.0 {
                            continue;
                        }
                        let row = &idx[unit * n..(unit + 1) * n];
                        for (&p, &xj) in row.iter().zip(x) {
                            part[p as usize] += c * xj;
                        }
                    }
                }
                part
            },
            |mut a, b_| {
                for (x, y) in a.iter_mut().zip(&b_) {
                    *x += y;
                }
                a
            },
        )
        .unwrap_or_else(|| vec![0.0; b]);
        let inv = 1.0 / m as f64;
        for x in g.iter_mut() {
            *x *= inv;
        }
        g
    }

    /// Gauss-Newton Hessian of F_S, exact for piecewise-linear activations
    /// (phi'' = 0 almost everywhere): the average of u u^T with
    /// u_p = sum_i v_i phi'(z_i) (sum_{j: h(i,j)=p} x_j). Symmetric PSD at
    /// every w by construction.
    pub fn risk_hessian(&self, w: &[f64], samples: &SampleSet) -> Result<DenseMatrix> {
        if !self.activation.is_piecewise_linear() {
            return Err(Error::UnsupportedActivation(format!(
                "{:?} has nonzero second derivative",
                self.activation
            )));
        }
        assert_eq!(samples.dim(), self.n(), "sample dimension mismatch");
        let b = self.buckets();
        let m = samples.len();
        if m == 0 {
            return Ok(DenseMatrix::zeros(b, b));
        }
        let n = self.n();
        let k = self.k();
        let idx = self.layer.index_table();
        let flat = chunked_reduce(
            m,
            |range| {
                let mut part = vec![0.0f64; b * b];
                let mut u = vec![0.0f64; b];
                for i in range {
                    let x = samples.x(i);
                    u.iter_mut().for_each(|v| *v = 0.0);
                    for unit in 0..k {
                        let row = &idx[unit * n..(unit + 1) * n];
                        let z: f64 = row
                            .iter()
                            .zip(x)
                            .map(|(&p, &xj)| w[p as usize] * xj)
                            .sum();
                        let c = self.v[unit] * self.activation.deriv(z);
                        if c == 0.0 {
                            continue;
                        }
                        for (&p, &xj) in row.iter().zip(x) {
                            u[p as usize] += c * xj;
                        }
                    }
                    for (q, &uq) in u.iter().enumerate() {
                        if uq == 0.0 {
                            continue;
                        }
                        let col = &mut part[q * b..(q + 1) * b];
                        for (cp, &up) in col.iter_mut().zip(&u) {
                            *cp += uq * up;
                        }
                    }
                }
                part
            },
            |mut a, b_| {
                for (x, y) in a.iter_mut().zip(&b_) {
                    *x += y;
                }
                a
            },
        )
        .unwrap_or_else(|| vec![0.0; b * b]);
        let inv = 1.0 / m as f64;
        DenseMatrix::from_col_major(b, b, flat.iter().map(|v| v * inv).collect())
    }
}

/// Gauss-Newton Hessian of the fully-connected one-hidden-layer net at the
/// weight matrix `w_full` (k x n), over the same samples and loss. Indexes
/// the kn coordinates as i*n + j to match the lifting layout. Used as the
/// independent side of the reduction identity.
pub fn full_gauss_newton_hessian(
    v: &[f64],
    activation: Activation,
    w_full: &DenseMatrix,
    samples: &SampleSet,
) -> Result<DenseMatrix> {
    let k = w_full.rows();
    let n = w_full.cols();
    if samples.dim() != n {
        return Err(Error::invalid("sample dimension mismatch"));
    }
    if v.len() != k {
        return Err(Error::invalid("v length mismatch"));
    }
    let m = samples.len();
    let kn = k * n;
    let flat = chunked_reduce(
        m,
        |range| {
            let mut part = vec![0.0f64; kn * kn];
            let mut u = vec![0.0f64; kn];
            for s in range {
                let x = samples.x(s);
                for i in 0..k {
                    let z: f64 = (0..n).map(|j| w_full.get(i, j) * x[j]).sum();
                    let c = v[i] * activation.deriv(z);
                    for j in 0..n {
                        u[i * n + j] = c * x[j];
                    }
                }
                for (q, &uq) in u.iter().enumerate() {
                    if uq == 0.0 {
                        continue;
                    }
                    let col = &mut part[q * kn..(q + 1) * kn];
                    for (cp, &up) in col.iter_mut().zip(&u) {
                        *cp += uq * up;
                    }
                }
            }
            part
        },
        |mut a, b_| {
            for (x, y) in a.iter_mut().zip(&b_) {
                *x += y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![0.0; kn * kn]);
    let inv = if m == 0 { 0.0 } else { 1.0 / m as f64 };
    DenseMatrix::from_col_major(kn, kn, flat.iter().map(|v| v * inv).collect())
}

/// Worst relative disagreement between a^T H_hash a and lift(a)^T H_full
/// lift(a) over random unit a, with both Hessians built from the same
/// samples. The two quadratic forms agree exactly up to rounding.
pub fn hessian_reduction_check(
    teacher: &TeacherSpec,
    samples: &SampleSet,
    vectors: usize,
    rng: &mut Rng,
) -> Result<f64> {
    let h_hash = teacher.risk_hessian(&teacher.layer.w, samples)?;
    let h_full = full_gauss_newton_hessian(
        &teacher.v,
        teacher.activation,
        &teacher.layer.expand_virtual(),
        samples,
    )?;
    let idx = teacher.layer.index_table();
    let b = teacher.buckets();
    let mut worst = 0.0f64;
    for _ in 0..vectors {
        let a = rng.gaussian_vec(b);
        let qa = quadratic_form(&h_hash, &a)?;
        let lifted = lift_vector(&a, idx);
        let qb = quadratic_form(&h_full, &lifted)?;
        let scale = qa.abs().max(qb.abs()).max(1e-300);
        worst = worst.max((qa - qb).abs() / scale);
    }
    Ok(worst)
}

pub fn quadratic_form(h: &DenseMatrix, a: &[f64]) -> Result<f64> {
    let ha = h.matvec(a)?;
    Ok(dot(a, &ha))
}

// ---------------------------------------------------------------------------
// Activation moment gap rho(sigma) via quadrature.
// ---------------------------------------------------------------------------

/// E[g(Z)] for Z ~ N(0,1) by adaptive composite Gauss-Legendre quadrature on
/// [-12, 12], split at the supplied breakpoints of g. Splitting keeps each
/// panel smooth, which plain Gauss-Hermite cannot do for the discontinuous
/// derivative of a piecewise-linear activation.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, breakpoints: &[f64]) -> f64 {
    const CUTOFF: f64 = 12.0;
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| g(z) * density(z);
    let mut knots = vec![-CUTOFF];
    for &b in breakpoints {
        if b > -CUTOFF && b < CUTOFF {
            knots.push(b);
        }
    }
    knots.push(CUTOFF);
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += adaptive_gl(&f, w[0], w[1], 0);
    }
    total
}

fn adaptive_gl(f: &impl Fn(f64) -> f64, a: f64, b: f64, depth: usize) -> f64 {
    let whole = gl20(f, a, b);
    let mid = 0.5 * (a + b);
    let split = gl20(f, a, mid) + gl20(f, mid, b);
    if (split - whole).abs() <= 1e-13 * (1.0 + split.abs()) || depth >= 24 {
        split
    } else {
        adaptive_gl(f, a, mid, depth + 1) + adaptive_gl(f, mid, b, depth + 1)
    }
}

fn gl20(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    gl20_nodes()
        .iter()
        .map(|&(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// 20-point Gauss-Legendre nodes/weights on [-1, 1], built once by Newton
/// iteration on the Legendre recurrence.
fn gl20_nodes() -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 20usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The moment gap rho(sigma) = min{beta0 - alpha0^2 - alpha1^2,
/// beta2 - alpha1^2 - alpha2^2, alpha0 alpha2 - alpha1^2} with
/// alpha_q = E[phi'(sigma Z) Z^q] and beta_q = E[phi'(sigma Z)^2 Z^q].
pub fn rho(activation: Activation, sigma: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::invalid("rho requires sigma > 0"));
    }
    let bp: Vec<f64> = activation
        .breakpoints()
        .iter()
        .map(|&z| z / sigma)
        .collect();
    let moment = |q: i32, squared: bool| {
        gaussian_expectation(
            |z| {
                let d = activation.deriv(sigma * z);
                let d = if squared { d * d } else { d };
                d * z.powi(q)
            },
            &bp,
        )
    };
    let a0 = moment(0, false);
    let a1 = moment(1, false);
    let a2 = moment(2, false);
    let b0 = moment(0, true);
    let b2 = moment(2, true);
    Ok((b0 - a0 * a0 - a1 * a1)
        .min(b2 - a1 * a1 - a2 * a2)
        .min(a0 * a2 - a1 * a1))
}

// ---------------------------------------------------------------------------
// Spectral parameters and the strong convexity / smoothness formulas.
// ---------------------------------------------------------------------------

/// Spectral summary of a teacher and the derived bound values, with the
/// analysis' hidden constants set to one.
#[derive(Debug, Clone)]
pub struct SpectralParams {
    pub singular_values: Vec<f64>,
    /// kappa = sigma_1 / sigma_k
    pub kappa: f64,
    /// lambda = (prod_i sigma_i) / sigma_k^k
    pub lambda: f64,
    pub v_max: f64,
    pub v_min: f64,
    /// nu = v_max / v_min
    pub nu: f64,
    pub rho_sigma_k: f64,
    pub growth_p: u32,
    /// A_min = v_min^2 rho(sigma_k) / (kappa^2 lambda)
    pub a_min: f64,
    /// A_max = k v_max^2 sigma_1^{2p}
    pub a_max: f64,
    /// m0 = (kn / 2B) A_min, the strong convexity level
    pub m_lower: f64,
    /// M0 = (2kn / B) A_max, the smoothness level; gradient descent steps 1/M0
    pub m_upper: f64,
}

pub fn spectrum_bounds(teacher: &TeacherSpec) -> Result<SpectralParams> {
    let k = teacher.k();
    let n = teacher.n();
    let b = teacher.buckets();
    let svd = linalg::svd(&teacher.layer.expand_virtual())?;
    let sigma = &svd.sigma[..k];
    let s1 = sigma[0];
    let sk = sigma[k - 1];
    if sk <= 1e-6 * s1 {
        return Err(Error::RankDeficient(format!(
            "sigma_k = {sk} below rank tolerance relative to sigma_1 = {s1}"
        )));
    }
    let kappa = s1 / sk;
    // Product over a log sum so large k cannot overflow.
    let lambda = sigma
        .iter()
        .map(|s| s.ln() - sk.ln())
        .sum::<f64>()
        .exp();
    let v_max = teacher.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v_min = teacher
        .v
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let rho_sigma_k = rho(teacher.activation, sk)?;
    let p = teacher.growth_p;
    let a_min = v_min * v_min * rho_sigma_k / (kappa * kappa * lambda);
    let a_max = k as f64 * v_max * v_max * s1.powi(2 * p as i32);
    let kn_over_b = (k * n) as f64 / b as f64;
    Ok(SpectralParams {
        singular_values: sigma.to_vec(),
        kappa,
        lambda,
        v_max,
        v_min,
        nu: v_max / v_min,
        rho_sigma_k,
        growth_p: p,
        a_min,
        a_max,
        m_lower: 0.5 * kn_over_b * a_min,
        m_upper: 2.0 * kn_over_b * a_max,
    })
}

/// w* plus a uniformly random direction at exactly `fraction * ||w*||`.
pub fn perturbed_init(w_star: &[f64], fraction: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if fraction < 0.0 {
        return Err(Error::invalid("perturbation fraction must be >= 0"));
    }
    if fraction == 0.0 {
        return Ok(w_star.to_vec());
    }
    let radius = fraction * norm(w_star);
    loop {
        let dir = rng.gaussian_vec(w_star.len());
        let nrm = norm(&dir);
        if nrm > 1e-12 {
            return Ok(w_star
                .iter()
                .zip(&dir)
                .map(|(&w, &d)| w + radius * d / nrm)
                .collect());
        }
    }
}

/// Trace of a full-batch gradient descent run toward w*.
#[derive(Debug, Clone)]
pub struct RecoveryTrace {
    /// ||w_t - w*||^2 for t = 0..=steps_taken.
    pub errors_sq: Vec<f64>,
    /// errors_sq[t+1] / errors_sq[t]
    pub ratios: Vec<f64>,
    pub step_size: f64,
    pub m_lower: f64,
    pub m_upper: f64,
    /// Set when the error grew past 10x its initial value; recorded, never
    /// raised.
    pub diverged: bool,
}

impl RecoveryTrace {
    pub fn final_error(&self) -> f64 {
        self.errors_sq.last().copied().unwrap_or(0.0).sqrt()
    }

    /// Fraction of steps with non-increasing error.
    pub fn monotone_fraction(&self) -> f64 {
        if self.ratios.is_empty() {
            return 1.0;
        }
        let good = self
            .ratios
            .iter()
            .filter(|&&r| r <= 1.0 + 1e-12)
            .count();
        good as f64 / self.ratios.len() as f64
    }
}

/// Full-batch gradient descent on F_S from `w_init`. The step size defaults
/// to 1/M0 from `spectrum_bounds`; `stop_rel` ends the run early once
/// ||w - w*|| falls below that fraction of ||w*||.
pub fn gd_recover(
    teacher: &TeacherSpec,
    samples: &SampleSet,
    w_init: &[f64],
    steps: usize,
    step_size: Option<f64>,
    stop_rel: Option<f64>,
) -> Result<RecoveryTrace> {
    if steps < 1 {
        return Err(Error::invalid("gd_recover needs steps >= 1"));
    }
    if w_init.len() != teacher.buckets() {
        return Err(Error::invalid("w_init length must equal B"));
    }
    let bounds = spectrum_bounds(teacher)?;
    let eta = match step_size {
        Some(e) if e > 0.0 => e,
        Some(_) => return Err(Error::invalid("step size must be positive")),
        None => 1.0 / bounds.m_upper,
    };
    let w_star = &teacher.layer.w;
    let stop_sq = stop_rel.map(|r| (r * norm(w_star)).powi(2));
    let mut w = w_init.to_vec();
    let mut errors_sq = Vec::with_capacity(steps + 1);
    let mut ratios = Vec::with_capacity(steps);
    let err0 = linalg::dist(&w, w_star).powi(2);
    errors_sq.push(err0);
    let mut diverged = false;
    for _ in 0..steps {
        let g = teacher.risk_gradient(&w, samples);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta * gi;
        }
        let e = linalg::dist(&w, w_star).powi(2);
        let prev = *errors_sq.last().unwrap();
        ratios.push(if prev > 0.0 {
            e / prev
        } else if e > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
        errors_sq.push(e);
        if e > 100.0 * err0 && err0 > 0.0 {
            diverged = true;
            break;
        }
        if let Some(t) = stop_sq {
            if e <= t {
                break;
            }
        }
    }
    Ok(RecoveryTrace {
        errors_sq,
        ratios,
        step_size: eta,
        m_lower: bounds.m_lower,
        m_upper: bounds.m_upper,
        diverged,
    })
}
