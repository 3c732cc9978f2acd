//! t-wise independent polynomial hash families over a Mersenne prime field,
//! bucket-load statistics, and the moment tail bound used to predict load
//! concentration.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default field modulus: the Mersenne prime 2^61 - 1. The double reduction
/// (mod p, then mod B) biases bucket probabilities by at most B/p, which is
/// far below anything measurable at the scales this crate runs.
pub const MERSENNE_PRIME_61: u64 = (1 << 61) - 1;

/// (a * b) mod (2^61 - 1) using the Mersenne folding identity.
#[inline]
pub fn mul_mod_m61(a: u64, b: u64) -> u64 {
    const M: u64 = MERSENNE_PRIME_61;
    let z = a as u128 * b as u128;
    let folded = (z & M as u128) as u64 + (z >> 61) as u64;
    let folded = (folded & M) + (folded >> 61);
    if folded >= M {
        folded - M
    } else {
        folded
    }
}

#[inline]
fn add_mod_m61(a: u64, b: u64) -> u64 {
    const M: u64 = MERSENNE_PRIME_61;
    let s = a + b; // both < 2^61, no overflow
    if s >= M {
        s - M
    } else {
        s
    }
}

/// Ceiling of log2, with a floor of 1. This instantiates the t = Theta(log N)
/// degree choice used throughout.
pub fn default_degree(n: u64) -> usize {
    if n <= 2 {
        1
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}

/// Degree-(t-1) polynomial over F_p evaluated at x, reduced mod B: a t-wise
/// independent hash from [N] to [B].
#[derive(Debug, Clone)]
pub struct KWiseHash {
    degree: usize,
    prime: u64,
    coeffs: Vec<u64>,
    domain: u64,
    range: u64,
}

impl KWiseHash {
    /// Draws a fresh member of the family: `t` coefficients uniform in [0, p).
    pub fn new(t: usize, domain: u64, range: u64, rng: &mut Rng) -> Result<KWiseHash> {
        if t < 1 || domain < 1 || range < 1 {
            return Err(Error::invalid("kwise hash needs t, N, B >= 1"));
        }
        Self::check_capacity(domain, range)?;
        let coeffs = (0..t).map(|_| uniform_field_element(rng)).collect();
        Ok(KWiseHash {
            degree: t,
            prime: MERSENNE_PRIME_61,
            coeffs,
            domain,
            range,
        })
    }

    /// Builds from explicit coefficients (used by tests for degenerate
    /// polynomials).
    pub fn from_coeffs(coeffs: Vec<u64>, domain: u64, range: u64) -> Result<KWiseHash> {
        if coeffs.is_empty() || domain < 1 || range < 1 {
            return Err(Error::invalid("kwise hash needs t, N, B >= 1"));
        }
        Self::check_capacity(domain, range)?;
        if coeffs.iter().any(|&c| c >= MERSENNE_PRIME_61) {
            return Err(Error::invalid("coefficients must lie in [0, p)"));
        }
        Ok(KWiseHash {
            degree: coeffs.len(),
            prime: MERSENNE_PRIME_61,
            coeffs,
            domain,
            range,
        })
    }

    /// Bias control requires p > N and p > B^2 N; with p fixed at 2^61 - 1
    /// there is no larger prime to fall back to within 64 bits.
    fn check_capacity(domain: u64, range: u64) -> Result<()> {
        let bias_bound = range
            .checked_mul(range)
            .and_then(|b2| b2.checked_mul(domain));
        match bias_bound {
            Some(v) if v < MERSENNE_PRIME_61 && domain < MERSENNE_PRIME_61 => Ok(()),
            _ => Err(Error::Capacity(format!(
                "no 64-bit prime satisfies p > B^2 N for N={domain}, B={range}"
            ))),
        }
    }

    #[inline]
    pub fn eval(&self, x: u64) -> Result<u64> {
        if x >= self.domain {
            return Err(Error::OutOfDomain {
                index: x,
                domain: self.domain,
            });
        }
        Ok(self.eval_in_domain(x))
    }

    /// Horner evaluation in the field; caller guarantees x < N.
    #[inline]
    fn eval_in_domain(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = add_mod_m61(mul_mod_m61(acc, x), c);
        }
        acc % self.range
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Evaluates the hash on its full domain. Only sensible for desk-scale N.
    pub fn table(&self) -> Vec<u32> {
        (0..self.domain).map(|x| self.eval_in_domain(x) as u32).collect()
    }
}

fn uniform_field_element(rng: &mut Rng) -> u64 {
    // 61 uniform bits; only the single value p itself gets rejected.
    loop {
        let x = rng.next_u64() >> 3;
        if x < MERSENNE_PRIME_61 {
            return x;
        }
    }
}

/// Random sign function sigma: [n] -> {-1, +1} backed by a 4-wise hash.
#[derive(Debug, Clone)]
pub struct SignHash {
    hash: KWiseHash,
}

impl SignHash {
    pub fn new(domain: u64, rng: &mut Rng) -> Result<SignHash> {
        Ok(SignHash {
            hash: KWiseHash::new(4, domain, 2, rng)?,
        })
    }

    #[inline]
    pub fn sign(&self, x: u64) -> Result<f64> {
        Ok(1.0 - 2.0 * self.hash.eval(x)? as f64)
    }
}

/// Occupancy counts of each bucket over the full domain.
#[derive(Debug, Clone)]
pub struct BucketLoads {
    pub domain: u64,
    pub buckets: u64,
    pub loads: Vec<u64>,
}

pub fn bucket_loads(h: &KWiseHash) -> BucketLoads {
    let mut loads = vec![0u64; h.range() as usize];
    for x in 0..h.domain() {
        loads[h.eval_in_domain(x) as usize] += 1;
    }
    BucketLoads {
        domain: h.domain(),
        buckets: h.range(),
        loads,
    }
}

impl BucketLoads {
    pub fn from_table(table: &[u32], buckets: u64) -> BucketLoads {
        let mut loads = vec![0u64; buckets as usize];
        for &b in table {
            loads[b as usize] += 1;
        }
        BucketLoads {
            domain: table.len() as u64,
            buckets,
            loads,
        }
    }

    pub fn min(&self) -> u64 {
        self.loads.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.loads.iter().copied().max().unwrap_or(0)
    }
}

/// Result of checking every load against the [0.9, 1.1] * N/B band.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub pass: bool,
    /// Largest |load - N/B| / (N/B) over buckets.
    pub worst_deviation: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub min_load: u64,
    pub max_load: u64,
}

/// Checks `0.9 N/B <= load_j <= 1.1 N/B` for every bucket.
pub fn concentration_check(loads: &BucketLoads) -> Result<ConcentrationReport> {
    if loads.domain < loads.buckets {
        return Err(Error::invalid("concentration check requires N/B >= 1"));
    }
    let mean = loads.domain as f64 / loads.buckets as f64;
    let band_lo = 0.9 * mean;
    let band_hi = 1.1 * mean;
    let mut pass = true;
    let mut worst = 0.0f64;
    for &l in &loads.loads {
        let lf = l as f64;
        if lf < band_lo || lf > band_hi {
            pass = false;
        }
        worst = worst.max((lf - mean).abs() / mean);
    }
    Ok(ConcentrationReport {
        pass,
        worst_deviation: worst,
        band_lo,
        band_hi,
        min_load: loads.min(),
        max_load: loads.max(),
    })
}

/// The two tail bounds for sums of n k-wise independent [0,1] variables with
/// mean mu: `8 ((k mu + k^2) / a^2)^{k/2}` and `1.1 (n k / a^2)^{k/2}`,
/// each clamped to [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct TailBounds {
    pub moment: f64,
    pub simple: f64,
}

pub fn kwise_tail_bound(n: u64, k: u64, mu: f64, a: f64) -> Result<TailBounds> {
    if a <= 0.0 {
        return Err(Error::invalid("tail bound requires a > 0"));
    }
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::invalid("tail bound requires even k >= 2"));
    }
    let half = (k / 2) as i32;
    let kf = k as f64;
    let moment = 8.0 * ((kf * mu + kf * kf) / (a * a)).powi(half);
    let simple = 1.1 * ((n as f64 * kf) / (a * a)).powi(half);
    Ok(TailBounds {
        moment: moment.clamp(0.0, 1.0),
        simple: simple.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_coefficients() {
        let mut a = Rng::new(5);
        let mut b = Rng::new(5);
        let ha = KWiseHash::new(16, 50_176, 784, &mut a).unwrap();
        let hb = KWiseHash::new(16, 50_176, 784, &mut b).unwrap();
        assert_eq!(ha.coeffs(), hb.coeffs());
    }

    #[test]
    fn paper_shape_constructs_and_evaluates() {
        let mut rng = Rng::new(0);
        let h = KWiseHash::new(16, 50_176, 784, &mut rng).unwrap();
        for x in [0u64, 1, 123, 50_175] {
            assert!(h.eval(x).unwrap() < 784);
        }
        assert!(matches!(
            h.eval(50_176),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn capacity_error_when_field_too_small() {
        let mut rng = Rng::new(0);
        // B^2 N overflows the 61-bit prime
        let r = KWiseHash::new(2, 1 << 40, 1 << 20, &mut rng);
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn zero_and_constant_polynomials() {
        let h = KWiseHash::from_coeffs(vec![0, 0, 0], 100, 7).unwrap();
        for x in 0..100 {
            assert_eq!(h.eval(x).unwrap(), 0);
        }
        let h = KWiseHash::from_coeffs(vec![23], 100, 7).unwrap();
        for x in 0..100 {
            assert_eq!(h.eval(x).unwrap(), 23 % 7);
        }
    }

    #[test]
    fn pairwise_collision_rate_matches_uniform() {
        let b = 16u64;
        let mut rng = Rng::new(31);
        let h = KWiseHash::new(2, 1 << 20, b, &mut rng).unwrap();
        let trials = 1_000_000u64;
        let mut collisions = 0u64;
        let mut pair_rng = Rng::new(77);
        for _ in 0..trials {
            let x = pair_rng.below(1 << 20);
            let mut y = pair_rng.below(1 << 20);
            while y == x {
                y = pair_rng.below(1 << 20);
            }
            if h.eval(x).unwrap() == h.eval(y).unwrap() {
                collisions += 1;
            }
        }
        let rate = collisions as f64 / trials as f64;
        let p = 1.0 / b as f64;
        let band = 3.0 * (p / trials as f64).sqrt();
        assert!(
            (rate - p).abs() <= band,
            "collision rate {rate} outside {p} +- {band}"
        );
    }

    #[test]
    fn chi_square_uniformity() {
        let n = 100_000u64;
        let b = 64usize;
        let mut rng = Rng::new(2024);
        let h = KWiseHash::new(8, n, b as u64, &mut rng).unwrap();
        let loads = bucket_loads(&h);
        let expected = n as f64 / b as f64;
        let chi2: f64 = loads
            .loads
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        // chi-square critical value at significance 0.001, 63 dof
        assert!(chi2 < 103.442, "chi2 {chi2} rejects uniformity");
    }

    #[test]
    fn loads_partition_domain() {
        let mut rng = Rng::new(9);
        let h = KWiseHash::new(4, 10_000, 37, &mut rng).unwrap();
        let loads = bucket_loads(&h);
        assert_eq!(loads.loads.iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn identity_like_permutation_has_unit_loads() {
        // x -> (x + 1) mod p mod B restricted to N = B consecutive points is
        // injective whenever B < p, so every load is exactly one.
        let b = 64;
        let h = KWiseHash::from_coeffs(vec![1, 1], b, b).unwrap();
        let loads = bucket_loads(&h);
        assert!(loads.loads.iter().all(|&l| l == 1));
    }

    #[test]
    fn concentration_boundaries() {
        let even = BucketLoads {
            domain: 640,
            buckets: 10,
            loads: vec![64; 10],
        };
        let r = concentration_check(&even).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_deviation, 0.0);

        let mut low = even.clone();
        low.loads[3] = 51; // 0.797 N/B, below the 0.9 band
        low.loads[4] = 77;
        let r = concentration_check(&low).unwrap();
        assert!(!r.pass);

        let tiny = BucketLoads {
            domain: 5,
            buckets: 10,
            loads: vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0],
        };
        assert!(concentration_check(&tiny).is_err());
    }

    #[test]
    fn concentration_holds_in_proof_regime() {
        // N/B > 2000 t puts the 0.9/1.1 band at ~19 sigma; every seed passes.
        let n = 262_144u64;
        let t = default_degree(n);
        assert_eq!(t, 18);
        let b = 7u64;
        assert!(n / b > 2000 * t as u64);
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = Rng::new(seed);
            let h = KWiseHash::new(t, n, b, &mut rng).unwrap();
            if concentration_check(&bucket_loads(&h)).unwrap().pass {
                passes += 1;
            }
        }
        assert!(passes >= 95, "only {passes}/100 seeds concentrated");
    }

    #[test]
    fn tail_bound_formula_and_limits() {
        let t = kwise_tail_bound(1000, 2, 100.0, 50.0).unwrap();
        assert!((t.moment - 0.6528).abs() < 1e-12);
        let far = kwise_tail_bound(1000, 2, 100.0, 1e9).unwrap();
        assert!(far.moment < 1e-10 && far.simple < 1e-10);
        // monotone decreasing in a, clamped to [0, 1]
        let mut prev = f64::INFINITY;
        for a in [1.0, 2.0, 4.0, 8.0, 1024.0] {
            let b = kwise_tail_bound(64, 16, 64.0, a).unwrap();
            assert!(b.moment <= prev && (0.0..=1.0).contains(&b.moment));
            assert!((0.0..=1.0).contains(&b.simple));
            prev = b.moment;
        }
        assert!(kwise_tail_bound(10, 3, 1.0, 1.0).is_err());
        assert!(kwise_tail_bound(10, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn sign_hash_is_plus_minus_one() {
        let mut rng = Rng::new(6);
        let s = SignHash::new(1000, &mut rng).unwrap();
        let mut pos = 0;
        for x in 0..1000 {
            let v = s.sign(x).unwrap();
            assert!(v == 1.0 || v == -1.0);
            if v > 0.0 {
                pos += 1;
            }
        }
        assert!(pos > 400 && pos < 600, "signs badly skewed: {pos}");
    }
}
