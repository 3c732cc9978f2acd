//! Acceptance suite: one test per verification criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criterion 01 is expected to fail: at N/B = 64 the loads of any
//! pairwise-independent hash family have standard deviation sqrt(N/B) = 8,
//! which no draw can keep inside the +-0.1 N/B = +-6.4 band across 784
//! buckets. The band is a large-occupancy property (N/B > 2000 t); the
//! in-regime check in criterion 01b passes. The test is kept faithful to the
//! stated parameters and documents the measured spread when it fails.

use std::time::{Duration, Instant};

use hashnets::activation::Activation;
use hashnets::harness::arch::{size_match, Variant};
use hashnets::harness::commands::{
    bucket_check, compress_train, gap_curve, recover, sketch_check, spectra_cmd,
    BucketCheckArgs, CompressTrainArgs, GapCurveArgs, RecoverArgs, SketchCheckArgs, SpectraArgs,
};
use hashnets::hashednet::{
    hessian_reduction_check, lift_vector, rho, sample_dataset, HashedLayer, TeacherSpec,
};
use hashnets::hashing::{bucket_loads, concentration_check, default_degree, KWiseHash};
use hashnets::linalg::{dot, norm, sym_eig};
use hashnets::Rng;

struct Criterion {
    id: &'static str,
    name: &'static str,
    start: Instant,
    budget: Option<Duration>,
}

impl Criterion {
    fn begin(id: &'static str, name: &'static str, budget_secs: Option<u64>) -> Criterion {
        Criterion {
            id,
            name,
            start: Instant::now(),
            budget: budget_secs.map(Duration::from_secs),
        }
    }

    fn finish(self, pass: bool, detail: &str) {
        let elapsed = self.start.elapsed();
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {id} [{name}] {verdict} ({elapsed:.1?}) - {detail}",
            id = self.id,
            name = self.name,
        );
        if let Some(budget) = self.budget {
            assert!(
                elapsed <= budget,
                "criterion {} exceeded its {budget:?} runtime budget: {elapsed:?}",
                self.id
            );
        }
        assert!(pass, "criterion {} [{}] failed: {detail}", self.id, self.name);
    }
}

#[test]
fn criterion_01_bucket_concentration() {
    let c = Criterion::begin("01", "bucket-concentration", Some(5));
    let out = bucket_check(&BucketCheckArgs::default()).unwrap();
    c.finish(out.pass, &out.summary);
}

#[test]
fn criterion_01b_bucket_concentration_in_regime() {
    // The load band the analysis actually guarantees: N/B > 2000 t.
    let c = Criterion::begin("01b", "bucket-concentration-in-regime", Some(5));
    let n = 262_144u64;
    let t = default_degree(n);
    let b = 7u64;
    assert!(n / b > 2000 * t as u64, "parameters outside the proof regime");
    let mut passes = 0;
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let h = KWiseHash::new(t, n, b, &mut rng).unwrap();
        if concentration_check(&bucket_loads(&h)).unwrap().pass {
            passes += 1;
        }
    }
    c.finish(
        passes >= 19,
        &format!("{passes}/20 seeds concentrated at N/B = {}", n / b),
    );
}

#[test]
fn criterion_02_lifting_sandwich() {
    let c = Criterion::begin("02", "lifting-sandwich", None);
    let (k, n, b) = (64usize, 784usize, 784usize);
    let ratio = (k * n) as f64 / b as f64;
    // Criterion 01 leaves no passing seed to condition on; use the first
    // seed whose loads lie in the [1/2, 2] N/B band the sandwich needs.
    let mut chosen = None;
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed);
        let layer = HashedLayer::new(n, k, b, vec![0.0; b], &mut rng).unwrap();
        let loads = layer.bucket_loads();
        let lo = 0.5 * ratio;
        let hi = 2.0 * ratio;
        if loads
            .loads
            .iter()
            .all(|&l| (l as f64) >= lo && (l as f64) <= hi)
        {
            chosen = Some((seed, layer, loads));
            break;
        }
    }
    let (seed, layer, loads) = chosen.expect("no seed with loads in the [1/2, 2] band");
    let mut arng = Rng::new(1000 + seed);
    let mut worst_identity = 0.0f64;
    let mut sandwich_ok = true;
    for _ in 0..100 {
        let a = arng.gaussian_vec(b);
        let lifted = lift_vector(&a, layer.index_table());
        let b2 = dot(&lifted, &lifted);
        let a2 = dot(&a, &a);
        // exact identity given the loads
        let expected: f64 = a
            .iter()
            .zip(&loads.loads)
            .map(|(&ap, &lp)| ap * ap * lp as f64)
            .sum();
        worst_identity = worst_identity.max((b2 - expected).abs() / expected.abs().max(1e-300));
        if !(0.5 * a2 * ratio <= b2 && b2 <= 2.0 * a2 * ratio) {
            sandwich_ok = false;
        }
    }
    c.finish(
        sandwich_ok && worst_identity <= 1e-12,
        &format!(
            "seed {seed}: identity error {worst_identity:.2e}, sandwich [{:.0}, {:.0}] around kn/B = {ratio}",
            0.5 * ratio,
            2.0 * ratio
        ),
    );
}

#[test]
fn criterion_03_hessian_reduction() {
    let c = Criterion::begin("03", "hessian-reduction", Some(5));
    let mut rng = Rng::new(7);
    let teacher = TeacherSpec::sample(8, 3, 6, Activation::Relu, &mut rng).unwrap();
    let samples = sample_dataset(&teacher, 500, &mut rng.derive(1));
    let worst = hessian_reduction_check(&teacher, &samples, 100, &mut rng.derive(2)).unwrap();
    c.finish(
        worst <= 1e-10,
        &format!("max relative quadratic-form error {worst:.2e} over 100 vectors"),
    );
}

#[test]
fn criterion_04_local_strong_convexity() {
    let c = Criterion::begin("04", "local-strong-convexity", Some(60));
    let mut lambda_mins = Vec::new();
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed);
        let teacher = TeacherSpec::sample(8, 3, 12, Activation::Relu, &mut rng).unwrap();
        let samples = sample_dataset(&teacher, 20_000, &mut rng.derive(1));
        let h = teacher.risk_hessian(&teacher.layer.w, &samples).unwrap();
        let eigs = sym_eig(&h).unwrap();
        lambda_mins.push(*eigs.last().unwrap());
    }
    let positive = lambda_mins.iter().filter(|&&l| l > 0.0).count();
    let min = lambda_mins.iter().cloned().fold(f64::INFINITY, f64::min);
    c.finish(
        positive == 20,
        &format!("lambda_min > 0 in {positive}/20 seeds (smallest {min:.4})"),
    );
}

#[test]
fn criterion_05_recovery() {
    let c = Criterion::begin("05", "gd-recovery", Some(120));
    let out = recover(&RecoverArgs::default()).unwrap();
    c.finish(out.pass, &out.summary);
}

#[test]
fn criterion_06_gradient_oracle() {
    let c = Criterion::begin("06", "gradient-finite-difference", None);
    let step = 1e-5;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    'teachers: for seed in 0..20u64 {
        let mut rng = Rng::new(300 + seed);
        let teacher = TeacherSpec::sample(6, 2, 4, Activation::Relu, &mut rng).unwrap();
        let samples = sample_dataset(&teacher, 50, &mut rng.derive(1));
        let mut point_rng = rng.derive(2);
        'points: for _ in 0..40 {
            if checked >= 50 {
                break 'teachers;
            }
            let w: Vec<f64> = teacher
                .layer
                .w
                .iter()
                .map(|&wi| wi + 0.3 * point_rng.gaussian())
                .collect();
            // stay away from ReLU kinks so the difference quotient is exact
            for i in 0..samples.len() {
                let x = samples.x(i);
                for unit in 0..teacher.k() {
                    let z: f64 = (0..teacher.n())
                        .map(|j| {
                            let p = teacher.layer.index_table()[unit * teacher.n() + j];
                            w[p as usize] * x[j]
                        })
                        .sum();
                    if z.abs() < 1e-3 {
                        continue 'points;
                    }
                }
            }
            checked += 1;
            let analytic = teacher.risk_gradient(&w, &samples);
            for p in 0..teacher.buckets() {
                let mut wp = w.clone();
                wp[p] += step;
                let fp = teacher.empirical_risk(&wp, &samples);
                wp[p] = w[p] - step;
                let fm = teacher.empirical_risk(&wp, &samples);
                let numeric = (fp - fm) / (2.0 * step);
                let rel = (analytic[p] - numeric).abs()
                    / analytic[p].abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    c.finish(
        checked >= 50 && worst <= 1e-5,
        &format!("{checked} kink-free points, worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_07_rho_relu() {
    let c = Criterion::begin("07", "rho-quadrature", None);
    let oracle = 0.25 - 1.0 / (2.0 * std::f64::consts::PI);
    let mut worst = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        let r = rho(Activation::Relu, sigma).unwrap();
        worst = worst.max((r - oracle).abs());
    }
    c.finish(
        worst <= 1e-6,
        &format!("max |rho - (1/4 - 1/(2 pi))| = {worst:.2e} over sigma in {{0.5, 1, 2}}"),
    );
}

#[test]
fn criterion_08_subspace_embedding() {
    let c = Criterion::begin("08", "count-sketch-subspace-embedding", Some(60));
    // d = 5, eps = 0.25, delta = 0.1 => s = d^2/(delta eps^2) = 4000 rows,
    // n = 8192, 10^4 sampled vectors (5000 pairs), 20 seeds, >= 18 within eps.
    let out = sketch_check(&SketchCheckArgs::default()).unwrap();
    c.finish(out.pass, &out.summary);
}

#[test]
fn criterion_09_sketched_net_gap() {
    let c = Criterion::begin("09", "sketched-net-gap-curve", Some(120));
    let out = gap_curve(&GapCurveArgs::default()).unwrap();
    c.finish(out.pass, &out.summary);
}

#[test]
fn criterion_10_11_compression_comparison_and_full_rank() {
    let c = Criterion::begin("10", "compression-comparison", Some(900));
    let dir = tempfile::tempdir().unwrap();
    let w1_path = dir.path().join("w1.csv");
    let args = CompressTrainArgs {
        synthetic: Some(12_500),
        train: Some(10_000),
        dump_w1: Some(w1_path.clone()),
        ..CompressTrainArgs::default()
    };
    let out = compress_train(&args).unwrap();
    c.finish(out.pass, &out.summary);

    let c11 = Criterion::begin("11", "trained-weights-full-rank", None);
    let report = spectra_cmd(&SpectraArgs {
        matrix: w1_path,
        rank_tol: 1e-6,
    })
    .unwrap();
    c11.finish(report.pass, &report.summary);
}

#[test]
fn criterion_12_size_match_formulas() {
    let c = Criterion::begin("12", "size-match-formulas", None);
    let small = size_match(Variant::Small, 784, 1000, 64, 10).unwrap();
    let thin = size_match(Variant::Thin, 784, 1000, 64, 10).unwrap();
    let pass = small.hidden == vec![16] && thin.hidden[0] == 7;
    c.finish(
        pass,
        &format!(
            "small hidden {:?} (want [16]), thin first hidden {} (want 7)",
            small.hidden, thin.hidden[0]
        ),
    );
}

// --------------------------------------------------------------------------
// Cross-cutting determinism: equal seeds reproduce results bit-identically
// through a representative end-to-end path.
// --------------------------------------------------------------------------

#[test]
fn determinism_across_runs() {
    let run = || {
        let mut rng = Rng::new(11);
        let teacher = TeacherSpec::sample(8, 3, 12, Activation::Relu, &mut rng).unwrap();
        let samples = sample_dataset(&teacher, 2000, &mut rng.derive(1));
        let g = teacher.risk_gradient(&teacher.layer.w, &samples);
        let h = teacher.risk_hessian(&teacher.layer.w, &samples).unwrap();
        (norm(&g).to_bits(), h.frobenius_norm().to_bits())
    };
    assert_eq!(run(), run());
}
