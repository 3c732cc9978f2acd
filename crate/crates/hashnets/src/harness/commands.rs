//! The verification suites behind each CLI subcommand. Every runner returns
//! its CSV body plus an overall pass flag; the binary maps those to exit
//! codes (0 pass, 2 property failure).

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use super::arch::{size_match, Variant};
use super::dataset::{self, Dataset};
use super::synth;
use super::train::{train_classifier, TrainConfig};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::hashednet::{
    gd_recover, hessian_reduction_check, perturbed_init, sample_dataset, TeacherSpec,
};
use crate::hashing::{bucket_loads, concentration_check, default_degree, KWiseHash};
use crate::linalg::{sym_eig, DenseMatrix};
use crate::rng::Rng;
use crate::sketch::{distortion, suggest_sketch_rows, SketchKind, SketchMatrix, SubspaceBasis};
use crate::sketchnet::{output_gap, FeedForwardNet, SketchStack};
use crate::spectra::{spectral_report, DEFAULT_RANK_TOL};

#[derive(Debug, Clone)]
pub struct CmdOutput {
    pub csv: String,
    pub pass: bool,
    pub summary: String,
}

// ---------------------------------------------------------------------------
// bucket-check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BucketCheckArgs {
    pub n: u64,
    pub b: u64,
    pub t: Option<usize>,
    pub seeds: u64,
    pub seed0: u64,
}

impl Default for BucketCheckArgs {
    fn default() -> Self {
        BucketCheckArgs {
            n: 50_176,
            b: 784,
            t: None,
            seeds: 20,
            seed0: 0,
        }
    }
}

type BucketRow = (u64, u64, u64, f64, bool);

/// Draws `seeds` hashes and checks every bucket load against the
/// [0.9, 1.1] N/B band. Passes when at least 95% of seeds concentrate.
pub fn bucket_check(args: &BucketCheckArgs) -> Result<CmdOutput> {
    let t = args.t.unwrap_or_else(|| default_degree(args.n));
    let rows: Vec<Result<BucketRow>> = (0..args.seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::new(args.seed0 + i);
            let h = KWiseHash::new(t, args.n, args.b, &mut rng)?;
            let report = concentration_check(&bucket_loads(&h))?;
            Ok((
                args.seed0 + i,
                report.min_load,
                report.max_load,
                report.worst_deviation,
                report.pass,
            ))
        })
        .collect();
    let mut csv = String::from("seed,min_load,max_load,worst_deviation,pass\n");
    let mut passed = 0u64;
    for row in rows {
        let (seed, min_load, max_load, dev, pass) = row?;
        if pass {
            passed += 1;
        }
        writeln!(csv, "{seed},{min_load},{max_load},{dev},{}", u8::from(pass)).unwrap();
    }
    let needed = (0.95 * args.seeds as f64).ceil() as u64;
    Ok(CmdOutput {
        csv,
        pass: passed >= needed,
        summary: format!(
            "bucket-check: {passed}/{} seeds inside the 0.9-1.1 band (need {needed}); N/B = {}, t = {t}",
            args.seeds,
            args.n as f64 / args.b as f64
        ),
    })
}

// ---------------------------------------------------------------------------
// sketch-check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SketchCheckArgs {
    pub kind: SketchKind,
    pub d: usize,
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
    /// Row count; derived from the theorem formula when absent.
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub pairs: usize,
    pub seeds: u64,
    pub seed0: u64,
    pub c: f64,
}

impl Default for SketchCheckArgs {
    fn default() -> Self {
        SketchCheckArgs {
            kind: SketchKind::CountSketch,
            d: 5,
            eps: 0.25,
            delta: 0.1,
            n: 8192,
            s: None,
            t: None,
            pairs: 5000,
            seeds: 20,
            seed0: 0,
            c: 1.0,
        }
    }
}

/// Measures subspace-embedding distortion over random subspaces and seeds;
/// passes when at least 90% of seeds stay within eps.
pub fn sketch_check(args: &SketchCheckArgs) -> Result<CmdOutput> {
    let s = match args.s {
        Some(s) => s,
        None => suggest_sketch_rows(args.kind, args.d, args.eps, args.delta, args.c)?,
    };
    if s > args.n {
        return Err(Error::invalid(format!(
            "suggested rows {s} exceed ambient dimension {}; pass --n or --s",
            args.n
        )));
    }
    let rows: Vec<Result<(u64, f64, f64, bool)>> = (0..args.seeds)
        .map(|i| {
            let mut rng = Rng::new(args.seed0 + i);
            let basis = SubspaceBasis::random(args.n, args.d, &mut rng)?;
            let sk = match args.kind {
                SketchKind::CountSketch => SketchMatrix::count_sketch(s, args.n, &mut rng)?,
                SketchKind::SparseEmbedding => {
                    let t = args
                        .t
                        .unwrap_or_else(|| default_degree(args.n as u64))
                        .min(s);
                    SketchMatrix::sparse_embedding(s, args.n, t, &mut rng)?
                }
                SketchKind::Identity => SketchMatrix::identity(args.n),
            };
            let rep = distortion(&sk, &basis, args.pairs, &rng)?;
            let pass = rep.max_norm_distortion <= args.eps;
            Ok((args.seed0 + i, rep.max_norm_distortion, rep.max_dot_distortion, pass))
        })
        .collect();
    let mut csv = String::from("seed,rows,max_norm_distortion,max_dot_distortion,pass\n");
    let mut passed = 0u64;
    for row in rows {
        let (seed, nd, dd, pass) = row?;
        if pass {
            passed += 1;
        }
        writeln!(csv, "{seed},{s},{nd},{dd},{}", u8::from(pass)).unwrap();
    }
    let needed = (0.9 * args.seeds as f64).ceil() as u64;
    Ok(CmdOutput {
        csv,
        pass: passed >= needed,
        summary: format!(
            "sketch-check: {passed}/{} seeds with norm distortion <= {} at s = {s} (need {needed})",
            args.seeds, args.eps
        ),
    })
}

// ---------------------------------------------------------------------------
// gap-curve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GapCurveArgs {
    pub n1: usize,
    pub d: usize,
    pub q: usize,
    pub s_list: Vec<usize>,
    pub seeds: u64,
    pub samples: usize,
    pub seed0: u64,
}

impl Default for GapCurveArgs {
    fn default() -> Self {
        GapCurveArgs {
            n1: 256,
            d: 8,
            q: 2,
            s_list: vec![16, 32, 64, 128, 256],
            seeds: 10,
            samples: 1000,
            seed0: 0,
        }
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Output gap of a fixed random depth-q net under sparse-embedding stacks of
/// growing width; s equal to the layer width uses exact identity sketches.
/// Passes when the medians are non-increasing in s and the identity point
/// measures exactly zero.
pub fn gap_curve(args: &GapCurveArgs) -> Result<CmdOutput> {
    if args.q < 1 {
        return Err(Error::invalid("gap-curve needs q >= 1"));
    }
    let mut net_rng = Rng::new(args.seed0).derive(0xA);
    let dims = vec![args.n1; args.q + 1];
    let net = FeedForwardNet::random(&dims, Activation::Relu, true, 1.0, 1.0, &mut net_rng)?;
    let basis = SubspaceBasis::random(args.n1, args.d, &mut net_rng)?;

    let mut csv = String::from("s,seed,max_gap,mean_gap\n");
    let mut medians = Vec::new();
    let mut identity_median = None;
    for &s in &args.s_list {
        if s > args.n1 {
            return Err(Error::invalid(format!("s = {s} exceeds n1 = {}", args.n1)));
        }
        let gaps: Vec<Result<(f64, f64)>> = (0..args.seeds)
            .map(|i| {
                let mut srng = Rng::new(args.seed0 + i).derive(s as u64);
                let stack = if s == args.n1 {
                    SketchStack::identity(&net)
                } else {
                    let t = default_degree(args.n1 as u64).min(s);
                    let mut sketches = Vec::with_capacity(args.q);
                    for _ in 0..args.q {
                        sketches.push(SketchMatrix::sparse_embedding(s, args.n1, t, &mut srng)?);
                    }
                    let out = SketchMatrix::sparse_embedding(s, args.n1, t, &mut srng)?;
                    SketchStack::new(sketches, Some(out), vec![0.0; args.q + 1])
                };
                let stats = output_gap(&net, &stack, &basis, 1.0, args.samples, &srng)?;
                Ok((stats.max_gap, stats.mean_gap))
            })
            .collect();
        let mut seed_max = Vec::with_capacity(args.seeds as usize);
        for (i, g) in gaps.into_iter().enumerate() {
            let (max_gap, mean_gap) = g?;
            writeln!(csv, "{s},{seed},{max_gap},{mean_gap}", seed = args.seed0 + i as u64)
                .unwrap();
            seed_max.push(max_gap);
        }
        let med = median(&mut seed_max);
        if s == args.n1 {
            identity_median = Some(med);
        }
        medians.push(med);
    }
    let monotone = medians.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let identity_zero = identity_median.is_none_or(|m| m == 0.0);
    Ok(CmdOutput {
        csv,
        pass: monotone && identity_zero,
        summary: format!(
            "gap-curve: medians {medians:?} over s = {:?}; monotone = {monotone}, identity zero = {identity_zero}",
            args.s_list
        ),
    })
}

// ---------------------------------------------------------------------------
// hessian-check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HessianCheckArgs {
    pub n: usize,
    pub k: usize,
    pub b: usize,
    pub m: usize,
    pub seeds: u64,
    pub vectors: usize,
    pub seed0: u64,
}

impl Default for HessianCheckArgs {
    fn default() -> Self {
        HessianCheckArgs {
            n: 8,
            k: 3,
            b: 12,
            m: 20_000,
            seeds: 20,
            vectors: 100,
            seed0: 0,
        }
    }
}

type HessianRow = (u64, f64, f64, f64, bool);

/// Per seed: sample a teacher, build the empirical Hessian at w*, verify
/// positive definiteness and the hashed/full quadratic-form reduction.
pub fn hessian_check(args: &HessianCheckArgs) -> Result<CmdOutput> {
    let rows: Vec<Result<HessianRow>> = (0..args.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = args.seed0 + i;
            let mut rng = Rng::new(seed);
            let teacher = TeacherSpec::sample(args.n, args.k, args.b, Activation::Relu, &mut rng)?;
            let samples = sample_dataset(&teacher, args.m, &mut rng.derive(1));
            let h = teacher.risk_hessian(&teacher.layer.w, &samples)?;
            let eigs = sym_eig(&h)?;
            let lmin = *eigs.last().unwrap();
            let lmax = eigs[0];
            let red = hessian_reduction_check(&teacher, &samples, args.vectors, &mut rng.derive(2))?;
            let pass = lmin > 0.0 && red <= 1e-10;
            Ok((seed, lmin, lmax, red, pass))
        })
        .collect();
    let mut csv = String::from("seed,lambda_min,lambda_max,reduction_max_rel_err,pass\n");
    let mut all = true;
    for row in rows {
        let (seed, lmin, lmax, red, pass) = row?;
        all &= pass;
        writeln!(csv, "{seed},{lmin},{lmax},{red},{}", u8::from(pass)).unwrap();
    }
    Ok(CmdOutput {
        csv,
        pass: all,
        summary: format!(
            "hessian-check: lambda_min > 0 and reduction <= 1e-10 on {} seeds: {}",
            args.seeds,
            if all { "all pass" } else { "FAILURES" }
        ),
    })
}

// ---------------------------------------------------------------------------
// recover
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RecoverArgs {
    pub n: usize,
    pub k: usize,
    pub b: usize,
    pub m: usize,
    pub fraction: f64,
    pub steps: usize,
    pub seeds: u64,
    pub target_rel: f64,
    pub step_size: Option<f64>,
    pub seed0: u64,
}

impl Default for RecoverArgs {
    fn default() -> Self {
        RecoverArgs {
            n: 8,
            k: 3,
            b: 12,
            m: 20_000,
            fraction: 0.01,
            steps: 500,
            seeds: 10,
            target_rel: 1e-6,
            step_size: None,
            seed0: 0,
        }
    }
}

/// Gradient-descent recovery from a radius-`fraction` perturbation of w*,
/// step size 1/M0. Passes when every seed reaches the target within the
/// step budget with a non-increasing error in at least 95% of steps.
pub fn recover(args: &RecoverArgs) -> Result<CmdOutput> {
    let runs: Vec<Result<(u64, crate::hashednet::RecoveryTrace, f64)>> = (0..args.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = args.seed0 + i;
            let mut rng = Rng::new(seed);
            let teacher = TeacherSpec::sample(args.n, args.k, args.b, Activation::Relu, &mut rng)?;
            let samples = sample_dataset(&teacher, args.m, &mut rng.derive(1));
            let w0 = perturbed_init(&teacher.layer.w, args.fraction, &mut rng.derive(2))?;
            let trace = gd_recover(
                &teacher,
                &samples,
                &w0,
                args.steps,
                args.step_size,
                Some(args.target_rel),
            )?;
            let w_star_norm = crate::linalg::norm(&teacher.layer.w);
            Ok((seed, trace, w_star_norm))
        })
        .collect();
    let mut csv = String::from("seed,step,error_sq,ratio\n");
    let mut all = true;
    let mut summaries = Vec::new();
    for run in runs {
        let (seed, trace, w_star_norm) = run?;
        for (step, &e) in trace.errors_sq.iter().enumerate() {
            let ratio = if step == 0 {
                String::new()
            } else {
                format!("{}", trace.ratios[step - 1])
            };
            writeln!(csv, "{seed},{step},{e},{ratio}").unwrap();
        }
        let final_rel = trace.final_error() / w_star_norm;
        let mono = trace.monotone_fraction();
        let ok = final_rel <= args.target_rel && mono >= 0.95 && !trace.diverged;
        all &= ok;
        summaries.push(format!(
            "seed {seed}: rel {final_rel:.2e} in {} steps, mono {mono:.3}",
            trace.errors_sq.len() - 1
        ));
    }
    Ok(CmdOutput {
        csv,
        pass: all,
        summary: format!("recover: {}", summaries.join("; ")),
    })
}

// ---------------------------------------------------------------------------
// compress-train
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CompressTrainArgs {
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Generate this many synthetic samples instead of reading files.
    pub synthetic: Option<usize>,
    pub data_seed: u64,
    /// Train on the first `train` samples; the rest are the test split.
    pub train: Option<usize>,
    pub k: usize,
    pub ratio: usize,
    pub variants: Vec<Variant>,
    pub first_layer_only: bool,
    pub config: TrainConfig,
    pub dump_w1: Option<PathBuf>,
}

impl Default for CompressTrainArgs {
    fn default() -> Self {
        CompressTrainArgs {
            images: None,
            labels: None,
            synthetic: Some(12_500),
            data_seed: 42,
            train: None,
            k: 500,
            ratio: 64,
            variants: vec![Variant::Hashed, Variant::Small, Variant::Thin],
            first_layer_only: false,
            config: TrainConfig::default(),
            dump_w1: None,
        }
    }
}

fn load_compress_dataset(args: &CompressTrainArgs) -> Result<Dataset> {
    let ds = match (&args.images, &args.labels, args.synthetic) {
        (Some(img), Some(lab), _) => dataset::load_idx(img, lab)?,
        (None, None, Some(m)) => synth::synthetic_digits(m, &mut Rng::new(args.data_seed)),
        _ => {
            return Err(Error::InvalidConfig(
                "provide --images with --labels, or --synthetic".into(),
            ))
        }
    };
    let train = args.train.unwrap_or(ds.len() * 4 / 5);
    ds.with_split(train)
}

/// Trains each requested variant at the same compression ratio on the same
/// split and compares final test errors. Passes when the hashed variant
/// beats every dense baseline that ran.
pub fn compress_train(args: &CompressTrainArgs) -> Result<CmdOutput> {
    let ds = load_compress_dataset(args)?;
    let n_in = ds.n_features;
    let n_out = ds.n_classes.max(2);
    let mut csv = String::from("variant,epoch,train_error,test_error\n");
    let mut finals: Vec<(Variant, f64)> = Vec::new();
    let mut summaries = Vec::new();
    for &variant in &args.variants {
        let mut arch = size_match(variant, n_in, args.k, args.ratio, n_out)?;
        if args.first_layer_only {
            arch = arch.with_first_layer_only();
        }
        let (report, model) = train_classifier(&ds, &arch, &args.config)?;
        for (epoch, stats) in report.per_epoch.iter().enumerate() {
            let test = stats
                .test_error
                .map(|t| t.to_string())
                .unwrap_or_default();
            writeln!(csv, "{variant},{epoch},{},{test}", stats.train_error).unwrap();
        }
        let final_err = report.final_test_error.unwrap_or(report.final_train_error);
        finals.push((variant, final_err));
        summaries.push(format!(
            "{variant}: test {final_err:.4} ({} params, {:.0}s)",
            arch.effective_weight_count(),
            report.wall_seconds
        ));
        if variant == Variant::Hashed {
            if let Some(path) = &args.dump_w1 {
                write_matrix_csv(&model.weight_matrix(0), path)?;
            }
        }
    }
    let hashed = finals
        .iter()
        .find(|(v, _)| *v == Variant::Hashed)
        .map(|&(_, e)| e);
    let pass = match hashed {
        Some(he) => finals
            .iter()
            .filter(|(v, _)| *v != Variant::Hashed)
            .all(|&(_, e)| he < e),
        None => true,
    };
    Ok(CmdOutput {
        csv,
        pass,
        summary: format!("compress-train: {}", summaries.join("; ")),
    })
}

// ---------------------------------------------------------------------------
// spectra
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SpectraArgs {
    pub matrix: PathBuf,
    pub rank_tol: f64,
}

/// Little row-major matrix container: first line "rows,cols", then one CSV
/// line per row.
pub fn write_matrix_csv(m: &DenseMatrix, path: &std::path::Path) -> Result<()> {
    let mut out = format!("{},{}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| m.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(path: &std::path::Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format {
        field: "header".into(),
        message: "empty matrix file".into(),
    })?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format {
            field: "header".into(),
            message: format!("bad dimensions line '{header}'"),
        })?;
    if dims.len() != 2 {
        return Err(Error::Format {
            field: "header".into(),
            message: "expected rows,cols".into(),
        });
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines.next().ok_or_else(|| Error::Format {
            field: format!("row {i}"),
            message: "file truncated".into(),
        })?;
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format {
                field: format!("row {i}"),
                message: "bad value".into(),
            })?;
        if vals.len() != cols {
            return Err(Error::Format {
                field: format!("row {i}"),
                message: format!("expected {cols} values, got {}", vals.len()),
            });
        }
        for (j, v) in vals.into_iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// Spectral report of a stored matrix; passes when it is numerically full
/// rank at the given tolerance.
pub fn spectra_cmd(args: &SpectraArgs) -> Result<CmdOutput> {
    let m = read_matrix_csv(&args.matrix)?;
    let rep = spectral_report(&m, args.rank_tol)?;
    let mut csv = String::from(
        "index,sigma_min,sigma_max,condition_number,stable_rank,full_rank\n",
    );
    writeln!(
        csv,
        "0,{},{},{},{},{}",
        rep.sigma_min,
        rep.sigma_max,
        rep.condition_number,
        rep.stable_rank,
        u8::from(rep.full_rank)
    )
    .unwrap();
    Ok(CmdOutput {
        csv,
        pass: rep.full_rank,
        summary: format!(
            "spectra: sigma in [{:.4e}, {:.4e}], cond {:.2}, stable rank {:.2}, full rank {}",
            rep.sigma_min, rep.sigma_max, rep.condition_number, rep.stable_rank, rep.full_rank
        ),
    })
}

pub const DEFAULT_SPECTRA_RANK_TOL: f64 = DEFAULT_RANK_TOL;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_check_is_reproducible() {
        let args = BucketCheckArgs {
            n: 4096,
            b: 16,
            t: Some(8),
            seeds: 4,
            seed0: 3,
        };
        let a = bucket_check(&args).unwrap();
        let b = bucket_check(&args).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.pass, b.pass);
    }

    #[test]
    fn sketch_check_small_run() {
        let args = SketchCheckArgs {
            d: 2,
            eps: 0.5,
            delta: 0.5,
            n: 256,
            s: Some(64),
            pairs: 50,
            seeds: 3,
            ..SketchCheckArgs::default()
        };
        let out = sketch_check(&args).unwrap();
        assert_eq!(out.csv.lines().count(), 4);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 - 2.5);
        write_matrix_csv(&m, &p).unwrap();
        let back = read_matrix_csv(&p).unwrap();
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn recover_tiny_smoke() {
        let args = RecoverArgs {
            n: 6,
            k: 2,
            b: 8,
            m: 4000,
            steps: 300,
            seeds: 2,
            ..RecoverArgs::default()
        };
        let out = recover(&args).unwrap();
        assert!(out.pass, "{}", out.summary);
    }
}
