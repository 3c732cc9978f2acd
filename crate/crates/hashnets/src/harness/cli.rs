//! Flag parsing and dispatch for the verification binary.
//!
//! Exit codes: 0 when the suite passes, 2 when a measured property fails,
//! 1 for usage or I/O errors.

use std::path::PathBuf;

use super::arch::Variant;
use super::commands::{self, CmdOutput};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::sketch::SketchKind;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PROPERTY_FAILURE: i32 = 2;

const HELP: &str = "\
hashnets - verification suites for sketched and hashed networks

USAGE:
    hashnets <SUBCOMMAND> [FLAGS] --out <FILE>

Every subcommand writes a CSV to --out and exits 0 when its property holds,
2 when it fails, 1 on usage or I/O errors. Identical flags and seeds produce
byte-identical CSVs. HASHNETS_THREADS caps the worker pool.

SUBCOMMANDS:
    bucket-check    Bucket-load concentration of t-wise polynomial hashes.
                    Flags: --n <50176> --b <784> [--t auto] [--seeds 20]
                           [--seed0 0]
                    CSV: seed,min_load,max_load,worst_deviation,pass
    sketch-check    Subspace-embedding distortion of a sketch family.
                    Flags: --kind <count-sketch|sparse-embedding> --d <5>
                           --eps <0.25> --delta <0.1> [--n 8192] [--s auto]
                           [--t auto] [--pairs 5000] [--seeds 20] [--c 1]
                           [--seed0 0]
                    CSV: seed,rows,max_norm_distortion,max_dot_distortion,pass
    gap-curve       Exact vs sketched output gap across sketch widths.
                    Flags: [--n1 256] [--d 8] [--q 2]
                           [--s-list 16,32,64,128,256] [--seeds 10]
                           [--samples 1000] [--seed0 0]
                    CSV: s,seed,max_gap,mean_gap
    hessian-check   Positive-definite Hessian at w* plus the hashed/full
                    quadratic-form reduction.
                    Flags: [--n 8] [--k 3] [--b 12] [--m 20000] [--seeds 20]
                           [--vectors 100] [--seed0 0]
                    CSV: seed,lambda_min,lambda_max,reduction_max_rel_err,pass
    recover         Gradient-descent recovery of the bucket vector with step
                    size 1/M0.
                    Flags: [--n 8] [--k 3] [--b 12] [--m 20000]
                           [--fraction 0.01] [--steps 500] [--seeds 10]
                           [--target 1e-6] [--step-size auto] [--seed0 0]
                    CSV: seed,step,error_sq,ratio
    compress-train  Hashed vs SmallNets vs ThinNets classifier comparison.
                    Flags: [--images F --labels F | --synthetic 12500]
                           [--train N] [--data-seed 42] [--k 500] [--ratio 64]
                           [--epochs 20] [--batch 50] [--lr 0.05]
                           [--momentum 0.9] [--keep 0.9] [--seed 1]
                           [--variants hashed,small,thin] [--first-layer-only]
                           [--dump-w1 FILE]
                    CSV: variant,epoch,train_error,test_error
    spectra         Spectral report of a stored matrix (first line rows,cols,
                    then one CSV line per row).
                    Flags: --matrix FILE [--rank-tol 1e-6]
                    CSV: index,sigma_min,sigma_max,condition_number,
                         stable_rank,full_rank

    help            Print this message.
";

struct Flags {
    pairs: Vec<(String, String)>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags> {
        let mut pairs = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let key = &args[i];
            if !key.starts_with("--") {
                return Err(Error::invalid(format!("unexpected argument '{key}'")));
            }
            if key == "--first-layer-only" {
                pairs.push((key.clone(), "true".to_string()));
                i += 1;
                continue;
            }
            let value = args
                .get(i + 1)
                .ok_or_else(|| Error::invalid(format!("flag {key} needs a value")))?;
            pairs.push((key.clone(), value.clone()));
            i += 2;
        }
        Ok(Flags { pairs })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.pairs.iter().position(|(k, _)| k == key)?;
        Some(self.pairs.remove(pos).1)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("bad value '{v}' for {key}"))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((k, _)) = self.pairs.first() {
            return Err(Error::invalid(format!("unknown flag '{k}'")));
        }
        Ok(())
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("HASHNETS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring unparsable HASHNETS_THREADS='{v}'"),
        }
    }
}

/// Parses argv (without the program name), runs the subcommand, writes the
/// CSV, and returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    configure_threads();
    match dispatch(args) {
        Ok(DispatchResult::Help) => {
            print!("{HELP}");
            EXIT_PASS
        }
        Ok(DispatchResult::Ran { out, outcome }) => {
            if let Err(e) = std::fs::write(&out, &outcome.csv) {
                eprintln!("error writing {}: {e}", out.display());
                return EXIT_USAGE;
            }
            println!("{}", outcome.summary);
            if outcome.pass {
                EXIT_PASS
            } else {
                eprintln!("property failure (exit 2); details in {}", out.display());
                EXIT_PROPERTY_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run 'hashnets help' for usage");
            EXIT_USAGE
        }
    }
}

enum DispatchResult {
    Help,
    Ran { out: PathBuf, outcome: CmdOutput },
}

fn dispatch(args: &[String]) -> Result<DispatchResult> {
    let Some(cmd) = args.first() else {
        return Err(Error::invalid("missing subcommand"));
    };
    if cmd == "help" || cmd == "--help" || cmd == "-h" {
        return Ok(DispatchResult::Help);
    }
    let mut flags = Flags::parse(&args[1..])?;
    let out: PathBuf = flags
        .take("--out")
        .ok_or_else(|| Error::invalid("--out <FILE> is required"))?
        .into();
    let outcome = match cmd.as_str() {
        "bucket-check" => {
            let mut a = commands::BucketCheckArgs::default();
            if let Some(v) = flags.take_parsed("--n")? {
                a.n = v;
            }
            if let Some(v) = flags.take_parsed("--b")? {
                a.b = v;
            }
            a.t = flags.take_parsed("--t")?;
            if let Some(v) = flags.take_parsed("--seeds")? {
                a.seeds = v;
            }
            if let Some(v) = flags.take_parsed("--seed0")? {
                a.seed0 = v;
            }
            flags.finish()?;
            commands::bucket_check(&a)?
        }
        "sketch-check" => {
            let mut a = commands::SketchCheckArgs::default();
            if let Some(v) = flags.take("--kind") {
                a.kind = SketchKind::parse(&v)?;
            }
            if let Some(v) = flags.take_parsed("--d")? {
                a.d = v;
            }
            if let Some(v) = flags.take_parsed("--eps")? {
                a.eps = v;
            }
            if let Some(v) = flags.take_parsed("--delta")? {
                a.delta = v;
            }
            if let Some(v) = flags.take_parsed("--n")? {
                a.n = v;
            }
            a.s = flags.take_parsed("--s")?;
            a.t = flags.take_parsed("--t")?;
            if let Some(v) = flags.take_parsed("--pairs")? {
                a.pairs = v;
            }
            if let Some(v) = flags.take_parsed("--seeds")? {
                a.seeds = v;
            }
            if let Some(v) = flags.take_parsed("--c")? {
                a.c = v;
            }
            if let Some(v) = flags.take_parsed("--seed0")? {
                a.seed0 = v;
            }
            flags.finish()?;
            commands::sketch_check(&a)?
        }
        "gap-curve" => {
            let mut a = commands::GapCurveArgs::default();
            if let Some(v) = flags.take_parsed("--n1")? {
                a.n1 = v;
            }
            if let Some(v) = flags.take_parsed("--d")? {
                a.d = v;
            }
            if let Some(v) = flags.take_parsed("--q")? {
                a.q = v;
            }
            if let Some(v) = flags.take("--s-list") {
                a.s_list = v
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad s value '{s}'")))
                    })
                    .collect::<Result<_>>()?;
            }
            if let Some(v) = flags.take_parsed("--seeds")? {
                a.seeds = v;
            }
            if let Some(v) = flags.take_parsed("--samples")? {
                a.samples = v;
            }
            if let Some(v) = flags.take_parsed("--seed0")? {
                a.seed0 = v;
            }
            flags.finish()?;
            commands::gap_curve(&a)?
        }
        "hessian-check" => {
            let mut a = commands::HessianCheckArgs::default();
            if let Some(v) = flags.take_parsed("--n")? {
                a.n = v;
            }
            if let Some(v) = flags.take_parsed("--k")? {
                a.k = v;
            }
            if let Some(v) = flags.take_parsed("--b")? {
                a.b = v;
            }
            if let Some(v) = flags.take_parsed("--m")? {
                a.m = v;
            }
            if let Some(v) = flags.take_parsed("--seeds")? {
                a.seeds = v;
            }
            if let Some(v) = flags.take_parsed("--vectors")? {
                a.vectors = v;
            }
            if let Some(v) = flags.take_parsed("--seed0")? {
                a.seed0 = v;
            }
            flags.finish()?;
            commands::hessian_check(&a)?
        }
        "recover" => {
            let mut a = commands::RecoverArgs::default();
            if let Some(v) = flags.take_parsed("--n")? {
                a.n = v;
            }
            if let Some(v) = flags.take_parsed("--k")? {
                a.k = v;
            }
            if let Some(v) = flags.take_parsed("--b")? {
                a.b = v;
            }
            if let Some(v) = flags.take_parsed("--m")? {
                a.m = v;
            }
            if let Some(v) = flags.take_parsed("--fraction")? {
                a.fraction = v;
            }
            if let Some(v) = flags.take_parsed("--steps")? {
                a.steps = v;
            }
            if let Some(v) = flags.take_parsed("--seeds")? {
                a.seeds = v;
            }
            if let Some(v) = flags.take_parsed("--target")? {
                a.target_rel = v;
            }
            a.step_size = flags.take_parsed("--step-size")?;
            if let Some(v) = flags.take_parsed("--seed0")? {
                a.seed0 = v;
            }
            flags.finish()?;
            commands::recover(&a)?
        }
        "compress-train" => {
            let mut a = commands::CompressTrainArgs::default();
            let images = flags.take("--images");
            let labels = flags.take("--labels");
            if images.is_some() || labels.is_some() {
                a.images = images.map(PathBuf::from);
                a.labels = labels.map(PathBuf::from);
                a.synthetic = None;
            }
            if let Some(v) = flags.take_parsed("--synthetic")? {
                a.synthetic = Some(v);
                a.images = None;
                a.labels = None;
            }
            a.train = flags.take_parsed("--train")?;
            if let Some(v) = flags.take_parsed("--data-seed")? {
                a.data_seed = v;
            }
            if let Some(v) = flags.take_parsed("--k")? {
                a.k = v;
            }
            if let Some(v) = flags.take_parsed("--ratio")? {
                a.ratio = v;
            }
            if let Some(v) = flags.take("--variants") {
                a.variants = v
                    .split(',')
                    .map(|s| Variant::parse(s.trim()))
                    .collect::<Result<_>>()?;
            }
            if flags.take("--first-layer-only").is_some() {
                a.first_layer_only = true;
            }
            let mut cfg = TrainConfig::default();
            if let Some(v) = flags.take_parsed("--epochs")? {
                cfg.epochs = v;
            }
            if let Some(v) = flags.take_parsed("--batch")? {
                cfg.batch_size = v;
            }
            if let Some(v) = flags.take_parsed("--lr")? {
                cfg.learning_rate = v;
            }
            if let Some(v) = flags.take_parsed("--momentum")? {
                cfg.momentum = v;
            }
            if let Some(v) = flags.take_parsed("--keep")? {
                cfg.dropout_keep = v;
            }
            if let Some(v) = flags.take_parsed("--seed")? {
                cfg.seed = v;
            }
            a.config = cfg;
            a.dump_w1 = flags.take("--dump-w1").map(PathBuf::from);
            flags.finish()?;
            commands::compress_train(&a)?
        }
        "spectra" => {
            let matrix = flags
                .take("--matrix")
                .ok_or_else(|| Error::invalid("--matrix <FILE> is required"))?;
            let rank_tol = flags
                .take_parsed("--rank-tol")?
                .unwrap_or(commands::DEFAULT_SPECTRA_RANK_TOL);
            flags.finish()?;
            commands::spectra_cmd(&commands::SpectraArgs {
                matrix: matrix.into(),
                rank_tol,
            })?
        }
        other => return Err(Error::invalid(format!("unknown subcommand '{other}'"))),
    };
    Ok(DispatchResult::Ran { out, outcome })
}
