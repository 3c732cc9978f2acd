//! Hashed weight sharing vs parameter-matched dense baselines.
//!
//! Run: cargo run --example train_compressed
//!
//! Trains three classifiers with matching effective parameter budgets on
//! the synthetic digit task: a hashed net (k hidden units, buckets shared
//! at the compression ratio), SmallNets (one shrunken hidden layer), and
//! ThinNets (a thin bottleneck before the full hidden layer). A scaled-down
//! version of the comparison the verification suite runs; the full-size run
//! is `hashnets compress-train`.

use hashnets::harness::arch::{size_match, Variant};
use hashnets::harness::synth::synthetic_digits;
use hashnets::harness::train::{train_classifier, TrainConfig};
use hashnets::Rng;

fn main() {
    let k = 128;
    let ratio = 16;
    let ds = synthetic_digits(3000, &mut Rng::new(42))
        .with_split(2400)
        .unwrap();
    let config = TrainConfig {
        epochs: 8,
        seed: 1,
        ..TrainConfig::default()
    };

    println!("synthetic digits: 2400 train / 600 test, k = {k}, ratio = {ratio}\n");
    for variant in [Variant::Hashed, Variant::Small, Variant::Thin] {
        let arch = size_match(variant, ds.n_features, k, ratio, 10).unwrap();
        let (report, _) = train_classifier(&ds, &arch, &config).unwrap();
        println!(
            "{variant:>6}: hidden {:?}, effective weights {}, final test error {:.3} ({:.1}s)",
            arch.hidden,
            arch.effective_weight_count(),
            report.final_test_error.unwrap(),
            report.wall_seconds
        );
    }
    println!("\nhashed keeps the wide hidden layer at the same parameter budget,");
    println!("which is what the dense baselines give up.");
}
