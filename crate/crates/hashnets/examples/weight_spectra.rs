//! Spectral diagnostics of trained hashed weight matrices.
//!
//! Run: cargo run --example weight_spectra
//!
//! Trains a small hashed classifier over a few seeds and reports the
//! singular-value extremes, condition number, stable rank, and full-rank
//! flag of the learned first-layer virtual matrix. The recovery analysis
//! assumes this matrix has full row rank; the diagnostics show it holds.

use hashnets::harness::arch::{size_match, Variant};
use hashnets::harness::synth::synthetic_digits;
use hashnets::harness::train::{train_classifier, TrainConfig};
use hashnets::spectra::{spectra_batch, DEFAULT_RANK_TOL};
use hashnets::Rng;

fn main() {
    let ds = synthetic_digits(1500, &mut Rng::new(9))
        .with_split(1200)
        .unwrap();
    let arch = size_match(Variant::Hashed, ds.n_features, 64, 8, 10).unwrap();

    let mut mats = Vec::new();
    for seed in 0..5 {
        let config = TrainConfig {
            epochs: 3,
            seed,
            ..TrainConfig::default()
        };
        let (_, model) = train_classifier(&ds, &arch, &config).unwrap();
        mats.push((seed, model.weight_matrix(0)));
    }

    let rows = spectra_batch(&mats, DEFAULT_RANK_TOL).unwrap();
    println!("trained hashed W1 (64 x 784) over 5 seeds:\n");
    println!(
        "{:>5} {:>12} {:>12} {:>10} {:>12} {:>10}",
        "seed", "sigma_min", "sigma_max", "cond", "stable rank", "full rank"
    );
    for row in &rows {
        let r = &row.report;
        println!(
            "{:>5} {:>12.5} {:>12.5} {:>10.2} {:>12.2} {:>10}",
            row.seed, r.sigma_min, r.sigma_max, r.condition_number, r.stable_rank, r.full_rank
        );
    }
}
