//! Subspace-embedding distortion of Count-Sketch and sparse embeddings.
//!
//! Run: cargo run --example sketch_distortion
//!
//! Samples random d-dimensional subspaces of R^n, sketches them at the row
//! counts the embedding theorems suggest, and reports the worst measured
//! norm and inner-product distortion over sampled unit vectors.

use hashnets::sketch::{
    distortion, suggest_sketch_rows, SketchKind, SketchMatrix, SubspaceBasis,
};
use hashnets::Rng;

fn main() {
    let n = 2048;
    let d = 5;
    let eps = 0.25;
    let delta = 0.1;
    let pairs = 1000;

    for kind in [SketchKind::CountSketch, SketchKind::SparseEmbedding] {
        let s = suggest_sketch_rows(kind, d, eps, delta, 1.0)
            .unwrap()
            .min(n);
        println!("{kind}: suggested rows s = {s} for d = {d}, eps = {eps}, delta = {delta}");
        for seed in 0..5 {
            let mut rng = Rng::new(seed);
            let basis = SubspaceBasis::random(n, d, &mut rng).unwrap();
            let sk = match kind {
                SketchKind::CountSketch => SketchMatrix::count_sketch(s, n, &mut rng).unwrap(),
                SketchKind::SparseEmbedding => {
                    SketchMatrix::sparse_embedding(s, n, 8.min(s), &mut rng).unwrap()
                }
                SketchKind::Identity => unreachable!(),
            };
            let rep = distortion(&sk, &basis, pairs, &rng).unwrap();
            println!(
                "  seed {seed}: max norm distortion {:.4}, max dot distortion {:.4}",
                rep.max_norm_distortion, rep.max_dot_distortion
            );
        }
    }

    // halving the sketch quadruples nothing here: distortion shrinks ~1/sqrt(s)
    println!("\ndistortion vs rows (count-sketch, median of 10 seeds):");
    for s in [64, 128, 256, 512] {
        let mut vals: Vec<f64> = (0..10)
            .map(|seed| {
                let mut rng = Rng::new(100 + seed);
                let basis = SubspaceBasis::random(n, d, &mut rng).unwrap();
                let sk = SketchMatrix::count_sketch(s, n, &mut rng).unwrap();
                distortion(&sk, &basis, 400, &rng)
                    .unwrap()
                    .max_norm_distortion
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("  s = {s:4}: median {:.4}", 0.5 * (vals[4] + vals[5]));
    }
}
