//! Property tests for the structural invariants that must hold for every
//! seed and shape, not just the unit-test fixtures.

use proptest::prelude::*;

use hashnets::hashednet::lift_vector;
use hashnets::hashing::{bucket_loads, kwise_tail_bound, KWiseHash};
use hashnets::linalg::dot;
use hashnets::sketch::SketchMatrix;
use hashnets::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_sketch_columns_are_single_signed_units(
        seed in 0u64..1_000, s in 1usize..40, n in 1usize..200,
    ) {
        let mut rng = Rng::new(seed);
        let sk = SketchMatrix::count_sketch(s, n, &mut rng).unwrap();
        for j in 0..n {
            let es = sk.col_entries(j);
            prop_assert_eq!(es.len(), 1);
            prop_assert!(es[0].1.abs() == 1.0);
            prop_assert!((es[0].0 as usize) < s);
        }
    }

    #[test]
    fn sparse_embedding_columns_have_t_distinct_unit_norm_rows(
        seed in 0u64..1_000, s in 1usize..40, n in 1usize..120, t_raw in 1usize..40,
    ) {
        let t = t_raw.min(s);
        let mut rng = Rng::new(seed);
        let sk = SketchMatrix::sparse_embedding(s, n, t, &mut rng).unwrap();
        for j in 0..n {
            let es = sk.col_entries(j);
            prop_assert_eq!(es.len(), t);
            let mut rows: Vec<u32> = es.iter().map(|&(r, _)| r).collect();
            rows.sort_unstable();
            rows.dedup();
            prop_assert_eq!(rows.len(), t, "duplicate rows within a column");
            let norm_sq: f64 = es.iter().map(|&(_, v)| v * v).sum();
            prop_assert!((norm_sq - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sketch_apply_is_linear(
        seed in 0u64..500, s in 1usize..16, n in 1usize..32, scale in -3.0f64..3.0,
    ) {
        let mut rng = Rng::new(seed);
        let sk = SketchMatrix::count_sketch(s, n, &mut rng).unwrap();
        let x = rng.gaussian_vec(n);
        let sx = sk.apply(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| scale * v).collect();
        let s_scaled = sk.apply(&scaled).unwrap();
        for (a, b) in s_scaled.iter().zip(&sx) {
            prop_assert!((a - scale * b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn bucket_loads_partition_the_domain(
        seed in 0u64..1_000, t in 1usize..8, n in 1u64..5_000, b in 1u64..64,
    ) {
        let mut rng = Rng::new(seed);
        let h = KWiseHash::new(t, n, b, &mut rng).unwrap();
        let loads = bucket_loads(&h);
        prop_assert_eq!(loads.loads.iter().sum::<u64>(), n);
        // evaluation is a pure function of the coefficients
        let x = seed % n;
        prop_assert_eq!(h.eval(x).unwrap(), h.eval(x).unwrap());
    }

    #[test]
    fn lift_norm_identity_holds_for_any_hash(
        seed in 0u64..1_000, k in 1usize..6, n in 1usize..12, b in 1u64..16,
    ) {
        let kn = (k * n) as u64;
        prop_assume!(b <= kn);
        let mut rng = Rng::new(seed);
        let h = KWiseHash::new(4, kn, b, &mut rng).unwrap();
        let idx = h.table();
        let loads = bucket_loads(&h);
        let a = rng.gaussian_vec(b as usize);
        let lifted = lift_vector(&a, &idx);
        let expect: f64 = a
            .iter()
            .zip(&loads.loads)
            .map(|(&ap, &lp)| ap * ap * lp as f64)
            .sum();
        let got = dot(&lifted, &lifted);
        prop_assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn tail_bounds_stay_in_unit_interval_and_decrease(
        n in 1u64..100_000, half_k in 1u64..12, mu in 0.0f64..1e4, a in 1e-3f64..1e6,
    ) {
        let k = 2 * half_k;
        let t1 = kwise_tail_bound(n, k, mu, a).unwrap();
        let t2 = kwise_tail_bound(n, k, mu, 2.0 * a).unwrap();
        for b in [t1.moment, t1.simple, t2.moment, t2.simple] {
            prop_assert!((0.0..=1.0).contains(&b));
        }
        prop_assert!(t2.moment <= t1.moment + 1e-15);
        prop_assert!(t2.simple <= t1.simple + 1e-15);
    }
}
