mod common;

use common::toy::{brute_force, random_pyramid, random_shapes, random_weights};
use flowqa::flow::WeightMap;
use flowqa::lpips::{lpips_pair, resample_weights, weighted_lpips_pair};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn uniform_map_reduces_to_plain_lpips_on_toy_pyramids() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let shapes = random_shapes(&mut rng);
        let (a, b) = (random_pyramid(&mut rng, &shapes), random_pyramid(&mut rng, &shapes));
        let lw = random_weights(&mut rng, &shapes);
        let (h, w) = (shapes[0].1 * 4, shapes[0].2 * 4);
        let plain = lpips_pair(&a, &b, &lw).unwrap();
        let pooled = weighted_lpips_pair(&a, &b, &lw, &WeightMap::uniform(w, h)).unwrap();
        assert!((plain - pooled).abs() <= 1e-6, "{plain} vs {pooled}");
        assert!((plain - brute_force(&a, &b, &lw, None)).abs() <= 1e-6 * plain.max(1e-3));
    }
}

#[test]
fn weighted_pooling_matches_literal_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let shapes = random_shapes(&mut rng);
        let (a, b) = (random_pyramid(&mut rng, &shapes), random_pyramid(&mut rng, &shapes));
        let lw = random_weights(&mut rng, &shapes);
        let (h, w) = (shapes[0].1 * 3, shapes[0].2 * 3);
        let raw: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect();
        let map = WeightMap::from_magnitudes(w, h, raw);
        let got = weighted_lpips_pair(&a, &b, &lw, &map).unwrap();
        let want = brute_force(&a, &b, &lw, Some(&map));
        assert!((got - want).abs() <= 1e-6 * want.max(1e-3), "{got} vs {want}");
    }
}

proptest! {
    #[test]
    fn pooled_weights_stay_normalized(sw in 1usize..40, sh in 1usize..40, dw in 1usize..40, dh in 1usize..40, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..sw * sh).map(|_| rng.random_range(0.0..1.0)).collect();
        let map = WeightMap::from_magnitudes(sw, sh, raw);
        let p = resample_weights(&map, dh, dw);
        prop_assert_eq!(p.len(), dw * dh);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }
}
