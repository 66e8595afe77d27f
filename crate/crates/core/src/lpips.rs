//! LPIPS distance between feature pyramids, with arithmetic-mean pooling or
//! pooling under an arbitrary normalized spatial weight map.
//!
//! Per tap, both feature maps are unit-normalized along channels, differenced,
//! scaled channel-wise by the linear weights and squared, giving a distance
//! map `d[h, w]`. Plain LPIPS averages `d` over locations; the weighted form
//! takes `sum(W[h, w] * d[h, w])` with `W` resampled to the tap resolution
//! and summing to one, so a uniform `W` reproduces the plain mean.

use crate::error::{Error, Result};
use crate::flow::WeightMap;
use crate::nn::{FeatureMap, FeaturePyramid, WeightArchive};

/// Guards the channel norm against division by zero.
pub const NORM_EPS: f32 = 1e-10;
/// Allowed deviation of a weight map's total mass from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Non-negative per-channel weights, one vector per tap.
#[derive(Debug, Clone, PartialEq)]
pub struct LpipsLinearWeights {
    layers: Vec<Vec<f32>>,
}

impl LpipsLinearWeights {
    pub fn new(layers: Vec<Vec<f32>>) -> Result<Self> {
        for (i, w) in layers.iter().enumerate() {
            if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "linear weights of layer {i} must be finite and non-negative"
                )));
            }
        }
        Ok(LpipsLinearWeights { layers })
    }

    pub fn from_archive(archive: &WeightArchive) -> Self {
        LpipsLinearWeights {
            layers: archive.linear_weights().into_iter().map(<[f32]>::to_vec).collect(),
        }
    }

    pub fn layers(&self) -> &[Vec<f32>] {
        &self.layers
    }
}

/// Divides every location's channel vector by its Euclidean norm plus [`NORM_EPS`].
pub fn channel_normalize(fmap: &FeatureMap) -> FeatureMap {
    let n = fmap.spatial_len();
    let mut norms = vec![0.0f32; n];
    for c in 0..fmap.channels {
        for (acc, &v) in norms.iter_mut().zip(fmap.channel(c)) {
            *acc += v * v;
        }
    }
    for v in &mut norms {
        *v = v.sqrt() + NORM_EPS;
    }
    let mut out = fmap.clone();
    for c in 0..fmap.channels {
        for (v, norm) in out.data[c * n..(c + 1) * n].iter_mut().zip(&norms) {
            *v /= norm;
        }
    }
    out
}

/// Per-location squared weighted distance between two normalized taps.
pub fn distance_map(tap_ref: &FeatureMap, tap_dis: &FeatureMap, weights: &[f32]) -> Result<Vec<f64>> {
    if !tap_ref.same_shape(tap_dis) {
        return Err(Error::Shape(format!(
            "tap shapes differ: {}x{}x{} vs {}x{}x{}",
            tap_ref.channels, tap_ref.height, tap_ref.width, tap_dis.channels, tap_dis.height, tap_dis.width
        )));
    }
    if weights.len() != tap_ref.channels {
        return Err(Error::Shape(format!(
            "{} linear weights for {} channels",
            weights.len(),
            tap_ref.channels
        )));
    }
    let a = channel_normalize(tap_ref);
    let b = channel_normalize(tap_dis);
    let n = tap_ref.spatial_len();
    let mut d = vec![0.0f64; n];
    for (c, &wc) in weights.iter().enumerate() {
        let (ca, cb) = (a.channel(c), b.channel(c));
        for ((acc, &x), &y) in d.iter_mut().zip(ca).zip(cb) {
            let diff = (wc * (x - y)) as f64;
            *acc += diff * diff;
        }
    }
    Ok(d)
}

fn layer_maps(
    pyr_ref: &FeaturePyramid,
    pyr_dis: &FeaturePyramid,
    w: &LpipsLinearWeights,
) -> Result<Vec<(usize, usize, Vec<f64>)>> {
    if pyr_ref.len() != pyr_dis.len() || pyr_ref.len() != w.layers.len() {
        return Err(Error::Shape(format!(
            "pyramid depths differ: {} reference, {} distorted, {} weight layers",
            pyr_ref.len(),
            pyr_dis.len(),
            w.layers.len()
        )));
    }
    pyr_ref
        .taps
        .iter()
        .zip(&pyr_dis.taps)
        .zip(&w.layers)
        .enumerate()
        .map(|(l, ((a, b), wl))| {
            distance_map(a, b, wl)
                .map(|d| (a.height, a.width, d))
                .map_err(|e| match e {
                    Error::Shape(m) => Error::Shape(format!("layer {l}: {m}")),
                    other => other,
                })
        })
        .collect()
}

/// Plain LPIPS: spatial mean of each tap's distance map, summed over taps.
pub fn lpips_pair(pyr_ref: &FeaturePyramid, pyr_dis: &FeaturePyramid, w: &LpipsLinearWeights) -> Result<f64> {
    Ok(layer_maps(pyr_ref, pyr_dis, w)?
        .iter()
        .map(|(_, _, d)| d.iter().sum::<f64>() / d.len() as f64)
        .sum())
}

/// LPIPS pooled with `weight_map` instead of the arithmetic mean.
pub fn weighted_lpips_pair(
    pyr_ref: &FeaturePyramid,
    pyr_dis: &FeaturePyramid,
    w: &LpipsLinearWeights,
    weight_map: &WeightMap,
) -> Result<f64> {
    let total: f64 = weight_map.weights().iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE
        || weight_map.weights().iter().any(|&v| !(v >= 0.0))
    {
        return Err(Error::Normalization(total));
    }
    Ok(layer_maps(pyr_ref, pyr_dis, w)?
        .iter()
        .map(|(h, wd, d)| {
            let pooled = resample_weights(weight_map, *h, *wd);
            pooled.iter().zip(d).map(|(p, v)| p * v).sum::<f64>()
        })
        .sum())
}

/// Triangle-filter taps for resampling an axis of `src` samples to `dst`.
/// The filter widens with the downscale factor so every source sample
/// contributes; at equal sizes it is the identity.
fn axis_taps(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(src);
            let mut taps: Vec<(usize, f64)> = (lo..hi)
                .filter_map(|j| {
                    let t = 1.0 - ((j as f64 + 0.5 - center) / support).abs();
                    (t > 0.0).then_some((j, t))
                })
                .collect();
            if taps.is_empty() {
                taps.push(((center as usize).min(src - 1), 1.0));
            }
            let norm: f64 = taps.iter().map(|(_, t)| t).sum();
            for (_, t) in &mut taps {
                *t /= norm;
            }
            taps
        })
        .collect()
}

/// Bilinear (triangle-filter) resampling of a weight map to `h x w`,
/// renormalized to sum to one.
pub fn resample_weights(map: &WeightMap, h: usize, w: usize) -> Vec<f64> {
    let (sh, sw) = (map.height(), map.width());
    let src = map.weights();
    if (sh, sw) == (h, w) {
        let total: f64 = src.iter().sum();
        return src.iter().map(|v| v / total).collect();
    }
    let cols = axis_taps(sw, w);
    let rows = axis_taps(sh, h);
    let mut horiz = vec![0.0f64; sh * w];
    for y in 0..sh {
        let row = &src[y * sw..(y + 1) * sw];
        for (x, taps) in cols.iter().enumerate() {
            horiz[y * w + x] = taps.iter().map(|&(j, t)| t * row[j]).sum();
        }
    }
    let mut out = vec![0.0f64; h * w];
    for (y, taps) in rows.iter().enumerate() {
        for x in 0..w {
            out[y * w + x] = taps.iter().map(|&(j, t)| t * horiz[j * w + x]).sum();
        }
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for v in &mut out {
            *v /= total;
        }
    } else {
        out.fill(1.0 / (h * w) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(c: usize, h: usize, w: usize, data: Vec<f32>) -> FeaturePyramid {
        FeaturePyramid {
            taps: vec![FeatureMap::new(c, h, w, data).unwrap()],
        }
    }

    fn random_pyramid(rng: &mut ChaCha8Rng, shapes: &[(usize, usize, usize)]) -> FeaturePyramid {
        FeaturePyramid {
            taps: shapes
                .iter()
                .map(|&(c, h, w)| {
                    FeatureMap::new(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn normalize_three_four_five() {
        let m = FeatureMap::new(2, 1, 2, vec![3.0, 0.0, 4.0, 0.0]).unwrap();
        let n = channel_normalize(&m);
        assert!((n.at(0, 0, 0) - 0.6).abs() < 1e-7);
        assert!((n.at(1, 0, 0) - 0.8).abs() < 1e-7);
        // zero vector stays zero
        assert_eq!(n.at(0, 0, 1), 0.0);
        assert_eq!(n.at(1, 0, 1), 0.0);
    }

    #[test]
    fn normalized_norms_are_unit_or_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut data: Vec<f32> = (0..5 * 6 * 7).map(|_| rng.random_range(-3.0..3.0)).collect();
        for c in 0..5 {
            data[c * 42] = 0.0;
        }
        let n = channel_normalize(&FeatureMap::new(5, 6, 7, data).unwrap());
        for p in 0..42 {
            let norm: f64 = (0..5).map(|c| (n.data[c * 42 + p] as f64).powi(2)).sum::<f64>().sqrt();
            assert!(norm == 0.0 || (norm >= 1.0 - 1e-6 && norm <= 1.0 + 1e-7), "{norm}");
        }
    }

    #[test]
    fn hand_computed_toy() {
        // one channel, 2x2: normalized values are sign(x), so d = w^2 * (sign a - sign b)^2
        let a = single(1, 2, 2, vec![1.0, -2.0, 3.0, 0.0]);
        let b = single(1, 2, 2, vec![2.0, 5.0, -1.0, 0.0]);
        let w = LpipsLinearWeights::new(vec![vec![0.5]]).unwrap();
        // d = [0, 0.25*4, 0.25*4, 0] = [0, 1, 1, 0], mean 0.5
        assert!((lpips_pair(&a, &b, &w).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(lpips_pair(&a, &a, &w).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let a = FeaturePyramid { taps: vec![FeatureMap::zeros(1, 2, 2), FeatureMap::zeros(2, 2, 2)] };
        let b = FeaturePyramid { taps: vec![FeatureMap::zeros(1, 2, 2), FeatureMap::zeros(2, 3, 2)] };
        let w = LpipsLinearWeights::new(vec![vec![1.0], vec![1.0, 1.0]]).unwrap();
        match lpips_pair(&a, &b, &w) {
            Err(Error::Shape(m)) => assert!(m.contains("layer 1"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delta_weight_picks_one_location() {
        let a = single(2, 2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5, -1.0, 2.0, 1.0, 0.0, 3.0]);
        let b = single(2, 2, 3, vec![-1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 2.0, -1.0, 1.0, 0.0]);
        let w = LpipsLinearWeights::new(vec![vec![0.7, 1.3]]).unwrap();
        let d = distance_map(&a.taps[0], &b.taps[0], &w.layers[0]).unwrap();
        for loc in 0..6 {
            let mut weights = vec![0.0; 6];
            weights[loc] = 1.0;
            let map = WeightMap::new(3, 2, weights).unwrap();
            assert_eq!(weighted_lpips_pair(&a, &b, &w, &map).unwrap(), d[loc]);
        }
    }

    #[test]
    fn unnormalized_map_is_rejected() {
        let a = single(1, 1, 2, vec![1.0, 2.0]);
        let w = LpipsLinearWeights::new(vec![vec![1.0]]).unwrap();
        let map = WeightMap::from_raw_unchecked(2, 1, vec![0.5, 0.6]);
        assert!(matches!(weighted_lpips_pair(&a, &a, &w, &map), Err(Error::Normalization(_))));
    }

    #[test]
    fn resampling_is_identity_at_equal_size_and_preserves_uniformity() {
        let map = WeightMap::new(3, 2, vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let same = resample_weights(&map, 2, 3);
        for (a, b) in same.iter().zip(map.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        let uniform = WeightMap::uniform(128, 96);
        for (h, w) in [(31, 23), (7, 5), (1, 1), (200, 150)] {
            let r = resample_weights(&uniform, h, w);
            let expected = 1.0 / (h * w) as f64;
            assert!(r.iter().all(|v| (v - expected).abs() < 1e-15));
        }
    }

    #[test]
    fn downsampling_keeps_isolated_mass() {
        let mut weights = vec![0.0; 64 * 64];
        weights[37 * 64 + 11] = 1.0;
        let map = WeightMap::new(64, 64, weights).unwrap();
        let r = resample_weights(&map, 7, 7);
        let (argmax, _) = r.iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert_eq!((argmax / 7, argmax % 7), (37 * 7 / 64, 11 * 7 / 64));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn uniform_weights_reduce_to_plain(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shapes = [(3, 5, 6), (4, 3, 3), (2, 1, 2)];
            let a = random_pyramid(&mut rng, &shapes);
            let b = random_pyramid(&mut rng, &shapes);
            let w = LpipsLinearWeights::new(shapes.iter().map(|&(c, _, _)| (0..c).map(|_| rng.random_range(0.0..2.0)).collect()).collect()).unwrap();
            let plain = lpips_pair(&a, &b, &w).unwrap();
            let weighted = weighted_lpips_pair(&a, &b, &w, &WeightMap::uniform(24, 20)).unwrap();
            prop_assert!(plain >= 0.0);
            prop_assert!((plain - weighted).abs() <= 1e-6);
        }

        #[test]
        fn weighted_scores_are_non_negative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shapes = [(3, 4, 4)];
            let a = random_pyramid(&mut rng, &shapes);
            let b = random_pyramid(&mut rng, &shapes);
            let w = LpipsLinearWeights::new(vec![vec![1.0, 0.5, 0.2]]).unwrap();
            let raw: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let map = WeightMap::new(4, 4, raw.iter().map(|v| v / total).collect()).unwrap();
            prop_assert!(weighted_lpips_pair(&a, &b, &w, &map).unwrap() >= 0.0);
        }

        #[test]
        fn more_weight_on_the_worst_location_never_lowers_the_score(seed in any::<u64>(), boost in 0.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shapes = [(3, 4, 5)];
            let a = random_pyramid(&mut rng, &shapes);
            let b = random_pyramid(&mut rng, &shapes);
            let w = LpipsLinearWeights::new(vec![vec![1.0, 0.3, 0.8]]).unwrap();
            let d = distance_map(&a.taps[0], &b.taps[0], &w.layers[0]).unwrap();
            let worst = (0..d.len()).max_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap();
            let raw: Vec<f64> = (0..20).map(|_| rng.random_range(0.01..1.0)).collect();
            let normalize = |v: &[f64]| { let t: f64 = v.iter().sum(); v.iter().map(|x| x / t).collect::<Vec<_>>() };
            let before = WeightMap::new(5, 4, normalize(&raw)).unwrap();
            let mut boosted = raw.clone();
            boosted[worst] += boost;
            let after = WeightMap::new(5, 4, normalize(&boosted)).unwrap();
            let s0 = weighted_lpips_pair(&a, &b, &w, &before).unwrap();
            let s1 = weighted_lpips_pair(&a, &b, &w, &after).unwrap();
            prop_assert!(s1 >= s0 - 1e-12);
        }
    }
}
