#![allow(dead_code)]

use std::path::PathBuf;

use flowqa::media::{read_image, Frame};
use flowqa::nn::{load_weight_archive, WeightArchive};
use serde::Deserialize;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn weights_path() -> PathBuf {
    crate_dir().join("assets/weights.flpw")
}

pub fn archive() -> WeightArchive {
    load_weight_archive(weights_path()).expect("bundled archive loads")
}

pub fn parity_dir() -> PathBuf {
    crate_dir().join("tests/fixtures/parity")
}

#[derive(Debug, Deserialize)]
pub struct PairRecord {
    pub name: String,
    #[serde(rename = "ref")]
    pub reference: String,
    pub dis: String,
    pub lpips: f64,
}

#[derive(Debug, Deserialize)]
struct Scores {
    pairs: Vec<PairRecord>,
}

pub fn parity_pairs() -> Vec<(PairRecord, Frame, Frame)> {
    let dir = parity_dir();
    let text = std::fs::read_to_string(dir.join("scores.json")).unwrap();
    let scores: Scores = serde_json::from_str(&text).unwrap();
    scores
        .pairs
        .into_iter()
        .map(|p| {
            let a = read_image(dir.join(&p.reference)).unwrap();
            let b = read_image(dir.join(&p.dis)).unwrap();
            (p, a, b)
        })
        .collect()
}

pub mod directional {
    use flowqa::media::{ColorSpace, Frame, FrameRate, Plane, VideoSequence};
    use flowqa::metrics::{lpips_frames, ScoreConfig};
    use flowqa::nn::WeightArchive;
    use flowqa::synth::{circular_shift, noise_plane, textured_frame};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const SIZE: usize = 128;
    pub const FRAMES: usize = 6;
    /// Camera pan, pixels per frame.
    pub const PAN: (isize, isize) = (2, 1);
    /// Frozen region in the distorted video: x, y, side.
    pub const FROZEN: (usize, usize, usize) = (8, 72, 48);
    /// Moving object: start x, start y, side, velocity.
    pub const OBJECT: (usize, usize, usize, (usize, usize)) = (64, 16, 32, (5, 2));
    pub const PATCH: usize = 16;
    pub const INSIDE_AMPLITUDE: f32 = 0.25;

    pub struct Construction {
        pub reference: VideoSequence,
        pub inside: VideoSequence,
        pub outside: VideoSequence,
        pub lpips_inside: f64,
        pub lpips_outside: f64,
        pub outside_amplitude: f32,
    }

    fn object_origin(t: usize) -> (usize, usize) {
        let (x, y, _, (vx, vy)) = OBJECT;
        (x + vx * t, y + vy * t)
    }

    fn reference_frame(bg: &Frame, obj: &Frame, t: usize) -> Frame {
        let shifted = circular_shift(bg, PAN.0 * t as isize, PAN.1 * t as isize).unwrap();
        let (ox, oy) = object_origin(t);
        let side = OBJECT.2;
        let planes: Vec<Plane> = (0..3)
            .map(|c| {
                let mut p = shifted.plane(c).clone();
                for y in 0..side {
                    for x in 0..side {
                        p.data[(oy + y) * SIZE + ox + x] = 0.2 + 0.8 * obj.plane(c).get(x, y);
                    }
                }
                p
            })
            .collect();
        let [r, g, b]: [Plane; 3] = planes.try_into().unwrap();
        Frame::rgb(SIZE, SIZE, r, g, b).unwrap()
    }

    /// Distorted frame: frozen region plus a noise patch at `patch_at` (top-left).
    fn distorted_frame(reference: &Frame, first: &Frame, noise: &[f32], amplitude: f32, patch_at: (usize, usize)) -> Frame {
        let (fx, fy, fs) = FROZEN;
        let planes: Vec<Plane> = (0..3)
            .map(|c| {
                let mut p = reference.plane(c).clone();
                for y in fy..fy + fs {
                    for x in fx..fx + fs {
                        p.data[y * SIZE + x] = first.plane(c).data[y * SIZE + x];
                    }
                }
                for y in 0..PATCH {
                    for x in 0..PATCH {
                        let i = (patch_at.1 + y) * SIZE + patch_at.0 + x;
                        p.data[i] = (p.data[i] + amplitude * noise[(c * PATCH + y) * PATCH + x]).clamp(0.0, 1.0);
                    }
                }
                p
            })
            .collect();
        let [r, g, b]: [Plane; 3] = planes.try_into().unwrap();
        Frame::from_planes(ColorSpace::RgbFloat, SIZE, SIZE, [r, g, b]).unwrap()
    }

    fn sequence(frames: Vec<Frame>, name: &str) -> VideoSequence {
        VideoSequence::new(frames, FrameRate::new(30, 1), name).unwrap()
    }

    /// Plain LPIPS averaged over the frames FloLPIPS scores (2..N).
    pub fn windowed_lpips(reference: &VideoSequence, distorted: &VideoSequence, archive: &WeightArchive) -> f64 {
        let cfg = ScoreConfig::default();
        (1..reference.len())
            .map(|t| lpips_frames(&reference.frames()[t], &distorted.frames()[t], archive, &cfg).unwrap())
            .sum::<f64>()
            / (reference.len() - 1) as f64
    }

    /// Builds the pair. The inside case puts a static noise patch in the
    /// frozen region; the outside case attaches it to the moving object and
    /// bisects its amplitude until plain LPIPS matches the inside case.
    pub fn build(archive: &WeightArchive) -> Construction {
        let bg = textured_frame(SIZE, SIZE, 31);
        let obj = {
            let n = noise_plane(OBJECT.2, OBJECT.2, 1.0, 77);
            let m = noise_plane(OBJECT.2, OBJECT.2, 3.0, 78);
            let mk = |k: f32| Plane { width: OBJECT.2, height: OBJECT.2, data: n.data.iter().zip(&m.data).map(|(a, b)| (k * a + (1.0 - k) * b).clamp(0.0, 1.0)).collect() };
            Frame::rgb(OBJECT.2, OBJECT.2, mk(0.7), mk(0.5), mk(0.3)).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f32> = (0..3 * PATCH * PATCH).map(|_| rng.random_range(-1.0..1.0)).collect();

        let ref_frames: Vec<Frame> = (0..FRAMES).map(|t| reference_frame(&bg, &obj, t)).collect();
        let first = &ref_frames[0];
        let inside_at = (FROZEN.0 + 16, FROZEN.1 + 16);
        let make = |amp: f32, inside: bool| {
            let frames = ref_frames
                .iter()
                .enumerate()
                .map(|(t, f)| {
                    let at = if inside {
                        inside_at
                    } else {
                        let (ox, oy) = object_origin(t);
                        (ox + 8, oy + 8)
                    };
                    distorted_frame(f, first, &noise, amp, at)
                })
                .collect();
            sequence(frames, if inside { "inside" } else { "outside" })
        };
        let reference = sequence(ref_frames.clone(), "reference");
        let inside = make(INSIDE_AMPLITUDE, true);
        let target = windowed_lpips(&reference, &inside, archive);

        let (mut lo, mut hi) = (0.0f32, 2.0f32);
        let mut best = (f64::INFINITY, 0.0f32, 0.0f64);
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            let score = windowed_lpips(&reference, &make(mid, false), archive);
            let gap = (score - target).abs() / target;
            if gap < best.0 {
                best = (gap, mid, score);
            }
            if gap < 1e-3 {
                break;
            }
            if score < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Construction {
            reference,
            inside,
            outside: make(best.1, false),
            lpips_inside: target,
            lpips_outside: best.2,
            outside_amplitude: best.1,
        }
    }
}

pub mod conv {
    use flowqa::nn::{FeatureMap, Tensor};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub struct Case {
        pub input: FeatureMap,
        pub kernel: Tensor,
        pub bias: Vec<f32>,
        pub stride: usize,
        pub padding: usize,
        pub expected: Vec<f64>,
    }

    /// Direct summation in f64, independent of the library's loops.
    pub fn oracle(input: &FeatureMap, weight: &[f32], bias: &[f32], oc: usize, k: usize, stride: usize, pad: usize) -> Vec<f64> {
        let ho = (input.height + 2 * pad - k) / stride + 1;
        let wo = (input.width + 2 * pad - k) / stride + 1;
        let mut out = vec![0.0f64; oc * ho * wo];
        for o in 0..oc {
            for y in 0..ho {
                for x in 0..wo {
                    let mut acc = bias[o] as f64;
                    for c in 0..input.channels {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (y * stride + ky) as isize - pad as isize;
                                let ix = (x * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= input.height as isize || ix >= input.width as isize {
                                    continue;
                                }
                                let wv = weight[((o * input.channels + c) * k + ky) * k + kx] as f64;
                                acc += wv * input.at(c, iy as usize, ix as usize) as f64;
                            }
                        }
                    }
                    out[(o * ho + y) * wo + x] = acc;
                }
            }
        }
        out
    }

    pub fn rel_error(got: &[f32], want: &[f64]) -> f64 {
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        got.iter().zip(want).map(|(g, w)| (*g as f64 - w).abs()).fold(0.0, f64::max) / scale
    }

    /// Random layer with up to 4 input channels and 16x16 input.
    pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
        let c = rng.random_range(1..=4);
        let h = rng.random_range(3..=16);
        let w = rng.random_range(3..=16);
        let k = [1, 3, 5][rng.random_range(0..3)].min(h).min(w);
        let stride = rng.random_range(1..=2);
        let padding = rng.random_range(0..=k / 2);
        let oc = rng.random_range(1..=8);
        let input = FeatureMap::new(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let weight: Vec<f32> = (0..oc * c * k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias: Vec<f32> = (0..oc).map(|_| rng.random_range(-0.5..0.5)).collect();
        let expected = oracle(&input, &weight, &bias, oc, k, stride, padding);
        Case { input, kernel: Tensor::new(vec![oc, c, k, k], weight).unwrap(), bias, stride, padding, expected }
    }
}

pub mod toy {
    use flowqa::flow::WeightMap;
    use flowqa::lpips::{resample_weights, LpipsLinearWeights};
    use flowqa::nn::{FeatureMap, FeaturePyramid};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-10;

    pub fn random_pyramid(rng: &mut ChaCha8Rng, shapes: &[(usize, usize, usize)]) -> FeaturePyramid {
        FeaturePyramid {
            taps: shapes
                .iter()
                .map(|&(c, h, w)| FeatureMap::new(c, h, w, (0..c * h * w).map(|_| rng.random_range(0.0..2.0)).collect()).unwrap())
                .collect(),
        }
    }

    pub fn random_shapes(rng: &mut ChaCha8Rng) -> Vec<(usize, usize, usize)> {
        let mut h = rng.random_range(6..=12);
        let mut w = rng.random_range(6..=12);
        (0..5)
            .map(|_| {
                let s = (rng.random_range(1..=4), h, w);
                h = (h / 2).max(1);
                w = (w / 2).max(1);
                s
            })
            .collect()
    }

    /// Per-location distance straight from the definition, in f64.
    pub fn literal_distance(a: &FeatureMap, b: &FeatureMap, w: &[f32], y: usize, x: usize) -> f64 {
        let norm = |f: &FeatureMap| (0..f.channels).map(|c| (f.at(c, y, x) as f64).powi(2)).sum::<f64>().sqrt();
        let (na, nb) = (norm(a), norm(b));
        (0..a.channels)
            .map(|c| {
                let d = a.at(c, y, x) as f64 / (na + EPS) - b.at(c, y, x) as f64 / (nb + EPS);
                (w[c] as f64 * d).powi(2)
            })
            .sum()
    }

    pub fn brute_force(a: &FeaturePyramid, b: &FeaturePyramid, lw: &LpipsLinearWeights, map: Option<&WeightMap>) -> f64 {
        let mut total = 0.0;
        for (l, (ta, tb)) in a.taps.iter().zip(&b.taps).enumerate() {
            let pool = map.map(|m| resample_weights(m, ta.height, ta.width));
            for y in 0..ta.height {
                for x in 0..ta.width {
                    let d = literal_distance(ta, tb, &lw.layers()[l], y, x);
                    total += match &pool {
                        Some(p) => p[y * ta.width + x] * d,
                        None => d / (ta.height * ta.width) as f64,
                    };
                }
            }
        }
        total
    }

    pub fn random_weights(rng: &mut ChaCha8Rng, shapes: &[(usize, usize, usize)]) -> LpipsLinearWeights {
        LpipsLinearWeights::new(shapes.iter().map(|&(c, _, _)| (0..c).map(|_| rng.random_range(0.0..1.0)).collect()).collect()).unwrap()
    }
}

pub mod shifts {
    use flowqa::flow::FlowField;

    pub const SHIFTS: [(isize, isize); 10] = [
        (2, 0),
        (-2, 3),
        (4, -4),
        (-5, 0),
        (0, 6),
        (8, 0),
        (-8, 2),
        (3, -7),
        (-6, -6),
        (7, 5),
    ];

    pub fn central_epe(flow: &FlowField, dx: f32, dy: f32) -> f64 {
        let (w, h) = (flow.width(), flow.height());
        let (x0, x1, y0, y1) = (w / 10, w - w / 10, h / 10, h - h / 10);
        let mut sum = 0.0;
        let mut n = 0;
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * w + x;
                sum += (((flow.u()[i] - dx).powi(2) + (flow.v()[i] - dy).powi(2)) as f64).sqrt();
                n += 1;
            }
        }
        sum / n as f64
    }
}
