//! Deterministic synthetic content: smooth noise textures, shifted frames
//! and panning clips with a moving object. Used for tests, demos and the
//! synthetic evaluation manifest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::media::{
    rgb_to_yuv420, write_y4m, ColorRange, ColorSpace, Frame, FrameRate, Plane, VideoSequence,
};
use crate::vfi::{frame_average_upsample, frame_repeat_upsample};

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f32> = (-r..=r)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with wrap-around borders.
fn blur_periodic(data: &[f32], w: usize, h: usize, sigma: f32) -> Vec<f32> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * data[y * w + (x as isize + i as isize - r).rem_euclid(w as isize) as usize])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[(y as isize + i as isize - r).rem_euclid(h as isize) as usize * w + x])
                .sum();
        }
    }
    out
}

fn normalize_unit(v: &mut [f32]) {
    let (lo, hi) = v.iter().fold((f32::MAX, f32::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let span = (hi - lo).max(1e-12);
    v.iter_mut().for_each(|x| *x = (*x - lo) / span);
}

/// Periodic smooth noise in [0, 1]: white noise blurred by a Gaussian of `sigma` pixels.
pub fn noise_plane(width: usize, height: usize, sigma: f32, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f32> = (0..width * height).map(|_| rng.random::<f32>()).collect();
    let mut data = blur_periodic(&white, width, height, sigma);
    normalize_unit(&mut data);
    Plane { width, height, data }
}

/// Multi-scale colour texture that tiles seamlessly.
pub fn textured_frame(width: usize, height: usize, seed: u64) -> Frame {
    let fine = noise_plane(width, height, 1.5, seed);
    let coarse = noise_plane(width, height, 5.0, seed.wrapping_add(1));
    let tint = noise_plane(width, height, 8.0, seed.wrapping_add(2));
    let luma: Vec<f32> = fine
        .data
        .iter()
        .zip(&coarse.data)
        .map(|(f, c)| 0.1 + 0.8 * (0.55 * f + 0.45 * c))
        .collect();
    let make = |gain: f32| Plane {
        width,
        height,
        data: luma
            .iter()
            .zip(&tint.data)
            .map(|(l, t)| (l + gain * (t - 0.5)).clamp(0.0, 1.0))
            .collect(),
    };
    Frame::rgb(width, height, make(0.15), make(0.0), make(-0.15)).expect("planes match frame size")
}

/// Circularly shifts an RGB frame so content moves by (+dx, +dy) pixels.
pub fn circular_shift(frame: &Frame, dx: isize, dy: isize) -> Result<Frame> {
    if frame.colorspace() != ColorSpace::RgbFloat {
        return Err(Error::Precondition("circular_shift expects an RGB frame".into()));
    }
    let (w, h) = (frame.width(), frame.height());
    let shift = |p: &Plane| Plane {
        width: w,
        height: h,
        data: (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                let sx = (x - dx).rem_euclid(w as isize) as usize;
                let sy = (y - dy).rem_euclid(h as isize) as usize;
                p.data[sy * w + sx]
            })
            .collect(),
    };
    Frame::rgb(w, h, shift(frame.plane(0)), shift(frame.plane(1)), shift(frame.plane(2)))
}

/// Samples a periodic plane at a real-valued position (bilinear, wrapping).
fn sample_wrapped(p: &Plane, x: f32, y: f32) -> f32 {
    let (w, h) = (p.width as isize, p.height as isize);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let at = |xi: isize, yi: isize| p.data[(yi.rem_euclid(h) * w + xi.rem_euclid(w)) as usize];
    let (xi, yi) = (x0 as isize, y0 as isize);
    (at(xi, yi) * (1.0 - fx) + at(xi + 1, yi) * fx) * (1.0 - fy)
        + (at(xi, yi + 1) * (1.0 - fx) + at(xi + 1, yi + 1) * fx) * fy
}

/// A panning textured background with an optional square object moving on top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Background displacement per frame, pixels.
    pub pan: (f32, f32),
    /// Object displacement per frame, pixels; `None` for no object.
    pub object_motion: Option<(f32, f32)>,
    pub object_size: usize,
    pub seed: u64,
}

impl ClipSpec {
    pub fn panning(width: usize, height: usize, frames: usize, pan: (f32, f32), seed: u64) -> Self {
        ClipSpec {
            width,
            height,
            frames,
            pan,
            object_motion: None,
            object_size: 0,
            seed,
        }
    }
}

/// Renders frame `t` of a clip as RGB.
pub fn render_clip_frame(spec: &ClipSpec, t: usize) -> Frame {
    let (w, h) = (spec.width, spec.height);
    let bg = textured_frame(w, h, spec.seed);
    let obj = textured_frame(spec.object_size.max(1), spec.object_size.max(1), spec.seed ^ 0x9e37);
    let t = t as f32;
    let (px, py) = (spec.pan.0 * t, spec.pan.1 * t);
    let origin = spec.object_motion.map(|(vx, vy)| {
        let cx = (w as f32 - spec.object_size as f32) / 2.0 - vx * (spec.frames as f32 - 1.0) / 2.0;
        let cy = (h as f32 - spec.object_size as f32) / 2.0 - vy * (spec.frames as f32 - 1.0) / 2.0;
        (cx + vx * t, cy + vy * t)
    });
    let planes: Vec<Plane> = (0..3)
        .map(|c| {
            let data = (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f32, (i / w) as f32);
                    if let Some((ox, oy)) = origin {
                        let (lx, ly) = (x - ox, y - oy);
                        let s = spec.object_size as f32;
                        if lx >= 0.0 && ly >= 0.0 && lx < s && ly < s {
                            // object texture, brightened so it stands out from the background
                            return (0.25 + 0.75 * sample_wrapped(obj.plane(c), lx, ly)).min(1.0);
                        }
                    }
                    sample_wrapped(bg.plane(c), x - px, y - py)
                })
                .collect();
            Plane { width: w, height: h, data }
        })
        .collect();
    let [r, g, b]: [Plane; 3] = planes.try_into().expect("three planes");
    Frame::rgb(w, h, r, g, b).expect("planes match frame size")
}

/// Renders a whole clip as 8-bit 4:2:0 (limited range).
pub fn motion_clip(spec: &ClipSpec, frame_rate: FrameRate) -> Result<VideoSequence> {
    let frames = (0..spec.frames)
        .map(|t| rgb_to_yuv420(&render_clip_frame(spec, t), ColorRange::Limited))
        .collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, frame_rate, format!("synthetic:{}", spec.seed))
}

/// Temporal degradation applied to a clip: keep every `k`-th frame, then
/// upsample back by `k` with a trivial interpolator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degradation {
    /// Drop every other frame and re-insert pairwise averages.
    Average2,
    /// Keep every `k`-th frame and repeat each `k` times.
    Repeat(usize),
}

impl Degradation {
    pub fn factor(self) -> usize {
        match self {
            Degradation::Average2 => 2,
            Degradation::Repeat(k) => k,
        }
    }

    pub fn tag(self) -> String {
        match self {
            Degradation::Average2 => "average-x2".to_string(),
            Degradation::Repeat(k) => format!("repeat-x{k}"),
        }
    }

    /// Relative annoyance used for pseudo-DMOS.
    pub fn severity(self) -> f64 {
        match self {
            Degradation::Average2 => 1.0,
            Degradation::Repeat(k) => k as f64,
        }
    }
}

/// Applies `deg` and trims to the input length, keeping the input frame rate.
pub fn degrade(seq: &VideoSequence, deg: Degradation) -> Result<VideoSequence> {
    let k = deg.factor();
    let kept: Vec<Frame> = seq.frames().iter().step_by(k).cloned().collect();
    let low = VideoSequence::new(kept, seq.frame_rate(), seq.source())?;
    let up = match deg {
        Degradation::Average2 => frame_average_upsample(&low)?,
        Degradation::Repeat(k) => frame_repeat_upsample(&low, k)?,
    };
    let mut frames = up.into_frames();
    if frames.len() < seq.len() {
        let last = frames[frames.len() - 1].clone();
        frames.resize(seq.len(), last);
    }
    frames.truncate(seq.len());
    VideoSequence::new(frames, seq.frame_rate(), format!("{}:{}", seq.source(), deg.tag()))
}

/// Background pan speeds (pixels per frame) of the synthetic dataset clips.
pub const DATASET_SPEEDS: [f32; 4] = [0.5, 1.0, 1.5, 2.0];
/// Degradations applied to every clip of the synthetic dataset.
pub const DATASET_DEGRADATIONS: [Degradation; 3] =
    [Degradation::Average2, Degradation::Repeat(2), Degradation::Repeat(4)];
pub const DATASET_FRAMES: usize = 9;
pub const DATASET_SIZE: usize = 96;

/// Writes a small motion dataset into `dir`: four reference clips with
/// increasing motion, three temporal degradations of each, and a
/// `manifest.csv` whose pseudo-DMOS grows with speed times severity.
/// Returns the manifest path.
pub fn write_synthetic_dataset(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut manifest = String::from("ref,dis,dmos,tag\n");
    for (c, &speed) in DATASET_SPEEDS.iter().enumerate() {
        let spec = ClipSpec {
            width: DATASET_SIZE,
            height: DATASET_SIZE,
            frames: DATASET_FRAMES,
            pan: (speed, 0.5 * speed),
            object_motion: Some((-1.5 * speed, speed)),
            object_size: DATASET_SIZE / 4,
            seed: 1000 + c as u64,
        };
        let reference = motion_clip(&spec, FrameRate::new(60, 1))?;
        let ref_name = format!("clip{c}_ref.y4m");
        write_y4m(&reference, dir.join(&ref_name))?;
        for deg in DATASET_DEGRADATIONS {
            let dis_name = format!("clip{c}_{}.y4m", deg.tag());
            write_y4m(&degrade(&reference, deg)?, dir.join(&dis_name))?;
            let dmos = 10.0 * speed as f64 * deg.severity();
            manifest.push_str(&format!("{ref_name},{dis_name},{dmos},{}\n", deg.tag()));
        }
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).map_err(|e| Error::file(&path, e))?;
    Ok(path)
}
