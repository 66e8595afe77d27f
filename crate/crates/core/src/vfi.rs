//! Trivial frame-rate upsamplers used to build interpolated test content.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{ColorSpace, Frame, Plane, VideoSequence};

/// Emits every frame `factor` times in a row.
pub fn frame_repeat_upsample(seq: &VideoSequence, factor: usize) -> Result<VideoSequence> {
    if factor < 2 {
        return Err(Error::Argument(format!("repeat factor must be at least 2, got {factor}")));
    }
    let frames = seq
        .frames()
        .iter()
        .flat_map(|f| std::iter::repeat_n(f, factor))
        .cloned()
        .collect();
    VideoSequence::new(frames, seq.frame_rate().scaled(factor as u32), seq.source())
}

/// Inserts the per-sample mean of each consecutive pair (2x only).
///
/// Means are kept in real arithmetic; YUV frames round to code values only
/// when serialized.
pub fn frame_average_upsample(seq: &VideoSequence) -> Result<VideoSequence> {
    let src = seq.frames();
    if src.len() < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: src.len(),
        });
    }
    let mids = src
        .par_windows(2)
        .map(|w| average_frames(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let mut frames = Vec::with_capacity(2 * src.len() - 1);
    for (f, mid) in src.iter().zip(mids) {
        frames.push(f.clone());
        frames.push(mid);
    }
    frames.push(src[src.len() - 1].clone());
    VideoSequence::new(frames, seq.frame_rate().scaled(2), seq.source())
}

fn average_frames(a: &Frame, b: &Frame) -> Result<Frame> {
    a.check_same_size(b)?;
    let hi = match a.colorspace() {
        ColorSpace::Yuv420_8 => 255.0,
        ColorSpace::RgbFloat => 1.0,
    };
    let mut planes = a.planes().iter().zip(b.planes()).map(|(pa, pb)| {
        let data = pa
            .data
            .iter()
            .zip(&pb.data)
            .map(|(&x, &y)| ((x as f64 + y as f64) / 2.0).clamp(0.0, hi) as f32)
            .collect();
        Plane::new(pa.width, pa.height, data)
    });
    let (p0, p1, p2) = (planes.next().unwrap()?, planes.next().unwrap()?, planes.next().unwrap()?);
    Frame::from_planes(a.colorspace(), a.width(), a.height(), [p0, p1, p2])
}
