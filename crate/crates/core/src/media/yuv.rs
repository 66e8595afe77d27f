//! Headerless planar I420 files.

use std::path::Path;

use crate::error::{Error, Result};

use super::frame::{chroma_dims, Frame, FrameRate, Plane, VideoSequence};

pub fn frame_size_i420(width: usize, height: usize) -> usize {
    let (cw, ch) = chroma_dims(width, height);
    width * height + 2 * cw * ch
}

/// Splits an I420 byte buffer (Y, then U, then V per frame) into frames.
pub fn parse_raw_yuv(
    bytes: &[u8],
    width: usize,
    height: usize,
    frame_rate: FrameRate,
) -> Result<VideoSequence> {
    if width == 0 || height == 0 {
        return Err(Error::Argument("raw YUV needs positive --width and --height".into()));
    }
    let frame_size = frame_size_i420(width, height);
    let remainder = bytes.len() % frame_size;
    if remainder != 0 || bytes.is_empty() {
        return Err(Error::SizeMismatch {
            len: bytes.len(),
            frame_size,
            remainder,
        });
    }
    let (cw, ch) = chroma_dims(width, height);
    let luma = width * height;
    let chroma = cw * ch;
    let to_plane = |w, h, b: &[u8]| Plane {
        width: w,
        height: h,
        data: b.iter().map(|&v| v as f32).collect(),
    };
    let frames = bytes
        .chunks_exact(frame_size)
        .map(|c| {
            Frame::yuv420(
                width,
                height,
                to_plane(width, height, &c[..luma]),
                to_plane(cw, ch, &c[luma..luma + chroma]),
                to_plane(cw, ch, &c[luma + chroma..]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, frame_rate, "<memory>")
}

pub fn read_raw_yuv(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    frame_rate: FrameRate,
) -> Result<VideoSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    let seq = parse_raw_yuv(&bytes, width, height, frame_rate)?;
    VideoSequence::new(seq.into_frames(), frame_rate, path.display().to_string())
}
