//! Decoding video inputs into [`Frame`]s.

mod color;
mod frame;
mod image;
mod y4m;
mod yuv;

use std::path::Path;

pub use color::{
    ensure_rgb, luma_code_values, luma_unit, rgb_to_yuv420, to_rgb, to_rgb_with_range, ColorRange,
};
pub use frame::{chroma_dims, ColorSpace, Frame, FrameRate, Plane, VideoSequence};
pub use image::{parse_pnm, read_image, read_image_dir, serialize_ppm, write_ppm};
pub use y4m::{parse_y4m, read_y4m, serialize_y4m, write_y4m};
pub use yuv::{frame_size_i420, parse_raw_yuv, read_raw_yuv};

use crate::error::{Error, Result};

/// Options needed by formats that do not describe themselves.
#[derive(Debug, Clone, Copy, Default)]
pub struct VideoOptions {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub frame_rate: Option<FrameRate>,
}

/// Opens a video by shape: a directory is an image sequence, `.y4m` is
/// YUV4MPEG2, `.yuv` is raw I420 (needs width and height), and a single
/// image becomes a one-frame sequence.
pub fn load_video(path: impl AsRef<Path>, opts: &VideoOptions) -> Result<VideoSequence> {
    let path = path.as_ref();
    let rate = opts.frame_rate.unwrap_or_default();
    if path.is_dir() {
        return read_image_dir(path, rate);
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("y4m") => read_y4m(path),
        Some("yuv") => match (opts.width, opts.height) {
            (Some(w), Some(h)) => read_raw_yuv(path, w, h, rate),
            _ => Err(Error::Argument(format!(
                "{} is raw YUV; --width and --height are required",
                path.display()
            ))),
        },
        Some("ppm" | "pgm" | "pnm" | "png") => {
            VideoSequence::new(vec![read_image(path)?], rate, path.display().to_string())
        }
        _ => Err(Error::Unsupported(format!(
            "cannot tell the format of {}",
            path.display()
        ))),
    }
}
