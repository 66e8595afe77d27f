//! Still images and numbered image sequences.
//!
//! Binary PPM/PGM are decoded here; PNG goes through the `image` crate.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::frame::{ColorSpace, Frame, FrameRate, Plane, VideoSequence};

/// Decodes a binary PPM (P6) or PGM (P5) with maxval <= 255 into an RGB frame.
pub fn parse_pnm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse {
                offset: pos,
                message: "truncated PNM header".into(),
            });
        }
        fields.push((start, &bytes[start..pos]));
        if fields.len() == 1 && fields[0].1 != b"P6" && fields[0].1 != b"P5" {
            return Err(Error::Unsupported(format!(
                "PNM type `{}`; only binary P5/P6 are supported",
                String::from_utf8_lossy(fields[0].1)
            )));
        }
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let num = |(offset, text): (usize, &[u8])| -> Result<usize> {
        std::str::from_utf8(text)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Parse {
                offset,
                message: format!("bad PNM header field `{}`", String::from_utf8_lossy(text)),
            })
    };
    let channels = if fields[0].1 == b"P6" { 3 } else { 1 };
    let width = num(fields[1])?;
    let height = num(fields[2])?;
    let maxval = num(fields[3])?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Unsupported(format!("PNM maxval {maxval}; only 8-bit is supported")));
    }
    let need = width * height * channels;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < need {
        return Err(Error::Truncated {
            frame: 0,
            expected: need,
            found: raster.len(),
        });
    }
    let scale = 1.0 / maxval as f32;
    let plane = |c: usize| Plane {
        width,
        height,
        data: (0..width * height)
            .map(|i| raster[i * channels + c] as f32 * scale)
            .collect(),
    };
    if channels == 3 {
        Frame::rgb(width, height, plane(0), plane(1), plane(2))
    } else {
        let g = plane(0);
        Frame::rgb(width, height, g.clone(), g.clone(), g)
    }
}

fn decode_png(path: &Path) -> Result<Frame> {
    let img = image::open(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .to_rgb32f();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes = [vec![0.0f32; w * h], vec![0.0f32; w * h], vec![0.0f32; w * h]];
    for (i, px) in img.pixels().enumerate() {
        for c in 0..3 {
            planes[c][i] = px.0[c];
        }
    }
    let [r, g, b] = planes;
    Frame::rgb(w, h, Plane::new(w, h, r)?, Plane::new(w, h, g)?, Plane::new(w, h, b)?)
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

fn is_image(path: &Path) -> bool {
    matches!(extension(path).as_deref(), Some("ppm" | "pgm" | "pnm" | "png"))
}

/// Reads a PPM/PGM/PNG image as an RGB frame.
pub fn read_image(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("png") => decode_png(path),
        Some("ppm" | "pgm" | "pnm") => {
            let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
            parse_pnm(&bytes)
        }
        _ => Err(Error::Unsupported(format!(
            "image type of {}",
            path.display()
        ))),
    }
}

/// Writes an RGB frame as binary PPM, rounding to 8 bits.
pub fn serialize_ppm(frame: &Frame) -> Result<Vec<u8>> {
    if frame.colorspace() != ColorSpace::RgbFloat {
        return Err(Error::Precondition("PPM output requires an RGB frame".into()));
    }
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    let n = frame.width() * frame.height();
    out.reserve(3 * n);
    for i in 0..n {
        for p in frame.planes() {
            out.push((p.data[i] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn write_ppm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_ppm(frame)?).map_err(|e| Error::file(path, e))
}

/// Sort key: the last run of digits in the file stem, then the name itself.
fn sequence_key(path: &Path) -> (u64, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let digits: String = stem
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    (digits.parse().unwrap_or(u64::MAX), stem.to_string())
}

/// Reads every PPM/PGM/PNG file in `dir`, ordered by frame number.
pub fn read_image_dir(dir: impl AsRef<Path>, frame_rate: FrameRate) -> Result<VideoSequence> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    paths.sort_by_key(|p| sequence_key(p));
    let frames = paths.iter().map(read_image).collect::<Result<Vec<_>>>()?;
    if frames.is_empty() {
        return Err(Error::Format(format!("no images found in {}", dir.display())));
    }
    VideoSequence::new(frames, frame_rate, dir.display().to_string())
}
