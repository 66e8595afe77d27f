use crate::error::{Error, Result};

use super::frame::{chroma_dims, ColorSpace, Frame, Plane};

/// Quantization range of Y'CbCr code values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorRange {
    /// Y in 16..=235, chroma in 16..=240.
    #[default]
    Limited,
    /// All components use 0..=255.
    Full,
}

impl std::str::FromStr for ColorRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "limited" => Ok(ColorRange::Limited),
            "full" => Ok(ColorRange::Full),
            other => Err(Error::Argument(format!(
                "unknown range `{other}` (expected limited or full)"
            ))),
        }
    }
}

// BT.709 luma coefficients.
pub const KR: f32 = 0.2126;
pub const KB: f32 = 0.0722;
pub const KG: f32 = 1.0 - KR - KB;

impl ColorRange {
    /// (luma offset, luma excursion, chroma excursion) in code values.
    fn scale(self) -> (f32, f32, f32) {
        match self {
            ColorRange::Limited => (16.0, 219.0, 224.0),
            ColorRange::Full => (0.0, 255.0, 255.0),
        }
    }
}

/// Converts a YUV420_8 frame to full-resolution RGB with the BT.709 limited-range matrix.
pub fn to_rgb(frame: &Frame) -> Result<Frame> {
    to_rgb_with_range(frame, ColorRange::Limited)
}

/// Converts a YUV420_8 frame to RGB using BT.709 and the given range.
/// Chroma is upsampled by nearest-neighbour duplication; output is clamped to [0, 1].
pub fn to_rgb_with_range(frame: &Frame, range: ColorRange) -> Result<Frame> {
    if frame.colorspace() != ColorSpace::Yuv420_8 {
        return Err(Error::Precondition(
            "to_rgb expects a YUV420_8 frame".into(),
        ));
    }
    let (w, h) = (frame.width(), frame.height());
    let (y_off, y_exc, c_exc) = range.scale();
    let (yp, up, vp) = (frame.plane(0), frame.plane(1), frame.plane(2));
    let cw = up.width;

    // Inverse of E'y = Kr R + Kg G + Kb B, E'cb = (B - E'y) / (2 - 2Kb), E'cr = (R - E'y) / (2 - 2Kr).
    let cr_r = 2.0 - 2.0 * KR;
    let cb_b = 2.0 - 2.0 * KB;
    let cb_g = -cb_b * KB / KG;
    let cr_g = -cr_r * KR / KG;

    let mut r = vec![0.0f32; w * h];
    let mut g = vec![0.0f32; w * h];
    let mut b = vec![0.0f32; w * h];
    for row in 0..h {
        let crow = row / 2;
        for col in 0..w {
            let i = row * w + col;
            let ci = crow * cw + col / 2;
            let luma = (yp.data[i] - y_off) / y_exc;
            let cb = (up.data[ci] - 128.0) / c_exc;
            let cr = (vp.data[ci] - 128.0) / c_exc;
            r[i] = (luma + cr_r * cr).clamp(0.0, 1.0);
            g[i] = (luma + cb_g * cb + cr_g * cr).clamp(0.0, 1.0);
            b[i] = (luma + cb_b * cb).clamp(0.0, 1.0);
        }
    }
    Frame::rgb(
        w,
        h,
        Plane::new(w, h, r)?,
        Plane::new(w, h, g)?,
        Plane::new(w, h, b)?,
    )
}

/// Converts an RGB frame to 8-bit 4:2:0 with BT.709. Chroma is the mean of
/// each 2x2 block; all code values are rounded and clamped to 0..=255.
pub fn rgb_to_yuv420(frame: &Frame, range: ColorRange) -> Result<Frame> {
    if frame.colorspace() != ColorSpace::RgbFloat {
        return Err(Error::Precondition(
            "rgb_to_yuv420 expects an RGB_FLOAT frame".into(),
        ));
    }
    let (w, h) = (frame.width(), frame.height());
    let (cw, ch) = chroma_dims(w, h);
    let (y_off, y_exc, c_exc) = range.scale();
    let (rp, gp, bp) = (frame.plane(0), frame.plane(1), frame.plane(2));

    let mut luma = vec![0.0f32; w * h];
    let mut cb_acc = vec![0.0f32; cw * ch];
    let mut cr_acc = vec![0.0f32; cw * ch];
    let mut count = vec![0u32; cw * ch];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let (r, g, b) = (rp.data[i], gp.data[i], bp.data[i]);
            let ey = KR * r + KG * g + KB * b;
            luma[i] = quantize(y_off + y_exc * ey);
            let ci = (row / 2) * cw + col / 2;
            cb_acc[ci] += (b - ey) / (2.0 - 2.0 * KB);
            cr_acc[ci] += (r - ey) / (2.0 - 2.0 * KR);
            count[ci] += 1;
        }
    }
    let u = cb_acc
        .iter()
        .zip(&count)
        .map(|(c, &n)| quantize(128.0 + c_exc * c / n as f32))
        .collect();
    let v = cr_acc
        .iter()
        .zip(&count)
        .map(|(c, &n)| quantize(128.0 + c_exc * c / n as f32))
        .collect();
    Frame::yuv420(
        w,
        h,
        Plane::new(w, h, luma)?,
        Plane::new(cw, ch, u)?,
        Plane::new(cw, ch, v)?,
    )
}

fn quantize(x: f32) -> f32 {
    x.round().clamp(0.0, 255.0)
}

/// BT.709 luma on the 0–255 code-value scale, used by PSNR and SSIM.
/// YUV frames contribute their Y plane as-is.
pub fn luma_code_values(frame: &Frame) -> Plane {
    match frame.colorspace() {
        ColorSpace::Yuv420_8 => frame.plane(0).clone(),
        ColorSpace::RgbFloat => rgb_luma(frame, 255.0),
    }
}

/// Luma scaled to [0, 1], used by the flow estimator.
pub fn luma_unit(frame: &Frame) -> Plane {
    match frame.colorspace() {
        ColorSpace::Yuv420_8 => {
            let y = frame.plane(0);
            Plane {
                width: y.width,
                height: y.height,
                data: y.data.iter().map(|v| v / 255.0).collect(),
            }
        }
        ColorSpace::RgbFloat => rgb_luma(frame, 1.0),
    }
}

fn rgb_luma(frame: &Frame, scale: f32) -> Plane {
    let (r, g, b) = (frame.plane(0), frame.plane(1), frame.plane(2));
    let data = r
        .data
        .iter()
        .zip(&g.data)
        .zip(&b.data)
        .map(|((r, g), b)| scale * (KR * r + KG * g + KB * b))
        .collect();
    Plane {
        width: frame.width(),
        height: frame.height(),
        data,
    }
}

/// Converts to RGB if needed; RGB frames are cloned.
pub fn ensure_rgb(frame: &Frame, range: ColorRange) -> Result<Frame> {
    match frame.colorspace() {
        ColorSpace::RgbFloat => Ok(frame.clone()),
        ColorSpace::Yuv420_8 => to_rgb_with_range(frame, range),
    }
}
