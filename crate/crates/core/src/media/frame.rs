use std::fmt;

use crate::error::{Error, Result};

/// Pixel layout of a [`Frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    /// 8-bit 4:2:0 Y'CbCr; planes hold integer code values 0..=255 stored as reals.
    Yuv420_8,
    /// Full-resolution R, G, B planes in [0, 1].
    RgbFloat,
}

/// A single image plane in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "plane of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// One decoded video frame. Immutable once built; the constructors enforce
/// the plane geometry of the colour space.
#[derive(Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    planes: Vec<Plane>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("colorspace", &self.colorspace)
            .finish_non_exhaustive()
    }
}

/// Chroma plane dimensions for a 4:2:0 frame.
pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

impl Frame {
    pub fn yuv420(width: usize, height: usize, y: Plane, u: Plane, v: Plane) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("frame dimensions must be non-zero".into()));
        }
        let (cw, ch) = chroma_dims(width, height);
        if (y.width, y.height) != (width, height) {
            return Err(Error::Shape(format!(
                "luma plane is {}x{}, frame is {width}x{height}",
                y.width, y.height
            )));
        }
        for (name, p) in [("U", &u), ("V", &v)] {
            if (p.width, p.height) != (cw, ch) {
                return Err(Error::Shape(format!(
                    "{name} plane is {}x{}, expected {cw}x{ch}",
                    p.width, p.height
                )));
            }
        }
        Ok(Frame {
            width,
            height,
            colorspace: ColorSpace::Yuv420_8,
            planes: vec![y, u, v],
        })
    }

    /// Builds an RGB frame; values are clamped into [0, 1].
    pub fn rgb(width: usize, height: usize, r: Plane, g: Plane, b: Plane) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("frame dimensions must be non-zero".into()));
        }
        let mut planes = vec![r, g, b];
        for p in &mut planes {
            if (p.width, p.height) != (width, height) {
                return Err(Error::Shape(format!(
                    "RGB plane is {}x{}, frame is {width}x{height}",
                    p.width, p.height
                )));
            }
            for s in &mut p.data {
                *s = s.clamp(0.0, 1.0);
            }
        }
        Ok(Frame {
            width,
            height,
            colorspace: ColorSpace::RgbFloat,
            planes,
        })
    }

    /// Builds a frame of either colour space from raw planes.
    pub fn from_planes(
        colorspace: ColorSpace,
        width: usize,
        height: usize,
        planes: [Plane; 3],
    ) -> Result<Self> {
        let [a, b, c] = planes;
        match colorspace {
            ColorSpace::Yuv420_8 => Frame::yuv420(width, height, a, b, c),
            ColorSpace::RgbFloat => Frame::rgb(width, height, a, b, c),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &Plane {
        &self.planes[index]
    }

    pub fn same_geometry(&self, other: &Frame) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.colorspace == other.colorspace
    }

    pub(crate) fn check_same_size(&self, other: &Frame) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "frame sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Frame rate as a rational number of frames per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub const fn new(num: u32, den: u32) -> Self {
        FrameRate { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn scaled(&self, factor: u32) -> Self {
        FrameRate {
            num: self.num * factor,
            den: self.den,
        }
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        FrameRate::new(30, 1)
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.num, self.den)
    }
}

impl std::str::FromStr for FrameRate {
    type Err = Error;

    /// Accepts `30`, `30000:1001` or `30000/1001`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("invalid frame rate `{s}`"));
        let (num, den) = match s.split_once([':', '/']) {
            Some((n, d)) => (
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        if num == 0 || den == 0 {
            return Err(bad());
        }
        Ok(FrameRate { num, den })
    }
}

/// An ordered run of frames sharing size and colour space.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    frames: Vec<Frame>,
    frame_rate: FrameRate,
    source: String,
}

impl VideoSequence {
    pub fn new(frames: Vec<Frame>, frame_rate: FrameRate, source: impl Into<String>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or(Error::InsufficientFrames { needed: 1, got: 0 })?;
        if let Some((i, _)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| !f.same_geometry(first))
        {
            return Err(Error::Shape(format!(
                "frame {i} differs in size or colour space from frame 0"
            )));
        }
        Ok(VideoSequence {
            frames,
            frame_rate,
            source: source.into(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> FrameRate {
        self.frame_rate
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.frames[0].colorspace()
    }

    pub(crate) fn check_comparable(&self, other: &VideoSequence) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "sequence lengths differ: {} vs {} frames",
                self.len(),
                other.len()
            )));
        }
        self.frames[0].check_same_size(&other.frames[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chroma_planes_round_up() {
        assert_eq!(chroma_dims(5, 3), (3, 2));
        let f = Frame::yuv420(
            5,
            3,
            Plane::filled(5, 3, 16.0),
            Plane::filled(3, 2, 128.0),
            Plane::filled(3, 2, 128.0),
        );
        assert!(f.is_ok());
        let bad = Frame::yuv420(
            5,
            3,
            Plane::filled(5, 3, 16.0),
            Plane::filled(2, 2, 128.0),
            Plane::filled(3, 2, 128.0),
        );
        assert!(matches!(bad, Err(Error::Shape(_))));
    }

    #[test]
    fn rgb_is_clamped() {
        let f = Frame::rgb(
            1,
            1,
            Plane::new(1, 1, vec![1.5]).unwrap(),
            Plane::new(1, 1, vec![-0.2]).unwrap(),
            Plane::new(1, 1, vec![0.5]).unwrap(),
        )
        .unwrap();
        assert_eq!(f.plane(0).data, vec![1.0]);
        assert_eq!(f.plane(1).data, vec![0.0]);
    }

    #[test]
    fn sequence_rejects_mixed_geometry() {
        let a = Frame::rgb(2, 2, Plane::filled(2, 2, 0.0), Plane::filled(2, 2, 0.0), Plane::filled(2, 2, 0.0)).unwrap();
        let b = Frame::rgb(3, 2, Plane::filled(3, 2, 0.0), Plane::filled(3, 2, 0.0), Plane::filled(3, 2, 0.0)).unwrap();
        assert!(VideoSequence::new(vec![a.clone(), b], FrameRate::default(), "").is_err());
        assert!(VideoSequence::new(vec![], FrameRate::default(), "").is_err());
        assert_eq!(VideoSequence::new(vec![a], FrameRate::default(), "").unwrap().len(), 1);
    }

    #[test]
    fn frame_rate_parsing() {
        assert_eq!("30".parse::<FrameRate>().unwrap(), FrameRate::new(30, 1));
        assert_eq!("60000:1001".parse::<FrameRate>().unwrap(), FrameRate::new(60000, 1001));
        assert_eq!("24/1".parse::<FrameRate>().unwrap(), FrameRate::new(24, 1));
        assert!("0:1".parse::<FrameRate>().is_err());
        assert!("x".parse::<FrameRate>().is_err());
    }
}
