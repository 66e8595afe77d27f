use std::path::Path;

use crate::error::{Error, Result};

/// Dense motion field in pixels per frame; `u` is horizontal, `v` vertical.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::Shape(format!(
                "flow planes must hold {} values for {width}x{height}, got {} and {}",
                width * height,
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Precondition("flow contains non-finite values".into()));
        }
        Ok(FlowField { width, height, u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
        }
    }

    /// The same displacement at every pixel.
    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        FlowField {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub(crate) fn check_same_size(&self, other: &FlowField) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Shape(format!(
                "flow sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Per-pixel displacement magnitude.
    pub fn magnitude(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(&u, &v)| (u as f64).hypot(v as f64))
            .collect()
    }
}

/// `PIEH` read as a little-endian f32.
pub const FLO_MAGIC: f32 = 202021.25;

/// Middlebury `.flo`: magic, width, height, then interleaved (u, v) rows.
pub fn serialize_flo(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * field.u.len());
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(field.width as i32).to_le_bytes());
    out.extend_from_slice(&(field.height as i32).to_le_bytes());
    for (u, v) in field.u.iter().zip(&field.v) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 12 {
        return Err(Error::Format(".flo header is shorter than 12 bytes".into()));
    }
    let word = |i: usize| <[u8; 4]>::try_from(&bytes[i..i + 4]).unwrap();
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(Error::Format(format!("bad .flo magic {magic}")));
    }
    let width = i32::from_le_bytes(word(4));
    let height = i32::from_le_bytes(word(8));
    if width <= 0 || height <= 0 {
        return Err(Error::Format(format!("bad .flo dimensions {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = 8 * width * height;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(Error::Truncated {
            frame: 0,
            expected,
            found: payload.len(),
        });
    }
    let mut u = Vec::with_capacity(width * height);
    let mut v = Vec::with_capacity(width * height);
    for pair in payload.chunks_exact(8) {
        u.push(f32::from_le_bytes(pair[..4].try_into().unwrap()));
        v.push(f32::from_le_bytes(pair[4..].try_into().unwrap()));
    }
    FlowField::new(width, height, u, v)
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    parse_flo(&bytes)
}

pub fn write_flo(field: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_flo(field)).map_err(|e| Error::file(path, e))
}
