//! The `FLPW` weight archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FLPW" | version: u32 (=1) | entry count: u32
//! per entry: name length: u16 | UTF-8 name | dtype: u8 (0 = f32) | rank: u8
//!            | dims: u32 * rank | f32 payload
//! manifest length: u32 | UTF-8 JSON manifest
//! ```
//!
//! The manifest lists the trunk layers in execution order and names the
//! entries holding conv weights, input normalization and per-tap linear
//! weights. Loading validates every reference against the stored shapes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FLPW";
pub const VERSION: u32 = 1;
/// Number of feature taps a trunk must expose.
pub const TAP_COUNT: usize = 5;

/// A named dense array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "tensor shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }
}

/// Raw contents of an `FLPW` container, before manifest validation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorFile {
    pub entries: Vec<(String, Tensor)>,
    pub manifest: String,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!(
                "archive truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses the binary container without interpreting the manifest.
pub fn parse_tensor_file(bytes: &[u8]) -> Result<TensorFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic").ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Format("missing FLPW magic".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported archive version {version}")));
    }
    let count = r.u32("entry count")? as usize;
    let mut entries = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "entry name")?)
            .map_err(|_| Error::Format("entry name is not UTF-8".into()))?
            .to_string();
        let dtype = r.u8("dtype")?;
        if dtype != 0 {
            return Err(Error::Format(format!("entry `{name}` has unsupported dtype {dtype}")));
        }
        let rank = r.u8("rank")? as usize;
        let shape = (0..rank)
            .map(|_| r.u32("dims").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let payload = r.take(n * 4, &format!("payload of `{name}`"))?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        entries.push((name, Tensor { shape, data }));
    }
    let manifest_len = r.u32("manifest length")? as usize;
    let manifest = std::str::from_utf8(r.take(manifest_len, "manifest")?)
        .map_err(|_| Error::Format("manifest is not UTF-8".into()))?
        .to_string();
    Ok(TensorFile { entries, manifest })
}

pub fn serialize_tensor_file(file: &TensorFile) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(file.entries.len() as u32).to_le_bytes());
    for (name, t) in &file.entries {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(0);
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(file.manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(file.manifest.as_bytes());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Conv,
    Relu,
    Maxpool,
}

/// One trunk stage in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub op: OpKind,
    #[serde(default)]
    pub kernel: Vec<usize>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    #[serde(default)]
    pub tap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub input_shift: String,
    pub input_scale: String,
    /// Per-tap linear weight entries, in tap order.
    pub linear: Vec<String>,
    pub layers: Vec<LayerSpec>,
}

/// Validated trunk parameters plus the LPIPS per-channel weights.
#[derive(Debug, Clone)]
pub struct WeightArchive {
    entries: BTreeMap<String, Tensor>,
    manifest: Manifest,
    tap_channels: Vec<usize>,
}

impl WeightArchive {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::Format("empty archive".into()));
        }
        let file = parse_tensor_file(bytes)?;
        Self::from_tensor_file(file)
    }

    pub fn from_tensor_file(file: TensorFile) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&file.manifest)
            .map_err(|e| Error::Format(format!("bad manifest: {e}")))?;
        let mut entries = BTreeMap::new();
        for (name, t) in file.entries {
            if entries.insert(name.clone(), t).is_some() {
                return Err(Error::Validation {
                    entry: name,
                    message: "duplicate entry".into(),
                });
            }
        }
        let tap_channels = validate(&manifest, &entries)?;
        Ok(WeightArchive {
            entries,
            manifest,
            tap_channels,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn entry(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn entry_names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Channel count at each tap.
    pub fn tap_channels(&self) -> &[usize] {
        &self.tap_channels
    }

    pub fn input_shift(&self) -> &[f32] {
        &self.entries[&self.manifest.input_shift].data
    }

    pub fn input_scale(&self) -> &[f32] {
        &self.entries[&self.manifest.input_scale].data
    }

    pub fn linear_weights(&self) -> Vec<&[f32]> {
        self.manifest
            .linear
            .iter()
            .map(|n| self.entries[n].data.as_slice())
            .collect()
    }

    pub(crate) fn tensor(&self, name: &str) -> &Tensor {
        &self.entries[name]
    }
}

fn lookup<'a>(entries: &'a BTreeMap<String, Tensor>, name: &str) -> Result<&'a Tensor> {
    entries.get(name).ok_or_else(|| Error::Validation {
        entry: name.to_string(),
        message: "referenced by the manifest but missing from the archive".into(),
    })
}

fn expect_shape(name: &str, tensor: &Tensor, shape: &[usize]) -> Result<()> {
    if tensor.shape != shape {
        return Err(Error::Validation {
            entry: name.to_string(),
            message: format!("shape {:?} does not match manifest {:?}", tensor.shape, shape),
        });
    }
    Ok(())
}

/// Checks every manifest reference and returns the channel count at each tap.
fn validate(manifest: &Manifest, entries: &BTreeMap<String, Tensor>) -> Result<Vec<usize>> {
    for name in [&manifest.input_shift, &manifest.input_scale] {
        expect_shape(name, lookup(entries, name)?, &[3])?;
    }
    let scale = &entries[&manifest.input_scale].data;
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::Validation {
            entry: manifest.input_scale.clone(),
            message: "scale must be finite and non-zero".into(),
        });
    }

    let mut channels = 3;
    let mut taps = Vec::new();
    for (i, layer) in manifest.layers.iter().enumerate() {
        let label = || format!("layers[{i}]");
        if layer.stride == 0 {
            return Err(Error::Validation {
                entry: label(),
                message: "stride must be positive".into(),
            });
        }
        match layer.op {
            OpKind::Conv => {
                let wname = layer.weight.as_deref().ok_or_else(|| Error::Validation {
                    entry: label(),
                    message: "conv layer without a weight entry".into(),
                })?;
                if layer.kernel.len() != 4 {
                    return Err(Error::Validation {
                        entry: wname.to_string(),
                        message: format!("conv kernel must be 4-D, manifest says {:?}", layer.kernel),
                    });
                }
                expect_shape(wname, lookup(entries, wname)?, &layer.kernel)?;
                if layer.kernel[1] != channels {
                    return Err(Error::Validation {
                        entry: wname.to_string(),
                        message: format!(
                            "expects {} input channels but the previous stage yields {channels}",
                            layer.kernel[1]
                        ),
                    });
                }
                if let Some(bname) = layer.bias.as_deref() {
                    expect_shape(bname, lookup(entries, bname)?, &[layer.kernel[0]])?;
                }
                channels = layer.kernel[0];
            }
            OpKind::Maxpool => {
                if layer.kernel.is_empty() || layer.kernel.len() > 2 || layer.kernel.contains(&0) {
                    return Err(Error::Validation {
                        entry: label(),
                        message: format!("bad pooling window {:?}", layer.kernel),
                    });
                }
            }
            OpKind::Relu => {}
        }
        if layer.tap {
            taps.push(channels);
        }
    }
    if taps.len() != TAP_COUNT {
        return Err(Error::Validation {
            entry: "manifest".into(),
            message: format!("expected {TAP_COUNT} tap layers, found {}", taps.len()),
        });
    }
    if manifest.linear.len() != taps.len() {
        return Err(Error::Validation {
            entry: "manifest".into(),
            message: format!(
                "{} linear weight vectors for {} taps",
                manifest.linear.len(),
                taps.len()
            ),
        });
    }
    for (name, &c) in manifest.linear.iter().zip(&taps) {
        let t = lookup(entries, name)?;
        expect_shape(name, t, &[c])?;
        if t.data.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Validation {
                entry: name.clone(),
                message: "linear weights must be finite and non-negative".into(),
            });
        }
    }
    Ok(taps)
}

pub fn load_weight_archive(path: impl AsRef<Path>) -> Result<WeightArchive> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    WeightArchive::from_bytes(&bytes)
}

/// Reads a bare tensor container (e.g. recorded activations) without a trunk manifest.
pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<TensorFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    parse_tensor_file(&bytes)
}
