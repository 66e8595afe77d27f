//! Dense CPU kernels for the feature trunk. All arithmetic is f32.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::archive::Tensor;

/// A `channels x height x width` activation volume.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "feature map {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureMap {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn spatial_len(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        (self.channels, self.height, self.width) == (other.channels, other.height, other.width)
    }
}

/// Output length of a sliding window, or `None` when the window does not fit.
pub fn window_output_len(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = input + 2 * padding;
    (padded >= kernel && stride > 0).then(|| (padded - kernel) / stride + 1)
}

struct ConvGeometry {
    out_channels: usize,
    in_channels: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
}

fn conv_geometry(
    input: &FeatureMap,
    kernel: &Tensor,
    bias: &[f32],
    stride: usize,
    padding: usize,
) -> Result<ConvGeometry> {
    let &[out_channels, in_channels, kh, kw] = kernel.shape.as_slice() else {
        return Err(Error::Shape(format!(
            "conv kernel must be 4-D, got {:?}",
            kernel.shape
        )));
    };
    if in_channels != input.channels {
        return Err(Error::Shape(format!(
            "kernel expects {in_channels} input channels, input has {}",
            input.channels
        )));
    }
    if bias.len() != out_channels {
        return Err(Error::Shape(format!(
            "bias has {} values for {out_channels} output channels",
            bias.len()
        )));
    }
    let too_small = || {
        Error::Shape(format!(
            "{}x{} input is smaller than the {kh}x{kw} kernel with padding {padding}",
            input.height, input.width
        ))
    };
    let oh = window_output_len(input.height, kh, stride, padding).ok_or_else(too_small)?;
    let ow = window_output_len(input.width, kw, stride, padding).ok_or_else(too_small)?;
    Ok(ConvGeometry {
        out_channels,
        in_channels,
        kh,
        kw,
        oh,
        ow,
    })
}

/// Cross-correlation with zero padding, evaluated by direct summation.
pub fn conv2d_direct(
    input: &FeatureMap,
    kernel: &Tensor,
    bias: &[f32],
    stride: usize,
    padding: usize,
) -> Result<FeatureMap> {
    let g = conv_geometry(input, kernel, bias, stride, padding)?;
    let mut out = FeatureMap::zeros(g.out_channels, g.oh, g.ow);
    let (h, w) = (input.height as isize, input.width as isize);
    for oc in 0..g.out_channels {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let mut acc = bias[oc];
                for ic in 0..g.in_channels {
                    for ky in 0..g.kh {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        if iy < 0 || iy >= h {
                            continue;
                        }
                        for kx in 0..g.kw {
                            let ix = (ox * stride + kx) as isize - padding as isize;
                            if ix < 0 || ix >= w {
                                continue;
                            }
                            let wv = kernel.data[((oc * g.in_channels + ic) * g.kh + ky) * g.kw + kx];
                            acc += wv * input.at(ic, iy as usize, ix as usize);
                        }
                    }
                }
                out.data[(oc * g.oh + oy) * g.ow + ox] = acc;
            }
        }
    }
    Ok(out)
}

/// Output positions per im2col tile.
const TILE: usize = 64;
/// Output channels accumulated together per pass over a tile.
const OC_BLOCK: usize = 4;

/// Cross-correlation with zero padding, evaluated as tiled im2col + matrix
/// product. Tiles run in parallel; each output value has a fixed summation
/// order, so results do not depend on the thread count.
pub fn conv2d(
    input: &FeatureMap,
    kernel: &Tensor,
    bias: &[f32],
    stride: usize,
    padding: usize,
) -> Result<FeatureMap> {
    let g = conv_geometry(input, kernel, bias, stride, padding)?;
    let k_len = g.in_channels * g.kh * g.kw;
    let positions = g.oh * g.ow;
    let (h, w) = (input.height as isize, input.width as isize);

    let tiles: Vec<Vec<f32>> = (0..positions.div_ceil(TILE))
        .into_par_iter()
        .map(|tile| {
            let p0 = tile * TILE;
            let t = TILE.min(positions - p0);
            // col[k][j]: input sample feeding kernel tap k at output position p0 + j
            let mut col = vec![0.0f32; k_len * t];
            for j in 0..t {
                let p = p0 + j;
                let (oy, ox) = (p / g.ow, p % g.ow);
                let base_y = (oy * stride) as isize - padding as isize;
                let base_x = (ox * stride) as isize - padding as isize;
                let mut k = 0;
                for ic in 0..g.in_channels {
                    let chan = input.channel(ic);
                    for ky in 0..g.kh {
                        let iy = base_y + ky as isize;
                        let row_ok = iy >= 0 && iy < h;
                        for kx in 0..g.kw {
                            let ix = base_x + kx as isize;
                            if row_ok && ix >= 0 && ix < w {
                                col[k * t + j] = chan[iy as usize * input.width + ix as usize];
                            }
                            k += 1;
                        }
                    }
                }
            }
            let mut out = vec![0.0f32; g.out_channels * t];
            for oc0 in (0..g.out_channels).step_by(OC_BLOCK) {
                let nb = OC_BLOCK.min(g.out_channels - oc0);
                let mut acc = [[0.0f32; TILE]; OC_BLOCK];
                for (b, row) in acc.iter_mut().enumerate().take(nb) {
                    row[..t].fill(bias[oc0 + b]);
                }
                for k in 0..k_len {
                    let c = &col[k * t..(k + 1) * t];
                    for (b, row) in acc.iter_mut().enumerate().take(nb) {
                        let wv = kernel.data[(oc0 + b) * k_len + k];
                        for (o, &x) in row[..t].iter_mut().zip(c) {
                            *o += wv * x;
                        }
                    }
                }
                for (b, row) in acc.iter().enumerate().take(nb) {
                    out[(oc0 + b) * t..(oc0 + b + 1) * t].copy_from_slice(&row[..t]);
                }
            }
            out
        })
        .collect();

    let mut result = FeatureMap::zeros(g.out_channels, g.oh, g.ow);
    for (tile, vals) in tiles.iter().enumerate() {
        let p0 = tile * TILE;
        let t = vals.len() / g.out_channels;
        for oc in 0..g.out_channels {
            result.data[oc * positions + p0..oc * positions + p0 + t]
                .copy_from_slice(&vals[oc * t..(oc + 1) * t]);
        }
    }
    Ok(result)
}

pub fn relu(input: &FeatureMap) -> FeatureMap {
    let mut out = input.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(map: &mut FeatureMap) {
    for v in &mut map.data {
        *v = v.max(0.0);
    }
}

/// Windowed maximum without padding.
pub fn maxpool(input: &FeatureMap, kernel: usize, stride: usize) -> Result<FeatureMap> {
    let too_small = || {
        Error::Shape(format!(
            "{}x{} input is smaller than the {kernel}x{kernel} pooling window",
            input.height, input.width
        ))
    };
    let oh = window_output_len(input.height, kernel, stride, 0).ok_or_else(too_small)?;
    let ow = window_output_len(input.width, kernel, stride, 0).ok_or_else(too_small)?;
    let mut out = FeatureMap::zeros(input.channels, oh, ow);
    for c in 0..input.channels {
        let chan = input.channel(c);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f32::NEG_INFINITY;
                for ky in 0..kernel {
                    let row = &chan[(oy * stride + ky) * input.width + ox * stride..][..kernel];
                    for &v in row {
                        m = m.max(v);
                    }
                }
                out.data[(c * oh + oy) * ow + ox] = m;
            }
        }
    }
    Ok(out)
}
