use crate::error::{Error, Result};
use crate::media::{ColorSpace, Frame};

use super::archive::{LayerSpec, OpKind, WeightArchive};
use super::ops::{conv2d, maxpool, relu_in_place, window_output_len, FeatureMap};

/// Post-activation outputs of the tap layers, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    pub taps: Vec<FeatureMap>,
}

impl FeaturePyramid {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

fn pool_window(layer: &LayerSpec) -> usize {
    layer.kernel[0]
}

/// Spatial size after one layer, `None` if the layer cannot run.
fn layer_output(layer: &LayerSpec, h: usize, w: usize) -> Option<(usize, usize)> {
    match layer.op {
        OpKind::Conv => Some((
            window_output_len(h, layer.kernel[2], layer.stride, layer.padding)?,
            window_output_len(w, layer.kernel[3], layer.stride, layer.padding)?,
        )),
        OpKind::Maxpool => {
            let k = pool_window(layer);
            Some((
                window_output_len(h, k, layer.stride, 0)?,
                window_output_len(w, k, layer.stride, 0)?,
            ))
        }
        OpKind::Relu => Some((h, w)),
    }
}

/// Spatial size of every tap for an `h x w` input, or `None` if some layer
/// would produce an empty output.
pub fn tap_sizes(archive: &WeightArchive, h: usize, w: usize) -> Option<Vec<(usize, usize)>> {
    let mut size = (h, w);
    let mut taps = Vec::new();
    for layer in &archive.manifest().layers {
        size = layer_output(layer, size.0, size.1)?;
        if size.0 == 0 || size.1 == 0 {
            return None;
        }
        if layer.tap {
            taps.push(size);
        }
    }
    Some(taps)
}

/// Smallest square input for which every stage yields at least 1x1.
pub fn min_input_size(archive: &WeightArchive) -> usize {
    (1..)
        .find(|&s| tap_sizes(archive, s, s).is_some())
        .expect("some input size fits any finite trunk")
}

/// Runs the trunk on an RGB frame and returns the tap activations.
///
/// Pixels in [0, 1] are mapped to [-1, 1], then shifted and scaled per
/// channel by the archive's normalization vectors.
pub fn extract_features(frame: &Frame, archive: &WeightArchive) -> Result<FeaturePyramid> {
    if frame.colorspace() != ColorSpace::RgbFloat {
        return Err(Error::Precondition(
            "feature extraction expects an RGB_FLOAT frame".into(),
        ));
    }
    let (h, w) = (frame.height(), frame.width());
    if tap_sizes(archive, h, w).is_none() {
        let min = min_input_size(archive);
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
            min_width: min,
            min_height: min,
        });
    }

    let shift = archive.input_shift();
    let scale = archive.input_scale();
    let mut data = Vec::with_capacity(3 * h * w);
    for (c, plane) in frame.planes().iter().enumerate() {
        data.extend(plane.data.iter().map(|&v| (2.0 * v - 1.0 - shift[c]) / scale[c]));
    }
    let mut x = FeatureMap::new(3, h, w, data)?;

    let mut taps = Vec::new();
    for layer in &archive.manifest().layers {
        match layer.op {
            OpKind::Conv => {
                let kernel = archive.tensor(layer.weight.as_deref().unwrap_or_default());
                let zeros;
                let bias = match layer.bias.as_deref() {
                    Some(name) => archive.tensor(name).data.as_slice(),
                    None => {
                        zeros = vec![0.0; kernel.shape[0]];
                        &zeros
                    }
                };
                x = conv2d(&x, kernel, bias, layer.stride, layer.padding)?;
            }
            OpKind::Relu => relu_in_place(&mut x),
            OpKind::Maxpool => x = maxpool(&x, pool_window(layer), layer.stride)?,
        }
        if layer.tap {
            taps.push(x.clone());
        }
    }
    Ok(FeaturePyramid { taps })
}
