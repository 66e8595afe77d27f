//! Convolutional feature trunk driven by a weight archive.

pub mod archive;
pub mod ops;
mod trunk;

pub use archive::{
    load_weight_archive, parse_tensor_file, read_tensor_file, serialize_tensor_file, LayerSpec,
    Manifest, OpKind, Tensor, TensorFile, WeightArchive, TAP_COUNT,
};
pub use ops::{conv2d, conv2d_direct, maxpool, relu, FeatureMap};
pub use trunk::{extract_features, min_input_size, tap_sizes, FeaturePyramid};
