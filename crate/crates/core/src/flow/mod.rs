//! Optical flow estimation, `.flo` I/O and flow-derived pooling weights.

mod dis;
mod field;
mod provider;
mod weight;

pub use dis::{estimate_flow, estimate_flow_luma, FlowParams};
pub use field::{parse_flo, read_flo, serialize_flo, write_flo, FlowField, FLO_MAGIC};
pub use provider::{BuiltinFlow, FloDirectory, FlowProvider, FlowRole, FlowSource};
pub use weight::{flow_diff_weight, flow_magnitude_weight, WeightMap, ZERO_SUM_THRESHOLD};
