use crate::error::{Error, Result};

use super::field::FlowField;

/// Total flow discrepancy below which a weight map falls back to uniform.
pub const ZERO_SUM_THRESHOLD: f64 = 1e-8;
/// Allowed deviation of a normalized map's sum from one.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// Non-negative spatial pooling weights that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    width: usize,
    height: usize,
    weights: Vec<f64>,
    uniform_fallback: bool,
}

impl WeightMap {
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != width * height || weights.is_empty() {
            return Err(Error::Shape(format!(
                "weight map {width}x{height} needs {} values, got {}",
                width * height,
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Precondition("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Normalization(total));
        }
        Ok(WeightMap {
            width,
            height,
            weights,
            uniform_fallback: false,
        })
    }

    /// Every entry `1 / (width * height)`, flagged as a fallback.
    pub fn uniform(width: usize, height: usize) -> Self {
        let n = width * height;
        WeightMap {
            width,
            height,
            weights: vec![1.0 / n as f64; n],
            uniform_fallback: true,
        }
    }

    #[cfg(test)]
    pub(crate) fn from_raw_unchecked(width: usize, height: usize, weights: Vec<f64>) -> Self {
        WeightMap {
            width,
            height,
            weights,
            uniform_fallback: false,
        }
    }

    /// Normalizes non-negative magnitudes, falling back to uniform when they
    /// sum to less than [`ZERO_SUM_THRESHOLD`].
    pub fn from_magnitudes(width: usize, height: usize, magnitudes: Vec<f64>) -> Self {
        let total: f64 = magnitudes.iter().sum();
        if !(total >= ZERO_SUM_THRESHOLD) {
            return WeightMap::uniform(width, height);
        }
        WeightMap {
            width,
            height,
            weights: magnitudes.into_iter().map(|m| m / total).collect(),
            uniform_fallback: false,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform_fallback(&self) -> bool {
        self.uniform_fallback
    }
}

/// Normalized per-pixel magnitude of `F_ref - F_dis`.
pub fn flow_diff_weight(flow_ref: &FlowField, flow_dis: &FlowField) -> Result<WeightMap> {
    flow_ref.check_same_size(flow_dis)?;
    let mags = flow_ref
        .u()
        .iter()
        .zip(flow_ref.v())
        .zip(flow_dis.u().iter().zip(flow_dis.v()))
        .map(|((&ur, &vr), (&ud, &vd))| (ur as f64 - ud as f64).hypot(vr as f64 - vd as f64))
        .collect();
    Ok(WeightMap::from_magnitudes(flow_ref.width(), flow_ref.height(), mags))
}

/// Normalized per-pixel magnitude of a single flow field.
pub fn flow_magnitude_weight(flow: &FlowField) -> WeightMap {
    WeightMap::from_magnitudes(flow.width(), flow.height(), flow.magnitude())
}
