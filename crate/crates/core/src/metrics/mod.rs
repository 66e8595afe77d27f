//! Frame- and video-level quality metrics.

mod psnr;
mod ssim;
mod video;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use psnr::{is_infinite_psnr, psnr, PSNR_INFINITE};
pub use ssim::{gaussian_window, ssim};
pub use video::{
    lpips_frames, score_video, score_video_flolpips, score_video_flolpips_with, score_video_lpips,
    score_video_lpips_with, score_video_psnr, score_video_ssim, window_weight_map, ScoreConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MetricId {
    Psnr,
    Ssim,
    Lpips,
    /// Flow-difference weighting.
    Flolpips,
    /// Reference flow magnitude weighting.
    FlolpipsRefW,
    /// Distorted flow magnitude weighting.
    FlolpipsDisW,
}

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Psnr => "psnr",
            MetricId::Ssim => "ssim",
            MetricId::Lpips => "lpips",
            MetricId::Flolpips => "flolpips",
            MetricId::FlolpipsRefW => "flolpips-refw",
            MetricId::FlolpipsDisW => "flolpips-disw",
        }
    }

    /// Whether larger values mean better quality.
    pub fn needs_archive(self) -> bool {
        !matches!(self, MetricId::Psnr | MetricId::Ssim)
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, MetricId::Psnr | MetricId::Ssim)
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psnr" => Ok(MetricId::Psnr),
            "ssim" => Ok(MetricId::Ssim),
            "lpips" => Ok(MetricId::Lpips),
            "flolpips" => Ok(MetricId::Flolpips),
            "flolpips-refw" => Ok(MetricId::FlolpipsRefW),
            "flolpips-disw" => Ok(MetricId::FlolpipsDisW),
            other => Err(Error::Argument(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How FloLPIPS builds its pooling weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightingMode {
    /// Magnitude of the reference/distorted flow difference.
    #[default]
    Diff,
    /// Magnitude of the reference flow.
    RefOnly,
    /// Magnitude of the distorted flow.
    DisOnly,
}

impl WeightingMode {
    pub fn metric_id(self) -> MetricId {
        match self {
            WeightingMode::Diff => MetricId::Flolpips,
            WeightingMode::RefOnly => MetricId::FlolpipsRefW,
            WeightingMode::DisOnly => MetricId::FlolpipsDisW,
        }
    }

    pub const ALL: [WeightingMode; 3] = [WeightingMode::Diff, WeightingMode::RefOnly, WeightingMode::DisOnly];
}

impl std::str::FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diff" => Ok(WeightingMode::Diff),
            "ref" => Ok(WeightingMode::RefOnly),
            "dis" => Ok(WeightingMode::DisOnly),
            other => Err(Error::Argument(format!("unknown mode `{other}` (expected diff, ref or dis)"))),
        }
    }
}

/// A video-level score with its per-frame contributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScore {
    pub metric: MetricId,
    pub video_score: f64,
    pub per_frame: Vec<(usize, f64)>,
}

impl MetricScore {
    /// Builds a score whose video value is the arithmetic mean of `per_frame`,
    /// summed in the given order.
    pub fn from_scores(metric: MetricId, per_frame: Vec<(usize, f64)>) -> Self {
        MetricScore {
            metric,
            video_score: mean(per_frame.iter().map(|&(_, s)| s)),
            per_frame,
        }
    }
}

/// Arithmetic mean in the given order. A PSNR sentinel stands for +inf, so
/// any sentinel makes the mean the sentinel.
pub fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values {
        if is_infinite_psnr(v) {
            return PSNR_INFINITE;
        }
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Per-frame PSNR ceiling applied when scores are fitted against DMOS.
pub const PSNR_CEILING_DB: f64 = 60.0;

impl MetricScore {
    /// The video score used for DMOS fitting: identical to `video_score`
    /// except that PSNR frames are capped at [`PSNR_CEILING_DB`] before
    /// averaging, so exact frames do not make the whole video infinite.
    pub fn evaluation_score(&self) -> f64 {
        match self.metric {
            MetricId::Psnr => mean(self.per_frame.iter().map(|&(_, v)| v.min(PSNR_CEILING_DB))),
            _ => self.video_score,
        }
    }
}
