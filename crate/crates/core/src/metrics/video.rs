//! Whole-video drivers. Frame-level work runs on the current rayon pool;
//! results are gathered in frame order and reduced sequentially, so scores
//! do not depend on the number of workers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{flow_diff_weight, flow_magnitude_weight, FlowProvider, FlowRole, WeightMap};
use crate::lpips::{lpips_pair, weighted_lpips_pair, LpipsLinearWeights};
use crate::media::{ensure_rgb, ColorRange, Frame, VideoSequence};
use crate::nn::{extract_features, WeightArchive};

use super::{psnr, ssim, MetricId, MetricScore, WeightingMode};

/// Options shared by all drivers.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreConfig {
    /// Range used when YUV input is converted to RGB for feature extraction.
    pub range: ColorRange,
}

fn framewise<F>(reference: &VideoSequence, distorted: &VideoSequence, metric: MetricId, f: F) -> Result<MetricScore>
where
    F: Fn(&Frame, &Frame) -> Result<f64> + Sync,
{
    reference.check_comparable(distorted)?;
    let scores = reference
        .frames()
        .par_iter()
        .zip(distorted.frames())
        .map(|(a, b)| f(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricScore::from_scores(metric, scores.into_iter().enumerate().collect()))
}

pub fn score_video_psnr(reference: &VideoSequence, distorted: &VideoSequence) -> Result<MetricScore> {
    framewise(reference, distorted, MetricId::Psnr, psnr)
}

pub fn score_video_ssim(reference: &VideoSequence, distorted: &VideoSequence) -> Result<MetricScore> {
    framewise(reference, distorted, MetricId::Ssim, ssim)
}

/// LPIPS between two frames of any colour space.
pub fn lpips_frames(a: &Frame, b: &Frame, archive: &WeightArchive, config: &ScoreConfig) -> Result<f64> {
    a.check_same_size(b)?;
    let weights = LpipsLinearWeights::from_archive(archive);
    let pa = extract_features(&ensure_rgb(a, config.range)?, archive)?;
    let pb = extract_features(&ensure_rgb(b, config.range)?, archive)?;
    lpips_pair(&pa, &pb, &weights)
}

pub fn score_video_lpips(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    archive: &WeightArchive,
) -> Result<MetricScore> {
    score_video_lpips_with(reference, distorted, archive, &ScoreConfig::default())
}

/// LPIPS for each of the N frame pairs, averaged.
pub fn score_video_lpips_with(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    archive: &WeightArchive,
    config: &ScoreConfig,
) -> Result<MetricScore> {
    framewise(reference, distorted, MetricId::Lpips, |a, b| lpips_frames(a, b, archive, config))
}

pub fn score_video_flolpips(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    archive: &WeightArchive,
    flow: &dyn FlowProvider,
    mode: WeightingMode,
) -> Result<MetricScore> {
    score_video_flolpips_with(reference, distorted, archive, flow, mode, &ScoreConfig::default())
}

/// Pooling weights for window `t` (frames `t - 1` and `t`).
pub fn window_weight_map(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    flow: &dyn FlowProvider,
    mode: WeightingMode,
    t: usize,
) -> Result<WeightMap> {
    let (r, d) = (reference.frames(), distorted.frames());
    let ref_flow = || flow.flow(FlowRole::Reference, t, &r[t - 1], &r[t]);
    let dis_flow = || flow.flow(FlowRole::Distorted, t, &d[t - 1], &d[t]);
    match mode {
        WeightingMode::Diff => flow_diff_weight(&ref_flow()?, &dis_flow()?),
        WeightingMode::RefOnly => Ok(flow_magnitude_weight(&ref_flow()?)),
        WeightingMode::DisOnly => Ok(flow_magnitude_weight(&dis_flow()?)),
    }
}

/// Flow-weighted LPIPS over sliding windows of two frames (stride 1).
///
/// Window `t` pools the feature distance of frame `t` with the weight map
/// built from the flows between frames `t - 1` and `t`; the video score is
/// the mean over the N - 1 windows.
pub fn score_video_flolpips_with(
    reference: &VideoSequence,
    distorted: &VideoSequence,
    archive: &WeightArchive,
    flow: &dyn FlowProvider,
    mode: WeightingMode,
    config: &ScoreConfig,
) -> Result<MetricScore> {
    reference.check_comparable(distorted)?;
    if reference.len() < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: reference.len(),
        });
    }
    let weights = LpipsLinearWeights::from_archive(archive);
    let scores = (1..reference.len())
        .into_par_iter()
        .map(|t| {
            let map = window_weight_map(reference, distorted, flow, mode, t)?;
            let pr = extract_features(&ensure_rgb(&reference.frames()[t], config.range)?, archive)?;
            let pd = extract_features(&ensure_rgb(&distorted.frames()[t], config.range)?, archive)?;
            Ok((t, weighted_lpips_pair(&pr, &pd, &weights, &map)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricScore::from_scores(mode.metric_id(), scores))
}

/// Dispatches to the driver for `metric`. `archive` is required by the
/// LPIPS family and ignored otherwise.
pub fn score_video(
    metric: MetricId,
    reference: &VideoSequence,
    distorted: &VideoSequence,
    archive: Option<&WeightArchive>,
    flow: &dyn FlowProvider,
    config: &ScoreConfig,
) -> Result<MetricScore> {
    let need_archive = || {
        archive.ok_or_else(|| Error::Argument(format!("metric {metric} needs a weight archive")))
    };
    match metric {
        MetricId::Psnr => score_video_psnr(reference, distorted),
        MetricId::Ssim => score_video_ssim(reference, distorted),
        MetricId::Lpips => score_video_lpips_with(reference, distorted, need_archive()?, config),
        MetricId::Flolpips => {
            score_video_flolpips_with(reference, distorted, need_archive()?, flow, WeightingMode::Diff, config)
        }
        MetricId::FlolpipsRefW => {
            score_video_flolpips_with(reference, distorted, need_archive()?, flow, WeightingMode::RefOnly, config)
        }
        MetricId::FlolpipsDisW => {
            score_video_flolpips_with(reference, distorted, need_archive()?, flow, WeightingMode::DisOnly, config)
        }
    }
}
