//! Full-reference video quality assessment for frame-interpolated content.
//!
//! The centerpiece is FloLPIPS: LPIPS feature distances pooled with a spatial
//! weight map derived from the discrepancy between the optical flow of the
//! reference and distorted videos. Around it sit the pieces needed to use it
//! end to end:
//!
//! * [`media`] decodes Y4M, raw I420 and image sequences into [`Frame`]s.
//! * [`nn`] evaluates the convolutional feature trunk stored in a weight archive.
//! * [`lpips`] turns two feature pyramids into a (weighted) perceptual distance.
//! * [`flow`] estimates dense optical flow and builds pooling weight maps.
//! * [`metrics`] drives PSNR, SSIM, LPIPS and FloLPIPS over whole videos.
//! * [`vfi`] produces trivially interpolated videos (frame repeat / average).
//! * [`eval`] fits the DMOS logistic and computes PLCC, SROCC, RMSE and F-tests.
//! * [`cli`] binds everything into the `flowqa` command.

pub mod cli;
pub mod error;
pub mod eval;
pub mod flow;
pub mod lpips;
pub mod media;
pub mod metrics;
pub mod nn;
pub mod synth;
pub mod vfi;

pub use error::{Error, Result};
pub use flow::{FlowField, FlowParams, WeightMap};
pub use media::{ColorRange, ColorSpace, Frame, FrameRate, VideoSequence};
pub use metrics::{MetricId, MetricScore, WeightingMode};
pub use nn::{FeatureMap, FeaturePyramid, WeightArchive};
