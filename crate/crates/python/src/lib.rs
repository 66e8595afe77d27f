//! Python bindings: `import flowqa`.

use std::path::PathBuf;

use flowqa_core as core;
use flowqa_core::flow::FlowSource;
use flowqa_core::media::VideoOptions;
use flowqa_core::metrics::{MetricId, ScoreConfig};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(flowqa, FlowqaError, PyException);

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Argument(m) => PyValueError::new_err(m),
        other => FlowqaError::new_err(other.to_string()),
    }
}

/// A validated weight archive.
#[pyclass(name = "WeightArchive", module = "flowqa", frozen)]
struct PyWeightArchive {
    inner: core::WeightArchive,
}

#[pymethods]
impl PyWeightArchive {
    #[new]
    fn new(path: PathBuf) -> PyResult<Self> {
        core::nn::load_weight_archive(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn tap_channels(&self) -> Vec<usize> {
        self.inner.tap_channels().to_vec()
    }

    fn entry_names(&self) -> Vec<String> {
        self.inner.entry_names().map(str::to_string).collect()
    }
}

/// A decoded video.
#[pyclass(name = "VideoSequence", module = "flowqa", frozen)]
struct PyVideo {
    inner: core::VideoSequence,
}

#[pymethods]
impl PyVideo {
    /// Opens a Y4M file, raw .yuv (needs width and height), image directory or single image.
    #[staticmethod]
    #[pyo3(signature = (path, width=None, height=None, fps=None))]
    fn load(path: PathBuf, width: Option<usize>, height: Option<usize>, fps: Option<&str>) -> PyResult<Self> {
        let opts = VideoOptions {
            width,
            height,
            frame_rate: fps.map(str::parse).transpose().map_err(to_py)?,
        };
        core::media::load_video(path, &opts).map(|inner| Self { inner }).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn frame_rate(&self) -> String {
        self.inner.frame_rate().to_string()
    }

    /// Luma of frame `index` on the 0-255 scale, row-major.
    fn luma(&self, index: usize) -> PyResult<Vec<f32>> {
        let frame = self
            .inner
            .frames()
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("frame {index} out of range")))?;
        Ok(core::media::luma_code_values(frame).data)
    }

    fn repeat_upsample(&self, factor: usize) -> PyResult<Self> {
        core::vfi::frame_repeat_upsample(&self.inner, factor).map(|inner| Self { inner }).map_err(to_py)
    }

    fn average_upsample(&self) -> PyResult<Self> {
        core::vfi::frame_average_upsample(&self.inner).map(|inner| Self { inner }).map_err(to_py)
    }

    fn write_y4m(&self, path: PathBuf) -> PyResult<()> {
        core::media::write_y4m(&self.inner, path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "VideoSequence({} frames, {}x{}, {} fps)",
            self.inner.len(),
            self.inner.width(),
            self.inner.height(),
            self.inner.frame_rate()
        )
    }
}

/// A video-level score with its per-frame values.
#[pyclass(name = "MetricScore", module = "flowqa", frozen, get_all)]
struct PyMetricScore {
    metric: String,
    video_score: f64,
    per_frame: Vec<(usize, f64)>,
}

#[pymethods]
impl PyMetricScore {
    fn __repr__(&self) -> String {
        format!("MetricScore({}={})", self.metric, self.video_score)
    }
}

/// Scores `dis` against `ref`. `metric` is one of psnr, ssim, lpips,
/// flolpips, flolpips-refw, flolpips-disw; `flow` is `builtin` or
/// `flo-dir:<path>`.
#[pyfunction]
#[pyo3(signature = (reference, distorted, metric, archive=None, flow="builtin"))]
fn score(
    py: Python<'_>,
    reference: &PyVideo,
    distorted: &PyVideo,
    metric: &str,
    archive: Option<&PyWeightArchive>,
    flow: &str,
) -> PyResult<PyMetricScore> {
    let id: MetricId = metric.parse().map_err(to_py)?;
    let provider: FlowSource = flow.parse().map_err(to_py)?;
    let archive = archive.map(|a| &a.inner);
    let result = py.detach(|| {
        core::metrics::score_video(id, &reference.inner, &distorted.inner, archive, &provider, &ScoreConfig::default())
    });
    let s = result.map_err(to_py)?;
    Ok(PyMetricScore {
        metric: s.metric.to_string(),
        video_score: s.video_score,
        per_frame: s.per_frame,
    })
}

/// Dense optical flow between two frames.
#[pyclass(name = "FlowField", module = "flowqa", frozen)]
struct PyFlowField {
    inner: core::FlowField,
}

#[pymethods]
impl PyFlowField {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        core::flow::read_flo(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        core::flow::write_flo(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn u(&self) -> Vec<f32> {
        self.inner.u().to_vec()
    }

    #[getter]
    fn v(&self) -> Vec<f32> {
        self.inner.v().to_vec()
    }
}

/// Flow from frame `prev_index` of `prev` to frame `next_index` of `next`.
#[pyfunction]
#[pyo3(signature = (prev, next, prev_index=0, next_index=0))]
fn estimate_flow(py: Python<'_>, prev: &PyVideo, next: &PyVideo, prev_index: usize, next_index: usize) -> PyResult<PyFlowField> {
    let (a, b) = match (prev.inner.frames().get(prev_index), next.inner.frames().get(next_index)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PyValueError::new_err("frame index out of range")),
    };
    py.detach(|| core::flow::estimate_flow(a, b, &core::FlowParams::default()))
        .map(|inner| PyFlowField { inner })
        .map_err(to_py)
}

/// Logistic fit and correlation statistics against DMOS.
#[pyclass(name = "EvalReport", module = "flowqa", frozen, get_all)]
struct PyEvalReport {
    plcc: f64,
    srocc: f64,
    rmse: f64,
    params: (f64, f64, f64, f64),
    converged: bool,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
}

#[pyfunction]
fn evaluate(scores: Vec<f64>, dmos: Vec<f64>) -> PyResult<PyEvalReport> {
    let r = core::eval::evaluate(&scores, &dmos).map_err(to_py)?;
    let p = r.params;
    Ok(PyEvalReport {
        plcc: r.plcc,
        srocc: r.srocc,
        rmse: r.rmse,
        params: (p.beta1, p.beta2, p.beta3, p.beta4),
        converged: r.converged,
        fitted: r.fitted,
        residuals: r.residuals,
    })
}

#[pyfunction]
fn plcc(fitted: Vec<f64>, dmos: Vec<f64>) -> PyResult<f64> {
    core::eval::plcc(&fitted, &dmos).map_err(to_py)
}

#[pyfunction]
fn srocc(scores: Vec<f64>, dmos: Vec<f64>) -> PyResult<f64> {
    core::eval::srocc(&scores, &dmos).map_err(to_py)
}

#[pyfunction]
fn rmse(fitted: Vec<f64>, dmos: Vec<f64>) -> PyResult<f64> {
    core::eval::rmse(&fitted, &dmos).map_err(to_py)
}

/// +1 if `a` has significantly smaller variance, -1 if larger, 0 otherwise.
#[pyfunction]
#[pyo3(signature = (a, b, alpha=0.05))]
fn f_test(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<i8> {
    core::eval::f_test(&a, &b, alpha).map_err(to_py)
}

/// Writes the synthetic motion dataset and returns the manifest path.
#[pyfunction]
fn write_synthetic_dataset(dir: PathBuf) -> PyResult<PathBuf> {
    core::synth::write_synthetic_dataset(&dir).map_err(to_py)
}

/// Runs the command line in-process and returns its exit code.
#[pyfunction]
fn main(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("flowqa".to_string()).chain(args).collect();
    py.detach(|| core::cli::run(argv))
}

#[pymodule]
fn flowqa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FlowqaError", m.py().get_type::<FlowqaError>())?;
    m.add_class::<PyWeightArchive>()?;
    m.add_class::<PyVideo>()?;
    m.add_class::<PyMetricScore>()?;
    m.add_class::<PyFlowField>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_flow, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(plcc, m)?)?;
    m.add_function(wrap_pyfunction!(srocc, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(f_test, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
