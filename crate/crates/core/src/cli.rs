//! The `flowqa` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/output error, 3 computation
//! error. Failures print a single `flowqa: error: ...` line on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate, f_test, load_manifest, DatasetManifest, EvalReport};
use crate::flow::{estimate_flow, write_flo, FloDirectory, FlowParams, FlowSource};
use crate::media::{
    load_video, rgb_to_yuv420, to_rgb_with_range, write_ppm, write_y4m, ColorRange, ColorSpace,
    FrameRate, VideoOptions, VideoSequence,
};
use crate::metrics::{is_infinite_psnr, score_video, MetricId, MetricScore, ScoreConfig, WeightingMode};
use crate::nn::{load_weight_archive, WeightArchive};
use crate::vfi::{frame_average_upsample, frame_repeat_upsample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "flowqa", version, about = "Flow-weighted perceptual video quality assessment")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a distorted video against its reference.
    Score(ScoreArgs),
    /// Raise the frame rate by frame repetition or averaging.
    Synthesize(SynthesizeArgs),
    /// Score every row of a manifest and fit the results to DMOS.
    Evaluate(EvaluateArgs),
    /// Compare two residual vectors with a two-tailed F-test.
    Ftest(FtestArgs),
    /// Estimate optical flow between two frames and write a .flo file.
    Flow(FlowArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliMetric {
    Psnr,
    Ssim,
    Lpips,
    Flolpips,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliMode {
    Diff,
    Ref,
    Dis,
}

impl From<CliMode> for WeightingMode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Diff => WeightingMode::Diff,
            CliMode::Ref => WeightingMode::RefOnly,
            CliMode::Dis => WeightingMode::DisOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliRange {
    Limited,
    Full,
}

impl From<CliRange> for ColorRange {
    fn from(r: CliRange) -> Self {
        match r {
            CliRange::Limited => ColorRange::Limited,
            CliRange::Full => ColorRange::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Repeat,
    Average,
}

#[derive(Debug, Args)]
struct VideoArgs {
    /// Frame width, required for raw .yuv input.
    #[arg(long)]
    width: Option<usize>,
    /// Frame height, required for raw .yuv input.
    #[arg(long)]
    height: Option<usize>,
    /// Frame rate for inputs that do not carry one (e.g. 30 or 30000:1001).
    #[arg(long)]
    fps: Option<String>,
    /// YUV range used when converting to RGB.
    #[arg(long, value_enum, default_value_t = CliRange::Limited)]
    range: CliRange,
}

impl VideoArgs {
    fn options(&self) -> Result<VideoOptions> {
        Ok(VideoOptions {
            width: self.width,
            height: self.height,
            frame_rate: self.fps.as_deref().map(str::parse::<FrameRate>).transpose()?,
        })
    }
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long, value_enum)]
    metric: CliMetric,
    /// FloLPIPS weighting: flow difference, reference flow or distorted flow.
    #[arg(long, value_enum, default_value_t = CliMode::Diff)]
    mode: CliMode,
    /// Flow provider: `builtin` or `flo-dir:<path>`.
    #[arg(long, default_value = "builtin")]
    flow: String,
    /// Weight archive for the LPIPS family.
    #[arg(long, env = "FLOWQA_WEIGHTS")]
    weights: Option<PathBuf>,
}

impl MetricArgs {
    fn metric_id(&self) -> MetricId {
        match self.metric {
            CliMetric::Psnr => MetricId::Psnr,
            CliMetric::Ssim => MetricId::Ssim,
            CliMetric::Lpips => MetricId::Lpips,
            CliMetric::Flolpips => WeightingMode::from(self.mode).metric_id(),
        }
    }

    fn archive(&self) -> Result<Option<WeightArchive>> {
        if !self.metric_id().needs_archive() {
            return Ok(None);
        }
        match &self.weights {
            Some(p) => load_weight_archive(p).map(Some),
            None => Err(Error::Argument(
                "this metric needs --weights <archive> or FLOWQA_WEIGHTS".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long = "dis")]
    distorted: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    /// Per-frame CSV output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    video: VideoArgs,
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 2)]
    factor: usize,
    /// `.y4m` file, or a directory that receives numbered PPM frames.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    video: VideoArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    /// Per-row report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Fail early when a manifest path does not exist.
    #[arg(long)]
    check_paths: bool,
    #[command(flatten)]
    video: VideoArgs,
}

#[derive(Debug, Args)]
struct FtestArgs {
    #[arg(long)]
    residuals_a: PathBuf,
    #[arg(long)]
    residuals_b: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[arg(long)]
    prev: PathBuf,
    #[arg(long)]
    next: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    video: VideoArgs,
}

/// Runs the command line with process stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "flowqa: error: cannot start worker pool: {e}");
            return EXIT_COMPUTE;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "flowqa: error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) => EXIT_USAGE,
        e if e.is_input_error() => EXIT_IO,
        _ => EXIT_COMPUTE,
    }
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Score(a) => cmd_score(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Ftest(a) => cmd_ftest(a),
        Command::Flow(a) => cmd_flow(a),
    }
}

/// Shortest round-tripping decimal; the PSNR sentinel prints as `inf`.
pub fn format_score(v: f64) -> String {
    if is_infinite_psnr(v) {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Per-frame CSV: `frame,score` rows followed by a `mean,<score>` line.
pub fn score_csv(score: &MetricScore) -> String {
    let mut s = String::from("frame,score\n");
    for &(i, v) in &score.per_frame {
        let _ = writeln!(s, "{i},{}", format_score(v));
    }
    let _ = writeln!(s, "mean,{}", format_score(score.video_score));
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::file(path, e))
}

fn cmd_score(a: ScoreArgs) -> Result<String> {
    let flow: FlowSource = a.metric.flow.parse()?;
    let opts = a.video.options()?;
    let archive = a.metric.archive()?;
    let reference = load_video(&a.reference, &opts)?;
    let distorted = load_video(&a.distorted, &opts)?;
    let config = ScoreConfig {
        range: a.video.range.into(),
    };
    let metric = a.metric.metric_id();
    let score = score_video(metric, &reference, &distorted, archive.as_ref(), &flow, &config)?;
    let csv = score_csv(&score);
    match a.out {
        Some(path) => {
            write_text(&path, &csv)?;
            Ok(format!("{metric}: {}\n", format_score(score.video_score)))
        }
        None => Ok(csv),
    }
}

fn cmd_synthesize(a: SynthesizeArgs) -> Result<String> {
    let opts = a.video.options()?;
    let input = load_video(&a.input, &opts)?;
    let output = match a.method {
        Method::Repeat => frame_repeat_upsample(&input, a.factor)?,
        Method::Average if a.factor == 2 => frame_average_upsample(&input)?,
        Method::Average => {
            return Err(Error::Argument(format!(
                "averaging supports factor 2 only, got {}",
                a.factor
            )))
        }
    };
    let (count, rate) = (output.len(), output.frame_rate());
    let range: ColorRange = a.video.range.into();
    let is_y4m = a
        .out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("y4m"));
    if is_y4m {
        let seq = match output.colorspace() {
            ColorSpace::Yuv420_8 => output,
            ColorSpace::RgbFloat => convert(&output, |f| rgb_to_yuv420(f, range))?,
        };
        write_y4m(&seq, &a.out)?;
    } else {
        std::fs::create_dir_all(&a.out).map_err(|e| Error::file(&a.out, e))?;
        for (i, frame) in output.frames().iter().enumerate() {
            let rgb = match frame.colorspace() {
                ColorSpace::RgbFloat => frame.clone(),
                ColorSpace::Yuv420_8 => to_rgb_with_range(frame, range)?,
            };
            write_ppm(&rgb, a.out.join(format!("frame_{i:06}.ppm")))?;
        }
    }
    Ok(format!("wrote {count} frames at {rate} fps to {}\n", a.out.display()))
}

fn convert(
    seq: &VideoSequence,
    f: impl Fn(&crate::media::Frame) -> Result<crate::media::Frame> + Send + Sync,
) -> Result<VideoSequence> {
    let frames = seq.frames().par_iter().map(f).collect::<Result<Vec<_>>>()?;
    VideoSequence::new(frames, seq.frame_rate(), seq.source())
}

/// Evaluation scores for every manifest row, in row order. With `flo-dir:<root>` the
/// flows of row `i` are read from `<root>/<i:04>/`.
pub fn score_manifest(
    manifest: &DatasetManifest,
    metric: MetricId,
    archive: Option<&WeightArchive>,
    flow: &FlowSource,
    opts: &VideoOptions,
    config: &ScoreConfig,
) -> Result<Vec<f64>> {
    manifest
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let reference = load_video(&row.ref_path, opts)?;
            let distorted = load_video(&row.dis_path, opts)?;
            let provider = match flow {
                FlowSource::FloDir(d) => FlowSource::FloDir(FloDirectory::new(d.dir().join(format!("{i:04}")))),
                other => other.clone(),
            };
            let score = score_video(metric, &reference, &distorted, archive, &provider, config)?;
            let value = score.evaluation_score();
            if !value.is_finite() {
                return Err(Error::Degenerate(format!(
                    "row {} ({}) has a non-finite score",
                    i + 1,
                    row.dis_path.display()
                )));
            }
            Ok(value)
        })
        .collect()
}

/// Report CSV: one line per manifest row.
pub fn report_csv(manifest: &DatasetManifest, scores: &[f64], report: &EvalReport) -> String {
    let mut s = String::from("ref,dis,dmos,score,fitted,residual\n");
    for (i, row) in manifest.rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.ref_path.display(),
            row.dis_path.display(),
            row.dmos,
            scores[i],
            report.fitted[i],
            report.residuals[i]
        );
    }
    s
}

/// Human-readable summary block.
pub fn report_summary(metric: MetricId, report: &EvalReport) -> String {
    let p = &report.params;
    format!(
        "metric: {metric}\nrows: {}\nplcc: {:.6}\nsrocc: {:.6}\nrmse: {:.6}\nlogistic: beta1={} beta2={} beta3={} beta4={}\nconverged: {}\n",
        report.residuals.len(),
        report.plcc,
        report.srocc,
        report.rmse,
        p.beta1,
        p.beta2,
        p.beta3,
        p.beta4,
        report.converged
    )
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<String> {
    let flow: FlowSource = a.metric.flow.parse()?;
    let opts = a.video.options()?;
    let manifest = load_manifest(&a.manifest)?;
    if a.check_paths {
        manifest.check_paths()?;
    }
    let archive = a.metric.archive()?;
    let metric = a.metric.metric_id();
    let config = ScoreConfig {
        range: a.video.range.into(),
    };
    let scores = score_manifest(&manifest, metric, archive.as_ref(), &flow, &opts, &config)?;
    let report = evaluate(&scores, &manifest.dmos())?;
    write_text(&a.out, &report_csv(&manifest, &scores, &report))?;
    Ok(report_summary(metric, &report))
}

/// Reads residuals: the `residual` column when the file has a header
/// naming it, otherwise the first column of every line.
pub fn read_residuals(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut column = 0;
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| Error::Row {
            line,
            message: e.to_string(),
        })?;
        if k == 0 {
            if let Some(pos) = record.iter().position(|h| h == "residual") {
                column = pos;
                continue;
            }
        }
        if record.iter().all(str::is_empty) {
            continue;
        }
        let field = record.get(column).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| Error::Row {
            line,
            message: format!("`{field}` is not a number"),
        })?;
        values.push(v);
    }
    Ok(values)
}

fn cmd_ftest(a: FtestArgs) -> Result<String> {
    let ra = read_residuals(&a.residuals_a)?;
    let rb = read_residuals(&a.residuals_b)?;
    Ok(format!("{}\n", f_test(&ra, &rb, a.alpha)?))
}

fn cmd_flow(a: FlowArgs) -> Result<String> {
    let opts = a.video.options()?;
    let prev = load_video(&a.prev, &opts)?;
    let next = load_video(&a.next, &opts)?;
    let field = estimate_flow(&prev.frames()[0], &next.frames()[0], &FlowParams::default())?;
    write_flo(&field, &a.out)?;
    Ok(format!(
        "wrote {}x{} flow to {}\n",
        field.width(),
        field.height(),
        a.out.display()
    ))
}
