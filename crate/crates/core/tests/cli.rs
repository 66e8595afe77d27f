mod common;

use std::path::Path;
use std::process::{Command, Output};

use flowqa::cli::{report_csv, score_manifest};
use flowqa::eval::{evaluate, load_manifest};
use flowqa::flow::{read_flo, FlowSource};
use flowqa::media::{read_y4m, write_ppm, VideoOptions};
use flowqa::metrics::{MetricId, ScoreConfig};
use flowqa::synth::{circular_shift, motion_clip, textured_frame, write_synthetic_dataset, ClipSpec};
use flowqa::FrameRate;

fn flowqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowqa"))
        .args(args)
        .env("FLOWQA_WEIGHTS", common::weights_path())
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_clip(dir: &Path) -> std::path::PathBuf {
    let spec = ClipSpec { object_motion: Some((2.0, 1.0)), object_size: 12, ..ClipSpec::panning(64, 64, 4, (1.0, 0.5), 12) };
    let path = dir.join("clip.y4m");
    flowqa::media::write_y4m(&motion_clip(&spec, FrameRate::new(30, 1)).unwrap(), &path).unwrap();
    path
}

#[test]
fn score_identity_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let clip = small_clip(dir.path());
    let out = dir.path().join("scores.csv");
    let o = flowqa(&["score", "--ref", s(&clip), "--dis", s(&clip), "--metric", "flolpips", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "flolpips: 0\n");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv, "frame,score\n1,0\n2,0\n3,0\nmean,0\n");
}

#[test]
fn psnr_identity_prints_inf() {
    let dir = tempfile::tempdir().unwrap();
    let clip = small_clip(dir.path());
    let o = flowqa(&["score", "--ref", s(&clip), "--dis", s(&clip), "--metric", "psnr"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("mean,inf\n"));
}

#[test]
fn synthesize_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let clip = small_clip(dir.path());
    let rep = dir.path().join("rep.y4m");
    let o = flowqa(&["synthesize", "--in", s(&clip), "--method", "repeat", "--factor", "2", "--out", s(&rep)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let seq = read_y4m(&rep).unwrap();
    assert_eq!(seq.len(), 8);
    assert_eq!(seq.frame_rate(), FrameRate::new(60, 1));

    let avg = dir.path().join("avg");
    let o = flowqa(&["synthesize", "--in", s(&clip), "--method", "average", "--out", s(&avg)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(&avg).unwrap().count(), 7);

    let o = flowqa(&["synthesize", "--in", s(&clip), "--method", "average", "--factor", "3", "--out", s(&avg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flow_subcommand_writes_flo() {
    let dir = tempfile::tempdir().unwrap();
    let a = textured_frame(64, 64, 8);
    let b = circular_shift(&a, 3, -2).unwrap();
    let (pa, pb, out) = (dir.path().join("a.ppm"), dir.path().join("b.ppm"), dir.path().join("f.flo"));
    write_ppm(&a, &pa).unwrap();
    write_ppm(&b, &pb).unwrap();
    let o = flowqa(&["flow", "--prev", s(&pa), "--next", s(&pb), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = read_flo(&out).unwrap();
    let i = 32 * 64 + 32;
    assert!((f.u()[i] - 3.0).abs() < 0.5 && (f.v()[i] + 2.0).abs() < 0.5);
}

#[test]
fn ftest_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "ref,dis,dmos,score,fitted,residual\nx,y,1,1,1,0.01\nx,y,1,1,1,-0.02\nx,y,1,1,1,0.015\nx,y,1,1,1,-0.01\nx,y,1,1,1,0.0\n").unwrap();
    std::fs::write(&b, "5\n-7\n6\n-4\n9\n").unwrap();
    let o = flowqa(&["ftest", "--residuals-a", s(&a), "--residuals-b", s(&b)]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "1\n");
    let o = flowqa(&["ftest", "--residuals-a", s(&b), "--residuals-b", s(&a), "--alpha", "0.05"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "-1\n");
}

#[test]
fn exit_codes() {
    assert_eq!(flowqa(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(flowqa(&["score", "--help"]).status.code(), Some(0));
    let o = flowqa(&["score", "--ref", "/no/such.y4m", "--dis", "/no/such.y4m", "--metric", "ssim"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8(o.stderr).unwrap().lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let clip = small_clip(dir.path());
    let one = dir.path().join("one.y4m");
    let seq = read_y4m(&clip).unwrap();
    let first = flowqa::VideoSequence::new(vec![seq.frames()[0].clone()], seq.frame_rate(), "one").unwrap();
    flowqa::media::write_y4m(&first, &one).unwrap();
    let o = flowqa(&["score", "--ref", s(&one), "--dis", s(&one), "--metric", "flolpips"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn evaluate_matches_module_pipeline_and_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::crate_dir().join("tests/fixtures/synthetic/manifest.csv");
    let (r1, r4) = (dir.path().join("r1.csv"), dir.path().join("r4.csv"));
    let o1 = flowqa(&["evaluate", "--manifest", s(&manifest), "--metric", "flolpips", "--out", s(&r1), "--workers", "1"]);
    assert!(o1.status.success(), "{}", String::from_utf8_lossy(&o1.stderr));
    let o4 = flowqa(&["evaluate", "--manifest", s(&manifest), "--metric", "flolpips", "--out", s(&r4), "--workers", "4"]);
    assert!(o4.status.success());
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r4).unwrap());
    assert_eq!(o1.stdout, o4.stdout);

    let m = load_manifest(&manifest).unwrap();
    let scores = score_manifest(&m, MetricId::Flolpips, Some(&common::archive()), &FlowSource::default(), &VideoOptions::default(), &ScoreConfig::default()).unwrap();
    let report = evaluate(&scores, &m.dmos()).unwrap();
    assert_eq!(std::fs::read_to_string(&r1).unwrap(), report_csv(&m, &scores, &report));
    let summary = String::from_utf8(o1.stdout).unwrap();
    let plcc: f64 = summary.lines().find_map(|l| l.strip_prefix("plcc: ")).unwrap().parse().unwrap();
    assert!((plcc - report.plcc).abs() <= 1e-6);
    let fitted: Vec<f64> = std::fs::read_to_string(&r1).unwrap().lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    let recomputed = flowqa::eval::plcc(&fitted, &m.dmos()).unwrap();
    assert!((recomputed - report.plcc).abs() <= 1e-9);
}

#[test]
fn shipped_dataset_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic_dataset(dir.path()).unwrap();
    let shipped = common::crate_dir().join("tests/fixtures/synthetic");
    let mut names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 17);
    for name in names {
        let fresh = std::fs::read(dir.path().join(&name)).unwrap();
        let committed = std::fs::read(shipped.join(&name)).unwrap();
        assert!(fresh == committed, "{name:?} differs from the shipped copy");
    }
}
