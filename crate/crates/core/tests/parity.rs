mod common;

use flowqa::flow::WeightMap;
use flowqa::lpips::{lpips_pair, weighted_lpips_pair, LpipsLinearWeights};
use flowqa::media::{read_image, FrameRate, VideoSequence};
use flowqa::metrics::score_video_lpips;
use flowqa::nn::{extract_features, read_tensor_file, tap_sizes, Tensor, WeightArchive};
use flowqa::Error;

#[test]
fn lpips_matches_recorded_scores() {
    let archive = common::archive();
    let weights = LpipsLinearWeights::from_archive(&archive);
    let pairs = common::parity_pairs();
    assert!(pairs.len() >= 3);
    for (rec, a, b) in &pairs {
        let pa = extract_features(a, &archive).unwrap();
        let pb = extract_features(b, &archive).unwrap();
        let got = lpips_pair(&pa, &pb, &weights).unwrap();
        assert!((got - rec.lpips).abs() <= 1e-4, "{}: got {got}, recorded {}", rec.name, rec.lpips);
    }
}

#[test]
fn tap_traces_match_recorded_activations() {
    let archive = common::archive();
    let frame = read_image(common::parity_dir().join("frame0.ppm")).unwrap();
    let pyr = extract_features(&frame, &archive).unwrap();
    let trace = read_tensor_file(common::parity_dir().join("frame0.taps.flpw")).unwrap();
    assert_eq!(trace.entries.len(), pyr.taps.len());
    for ((name, t), tap) in trace.entries.iter().zip(&pyr.taps) {
        assert_eq!(t.shape, vec![tap.channels, tap.height, tap.width], "{name}");
        let max_err = t.data.iter().zip(&tap.data).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max);
        assert!(max_err <= 1e-4, "{name}: max abs error {max_err}");
    }
}

#[test]
fn bundled_archive_structure() {
    let archive = common::archive();
    assert_eq!(archive.len(), 17);
    assert_eq!(archive.tap_channels(), &[64, 192, 384, 256, 256]);
    let sizes: Vec<usize> = tap_sizes(&archive, 64, 64).unwrap().into_iter().map(|(h, _)| h).collect();
    assert_eq!(sizes, vec![15, 7, 3, 3, 3]);
}

#[test]
fn edited_kernel_shape_is_named() {
    let mut file = read_tensor_file(common::weights_path()).unwrap();
    let entry = file.entries.iter_mut().find(|(n, _)| n == "conv1.weight").unwrap();
    let n = entry.1.data.len();
    entry.1 = Tensor::new(vec![n], entry.1.data.clone()).unwrap();
    match WeightArchive::from_tensor_file(file) {
        Err(Error::Validation { entry, .. }) => assert_eq!(entry, "conv1.weight"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn uniform_weights_reduce_to_plain_lpips_on_fixtures() {
    let archive = common::archive();
    let weights = LpipsLinearWeights::from_archive(&archive);
    for (rec, a, b) in common::parity_pairs() {
        let pa = extract_features(&a, &archive).unwrap();
        let pb = extract_features(&b, &archive).unwrap();
        let plain = lpips_pair(&pa, &pb, &weights).unwrap();
        let uniform = WeightMap::uniform(a.width(), a.height());
        let pooled = weighted_lpips_pair(&pa, &pb, &weights, &uniform).unwrap();
        assert!((plain - pooled).abs() <= 1e-6, "{}: {plain} vs {pooled}", rec.name);
    }
}

#[test]
fn video_lpips_is_mean_of_fixture_scores() {
    let archive = common::archive();
    let pairs = common::parity_pairs();
    let take: Vec<_> = pairs.iter().filter(|(r, a, _)| r.name.starts_with("pair") && a.width() == pairs[0].1.width()).take(3).collect();
    assert_eq!(take.len(), 3);
    let refs = take.iter().map(|(_, a, _)| a.clone()).collect();
    let diss = take.iter().map(|(_, _, b)| b.clone()).collect();
    let r = VideoSequence::new(refs, FrameRate::default(), "ref").unwrap();
    let d = VideoSequence::new(diss, FrameRate::default(), "dis").unwrap();
    let score = score_video_lpips(&r, &d, &archive).unwrap();
    let expected = take.iter().map(|(rec, _, _)| rec.lpips).sum::<f64>() / 3.0;
    assert!((score.video_score - expected).abs() <= 1e-4);
    let mean = score.per_frame.iter().map(|(_, v)| v).sum::<f64>() / 3.0;
    assert!((score.video_score - mean).abs() <= 1e-9);
}
