mod oracles;

use avfusion_core::audio::{
    aggregate_max, derive_boundary_labels, derive_frame_labels, dynamic_label, joint_loss, pad_and_crop,
    sliding_windows, AudioTrack, LossWeights,
};
use avfusion_core::fusion::{fuse_partition, merge_similar};
use avfusion_core::metrics::{interval_iou, GroundTruth, Predictions};
use avfusion_core::synth::{sample_dataset, simulate_scores};
use avfusion_core::timeline::{frames_to_intervals, resample_series};
use avfusion_core::visual::{detect_video_verdict, localize_visual};
use avfusion_core::*;
use proptest::prelude::*;

fn iv(s: f64, e: f64) -> TimeInterval {
    TimeInterval::new(s, e).unwrap()
}

fn interval() -> impl Strategy<Value = TimeInterval> {
    (0.0f64..10.0, 0.01f64..5.0).prop_map(|(s, l)| iv(s, s + l))
}

/// Up to `max` segments on a 0.1 s grid inside `[0, 10]`.
fn segments(max: usize) -> impl Strategy<Value = Vec<SegmentScore>> {
    prop::collection::vec((0u32..100, 1u32..30, 0.0f64..=1.0), 0..=max).prop_map(|v| {
        v.into_iter()
            .map(|(s, l, c)| {
                let e = (s + l).min(100);
                SegmentScore::new(iv(f64::from(s) / 10.0, f64::from(e) / 10.0), c).unwrap()
            })
            .collect()
    })
}

fn triples(v: &[SegmentScore]) -> Vec<(f64, f64, f64)> {
    v.iter()
        .map(|s| (s.interval.start(), s.interval.end(), s.confidence()))
        .collect()
}

proptest! {
    #[test]
    fn overlap_is_symmetric(a in interval(), b in interval()) {
        prop_assert_eq!(overlaps(&a, &b), overlaps(&b, &a));
        let touching = iv(a.end(), a.end() + 1.0);
        prop_assert!(!overlaps(&a, &touching));
    }

    #[test]
    fn partition_is_gapless(bounds in prop::collection::vec(0.0f64..=20.0, 0..30), dur in 0.5f64..20.0) {
        let bounds: Vec<f64> = bounds.into_iter().map(|b| b.min(dur)).collect();
        let parts = partition_timeline(&bounds, dur).unwrap();
        prop_assert_eq!(parts[0].start(), 0.0);
        prop_assert_eq!(parts.last().unwrap().end(), dur);
        for w in parts.windows(2) {
            prop_assert_eq!(w[0].end(), w[1].start());
        }
        let total: f64 = parts.iter().map(TimeInterval::len).sum();
        prop_assert!((total - dur).abs() <= 1e-9);
    }

    #[test]
    fn runs_rasterize_back_to_mask(scores in prop::collection::vec(0.0f64..=1.0, 1..300), thr in 0.0f64..=1.0) {
        let series = FrameScoreSeries::new(25.0, scores.clone()).unwrap();
        let segs = frames_to_intervals(&series, thr).unwrap();
        let forged: Vec<TimeInterval> = segs.iter().map(|s| s.interval).collect();
        let mask = derive_frame_labels(&forged, 25.0, scores.len()).unwrap();
        let expected: Vec<u8> = scores.iter().map(|&s| u8::from(s >= thr)).collect();
        prop_assert_eq!(mask, expected);
    }

    #[test]
    fn resample_keeps_range_and_is_identity_at_same_rate(
        scores in prop::collection::vec(0.0f64..=1.0, 1..200),
        fps in prop::sample::select(vec![10.0, 25.0, 30.0, 50.0]),
        target in prop::sample::select(vec![12.5, 25.0, 29.97, 60.0]),
    ) {
        let series = FrameScoreSeries::new(fps, scores).unwrap();
        prop_assert_eq!(&resample_series(&series, fps).unwrap(), &series);
        let out = resample_series(&series, target).unwrap();
        prop_assert!(out.scores().iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert!(out.scores().iter().all(|s| series.scores().contains(s)));
    }

    #[test]
    fn dynamic_label_matches_raster(
        dur_cs in 5u32..=1000,
        segs in prop::collection::vec((0u32..1000, 1u32..200), 0..=3),
        crop_ds in 0u32..100,
    ) {
        // centisecond grid for forgeries, 0.1 s grid for crops
        let duration_ms = dur_cs * 10;
        let forged_ms: Vec<(u32, u32)> = segs
            .into_iter()
            .map(|(s, l)| {
                let s = (s * 10).min(duration_ms - 10);
                (s, (s + l * 10).min(duration_ms))
            })
            .collect();
        let forged: Vec<TimeInterval> = forged_ms
            .iter()
            .map(|&(s, e)| iv(f64::from(s) / 1000.0, f64::from(e) / 1000.0))
            .collect();
        let label = u8::from(!forged.is_empty());
        let track = AudioTrack { label, forged: &forged, duration_s: f64::from(duration_ms) / 1000.0 };
        let max_offset_ms = duration_ms.saturating_sub(2000);
        let offset_ms = (crop_ds * 100).min(max_offset_ms / 100 * 100);
        let crop = pad_and_crop(track.duration_s, 2.0, f64::from(offset_ms) / 1000.0).unwrap();
        let got = dynamic_label(&track, &crop).unwrap().label;
        let want = oracles::dynamic_label_raster(label, &forged_ms, duration_ms, offset_ms, 2000);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn windows_cover_the_clip(dur in 0.1f64..60.0, window in 0.5f64..4.0, stride_frac in 0.1f64..=1.0) {
        let stride = window * stride_frac;
        let ws = sliding_windows(dur, window, stride).unwrap();
        prop_assert_eq!(ws[0].start(), 0.0);
        prop_assert!((ws.last().unwrap().end() - dur).abs() <= 1e-9);
        for w in ws.windows(2) {
            prop_assert!(w[1].start() <= w[0].end() + 1e-9, "gap between windows");
        }
        let n = ws.len();
        if n >= 3 {
            for w in ws[..n - 1].windows(2) {
                prop_assert!((w[1].start() - w[0].start() - stride).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn max_pool_is_monotone(scores in prop::collection::vec(0.0f64..=1.0, 1..50), idx in any::<prop::sample::Index>(), bump in 0.0f64..=1.0) {
        let m = aggregate_max(&scores).unwrap();
        prop_assert!(scores.iter().all(|&s| m >= s));
        let mut raised = scores.clone();
        let i = idx.index(raised.len());
        raised[i] = (raised[i] + bump).min(1.0);
        prop_assert!(aggregate_max(&raised).unwrap() >= m);
    }

    #[test]
    fn boundaries_vanish_iff_constant(labels in prop::collection::vec(0u8..=1, 1..100)) {
        let b = derive_boundary_labels(&labels).unwrap();
        let constant = labels.iter().all(|&l| l == labels[0]);
        prop_assert_eq!(b.iter().all(|&x| x == 0), constant);
    }

    #[test]
    fn isolated_transitions_mark_two_frames(runs in prop::collection::vec(2usize..6, 1..10)) {
        // runs of length >= 2 keep transitions from sharing a frame
        let mut labels = Vec::new();
        for (k, len) in runs.iter().enumerate() {
            labels.extend(std::iter::repeat_n((k % 2) as u8, *len));
        }
        let b = derive_boundary_labels(&labels).unwrap();
        let ones = b.iter().filter(|&&x| x == 1).count();
        prop_assert_eq!(ones, 2 * (runs.len() - 1));
    }

    #[test]
    fn loss_decreases_toward_labels(
        data in prop::collection::vec((0.01f64..0.99, 0u8..=1, 0.01f64..0.99, 0u8..=1), 1..40),
        idx in any::<prop::sample::Index>(),
    ) {
        let (y_hat, y): (Vec<f64>, Vec<u8>) = data.iter().map(|d| (d.0, d.1)).unzip();
        let (b_hat, b): (Vec<f64>, Vec<u8>) = data.iter().map(|d| (d.2, d.3)).unzip();
        let w = LossWeights::default();
        let base = joint_loss(&y_hat, &y, &b_hat, &b, &w).unwrap();
        prop_assert!(base >= 0.0);
        let i = idx.index(y_hat.len());
        let mut moved = y_hat.clone();
        moved[i] += if y[i] == 1 { 1e-3 } else { -1e-3 };
        prop_assert!(joint_loss(&moved, &y, &b_hat, &b, &w).unwrap() < base);
    }

    #[test]
    fn detect_video_matches_scan(scores in prop::collection::vec(prop::sample::select(vec![0.0, 0.1, 0.4, 0.5, 0.6, 0.9, 1.0]), 1..400)) {
        let cfg = DetectionConfig::default();
        let series = FrameScoreSeries::new(25.0, scores.clone()).unwrap();
        let got = detect_video(&series, &cfg).unwrap();
        let want = oracles::detect_video_scan(&scores, cfg.binarize_threshold, cfg.c1, cfg.c2);
        prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn lower_threshold_never_shrinks_runs(scores in prop::collection::vec(0.0f64..=1.0, 1..200), hi in 0.0f64..=1.0, drop in 0.0f64..=1.0) {
        let lo = hi * drop;
        let series = FrameScoreSeries::new(25.0, scores).unwrap();
        let at = |t: f64| localize_visual(&series, &DetectionConfig { binarize_threshold: t, ..DetectionConfig::default() }).unwrap();
        let (strict, loose) = (at(hi), at(lo));
        for s in &strict {
            prop_assert!(loose.iter().any(|l| l.interval.start() <= s.interval.start() && s.interval.end() <= l.interval.end()));
        }
    }

    #[test]
    fn no_runs_means_plain_mean(scores in prop::collection::vec(0.0f64..0.5, 1..100)) {
        let series = FrameScoreSeries::new(25.0, scores.clone()).unwrap();
        let v = detect_video_verdict(&series, &DetectionConfig::default()).unwrap();
        prop_assert_eq!(v.score, scores.iter().sum::<f64>() / scores.len() as f64);
    }

    #[test]
    fn fusion_is_symmetric_max_and_disjoint(audio in segments(4), visual in segments(4)) {
        let cfg = FusionConfig::default();
        let parts = fuse_partition(&audio, &visual, 10.0).unwrap();
        let (ta, tv) = (triples(&audio), triples(&visual));
        for p in &parts {
            let mid = p.interval.midpoint();
            prop_assert_eq!(p.audio, oracles::max_conf_at(&ta, mid));
            prop_assert_eq!(p.visual, oracles::max_conf_at(&tv, mid));
            prop_assert_eq!(p.fused, p.audio.max(p.visual));
        }
        let ab = fuse_localization(&audio, &visual, 10.0, &cfg).unwrap();
        let ba = fuse_localization(&visual, &audio, 10.0, &cfg).unwrap();
        prop_assert_eq!(&ab, &ba);
        for w in ab.windows(2) {
            prop_assert!(w[0].interval.end() <= w[1].interval.start());
        }
        prop_assert!(ab.iter().all(|s| s.interval.end() <= 10.0 && s.confidence() > 0.0));
        prop_assert_eq!(merge_similar(&ab, cfg.merge_epsilon), ab.clone());
    }

    #[test]
    fn single_modality_passes_through(audio in segments(4)) {
        let out = fuse_localization(&audio, &[], 10.0, &FusionConfig::default()).unwrap();
        let ta = triples(&audio);
        // sample on a fine grid: same covered time, same confidences
        for k in 0..1000 {
            let t = (f64::from(k) + 0.5) / 100.0;
            let fused = out.iter().find(|s| s.interval.contains_time(t)).map_or(0.0, |s| s.confidence());
            prop_assert_eq!(fused, oracles::max_conf_at(&ta, t));
        }
    }

    #[test]
    fn detection_fusion_returns_mean_or_an_input(a in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let s = fuse_detection(a, v, &FusionConfig::default()).unwrap();
        prop_assert!(s == a || s == v || (s - 0.5 * (a + v)).abs() < 1e-15);
        prop_assert!(s >= a.min(v));
    }

    #[test]
    fn auc_matches_pair_count(data in prop::collection::vec((0u8..=1, prop::sample::select(vec![0.0, 0.2, 0.2, 0.5, 0.7, 0.9, 1.0])), 2..200)) {
        let (labels, scores): (Vec<u8>, Vec<f64>) = data.into_iter().unzip();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let got = auc(&labels, &scores).unwrap();
        prop_assert!((got - oracles::auc_pairs(&labels, &scores)).abs() <= 1e-9);
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 7.0).collect();
        prop_assert!((auc(&labels, &warped).unwrap() - got).abs() <= 1e-12);
    }

    #[test]
    fn iou_symmetric_and_one_only_on_identity(a in interval(), b in interval()) {
        prop_assert_eq!(interval_iou(&a, &b), interval_iou(&b, &a));
        prop_assert_eq!(interval_iou(&a, &a), 1.0);
        if a != b {
            prop_assert!(interval_iou(&a, &b) < 1.0);
        }
    }

    #[test]
    fn recall_grows_with_predictions(gts in prop::collection::vec(interval(), 1..6), preds in prop::collection::vec((interval(), 0.0f64..=1.0), 0..8), extra in (interval(), 0.0f64..=1.0)) {
        let gt: GroundTruth = [("v".to_string(), gts)].into();
        let mut p: Predictions = [("v".to_string(), preds.iter().map(|(i, c)| SegmentScore::new(*i, *c).unwrap()).collect())].into();
        let protocol = EvalProtocol::default();
        let before = average_recall(&p, &gt, &protocol).unwrap();
        p.get_mut("v").unwrap().push(SegmentScore::new(extra.0, extra.1).unwrap());
        prop_assert!(average_recall(&p, &gt, &protocol).unwrap() >= before - 1e-12);
    }
}

#[test]
fn exact_and_disjoint_predictions_bracket_ap_ar() {
    let protocol = EvalProtocol::default();
    let gt: GroundTruth = [
        ("a".to_string(), vec![iv(0.0, 1.0), iv(3.0, 4.5)]),
        ("b".to_string(), vec![iv(2.0, 2.4)]),
    ]
    .into();
    let exact: Predictions = gt
        .iter()
        .map(|(k, v)| {
            (
                k.clone(),
                v.iter().map(|i| SegmentScore::new(*i, 0.7).unwrap()).collect(),
            )
        })
        .collect();
    assert_eq!(average_precision(&exact, &gt, &protocol).unwrap(), 1.0);
    assert_eq!(average_recall(&exact, &gt, &protocol).unwrap(), 1.0);

    let disjoint: Predictions = [("a".to_string(), vec![SegmentScore::new(iv(1.5, 2.5), 0.9).unwrap()])].into();
    assert_eq!(average_precision(&disjoint, &gt, &protocol).unwrap(), 0.0);
    assert_eq!(average_recall(&disjoint, &gt, &protocol).unwrap(), 0.0);
}

#[test]
fn oracle_scores_rasterize_to_generated_mask() {
    let cfg = GeneratorConfig {
        n_videos: 300,
        seed: 11,
        ..GeneratorConfig::default()
    };
    for (i, meta) in sample_dataset(&cfg).unwrap().iter().enumerate() {
        for modality in Modality::BOTH {
            let series = simulate_scores(meta, &DetectorModel::default(), modality, 25.0, i as u64).unwrap();
            let segs = frames_to_intervals(&series, 0.5).unwrap();
            // grid-aligned truth maps onto whole frames, so runs reproduce it
            let mut truth = meta.segments(modality).to_vec();
            truth.sort_by(|a, b| a.start().total_cmp(&b.start()));
            assert_eq!(segs.len(), truth.len(), "{} {modality}", meta.id);
            for (s, t) in segs.iter().zip(&truth) {
                assert!((s.interval.start() - t.start()).abs() < 1e-9);
                assert!((s.interval.end() - t.end()).abs() < 1e-9);
                assert_eq!(s.confidence(), 1.0);
            }
        }
    }
}

#[test]
fn generation_ignores_thread_count() {
    let cfg = GeneratorConfig {
        n_videos: 500,
        seed: 21,
        ..GeneratorConfig::default()
    };
    let parallel = sample_dataset(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| sample_dataset(&cfg).unwrap());
    assert_eq!(parallel, serial);
}
