//! Subcommand implementations. Each reads JSONL inputs, runs one pipeline
//! stage per video (in parallel) and writes outputs ordered by video id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use avfusion_core::audio::{class_weights, clip_score, dynamic_label, pad_and_crop, AudioTrack, LabeledCrop};
use avfusion_core::metrics::{average_precision_per_threshold, recall_per_threshold, GroundTruth, Predictions};
use avfusion_core::records::{
    entries, round_sig9, segment_scores, CropRecord, DetectionRecord, MetaRecord, PredictionRecord, ScoreRecord,
    SegmentRecord,
};
use avfusion_core::synth::{dataset_stats, derive_seed, sample_dataset, simulate_scores, stream_rng};
use avfusion_core::timeline::{frames_to_intervals, resample_series, union_intervals};
use avfusion_core::visual::{detect_video, localize_visual};
use avfusion_core::{
    auc, final_score, fuse_detection, fuse_localization, Modality, SegmentScore, TimeInterval, VideoMeta,
};

use crate::config::{FusionMode, GroundTruthSet, RunConfig};
use crate::io::{read_jsonl, write_json, write_jsonl};

pub const META_FILE: &str = "meta.jsonl";
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const LOCALIZATIONS_FILE: &str = "localizations.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const CROPS_FILE: &str = "crops.jsonl";
pub const EVAL_FILE: &str = "eval.json";

pub fn scores_file(modality: Modality) -> String {
    format!("scores_{modality}.jsonl")
}

/// Seed stream reserved for crop offsets, apart from the generator's streams.
const LABEL_STREAM: u64 = 3;

pub fn load_meta(path: &Path) -> Result<Vec<VideoMeta>> {
    let records: Vec<MetaRecord> = read_jsonl(path)?;
    let mut metas = records
        .into_iter()
        .map(|r| {
            let id = r.id.clone();
            VideoMeta::try_from(r).with_context(|| format!("{}: invalid metadata for `{id}`", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    metas.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = metas.windows(2).find(|w| w[0].id == w[1].id) {
        bail!("{}: duplicate video id `{}`", path.display(), w[0].id);
    }
    Ok(metas)
}

fn load_scores(path: &Path, modality: Modality) -> Result<BTreeMap<String, ScoreRecord>> {
    let mut map = BTreeMap::new();
    for rec in read_jsonl::<ScoreRecord>(path)? {
        if rec.modality != modality {
            bail!(
                "{}: record `{}` has modality {}, expected {modality}",
                path.display(),
                rec.id,
                rec.modality
            );
        }
        let id = rec.id.clone();
        if map.insert(id.clone(), rec).is_some() {
            bail!("{}: duplicate video id `{id}`", path.display());
        }
    }
    Ok(map)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let metas = sample_dataset(&cfg.generator_config())?;
    write_jsonl(
        &out.join(META_FILE),
        &metas.iter().map(MetaRecord::from).collect::<Vec<_>>(),
    )?;

    for modality in Modality::BOTH {
        let fps = match modality {
            Modality::Audio => cfg.audio_fps,
            Modality::Visual => cfg.visual_fps,
        };
        let records = metas
            .par_iter()
            .enumerate()
            .map(|(i, meta)| {
                let seed = derive_seed(cfg.seed, i as u64);
                let series = simulate_scores(meta, &cfg.detector_model, modality, fps, seed)?;
                Ok(ScoreRecord::new(meta.id.clone(), modality, &series))
            })
            .collect::<Result<Vec<_>>>()?;
        write_jsonl(&out.join(scores_file(modality)), &records)?;
    }
    eprintln!("wrote {} videos to {}", metas.len(), out.display());
    Ok(())
}

pub fn label(cfg: &RunConfig, meta_path: &Path, out: &Path) -> Result<()> {
    let metas = load_meta(meta_path)?;
    let target = cfg.audio.target_len_s;
    let per_video: Vec<Vec<CropRecord>> = metas
        .par_iter()
        .enumerate()
        .map(|(i, meta)| {
            let mut rng = stream_rng(derive_seed(cfg.seed, i as u64), LABEL_STREAM);
            let track = AudioTrack {
                label: meta.audio_label(),
                forged: &meta.fake_audio_segments,
                duration_s: meta.duration_s,
            };
            let max_offset = (meta.duration_s - target).max(0.0);
            (0..cfg.audio.crops_per_video)
                .map(|_| {
                    // millisecond offsets keep the crop table readable
                    let offset = (rng.random_range(0.0..=max_offset) * 1000.0).floor() / 1000.0;
                    let crop = pad_and_crop(meta.duration_s, target, offset)?;
                    let labeled = dynamic_label(&track, &crop)?;
                    Ok(CropRecord {
                        id: meta.id.clone(),
                        crop_start: labeled.crop.start(),
                        crop_end: labeled.crop.end(),
                        tiled: crop.tiled(),
                        label: labeled.label,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let crops: Vec<CropRecord> = per_video.into_iter().flatten().collect();
    write_jsonl(&out.join(CROPS_FILE), &crops)?;

    let labeled: Vec<LabeledCrop> = crops
        .iter()
        .map(|c| {
            Ok(LabeledCrop {
                crop: TimeInterval::new(c.crop_start, c.crop_end)?,
                label: c.label,
            })
        })
        .collect::<Result<_>>()?;
    let n_fake = labeled.iter().filter(|c| c.label == 1).count();
    println!("crops={}", labeled.len());
    println!("real={}", labeled.len() - n_fake);
    println!("fake={n_fake}");
    match class_weights(&labeled) {
        Ok(w) => {
            println!("class_weight_real={}", round_sig9(w.class_weight_real));
            println!("class_weight_fake={}", round_sig9(w.class_weight_fake));
        }
        Err(e) => eprintln!("warning: {e}"),
    }
    Ok(())
}

pub fn detect(cfg: &RunConfig, meta_path: &Path, audio_path: &Path, visual_path: &Path, out: &Path) -> Result<()> {
    let metas = load_meta(meta_path)?;
    let audio = load_scores(audio_path, Modality::Audio)?;
    let visual = load_scores(visual_path, Modality::Visual)?;
    let records = metas
        .par_iter()
        .map(|meta| {
            let a = audio
                .get(&meta.id)
                .ok_or_else(|| anyhow!("no audio scores for `{}`", meta.id))?
                .series()?;
            let v = visual
                .get(&meta.id)
                .ok_or_else(|| anyhow!("no visual scores for `{}`", meta.id))?
                .series()?;
            Ok(DetectionRecord {
                id: meta.id.clone(),
                audio_score: clip_score(&a, cfg.audio.window_s, cfg.audio.stride_s)
                    .with_context(|| format!("audio scoring failed for `{}`", meta.id))?,
                visual_score: detect_video(&v, &cfg.detector)
                    .with_context(|| format!("visual scoring failed for `{}`", meta.id))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&out.join(DETECTIONS_FILE), &records)
}

pub fn localize(cfg: &RunConfig, audio_path: &Path, visual_path: &Path, out: &Path) -> Result<()> {
    let audio = load_scores(audio_path, Modality::Audio)?;
    let visual = load_scores(visual_path, Modality::Visual)?;
    let mut jobs: Vec<(&ScoreRecord, Modality)> = audio
        .values()
        .map(|r| (r, Modality::Audio))
        .chain(visual.values().map(|r| (r, Modality::Visual)))
        .collect();
    jobs.sort_by(|a, b| (&a.0.id, a.1).cmp(&(&b.0.id, b.1)));

    let records = jobs
        .par_iter()
        .map(|(rec, modality)| {
            let series = rec.series()?;
            let segments = match modality {
                Modality::Audio => {
                    let series = match cfg.localize_resample_fps {
                        Some(fps) => resample_series(&series, fps)?,
                        None => series,
                    };
                    frames_to_intervals(&series, cfg.detector.binarize_threshold)?
                }
                Modality::Visual => localize_visual(&series, &cfg.detector)?,
            };
            Ok(SegmentRecord {
                id: rec.id.clone(),
                modality: *modality,
                segments: entries(&segments),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(&out.join(LOCALIZATIONS_FILE), &records)
}

/// Drops the part of each segment past `duration_s` (frame rounding at the tail).
fn clip_to(segments: Vec<SegmentScore>, duration_s: f64) -> Result<Vec<SegmentScore>> {
    segments
        .into_iter()
        .filter(|s| s.interval.start() < duration_s)
        .map(|s| {
            SegmentScore::new(
                TimeInterval::new(s.interval.start(), s.interval.end().min(duration_s))?,
                s.confidence(),
            )
        })
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

pub fn fuse(
    cfg: &RunConfig,
    detections_path: &Path,
    localizations_path: &Path,
    meta_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let detections: Vec<DetectionRecord> = read_jsonl(detections_path)?;
    let mut segments: BTreeMap<String, (Vec<SegmentScore>, Vec<SegmentScore>)> = BTreeMap::new();
    for rec in read_jsonl::<SegmentRecord>(localizations_path)? {
        let segs = segment_scores(&rec.segments).with_context(|| format!("invalid segments for `{}`", rec.id))?;
        let slot = segments.entry(rec.id).or_default();
        match rec.modality {
            Modality::Audio => slot.0.extend(segs),
            Modality::Visual => slot.1.extend(segs),
        }
    }
    let durations: Option<BTreeMap<String, f64>> = meta_path
        .map(|p| load_meta(p).map(|m| m.into_iter().map(|v| (v.id, v.duration_s)).collect()))
        .transpose()?;

    let mut records = detections
        .par_iter()
        .map(|det| {
            let detection_score = match cfg.fusion_mode {
                FusionMode::Both => fuse_detection(det.audio_score, det.visual_score, &cfg.fusion)?,
                FusionMode::AudioOnly => det.audio_score,
                FusionMode::VisualOnly => det.visual_score,
            };
            let (audio, visual) = segments.get(&det.id).cloned().unwrap_or_default();
            let (audio, visual) = match cfg.fusion_mode {
                FusionMode::Both => (audio, visual),
                FusionMode::AudioOnly => (audio, Vec::new()),
                FusionMode::VisualOnly => (Vec::new(), visual),
            };
            let duration = match &durations {
                Some(d) => *d.get(&det.id).ok_or_else(|| anyhow!("no metadata for `{}`", det.id))?,
                None => audio
                    .iter()
                    .chain(&visual)
                    .map(|s| s.interval.end())
                    .fold(0.0, f64::max),
            };
            let fused = if duration > 0.0 {
                let audio = clip_to(audio, duration)?;
                let visual = clip_to(visual, duration)?;
                fuse_localization(&audio, &visual, duration, &cfg.fusion)?
            } else {
                Vec::new()
            };
            Ok(PredictionRecord {
                id: det.id.clone(),
                detection_score,
                segments: entries(&fused),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    write_jsonl(&out.join(PREDICTIONS_FILE), &records)
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub videos: usize,
    pub ground_truth: &'static str,
    pub final_score_rule: String,
    pub iou_thresholds: Vec<f64>,
    #[serde(rename = "AUC")]
    pub auc: f64,
    #[serde(rename = "AP")]
    pub ap: f64,
    #[serde(rename = "AR")]
    pub ar: f64,
    #[serde(rename = "final")]
    pub final_score: f64,
    pub ap_per_threshold: Vec<f64>,
    pub ar_per_threshold: Vec<f64>,
}

fn ground_truth_for(meta: &VideoMeta, set: GroundTruthSet) -> Vec<TimeInterval> {
    match set {
        GroundTruthSet::Pooled => {
            let all: Vec<TimeInterval> = meta
                .fake_audio_segments
                .iter()
                .chain(&meta.fake_visual_segments)
                .copied()
                .collect();
            union_intervals(&all)
        }
        GroundTruthSet::Audio => union_intervals(&meta.fake_audio_segments),
        GroundTruthSet::Visual => union_intervals(&meta.fake_visual_segments),
    }
}

pub fn evaluate(cfg: &RunConfig, predictions_path: &Path, meta_path: &Path) -> Result<EvalReport> {
    let metas = load_meta(meta_path)?;
    let by_id: BTreeMap<&str, &VideoMeta> = metas.iter().map(|m| (m.id.as_str(), m)).collect();
    let predictions: Vec<PredictionRecord> = read_jsonl(predictions_path)?;

    let mut labels = Vec::with_capacity(predictions.len());
    let mut scores = Vec::with_capacity(predictions.len());
    let mut predicted = Predictions::new();
    for p in &predictions {
        let meta = by_id
            .get(p.id.as_str())
            .ok_or_else(|| anyhow!("prediction for unknown video `{}`", p.id))?;
        labels.push(u8::from(meta.is_fake()));
        scores.push(p.detection_score);
        let segs = segment_scores(&p.segments).with_context(|| format!("invalid segments for `{}`", p.id))?;
        if predicted.insert(p.id.clone(), segs).is_some() {
            bail!("duplicate prediction for `{}`", p.id);
        }
    }
    let truth: GroundTruth = metas
        .iter()
        .map(|m| (m.id.clone(), ground_truth_for(m, cfg.ground_truth)))
        .collect();

    let auc_val = auc(&labels, &scores).context("detection AUC")?;
    let ap_per = average_precision_per_threshold(&predicted, &truth, &cfg.eval).context("localization AP")?;
    let ar_per = recall_per_threshold(&predicted, &truth, &cfg.eval).context("localization AR")?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ap, ar) = (mean(&ap_per), mean(&ar_per));

    Ok(EvalReport {
        videos: predictions.len(),
        ground_truth: match cfg.ground_truth {
            GroundTruthSet::Pooled => "pooled",
            GroundTruthSet::Audio => "audio",
            GroundTruthSet::Visual => "visual",
        },
        final_score_rule: cfg.eval.final_score_rule.to_string(),
        iou_thresholds: cfg.eval.iou_thresholds.iter().map(|&t| round_sig9(t)).collect(),
        auc: round_sig9(auc_val),
        ap: round_sig9(ap),
        ar: round_sig9(ar),
        final_score: round_sig9(final_score(auc_val, ap, ar, cfg.eval.final_score_rule)),
        ap_per_threshold: ap_per.into_iter().map(round_sig9).collect(),
        ar_per_threshold: ar_per.into_iter().map(round_sig9).collect(),
    })
}

pub fn eval(cfg: &RunConfig, predictions_path: &Path, meta_path: &Path, out: &Path) -> Result<()> {
    let report = evaluate(cfg, predictions_path, meta_path)?;
    println!("videos={}", report.videos);
    println!("AUC={}", report.auc);
    println!("AP={}", report.ap);
    println!("AR={}", report.ar);
    println!("final={}", report.final_score);
    write_json(&out.join(EVAL_FILE), &report)
}

pub fn stats(meta_path: &Path) -> Result<()> {
    let metas = load_meta(meta_path)?;
    print!("{}", dataset_stats(&metas)?.render());
    Ok(())
}

/// `explicit` if given, else `file` inside the output directory.
pub fn input_path(explicit: Option<PathBuf>, out: &Path, file: &str) -> PathBuf {
    explicit.unwrap_or_else(|| out.join(file))
}
