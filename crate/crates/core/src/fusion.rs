//! Late fusion of the audio and visual branches.
//!
//! Detection: when both modalities agree on the verdict their scores are
//! averaged; on disagreement the fake-predicting modality's score is kept.
//!
//! Localization: every segment endpoint from either modality cuts the video
//! into elementary intervals. Each interval takes, per modality, the highest
//! confidence among that modality's overlapping segments (zero when none),
//! and the fused confidence is the larger of the two. Neighbours with equal
//! confidence (within `merge_epsilon`) are then merged and intervals below
//! `report_threshold` are dropped.

use crate::error::{Error, Result};
use crate::timeline::{partition_timeline, SegmentScore, TimeInterval, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub decision_threshold: f64,
    pub merge_epsilon: f64,
    pub report_threshold: f64,
}

/// Smallest confidence reported by default; zero-confidence intervals carry no evidence.
pub const DEFAULT_REPORT_THRESHOLD: f64 = 1e-9;

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            decision_threshold: 0.5,
            merge_epsilon: 1e-6,
            report_threshold: DEFAULT_REPORT_THRESHOLD,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::ProbabilityOutOfRange(self.decision_threshold));
        }
        if self.merge_epsilon.is_nan() || self.merge_epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "merge_epsilon must be >= 0, got {}",
                self.merge_epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.report_threshold) {
            return Err(Error::ProbabilityOutOfRange(self.report_threshold));
        }
        Ok(())
    }
}

/// Fused video-level score.
pub fn fuse_detection(audio_score: f64, visual_score: f64, cfg: &FusionConfig) -> Result<f64> {
    for s in [audio_score, visual_score] {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ProbabilityOutOfRange(s));
        }
    }
    let audio_fake = audio_score >= cfg.decision_threshold;
    let visual_fake = visual_score >= cfg.decision_threshold;
    Ok(match (audio_fake, visual_fake) {
        (true, false) => audio_score,
        (false, true) => visual_score,
        _ => 0.5 * (audio_score + visual_score),
    })
}

/// One elementary interval of the fused partition, before merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedInterval {
    pub interval: TimeInterval,
    pub audio: f64,
    pub visual: f64,
    pub fused: f64,
}

fn check_range(segs: &[SegmentScore], duration_s: f64) -> Result<()> {
    match segs.iter().find(|s| !s.interval.within(duration_s)) {
        Some(bad) => Err(Error::OutOfTimeline {
            time: bad.interval.end(),
            duration: duration_s,
        }),
        None => Ok(()),
    }
}

/// Highest confidence among segments covering the interval, 0 when none does.
///
/// Every interval of the partition lies either inside or outside each
/// segment, so a midpoint test decides overlap robustly.
fn modality_confidence(segs: &[SegmentScore], interval: &TimeInterval) -> f64 {
    let mid = interval.midpoint();
    segs.iter()
        .filter(|s| s.interval.contains_time(mid))
        .map(SegmentScore::confidence)
        .fold(0.0, f64::max)
}

/// Elementary intervals with per-modality and fused confidences.
pub fn fuse_partition(audio: &[SegmentScore], visual: &[SegmentScore], duration_s: f64) -> Result<Vec<FusedInterval>> {
    check_range(audio, duration_s)?;
    check_range(visual, duration_s)?;
    let boundaries: Vec<f64> = audio
        .iter()
        .chain(visual)
        .flat_map(|s| [s.interval.start(), s.interval.end().min(duration_s)])
        .collect();
    Ok(partition_timeline(&boundaries, duration_s)?
        .into_iter()
        .map(|interval| {
            let a = modality_confidence(audio, &interval);
            let v = modality_confidence(visual, &interval);
            FusedInterval {
                interval,
                audio: a,
                visual: v,
                fused: a.max(v),
            }
        })
        .collect())
}

/// Merges runs of adjacent segments whose confidence is within `epsilon` of
/// the run's first segment; the merged segment keeps that first confidence.
pub fn merge_similar(segments: &[SegmentScore], epsilon: f64) -> Vec<SegmentScore> {
    let mut merged: Vec<SegmentScore> = Vec::with_capacity(segments.len());
    for seg in segments {
        if let Some(last) = merged.last_mut() {
            let adjacent = (seg.interval.start() - last.interval.end()).abs() <= TIME_EPS;
            if adjacent && (seg.confidence() - last.confidence()).abs() <= epsilon {
                last.interval = TimeInterval::new(last.interval.start(), seg.interval.end())
                    .expect("adjacent segments extend forward");
                continue;
            }
        }
        merged.push(*seg);
    }
    merged
}

/// Max-confidence localization fusion over the interval partition.
pub fn fuse_localization(
    audio: &[SegmentScore],
    visual: &[SegmentScore],
    duration_s: f64,
    cfg: &FusionConfig,
) -> Result<Vec<SegmentScore>> {
    let parts = fuse_partition(audio, visual, duration_s)?;
    let scored = parts
        .iter()
        .map(|p| SegmentScore::new(p.interval, p.fused))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_similar(&scored, cfg.merge_epsilon)
        .into_iter()
        .filter(|s| s.confidence() >= cfg.report_threshold && s.confidence() > 0.0)
        .collect())
}
