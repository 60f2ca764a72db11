//! Video-level verdicts and localization from per-frame visual scores.
//!
//! Detection follows a two-stage false-positive-rate rule. Frames are
//! binarized, maximal fake runs are ranked by length, and:
//!
//! 1. if the longest run covers at least `c1 * n` frames, its mean score is
//!    the video score;
//! 2. otherwise, if the remaining runs together cover at least `c2 * n`
//!    frames, the mean over their frames is used;
//! 3. otherwise the mean of every frame score is returned.

use crate::error::{Error, Result};
use crate::timeline::{frames_to_intervals, threshold_runs, FrameScoreSeries, SegmentScore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub binarize_threshold: f64,
    /// Stage I: minimum fraction of frames in the longest fake run.
    pub c1: f64,
    /// Stage II: minimum fraction of frames in all other fake runs.
    pub c2: f64,
    pub decision_threshold: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            binarize_threshold: 0.5,
            c1: 0.05,
            c2: 0.02,
            decision_threshold: 0.5,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        for p in [self.binarize_threshold, self.decision_threshold] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange(p));
            }
        }
        if !(self.c1 > 0.0 && self.c1 <= 1.0) {
            return Err(Error::InvalidConfig(format!("c1 must be in (0, 1], got {}", self.c1)));
        }
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(format!("c2 must be in (0, 1), got {}", self.c2)));
        }
        if self.c2 >= self.c1 {
            return Err(Error::InvalidConfig(format!(
                "c2 ({}) must be below c1 ({})",
                self.c2, self.c1
            )));
        }
        Ok(())
    }
}

/// Which branch of the two-stage rule produced a video score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionStage {
    LongestRun,
    ShortRuns,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoVerdict {
    pub score: f64,
    pub stage: DetectionStage,
}

/// Two-stage video score with the stage that fired.
pub fn detect_video_verdict(series: &FrameScoreSeries, cfg: &DetectionConfig) -> Result<VideoVerdict> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let scores = series.scores();
    let n = scores.len() as f64;
    let mut runs = threshold_runs(scores, cfg.binarize_threshold);
    // stable sort keeps earlier runs first among equal lengths
    runs.sort_by_key(|r| std::cmp::Reverse(r.len()));

    if let Some((longest, rest)) = runs.split_first() {
        if longest.len() as f64 >= n * cfg.c1 {
            return Ok(VideoVerdict {
                score: longest.mean(),
                stage: DetectionStage::LongestRun,
            });
        }
        let rest_frames: usize = rest.iter().map(|r| r.len()).sum();
        if rest_frames > 0 && rest_frames as f64 >= n * cfg.c2 {
            // frame-by-frame in temporal order, independent of run grouping
            let mut ordered: Vec<_> = rest.iter().map(|r| r.first..r.end).collect();
            ordered.sort_by_key(|r| r.start);
            let rest_sum = ordered.into_iter().flatten().fold(0.0, |acc, i| acc + scores[i]);
            return Ok(VideoVerdict {
                score: rest_sum / rest_frames as f64,
                stage: DetectionStage::ShortRuns,
            });
        }
    }
    Ok(VideoVerdict {
        score: scores.iter().sum::<f64>() / n,
        stage: DetectionStage::Fallback,
    })
}

/// Video-level fake confidence from frame scores.
pub fn detect_video(series: &FrameScoreSeries, cfg: &DetectionConfig) -> Result<f64> {
    detect_video_verdict(series, cfg).map(|v| v.score.clamp(0.0, 1.0))
}

/// Frame runs above the binarization threshold, as scored segments.
pub fn localize_visual(series: &FrameScoreSeries, cfg: &DetectionConfig) -> Result<Vec<SegmentScore>> {
    frames_to_intervals(series, cfg.binarize_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(scores: Vec<f64>) -> FrameScoreSeries {
        FrameScoreSeries::new(25.0, scores).unwrap()
    }

    #[test]
    fn stage_one_trace() {
        let mut s = vec![0.1; 100];
        s[10..20].fill(0.9);
        let v = detect_video_verdict(&series(s), &DetectionConfig::default()).unwrap();
        assert_eq!(v.stage, DetectionStage::LongestRun);
        assert!((v.score - 0.9).abs() < 1e-12);
    }

    #[test]
    fn stage_two_trace() {
        let mut s = vec![0.1; 100];
        s[10..13].fill(0.8);
        s[30..32].fill(0.8);
        s[50..52].fill(0.8);
        let v = detect_video_verdict(&series(s), &DetectionConfig::default()).unwrap();
        assert_eq!(v.stage, DetectionStage::ShortRuns);
        assert!((v.score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fallback_trace() {
        let v = detect_video_verdict(&series(vec![0.1; 100]), &DetectionConfig::default()).unwrap();
        assert_eq!(v.stage, DetectionStage::Fallback);
        assert!((v.score - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_short_run_falls_back() {
        let mut s = vec![0.0; 100];
        s[40..43].fill(1.0);
        let v = detect_video_verdict(&series(s), &DetectionConfig::default()).unwrap();
        assert_eq!(v.stage, DetectionStage::Fallback);
        assert!((v.score - 0.03).abs() < 1e-12);
    }

    #[test]
    fn stage_one_wins_when_both_hold() {
        let mut s = vec![0.0; 100];
        s[0..6].fill(0.7);
        s[20..22].fill(1.0);
        s[40..42].fill(1.0);
        let v = detect_video_verdict(&series(s), &DetectionConfig::default()).unwrap();
        assert_eq!(v.stage, DetectionStage::LongestRun);
        assert!((v.score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn longest_run_ties_break_on_earlier_start() {
        let mut s = vec![0.0; 100];
        s[10..15].fill(0.6);
        s[50..55].fill(0.9);
        let v = detect_video(&series(s), &DetectionConfig::default()).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn localization_examples() {
        let cfg = DetectionConfig::default();
        let mut s = vec![0.1; 25];
        s[10..15].fill(0.9);
        let segs = localize_visual(&series(s), &cfg).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].interval.start() - 0.4).abs() < 1e-12);
        assert!((segs[0].interval.end() - 0.6).abs() < 1e-12);
        assert!((segs[0].confidence() - 0.9).abs() < 1e-12);

        assert!(localize_visual(&series(vec![0.2; 10]), &cfg).unwrap().is_empty());
        let full = localize_visual(&series(vec![0.7; 10]), &cfg).unwrap();
        assert_eq!(full.len(), 1);
        assert!((full[0].interval.end() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn empty_series_is_rejected() {
        let cfg = DetectionConfig::default();
        assert_eq!(detect_video(&series(vec![]), &cfg), Err(Error::EmptySeries));
        assert_eq!(localize_visual(&series(vec![]), &cfg), Err(Error::EmptySeries));
    }

    #[test]
    fn config_requires_c2_below_c1() {
        let bad = DetectionConfig {
            c1: 0.02,
            c2: 0.05,
            ..DetectionConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(DetectionConfig::default().validate().is_ok());
    }
}
