//! Timeline primitives: half-open intervals, frame score series and
//! interval algebra shared by every stage of the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing or deduplicating timestamps.
pub const TIME_EPS: f64 = 1e-9;

/// Half-open span `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    start: f64,
    end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || start >= end {
            return Err(Error::InvalidInterval { start, end });
        }
        Ok(Self { start, end })
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end
    }

    #[inline]
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Length of the intersection with `other` (0 when disjoint).
    pub fn intersection_len(&self, other: &TimeInterval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    /// True when the interval lies inside `[0, duration]` up to [`TIME_EPS`].
    pub fn within(&self, duration: f64) -> bool {
        self.end <= duration + TIME_EPS
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// True iff the half-open intervals share a point: `a.start < b.end && b.start < a.end`.
#[inline]
pub fn overlaps(a: &TimeInterval, b: &TimeInterval) -> bool {
    a.start < b.end && b.start < a.end
}

/// Per-frame forgery probabilities for one modality at a fixed frame rate.
///
/// Frame `i` covers `[i / fps, (i + 1) / fps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScoreSeries {
    fps: f64,
    scores: Vec<f64>,
}

impl FrameScoreSeries {
    pub fn new(fps: f64, scores: Vec<f64>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::NonPositiveFps(fps));
        }
        if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::ProbabilityOutOfRange(bad));
        }
        Ok(Self { fps, scores })
    }

    #[inline]
    pub fn fps(&self) -> f64 {
        self.fps
    }

    #[inline]
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.scores.len() as f64 / self.fps
    }

    /// Time span covered by frame `i`.
    pub fn frame_span(&self, i: usize) -> (f64, f64) {
        (i as f64 / self.fps, (i + 1) as f64 / self.fps)
    }
}

/// A time interval carrying a forgery confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentScore {
    pub interval: TimeInterval,
    confidence: f64,
}

impl SegmentScore {
    pub fn new(interval: TimeInterval, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::ProbabilityOutOfRange(confidence));
        }
        Ok(Self { interval, confidence })
    }

    #[inline]
    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

/// Which half of the audio/visual pair a score or segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Visual,
}

impl Modality {
    pub const BOTH: [Modality; 2] = [Modality::Audio, Modality::Visual];

    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Visual => "visual",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    RealAudioRealVisual,
    FakeAudioRealVisual,
    RealAudioFakeVisual,
    FakeAudioFakeVisual,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::RealAudioRealVisual,
        Category::FakeAudioRealVisual,
        Category::RealAudioFakeVisual,
        Category::FakeAudioFakeVisual,
    ];

    pub fn from_labels(audio_fake: bool, visual_fake: bool) -> Self {
        match (audio_fake, visual_fake) {
            (false, false) => Category::RealAudioRealVisual,
            (true, false) => Category::FakeAudioRealVisual,
            (false, true) => Category::RealAudioFakeVisual,
            (true, true) => Category::FakeAudioFakeVisual,
        }
    }

    pub fn audio_fake(&self) -> bool {
        matches!(self, Category::FakeAudioRealVisual | Category::FakeAudioFakeVisual)
    }

    pub fn visual_fake(&self) -> bool {
        matches!(self, Category::RealAudioFakeVisual | Category::FakeAudioFakeVisual)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::RealAudioRealVisual => "real_audio_real_visual",
            Category::FakeAudioRealVisual => "fake_audio_real_visual",
            Category::RealAudioFakeVisual => "real_audio_fake_visual",
            Category::FakeAudioFakeVisual => "fake_audio_fake_visual",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth record for one video.
///
/// Modality labels are derived from the segment lists: a modality is fake iff
/// it has at least one forged segment. A fully forged modality carries a single
/// segment spanning `[0, duration_s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoMeta {
    pub id: String,
    pub duration_s: f64,
    pub fake_audio_segments: Vec<TimeInterval>,
    pub fake_visual_segments: Vec<TimeInterval>,
}

impl VideoMeta {
    pub fn new(
        id: impl Into<String>,
        duration_s: f64,
        fake_audio_segments: Vec<TimeInterval>,
        fake_visual_segments: Vec<TimeInterval>,
    ) -> Result<Self> {
        let meta = Self {
            id: id.into(),
            duration_s,
            fake_audio_segments,
            fake_visual_segments,
        };
        meta.validate()?;
        Ok(meta)
    }

    /// Like [`VideoMeta::new`] but also checks a stored category against the
    /// labels implied by the segment lists.
    pub fn with_category(
        id: impl Into<String>,
        duration_s: f64,
        category: Category,
        fake_audio_segments: Vec<TimeInterval>,
        fake_visual_segments: Vec<TimeInterval>,
    ) -> Result<Self> {
        let meta = Self::new(id, duration_s, fake_audio_segments, fake_visual_segments)?;
        if meta.category() != category {
            return Err(Error::InconsistentMeta {
                id: meta.id,
                reason: format!(
                    "category {category} does not match segment lists ({})",
                    Category::from_labels(
                        !meta.fake_audio_segments.is_empty(),
                        !meta.fake_visual_segments.is_empty()
                    )
                ),
            });
        }
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::NonPositiveDuration(self.duration_s));
        }
        for seg in self.fake_audio_segments.iter().chain(&self.fake_visual_segments) {
            if !seg.within(self.duration_s) {
                return Err(Error::InconsistentMeta {
                    id: self.id.clone(),
                    reason: format!("segment {seg} exceeds duration {}", self.duration_s),
                });
            }
        }
        Ok(())
    }

    pub fn segments(&self, modality: Modality) -> &[TimeInterval] {
        match modality {
            Modality::Audio => &self.fake_audio_segments,
            Modality::Visual => &self.fake_visual_segments,
        }
    }

    pub fn label(&self, modality: Modality) -> u8 {
        u8::from(!self.segments(modality).is_empty())
    }

    pub fn audio_label(&self) -> u8 {
        self.label(Modality::Audio)
    }

    pub fn visual_label(&self) -> u8 {
        self.label(Modality::Visual)
    }

    /// Video-level label: fake iff either modality is fake.
    pub fn is_fake(&self) -> bool {
        self.audio_label() == 1 || self.visual_label() == 1
    }

    pub fn category(&self) -> Category {
        Category::from_labels(self.audio_label() == 1, self.visual_label() == 1)
    }

    /// True when the modality is represented as a single full-span forgery.
    pub fn fully_forged(&self, modality: Modality) -> bool {
        match self.segments(modality) {
            [only] => only.start() <= TIME_EPS && only.end() >= self.duration_s - TIME_EPS,
            _ => false,
        }
    }
}

/// Splits `[0, duration_s)` at the given boundaries.
///
/// The boundary set is augmented with `0` and `duration_s`, sorted and
/// deduplicated (timestamps closer than [`TIME_EPS`] collapse), and the
/// consecutive pairs are returned as gapless half-open intervals.
pub fn partition_timeline(boundaries: &[f64], duration_s: f64) -> Result<Vec<TimeInterval>> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::NonPositiveDuration(duration_s));
    }
    let mut points = Vec::with_capacity(boundaries.len() + 2);
    for &b in boundaries {
        if !b.is_finite() || b < -TIME_EPS || b > duration_s + TIME_EPS {
            return Err(Error::OutOfTimeline {
                time: b,
                duration: duration_s,
            });
        }
        points.push(b.clamp(0.0, duration_s));
    }
    points.push(0.0);
    points.push(duration_s);
    points.sort_by(f64::total_cmp);

    let mut cuts: Vec<f64> = Vec::with_capacity(points.len());
    for p in points {
        match cuts.last() {
            Some(&last) if p - last <= TIME_EPS => {}
            _ => cuts.push(p),
        }
    }
    // the endpoint may have been swallowed by a boundary within TIME_EPS of it
    if let Some(last) = cuts.last_mut() {
        *last = duration_s;
    }

    cuts.windows(2).map(|w| TimeInterval::new(w[0], w[1])).collect()
}

/// Union of intervals; overlapping or touching spans are joined. Sorted output.
pub fn union_intervals(intervals: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut out: Vec<TimeInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            Some(last) if iv.start <= last.end + TIME_EPS => last.end = last.end.max(iv.end),
            _ => out.push(iv),
        }
    }
    out
}

/// A maximal run of consecutive frames at or above a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRun {
    /// First frame index of the run.
    pub first: usize,
    /// One past the last frame index.
    pub end: usize,
    /// Sum of the run's frame scores.
    pub score_sum: f64,
}

impl FrameRun {
    #[inline]
    pub fn len(&self) -> usize {
        self.end - self.first
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.end == self.first
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.score_sum / self.len() as f64
    }
}

/// Extracts the maximal runs of frames with `score >= threshold`, in temporal order.
pub fn threshold_runs(scores: &[f64], threshold: f64) -> Vec<FrameRun> {
    let mut runs = Vec::new();
    let mut current: Option<FrameRun> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s >= threshold {
            let run = current.get_or_insert(FrameRun {
                first: i,
                end: i,
                score_sum: 0.0,
            });
            run.end = i + 1;
            run.score_sum += s;
        } else if let Some(run) = current.take() {
            runs.push(run);
        }
    }
    runs.extend(current);
    runs
}

/// Converts frame runs at or above `threshold` into scored time segments.
///
/// Each segment's confidence is the arithmetic mean of its frames.
pub fn frames_to_intervals(series: &FrameScoreSeries, threshold: f64) -> Result<Vec<SegmentScore>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::ProbabilityOutOfRange(threshold));
    }
    let fps = series.fps();
    threshold_runs(series.scores(), threshold)
        .into_iter()
        .map(|run| {
            let interval = TimeInterval::new(run.first as f64 / fps, run.end as f64 / fps)?;
            // mean of values in [0,1] can drift past 1 by an ulp
            SegmentScore::new(interval, run.mean().clamp(0.0, 1.0))
        })
        .collect()
}

/// Number of whole frames needed to cover `duration_s` at `fps`.
pub fn frame_count(duration_s: f64, fps: f64) -> usize {
    (duration_s * fps - TIME_EPS).ceil().max(0.0) as usize
}

/// Zero-order-hold resampling to `target_fps`.
///
/// Output frame `j` takes the score of the input frame whose span contains
/// the midpoint of `j`.
pub fn resample_series(series: &FrameScoreSeries, target_fps: f64) -> Result<FrameScoreSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(Error::NonPositiveFps(target_fps));
    }
    let n_out = frame_count(series.duration(), target_fps);
    let last = series.len() - 1;
    let scores = (0..n_out)
        .map(|j| {
            let mid = (j as f64 + 0.5) / target_fps;
            let src = ((mid * series.fps()).floor() as usize).min(last);
            series.scores()[src]
        })
        .collect();
    FrameScoreSeries::new(target_fps, scores)
}
