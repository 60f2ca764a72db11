//! Line-delimited JSON record types exchanged between pipeline stages.
//!
//! Every real number is written with at most 9 significant digits.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::timeline::{Category, FrameScoreSeries, Modality, SegmentScore, TimeInterval, VideoMeta};

/// Rounds to 9 significant digits; the shortest round-trip form of the
/// result never needs more digits than that.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn sig9<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig9(*x))
}

fn sig9_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| round_sig9(*x)))
}

fn sig9_pairs<S: Serializer>(v: &[[f64; 2]], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|p| [round_sig9(p[0]), round_sig9(p[1])]))
}

fn pairs(segments: &[TimeInterval]) -> Vec<[f64; 2]> {
    segments.iter().map(|s| [s.start(), s.end()]).collect()
}

fn intervals(pairs: &[[f64; 2]]) -> Result<Vec<TimeInterval>> {
    pairs.iter().map(|p| TimeInterval::new(p[0], p[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub id: String,
    #[serde(serialize_with = "sig9")]
    pub duration_s: f64,
    pub category: Category,
    #[serde(serialize_with = "sig9_pairs")]
    pub fake_audio_segments: Vec<[f64; 2]>,
    #[serde(serialize_with = "sig9_pairs")]
    pub fake_visual_segments: Vec<[f64; 2]>,
}

impl From<&VideoMeta> for MetaRecord {
    fn from(m: &VideoMeta) -> Self {
        Self {
            id: m.id.clone(),
            duration_s: m.duration_s,
            category: m.category(),
            fake_audio_segments: pairs(&m.fake_audio_segments),
            fake_visual_segments: pairs(&m.fake_visual_segments),
        }
    }
}

impl TryFrom<MetaRecord> for VideoMeta {
    type Error = Error;

    fn try_from(r: MetaRecord) -> Result<Self> {
        VideoMeta::with_category(
            r.id,
            r.duration_s,
            r.category,
            intervals(&r.fake_audio_segments)?,
            intervals(&r.fake_visual_segments)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub modality: Modality,
    #[serde(serialize_with = "sig9")]
    pub fps: f64,
    #[serde(serialize_with = "sig9_vec")]
    pub scores: Vec<f64>,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, modality: Modality, series: &FrameScoreSeries) -> Self {
        Self {
            id: id.into(),
            modality,
            fps: series.fps(),
            scores: series.scores().to_vec(),
        }
    }

    pub fn series(&self) -> Result<FrameScoreSeries> {
        FrameScoreSeries::new(self.fps, self.scores.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    #[serde(serialize_with = "sig9")]
    pub start: f64,
    #[serde(serialize_with = "sig9")]
    pub end: f64,
    #[serde(serialize_with = "sig9")]
    pub score: f64,
}

impl From<&SegmentScore> for SegmentEntry {
    fn from(s: &SegmentScore) -> Self {
        Self {
            start: s.interval.start(),
            end: s.interval.end(),
            score: s.confidence(),
        }
    }
}

impl TryFrom<SegmentEntry> for SegmentScore {
    type Error = Error;

    fn try_from(e: SegmentEntry) -> Result<Self> {
        SegmentScore::new(TimeInterval::new(e.start, e.end)?, e.score)
    }
}

pub fn entries(segments: &[SegmentScore]) -> Vec<SegmentEntry> {
    segments.iter().map(SegmentEntry::from).collect()
}

pub fn segment_scores(entries: &[SegmentEntry]) -> Result<Vec<SegmentScore>> {
    entries.iter().map(|e| SegmentScore::try_from(*e)).collect()
}

/// Localized segments of one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    pub modality: Modality,
    pub segments: Vec<SegmentEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub id: String,
    #[serde(serialize_with = "sig9")]
    pub audio_score: f64,
    #[serde(serialize_with = "sig9")]
    pub visual_score: f64,
}

/// Fused video-level score plus fused localization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(serialize_with = "sig9")]
    pub detection_score: f64,
    pub segments: Vec<SegmentEntry>,
}

/// One labeled training crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropRecord {
    pub id: String,
    #[serde(serialize_with = "sig9")]
    pub crop_start: f64,
    #[serde(serialize_with = "sig9")]
    pub crop_end: f64,
    pub tiled: bool,
    pub label: u8,
}
