//! Audio branch plumbing around the detector networks: crop labeling for
//! training, class reweighting, sliding-window clip scoring, frame and
//! boundary label derivation, and the joint frame/boundary loss.

use crate::error::{Error, Result};
use crate::timeline::{FrameScoreSeries, TimeInterval, TIME_EPS};

/// Default crop and window length in seconds.
pub const DEFAULT_TARGET_LEN_S: f64 = 2.0;
/// Default sliding-window stride in seconds.
pub const DEFAULT_STRIDE_S: f64 = 1.0;
/// Default weight of the boundary term in [`joint_loss`].
pub const DEFAULT_LAMBDA_BOUNDARY: f64 = 0.5;
/// Probability clamp applied before taking logs.
pub const BCE_EPS: f64 = 1e-7;

/// A fixed-length training crop cut from a source recording.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropSpec {
    pub source_duration_s: f64,
    pub target_len_s: f64,
    pub crop: TimeInterval,
}

impl CropSpec {
    /// The source was shorter than the target and was tiled from offset 0.
    pub fn tiled(&self) -> bool {
        self.source_duration_s < self.target_len_s
    }
}

/// Cuts a crop of `target_len_s` starting at `offset_s`.
///
/// Sources shorter than the target are conceptually repeated and the first
/// `target_len_s` seconds of the tiled signal are taken, so the crop is
/// always `[0, target_len_s)` and `offset_s` must be 0.
pub fn pad_and_crop(source_duration_s: f64, target_len_s: f64, offset_s: f64) -> Result<CropSpec> {
    if !(target_len_s.is_finite() && target_len_s > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "target length must be positive, got {target_len_s}"
        )));
    }
    if !(source_duration_s.is_finite() && source_duration_s > 0.0) {
        return Err(Error::NonPositiveDuration(source_duration_s));
    }
    let max_offset = (source_duration_s - target_len_s).max(0.0);
    if !(offset_s >= 0.0 && offset_s <= max_offset + TIME_EPS) {
        return Err(Error::OutOfTimeline {
            time: offset_s,
            duration: max_offset,
        });
    }
    let start = offset_s.min(max_offset);
    Ok(CropSpec {
        source_duration_s,
        target_len_s,
        crop: TimeInterval::new(start, start + target_len_s)?,
    })
}

/// Audio-track ground truth needed to label a crop.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack<'a> {
    pub label: u8,
    pub forged: &'a [TimeInterval],
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledCrop {
    pub crop: TimeInterval,
    pub label: u8,
}

/// Reassigns a crop's label from its overlap with the forged intervals.
///
/// * no forged intervals: the recording's own label is kept;
/// * source shorter than the crop: fake, since tiling keeps every forged sample;
/// * otherwise: fake iff the crop overlaps any forged interval.
pub fn dynamic_label(track: &AudioTrack<'_>, crop: &CropSpec) -> Result<LabeledCrop> {
    if let Some(bad) = track.forged.iter().find(|f| !f.within(track.duration_s)) {
        return Err(Error::OutOfTimeline {
            time: bad.end(),
            duration: track.duration_s,
        });
    }
    let window = crop.crop;
    let label = if track.forged.is_empty() {
        track.label
    } else if track.duration_s < crop.target_len_s {
        1
    } else {
        let (ts, te) = (window.start(), window.end());
        let hit = track.forged.iter().any(|f| te > f.start() && ts < f.end());
        u8::from(hit)
    };
    Ok(LabeledCrop { crop: window, label })
}

/// Weights of the frame and boundary loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_boundary: f64,
    pub class_weight_real: f64,
    pub class_weight_fake: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_boundary: DEFAULT_LAMBDA_BOUNDARY,
            class_weight_real: 1.0,
            class_weight_fake: 1.0,
        }
    }
}

impl LossWeights {
    #[inline]
    pub fn class_weight(&self, label: u8) -> f64 {
        if label == 1 {
            self.class_weight_fake
        } else {
            self.class_weight_real
        }
    }
}

/// Inverse-frequency class weights with a mean weight of one.
///
/// `real / fake = n_fake / n_real`, scaled so that `(real + fake) / 2 = 1`.
pub fn class_weights(crops: &[LabeledCrop]) -> Result<LossWeights> {
    let n_fake = crops.iter().filter(|c| c.label == 1).count();
    let n_real = crops.len() - n_fake;
    if n_fake == 0 || n_real == 0 {
        return Err(Error::Degenerate(format!(
            "class weights need both classes (real={n_real}, fake={n_fake})"
        )));
    }
    let total = (n_real + n_fake) as f64;
    Ok(LossWeights {
        class_weight_real: 2.0 * n_fake as f64 / total,
        class_weight_fake: 2.0 * n_real as f64 / total,
        ..LossWeights::default()
    })
}

/// Inference windows of `window_s` every `stride_s`.
///
/// When the last full window stops short of the end, one more window is
/// back-extended from the end of the clip so it keeps the full length.
/// Clips shorter than one window yield the single window `[0, duration)`,
/// which is scored on tiled audio upstream.
pub fn sliding_windows(duration_s: f64, window_s: f64, stride_s: f64) -> Result<Vec<TimeInterval>> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::NonPositiveDuration(duration_s));
    }
    if !(window_s > 0.0 && stride_s > 0.0 && stride_s <= window_s) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < stride ({stride_s}) <= window ({window_s})"
        )));
    }
    if duration_s < window_s - TIME_EPS {
        return Ok(vec![TimeInterval::new(0.0, duration_s)?]);
    }
    let mut windows = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k as f64 * stride_s;
        if start + window_s > duration_s + TIME_EPS {
            break;
        }
        windows.push(TimeInterval::new(start, (start + window_s).min(duration_s))?);
        k += 1;
    }
    let covered = windows.last().map_or(0.0, |w| w.end());
    if covered < duration_s - TIME_EPS {
        windows.push(TimeInterval::new((duration_s - window_s).max(0.0), duration_s)?);
    }
    Ok(windows)
}

/// Clip score as the maximum over window scores.
pub fn aggregate_max(window_scores: &[f64]) -> Result<f64> {
    window_scores
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptyInput("window scores"))
}

/// Frame indices whose spans overlap `window` by more than [`TIME_EPS`].
fn frames_in(window: &TimeInterval, fps: f64, n_frames: usize) -> std::ops::Range<usize> {
    let first = ((window.start() + TIME_EPS) * fps).floor().max(0.0) as usize;
    let end = ((window.end() - TIME_EPS) * fps).ceil().max(0.0) as usize;
    first.min(n_frames)..end.min(n_frames)
}

/// Scores each inference window from the frame series and max-pools them.
///
/// A window's score is the highest frame score inside it, the crop-level
/// response of a detector trained on overlap-labeled crops.
pub fn clip_score(series: &FrameScoreSeries, window_s: f64, stride_s: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let windows = sliding_windows(series.duration(), window_s, stride_s)?;
    let scores = series.scores();
    let window_scores: Vec<f64> = windows
        .iter()
        .filter_map(|w| {
            scores[frames_in(w, series.fps(), scores.len())]
                .iter()
                .copied()
                .reduce(f64::max)
        })
        .collect();
    aggregate_max(&window_scores)
}

/// Frame-level and boundary labels for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    pub fps: f64,
    pub authenticity: Vec<u8>,
    pub boundary: Vec<u8>,
}

impl FrameLabels {
    pub fn derive(forged: &[TimeInterval], fps: f64, n_frames: usize) -> Result<Self> {
        let authenticity = derive_frame_labels(forged, fps, n_frames)?;
        let boundary = derive_boundary_labels(&authenticity)?;
        Ok(Self {
            fps,
            authenticity,
            boundary,
        })
    }
}

/// Frame `i` is fake iff `[i/fps, (i+1)/fps)` overlaps a forged interval.
///
/// Overlaps thinner than [`TIME_EPS`] are ignored so grid-aligned
/// boundaries do not spill into the neighboring frame through rounding.
pub fn derive_frame_labels(forged: &[TimeInterval], fps: f64, n_frames: usize) -> Result<Vec<u8>> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::NonPositiveFps(fps));
    }
    let mut labels = vec![0u8; n_frames];
    for seg in forged {
        for label in &mut labels[frames_in(seg, fps, n_frames)] {
            *label = 1;
        }
    }
    Ok(labels)
}

/// Marks both frames on either side of every real/fake transition.
pub fn derive_boundary_labels(authenticity: &[u8]) -> Result<Vec<u8>> {
    if authenticity.is_empty() {
        return Err(Error::EmptyInput("authenticity labels"));
    }
    let n = authenticity.len();
    Ok((0..n)
        .map(|i| {
            let left = i > 0 && authenticity[i] != authenticity[i - 1];
            let right = i + 1 < n && authenticity[i] != authenticity[i + 1];
            u8::from(left || right)
        })
        .collect())
}

#[inline]
fn bce(p: f64, label: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `L = L_s + lambda * L_b` with mean-reduced binary cross-entropies.
///
/// `L_s` weights each frame by its class weight; `L_b` is unweighted.
pub fn joint_loss(
    frame_pred: &[f64],
    frame_labels: &[u8],
    boundary_pred: &[f64],
    boundary_labels: &[u8],
    weights: &LossWeights,
) -> Result<f64> {
    if frame_pred.len() != frame_labels.len() {
        return Err(Error::LengthMismatch {
            what: "frame predictions vs labels",
            left: frame_pred.len(),
            right: frame_labels.len(),
        });
    }
    if boundary_pred.len() != boundary_labels.len() {
        return Err(Error::LengthMismatch {
            what: "boundary predictions vs labels",
            left: boundary_pred.len(),
            right: boundary_labels.len(),
        });
    }
    if frame_pred.is_empty() || boundary_pred.is_empty() {
        return Err(Error::EmptyInput("loss inputs"));
    }
    let l_s = frame_pred
        .iter()
        .zip(frame_labels)
        .map(|(&p, &y)| weights.class_weight(y) * bce(p, y))
        .sum::<f64>()
        / frame_pred.len() as f64;
    let l_b = boundary_pred
        .iter()
        .zip(boundary_labels)
        .map(|(&p, &y)| bce(p, y))
        .sum::<f64>()
        / boundary_pred.len() as f64;
    Ok(l_s + weights.lambda_boundary * l_b)
}
