//! Synthetic datasets and detector score streams.
//!
//! The generator reproduces the category mix and forged-segment duration
//! profile of a partially forged audio-visual corpus. All randomness flows
//! from one seed through per-video ChaCha streams, so output is independent
//! of thread count and evaluation order.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::audio::derive_frame_labels;
use crate::error::{Error, Result};
use crate::timeline::{frame_count, Category, FrameScoreSeries, Modality, TimeInterval, VideoMeta};

/// Upper edges of the first three duration bins; the fourth is open.
pub const DURATION_BIN_EDGES: [f64; 3] = [0.5, 1.0, 2.0];
pub const DURATION_BIN_LABELS: [&str; 4] = ["0-0.5", "0.5-1", "1-2", ">2"];
/// Cap on segments drawn from the open `>2 s` bin, also bounded by half the video.
pub const LONG_SEGMENT_CAP_S: f64 = 4.0;
const PLACEMENT_RETRIES: usize = 64;
const GRID_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_videos: usize,
    pub seed: u64,
    /// Probabilities in [`Category::ALL`] order.
    pub category_probs: [f64; 4],
    pub duration_bins_audio: [f64; 4],
    pub duration_bins_visual: [f64; 4],
    pub video_duration_range_s: (f64, f64),
    pub segments_per_modality_range: (usize, usize),
    pub full_forgery_prob: f64,
    /// All durations and segment endpoints are multiples of this step.
    pub time_grid_s: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_videos: 1000,
            seed: 0,
            category_probs: [0.34, 0.23, 0.24, 0.19],
            duration_bins_audio: [0.57, 0.21, 0.14, 0.08],
            duration_bins_visual: [0.46, 0.25, 0.18, 0.11],
            video_duration_range_s: (4.0, 20.0),
            segments_per_modality_range: (1, 3),
            full_forgery_prob: 0.1,
            time_grid_s: 0.04,
        }
    }
}

fn check_distribution(name: &str, probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidConfig(format!("{name}: entries must lie in [0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("{name}: sums to {total}, expected 1")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        check_distribution("category_probs", &self.category_probs)?;
        check_distribution("duration_bins_audio", &self.duration_bins_audio)?;
        check_distribution("duration_bins_visual", &self.duration_bins_visual)?;
        let (lo, hi) = self.video_duration_range_s;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "video_duration_range_s must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        let (smin, smax) = self.segments_per_modality_range;
        if smin == 0 || smin > smax {
            return Err(Error::InvalidConfig(format!(
                "segments_per_modality_range must satisfy 1 <= min <= max, got [{smin}, {smax}]"
            )));
        }
        if !(0.0..=1.0).contains(&self.full_forgery_prob) {
            return Err(Error::ProbabilityOutOfRange(self.full_forgery_prob));
        }
        if !(self.time_grid_s > 0.0 && self.time_grid_s <= lo) {
            return Err(Error::InvalidConfig(format!(
                "time_grid_s must lie in (0, min duration], got {}",
                self.time_grid_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Real frames score exactly 0 and fake frames exactly 1.
    Oracle,
    /// Gaussian scores around per-class means, with whole-run misses and false alarms.
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub mode: DetectorMode,
    pub real_score_mean: f64,
    pub fake_score_mean: f64,
    pub score_noise_scale: f64,
    pub miss_rate: f64,
    pub false_alarm_rate: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            mode: DetectorMode::Oracle,
            real_score_mean: 0.1,
            fake_score_mean: 0.9,
            score_noise_scale: 0.1,
            miss_rate: 0.0,
            false_alarm_rate: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        for p in [
            self.real_score_mean,
            self.fake_score_mean,
            self.miss_rate,
            self.false_alarm_rate,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange(p));
            }
        }
        if self.score_noise_scale.is_nan() || self.score_noise_scale < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "score_noise_scale must be >= 0, got {}",
                self.score_noise_scale
            )));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; derives independent child seeds from `(base, index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha generator keyed by `seed`, positioned on an independent stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Zero-padded id so lexical order matches generation order.
pub fn video_id(index: usize) -> String {
    format!("vid_{index:07}")
}

/// Rounds away representation noise from grid arithmetic.
fn snap(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding slack lands on the last bin with non-zero mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Histogram bin of a segment duration: `(0,0.5]`, `(0.5,1]`, `(1,2]`, `(2,inf)`.
pub fn duration_bin(duration_s: f64) -> usize {
    DURATION_BIN_EDGES
        .iter()
        .position(|&edge| duration_s <= edge + 1e-9)
        .unwrap_or(3)
}

/// Grid-step counts allowed for a segment in `bin` of a video lasting `video_s`.
fn bin_steps(bin: usize, video_s: f64, grid: f64) -> Option<(usize, usize)> {
    let lo = if bin == 0 { 0.0 } else { DURATION_BIN_EDGES[bin - 1] };
    let hi = if bin < 3 {
        DURATION_BIN_EDGES[bin]
    } else {
        LONG_SEGMENT_CAP_S.min(video_s / 2.0)
    };
    let first = (lo / grid + GRID_EPS).floor() as usize + 1;
    let last = (hi / grid + GRID_EPS).floor() as usize;
    (first <= last).then_some((first, last))
}

/// Draws grid-aligned, pairwise non-touching segments for one fake modality.
fn sample_segments<R: Rng>(
    rng: &mut R,
    cfg: &GeneratorConfig,
    bins: &[f64; 4],
    video_s: f64,
    slots: usize,
) -> Vec<TimeInterval> {
    let grid = cfg.time_grid_s;
    if rng.random::<f64>() < cfg.full_forgery_prob {
        return vec![TimeInterval::new(0.0, video_s).expect("positive duration")];
    }
    let (smin, smax) = cfg.segments_per_modality_range;
    let wanted = rng.random_range(smin..=smax);

    for count in (1..=wanted).rev() {
        for _ in 0..PLACEMENT_RETRIES {
            let lens: Option<Vec<usize>> = (0..count)
                .map(|_| {
                    let bin = categorical(rng, bins);
                    bin_steps(bin, video_s, grid).map(|(a, b)| rng.random_range(a..=b))
                })
                .collect();
            let Some(lens) = lens else { continue };
            // one empty grid step between neighbours keeps segments from touching
            let needed = lens.iter().sum::<usize>() + count - 1;
            if needed > slots {
                continue;
            }
            let free = slots - needed;
            let mut offsets: Vec<usize> = (0..count).map(|_| rng.random_range(0..=free)).collect();
            offsets.sort_unstable();
            let mut cursor = 0usize;
            return lens
                .iter()
                .zip(&offsets)
                .enumerate()
                .map(|(i, (&len, &off))| {
                    let start = off + cursor + i;
                    cursor += len;
                    TimeInterval::new(snap(start as f64 * grid), snap((start + len) as f64 * grid))
                        .expect("non-empty grid segment")
                })
                .collect();
        }
    }
    // a single one-step segment always fits
    let start = rng.random_range(0..slots);
    vec![TimeInterval::new(snap(start as f64 * grid), snap((start + 1) as f64 * grid)).expect("grid step")]
}

/// Generates video `index` of the dataset described by `cfg`.
pub fn sample_video(cfg: &GeneratorConfig, index: usize) -> VideoMeta {
    let mut rng = stream_rng(cfg.seed, index as u64);
    let grid = cfg.time_grid_s;
    let (lo, hi) = cfg.video_duration_range_s;
    let min_slots = ((lo / grid - GRID_EPS).ceil() as usize).max(1);
    let max_slots = ((hi / grid + GRID_EPS).floor() as usize).max(min_slots);
    let slots = rng.random_range(min_slots..=max_slots);
    let duration = snap(slots as f64 * grid);

    let category = Category::ALL[categorical(&mut rng, &cfg.category_probs)];
    let audio = if category.audio_fake() {
        sample_segments(&mut rng, cfg, &cfg.duration_bins_audio, duration, slots)
    } else {
        Vec::new()
    };
    let visual = if category.visual_fake() {
        sample_segments(&mut rng, cfg, &cfg.duration_bins_visual, duration, slots)
    } else {
        Vec::new()
    };
    VideoMeta::new(video_id(index), duration, audio, visual).expect("generated metadata is valid")
}

/// Deterministic synthetic dataset, ordered by video index.
pub fn sample_dataset(cfg: &GeneratorConfig) -> Result<Vec<VideoMeta>> {
    cfg.validate()?;
    Ok((0..cfg.n_videos)
        .into_par_iter()
        .map(|i| sample_video(cfg, i))
        .collect())
}

/// Frame scores a detector of the given model would emit for one modality.
pub fn simulate_scores(
    meta: &VideoMeta,
    model: &DetectorModel,
    modality: Modality,
    fps: f64,
    seed: u64,
) -> Result<FrameScoreSeries> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::NonPositiveFps(fps));
    }
    let n = frame_count(meta.duration_s, fps).max(1);
    let labels = derive_frame_labels(meta.segments(modality), fps, n)?;
    let scores = match model.mode {
        DetectorMode::Oracle => labels.iter().map(|&l| f64::from(l)).collect(),
        DetectorMode::Noisy => {
            let stream = match modality {
                Modality::Audio => 1,
                Modality::Visual => 2,
            };
            let mut rng = stream_rng(seed, stream);
            let mut scores = Vec::with_capacity(n);
            for run in labels.chunk_by(|a, b| a == b) {
                let fake = run[0] == 1;
                let flip = if fake { model.miss_rate } else { model.false_alarm_rate };
                let reported_fake = fake != (rng.random::<f64>() < flip);
                let mean = if reported_fake {
                    model.fake_score_mean
                } else {
                    model.real_score_mean
                };
                for _ in run {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scores.push((mean + model.score_noise_scale * z).clamp(0.0, 1.0));
                }
            }
            scores
        }
    };
    FrameScoreSeries::new(fps, scores)
}

/// Category and segment-duration summary of a set of videos.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub n_videos: usize,
    /// Counts in [`Category::ALL`] order.
    pub category_counts: [usize; 4],
    /// Partial-forgery segment counts per duration bin.
    pub audio_duration_hist: [usize; 4],
    pub visual_duration_hist: [usize; 4],
    /// Modalities forged over their whole span; kept out of the histograms.
    pub fully_forged_audio: usize,
    pub fully_forged_visual: usize,
}

fn proportions(counts: &[usize; 4]) -> Option<[f64; 4]> {
    let total: usize = counts.iter().sum();
    (total > 0).then(|| counts.map(|c| c as f64 / total as f64))
}

impl DatasetStats {
    pub fn category_proportions(&self) -> [f64; 4] {
        proportions(&self.category_counts).unwrap_or([0.0; 4])
    }

    pub fn duration_proportions(&self, modality: Modality) -> Option<[f64; 4]> {
        proportions(match modality {
            Modality::Audio => &self.audio_duration_hist,
            Modality::Visual => &self.visual_duration_hist,
        })
    }

    /// Plain-text tables of category shares and segment-duration shares.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let cat = self.category_proportions();
        let _ = writeln!(out, "Video categories (n = {})", self.n_videos);
        let _ = writeln!(out, "{:<26}{:>10}{:>12}", "category", "count", "proportion");
        for (i, c) in Category::ALL.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<26}{:>10}{:>11.1}%",
                c.as_str(),
                self.category_counts[i],
                100.0 * cat[i]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Forged segment durations (partial forgeries)");
        let _ = writeln!(out, "{:<14}{:>20}{:>20}", "duration (s)", "audio", "visual");
        let audio = self.duration_proportions(Modality::Audio);
        let visual = self.duration_proportions(Modality::Visual);
        let cell = |count: usize, share: Option<[f64; 4]>, i: usize| match share {
            Some(p) => format!("{count} ({:.1}%)", 100.0 * p[i]),
            None => "-".to_string(),
        };
        for (i, label) in DURATION_BIN_LABELS.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<14}{:>20}{:>20}",
                label,
                cell(self.audio_duration_hist[i], audio, i),
                cell(self.visual_duration_hist[i], visual, i)
            );
        }
        let _ = writeln!(
            out,
            "{:<14}{:>20}{:>20}",
            "fully forged", self.fully_forged_audio, self.fully_forged_visual
        );
        out
    }
}

pub fn dataset_stats(metas: &[VideoMeta]) -> Result<DatasetStats> {
    if metas.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut stats = DatasetStats {
        n_videos: metas.len(),
        category_counts: [0; 4],
        audio_duration_hist: [0; 4],
        visual_duration_hist: [0; 4],
        fully_forged_audio: 0,
        fully_forged_visual: 0,
    };
    for meta in metas {
        let idx = Category::ALL
            .iter()
            .position(|c| *c == meta.category())
            .expect("category enumerated");
        stats.category_counts[idx] += 1;
        for modality in Modality::BOTH {
            let (hist, full) = match modality {
                Modality::Audio => (&mut stats.audio_duration_hist, &mut stats.fully_forged_audio),
                Modality::Visual => (&mut stats.visual_duration_hist, &mut stats.fully_forged_visual),
            };
            if meta.fully_forged(modality) {
                *full += 1;
                continue;
            }
            for seg in meta.segments(modality) {
                hist[duration_bin(seg.len())] += 1;
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_category_distribution() {
        let cfg = GeneratorConfig {
            n_videos: 4,
            category_probs: [1.0, 0.0, 0.0, 0.0],
            ..GeneratorConfig::default()
        };
        let data = sample_dataset(&cfg).unwrap();
        assert_eq!(data.len(), 4);
        assert!(data.iter().all(|m| m.category() == Category::RealAudioRealVisual));
        assert!(data
            .iter()
            .all(|m| m.fake_audio_segments.is_empty() && m.fake_visual_segments.is_empty()));
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = GeneratorConfig {
            n_videos: 200,
            seed: 7,
            ..GeneratorConfig::default()
        };
        assert_eq!(sample_dataset(&cfg).unwrap(), sample_dataset(&cfg).unwrap());
        let other = GeneratorConfig { seed: 8, ..cfg.clone() };
        assert_ne!(sample_dataset(&cfg).unwrap(), sample_dataset(&other).unwrap());
    }

    #[test]
    fn segments_are_grid_aligned_disjoint_and_in_range() {
        let cfg = GeneratorConfig {
            n_videos: 2000,
            seed: 3,
            ..GeneratorConfig::default()
        };
        for m in sample_dataset(&cfg).unwrap() {
            for modality in Modality::BOTH {
                let segs = m.segments(modality);
                for s in segs {
                    assert!(s.end() <= m.duration_s + 1e-9);
                    for t in [s.start(), s.end()] {
                        let k = t / cfg.time_grid_s;
                        assert!((k - k.round()).abs() < 1e-6, "{t} off grid");
                    }
                }
                let mut sorted = segs.to_vec();
                sorted.sort_by(|a, b| a.start().total_cmp(&b.start()));
                for w in sorted.windows(2) {
                    assert!(w[0].end() < w[1].start() - 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = GeneratorConfig {
            category_probs: [0.5, 0.5, 0.5, 0.0],
            ..GeneratorConfig::default()
        };
        assert!(sample_dataset(&cfg).is_err());
    }

    #[test]
    fn oracle_scores() {
        let real = VideoMeta::new("r", 1.0, vec![], vec![]).unwrap();
        let s = simulate_scores(&real, &DetectorModel::default(), Modality::Audio, 25.0, 1).unwrap();
        assert_eq!(s.scores(), &[0.0; 25]);

        let seg = TimeInterval::new(0.4, 0.6).unwrap();
        let fake = VideoMeta::new("f", 1.0, vec![seg], vec![]).unwrap();
        let s = simulate_scores(&fake, &DetectorModel::default(), Modality::Audio, 25.0, 1).unwrap();
        let expected: Vec<f64> = (0..25).map(|i| if (10..15).contains(&i) { 1.0 } else { 0.0 }).collect();
        assert_eq!(s.scores(), expected.as_slice());
    }

    #[test]
    fn noiseless_noisy_model_emits_class_means() {
        let seg = TimeInterval::new(0.4, 0.6).unwrap();
        let fake = VideoMeta::new("f", 1.0, vec![], vec![seg]).unwrap();
        let model = DetectorModel {
            mode: DetectorMode::Noisy,
            score_noise_scale: 0.0,
            ..DetectorModel::default()
        };
        let s = simulate_scores(&fake, &model, Modality::Visual, 25.0, 9).unwrap();
        for (i, &v) in s.scores().iter().enumerate() {
            let want = if (10..15).contains(&i) { 0.9 } else { 0.1 };
            assert_eq!(v, want);
        }
    }

    #[test]
    fn table_one_counts_render_as_reported_shares() {
        let counts = [67_348 + 4_965, 46_933 + 3_000, 48_035 + 3_000, 38_544 + 3_000];
        let seg = || vec![TimeInterval::new(1.0, 1.2).unwrap()];
        let mut metas = Vec::new();
        for (c, &n) in Category::ALL.iter().zip(&counts) {
            for _ in 0..n {
                let audio = if c.audio_fake() { seg() } else { vec![] };
                let visual = if c.visual_fake() { seg() } else { vec![] };
                metas.push(VideoMeta::new("x", 4.0, audio, visual).unwrap());
            }
        }
        let stats = dataset_stats(&metas).unwrap();
        assert_eq!(stats.category_counts, counts);
        let rounded: Vec<f64> = stats
            .category_proportions()
            .iter()
            .map(|p| (100.0 * p).round())
            .collect();
        assert_eq!(rounded, vec![34.0, 23.0, 24.0, 19.0]);
        assert!(stats
            .render()
            .contains("real_audio_real_visual         72313       33.7%"));
    }

    #[test]
    fn all_real_dataset_has_empty_histograms() {
        let metas = vec![VideoMeta::new("a", 5.0, vec![], vec![]).unwrap()];
        let stats = dataset_stats(&metas).unwrap();
        assert_eq!(stats.audio_duration_hist, [0; 4]);
        assert!(stats.duration_proportions(Modality::Audio).is_none());
        assert!(dataset_stats(&[]).is_err());
    }

    #[test]
    fn bins_are_upper_inclusive() {
        assert_eq!(duration_bin(0.04), 0);
        assert_eq!(duration_bin(0.5), 0);
        assert_eq!(duration_bin(0.52), 1);
        assert_eq!(duration_bin(1.0), 1);
        assert_eq!(duration_bin(2.0), 2);
        assert_eq!(duration_bin(2.04), 3);
    }
}
