//! Flat `key = value` run configuration with dotted namespaces.
//!
//! ```text
//! # comment
//! seed = 7          # trailing comments are allowed
//! detector.c1 = 0.05
//! eval.iou_thresholds = 0.5, 0.75
//! generator.category_probs = [0.34, 0.23, 0.24, 0.19]
//! ```
//!
//! Unknown keys are rejected; absent keys keep their defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use avfusion_core::{DetectionConfig, DetectorMode, DetectorModel, EvalProtocol, FusionConfig, GeneratorConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Which modalities `fuse` combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    Both,
    AudioOnly,
    VisualOnly,
}

/// Which forged segments `eval` localizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthSet {
    /// Union of audio and visual forgeries per video.
    Pooled,
    Audio,
    Visual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSettings {
    pub window_s: f64,
    pub stride_s: f64,
    pub target_len_s: f64,
    pub crops_per_video: usize,
}

impl Default for AudioSettings {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            stride_s: 1.0,
            target_len_s: 2.0,
            crops_per_video: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub detector: DetectionConfig,
    pub fusion: FusionConfig,
    pub fusion_mode: FusionMode,
    pub eval: EvalProtocol,
    pub ground_truth: GroundTruthSet,
    pub generator: GeneratorConfig,
    pub detector_model: DetectorModel,
    pub audio_fps: f64,
    pub visual_fps: f64,
    pub audio: AudioSettings,
    /// Resample audio scores to this rate before localization.
    pub localize_resample_fps: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            detector: DetectionConfig::default(),
            fusion: FusionConfig::default(),
            fusion_mode: FusionMode::Both,
            eval: EvalProtocol::default(),
            ground_truth: GroundTruthSet::Pooled,
            generator: GeneratorConfig::default(),
            detector_model: DetectorModel::default(),
            audio_fps: 25.0,
            visual_fps: 25.0,
            audio: AudioSettings::default(),
            localize_resample_fps: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn array<const N: usize, T: FromStr + Copy + Default>(key: &str, value: &str) -> Result<[T; N]> {
    let v: Vec<T> = list(key, value)?;
    v.try_into()
        .map_err(|v: Vec<T>| ConfigError(format!("{key}: expected {N} values, got {}", v.len())))
}

fn pair<T: FromStr + Copy + Default>(key: &str, value: &str) -> Result<(T, T)> {
    let [a, b] = array::<2, T>(key, value)?;
    Ok((a, b))
}

impl RunConfig {
    /// Sets one dotted key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim().trim_matches('"');
        let g = &mut self.generator;
        let m = &mut self.detector_model;
        match key {
            "seed" => self.seed = parse(key, value)?,

            "detector.binarize_threshold" => self.detector.binarize_threshold = parse(key, value)?,
            "detector.c1" => self.detector.c1 = parse(key, value)?,
            "detector.c2" => self.detector.c2 = parse(key, value)?,

            "fusion.decision_threshold" => {
                self.fusion.decision_threshold = parse(key, value)?;
                self.detector.decision_threshold = self.fusion.decision_threshold;
            }
            "fusion.merge_epsilon" => self.fusion.merge_epsilon = parse(key, value)?,
            "fusion.report_threshold" => self.fusion.report_threshold = parse(key, value)?,
            "fusion.mode" => {
                self.fusion_mode = match value {
                    "both" => FusionMode::Both,
                    "audio" => FusionMode::AudioOnly,
                    "visual" => FusionMode::VisualOnly,
                    _ => return Err(ConfigError(format!("{key}: expected both|audio|visual, got `{value}`"))),
                }
            }

            "eval.iou_thresholds" => self.eval.iou_thresholds = list(key, value)?,
            "eval.final_score_rule" => {
                self.eval.final_score_rule = value.parse().map_err(|e| ConfigError(format!("{key}: {e}")))?
            }
            "eval.ground_truth" => {
                self.ground_truth = match value {
                    "pooled" => GroundTruthSet::Pooled,
                    "audio" => GroundTruthSet::Audio,
                    "visual" => GroundTruthSet::Visual,
                    _ => {
                        return Err(ConfigError(format!(
                            "{key}: expected pooled|audio|visual, got `{value}`"
                        )))
                    }
                }
            }

            "generator.n_videos" => g.n_videos = parse(key, value)?,
            "generator.category_probs" => g.category_probs = array(key, value)?,
            "generator.duration_bins_audio" => g.duration_bins_audio = array(key, value)?,
            "generator.duration_bins_visual" => g.duration_bins_visual = array(key, value)?,
            "generator.video_duration_range_s" => g.video_duration_range_s = pair(key, value)?,
            "generator.segments_per_modality_range" => g.segments_per_modality_range = pair(key, value)?,
            "generator.full_forgery_prob" => g.full_forgery_prob = parse(key, value)?,
            "generator.time_grid_s" => g.time_grid_s = parse(key, value)?,
            "generator.audio_fps" => self.audio_fps = parse(key, value)?,
            "generator.visual_fps" => self.visual_fps = parse(key, value)?,
            "generator.detector_mode" => {
                m.mode = match value {
                    "oracle" => DetectorMode::Oracle,
                    "noisy" => DetectorMode::Noisy,
                    _ => return Err(ConfigError(format!("{key}: expected oracle|noisy, got `{value}`"))),
                }
            }
            "generator.real_score_mean" => m.real_score_mean = parse(key, value)?,
            "generator.fake_score_mean" => m.fake_score_mean = parse(key, value)?,
            "generator.score_noise_scale" => m.score_noise_scale = parse(key, value)?,
            "generator.miss_rate" => m.miss_rate = parse(key, value)?,
            "generator.false_alarm_rate" => m.false_alarm_rate = parse(key, value)?,

            "audio.window_s" => self.audio.window_s = parse(key, value)?,
            "audio.stride_s" => self.audio.stride_s = parse(key, value)?,
            "audio.target_len_s" => self.audio.target_len_s = parse(key, value)?,
            "audio.crops_per_video" => self.audio.crops_per_video = parse(key, value)?,

            "localize.resample_fps" => {
                let fps: f64 = parse(key, value)?;
                self.localize_resample_fps = (fps > 0.0).then_some(fps);
            }

            _ => return Err(ConfigError(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            // `#` starts a comment anywhere; no value contains one
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| ConfigError(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects key=value, got `{assignment}`")))?;
        self.set(key.trim(), value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Checks cross-field constraints once every source has been applied.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: avfusion_core::Error| ConfigError(e.to_string());
        self.detector.validate().map_err(wrap)?;
        self.fusion.validate().map_err(wrap)?;
        self.eval.validate().map_err(wrap)?;
        self.generator.validate().map_err(wrap)?;
        self.detector_model.validate().map_err(wrap)?;
        for (name, fps) in [
            ("generator.audio_fps", self.audio_fps),
            ("generator.visual_fps", self.visual_fps),
        ] {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(ConfigError(format!("{name} must be positive, got {fps}")));
            }
        }
        let a = &self.audio;
        if !(a.window_s > 0.0 && a.stride_s > 0.0 && a.stride_s <= a.window_s) {
            return Err(ConfigError(format!(
                "audio windows need 0 < stride_s ({}) <= window_s ({})",
                a.stride_s, a.window_s
            )));
        }
        if a.target_len_s.is_nan() || a.target_len_s <= 0.0 {
            return Err(ConfigError(format!(
                "audio.target_len_s must be positive, got {}",
                a.target_len_s
            )));
        }
        Ok(())
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.seed,
            ..self.generator.clone()
        }
    }
}
