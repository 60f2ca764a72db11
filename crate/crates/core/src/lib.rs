//! Post-detector pipeline for audio-visual deepfake detection and temporal
//! forgery localization.
//!
//! Detector networks are out of the picture here: their outputs enter as
//! per-frame score series. From those the crate derives video-level scores
//! (sliding-window max-pooling for audio, a two-stage run-length rule for
//! video frames), fuses both modalities for detection and localization, and
//! evaluates the result with ROC AUC and IoU-thresholded AP/AR. A seeded
//! synthetic generator supplies ground truth and scores for end-to-end runs.

pub mod audio;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod records;
pub mod synth;
pub mod timeline;
pub mod visual;

pub use error::{Error, Result};
pub use fusion::{fuse_detection, fuse_localization, FusionConfig};
pub use metrics::{auc, average_precision, average_recall, final_score, EvalProtocol, FinalScoreRule};
pub use synth::{DetectorMode, DetectorModel, GeneratorConfig};
pub use timeline::{
    overlaps, partition_timeline, Category, FrameScoreSeries, Modality, SegmentScore, TimeInterval, VideoMeta,
};
pub use visual::{detect_video, DetectionConfig};
