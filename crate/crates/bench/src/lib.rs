//! Seeded fixtures shared by the benchmarks.

use avfusion_core::synth::{sample_dataset, simulate_scores};
use avfusion_core::{DetectorMode, DetectorModel, FrameScoreSeries, GeneratorConfig, Modality, VideoMeta};

pub const FIXTURE_SEED: u64 = 0x5eed;

pub fn dataset(n_videos: usize) -> Vec<VideoMeta> {
    sample_dataset(&GeneratorConfig {
        n_videos,
        seed: FIXTURE_SEED,
        ..GeneratorConfig::default()
    })
    .expect("default generator config is valid")
}

/// Noisy frame scores for every video of `metas`.
pub fn noisy_scores(metas: &[VideoMeta], modality: Modality) -> Vec<FrameScoreSeries> {
    let model = DetectorModel {
        mode: DetectorMode::Noisy,
        miss_rate: 0.1,
        false_alarm_rate: 0.05,
        ..DetectorModel::default()
    };
    metas
        .iter()
        .enumerate()
        .map(|(i, m)| simulate_scores(m, &model, modality, 25.0, FIXTURE_SEED + i as u64).expect("valid fps"))
        .collect()
}
