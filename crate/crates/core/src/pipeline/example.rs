use super::config::AugmentationConfig;
use super::record::{record_id, RecordMeta};
use super::scene::{sample_scene, SceneDraw};
use crate::den::den_normalize;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureRole, FeatureSequence, PowerMel};
use crate::room::{mix_scene_components, SceneMix};
use crate::schedule::CurriculumState;
use crate::signal::AudioSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedAudio {
    pub name: String,
    pub signal: AudioSignal,
}

/// One emitted record: features of the simulated recording and of the
/// delay-energy normalized clean reference, plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub meta: RecordMeta,
    pub x_aug: FeatureSequence,
    pub x_clean: FeatureSequence,
}

/// A training example along with the waveforms it was computed from.
#[derive(Debug, Clone)]
pub struct ExampleOutput {
    pub example: TrainingExample,
    pub draw: SceneDraw,
    pub augmented: AudioSignal,
    pub normalized_clean: AudioSignal,
    /// `None` for pass-through examples.
    pub mix: Option<SceneMix>,
}

pub fn make_example(
    clean: &NamedAudio,
    noises: &[NamedAudio],
    cfg: &AugmentationConfig,
    state: &CurriculumState,
    seed: u64,
    index: u64,
) -> Result<TrainingExample> {
    make_example_with_signals(clean, noises, cfg, state, seed, index).map(|o| o.example)
}

/// Simulates, normalizes and featurizes example `index`.
///
/// Pass-through draws skip simulation: the augmented signal is the clean
/// signal and normalization is the identity. Otherwise noise sources are
/// picked from `noises` (none if the pool is empty).
pub fn make_example_with_signals(
    clean: &NamedAudio,
    noises: &[NamedAudio],
    cfg: &AugmentationConfig,
    state: &CurriculumState,
    seed: u64,
    index: u64,
) -> Result<ExampleOutput> {
    if clean.signal.sample_rate != cfg.sample_rate {
        return Err(Error::SampleRateMismatch(clean.signal.sample_rate, cfg.sample_rate));
    }
    let mut draw = sample_scene(cfg, seed, index)?;
    let picked: Vec<&NamedAudio> = if noises.is_empty() {
        Vec::new()
    } else {
        draw.noise_choices.iter().map(|&c| &noises[(c % noises.len() as u64) as usize]).collect()
    };
    if picked.is_empty() {
        draw.scene.noise_positions.clear();
    }

    let (augmented, normalized, delay, gain, mix) = if draw.passthrough {
        (clean.signal.clone(), clean.signal.clone(), 0, 1.0, None)
    } else {
        let noise_signals: Vec<AudioSignal> = picked.iter().map(|n| n.signal.clone()).collect();
        let mix = mix_scene_components(&draw.scene, &clean.signal, &noise_signals, draw.mix_seed)?;
        let direct = draw.scene.direct_path()?;
        let den = den_normalize(&clean.signal, &mix.mixture, &direct, &draw.scene.room)?;
        (mix.mixture.clone(), den.normalized_clean, den.applied_delay, den.applied_gain, Some(mix))
    };

    let frontend = PowerMel::new(FeatureConfig::default(), cfg.sample_rate)?;
    let x_aug = frontend.compute(&augmented, FeatureRole::Augmented)?;
    let x_clean = frontend.compute(&normalized, FeatureRole::Clean)?;

    let schedules = cfg.schedules();
    let scene = &draw.scene;
    let meta = RecordMeta {
        id: record_id(index),
        index,
        seed,
        source: clean.name.clone(),
        passthrough: draw.passthrough,
        room_dimensions: scene.room.dimensions,
        reflection_coefficient: scene.room.reflection_coefficient,
        t60: draw.t60,
        snr_db: scene.target_snr_db,
        target_position: scene.target_position,
        mic_position: scene.mic_position,
        noise_sources: picked.iter().map(|n| n.name.clone()).collect(),
        noise_positions: scene.noise_positions.clone(),
        mix_seed: draw.mix_seed,
        applied_delay: delay,
        applied_gain: gain,
        epoch: state.epochs_completed,
        w: schedules.w(state),
        lambda: schedules.lambda(state),
        lr: schedules.lr(state, &[]),
        num_frames: x_aug.num_frames,
        num_mel: x_aug.num_mel,
    };
    Ok(ExampleOutput {
        example: TrainingExample { meta, x_aug, x_clean },
        draw,
        augmented,
        normalized_clean: normalized,
        mix,
    })
}
