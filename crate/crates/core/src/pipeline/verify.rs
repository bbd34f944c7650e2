//! Record verification: structural checks on every selected record and, when
//! the generating config and manifest are supplied, bit-exact regeneration
//! plus re-measurement of the normalization invariants.

use std::path::{Path, PathBuf};

use super::config::AugmentationConfig;
use super::example::{make_example_with_signals, NamedAudio};
use super::manifest::Manifest;
use super::record::{list_records, StoredRecord};
use crate::den::{frame_energy_percentile, frame_geometry, ENERGY_PERCENTILE};
use crate::error::Result;
use crate::features::FeatureConfig;
use crate::signal::AudioSignal;

pub const ENERGY_MATCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub dir: PathBuf,
    /// Fraction of records to check, spread evenly; at least one is checked.
    pub fraction: f64,
    pub regenerate: Option<(AugmentationConfig, Manifest)>,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub total: usize,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn select(ids: Vec<String>, fraction: f64) -> Vec<String> {
    if ids.is_empty() {
        return ids;
    }
    let want = ((ids.len() as f64 * fraction.clamp(0.0, 1.0)).ceil() as usize).clamp(1, ids.len());
    let stride = ids.len() as f64 / want as f64;
    (0..want).map(|i| ids[(i as f64 * stride) as usize].clone()).collect()
}

pub fn verify_records(opts: &VerifyOptions) -> Result<VerifyReport> {
    let ids = list_records(&opts.dir)?;
    let total = ids.len();
    let chosen = select(ids, opts.fraction);
    let mut report = VerifyReport { total, checked: chosen.len(), failures: Vec::new() };

    let noises = match &opts.regenerate {
        Some((_, manifest)) => manifest
            .noise
            .iter()
            .map(|p| {
                AudioSignal::read_wav(p).map(|signal| NamedAudio { name: p.display().to_string(), signal })
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    for id in chosen {
        if let Err(msg) = check_one(&opts.dir, &id, opts.regenerate.as_ref(), &noises) {
            report.failures.push(format!("{id}: {msg}"));
        }
    }
    Ok(report)
}

fn check_one(
    dir: &Path,
    id: &str,
    regen: Option<&(AugmentationConfig, Manifest)>,
    noises: &[NamedAudio],
) -> std::result::Result<(), String> {
    let stored = StoredRecord::read(dir, id).map_err(|e| e.to_string())?;
    let (meta, aug, clean) = stored.decode().map_err(|e| e.to_string())?;
    let fcfg = FeatureConfig::default();

    if meta.id != id {
        return Err(format!("sidecar id {}", meta.id));
    }
    if !aug.same_shape(&clean) {
        return Err("augmented and clean features differ in shape".into());
    }
    if aug.num_frames != meta.num_frames || aug.num_mel != meta.num_mel || aug.num_mel != fcfg.num_mel {
        return Err(format!("feature shape {}x{} disagrees with metadata", aug.num_frames, aug.num_mel));
    }
    // f32 storage rounds the floor value by at most half an ulp
    let floor = (fcfg.floor_epsilon.powf(fcfg.power_exponent) as f32) as f64;
    if aug.data.iter().chain(&clean.data).any(|&v| v < floor) {
        return Err("feature below the power-law floor".into());
    }
    for (name, v) in [("w", meta.w), ("lambda", meta.lambda)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} = {v} outside [0, 1]"));
        }
    }
    if !(meta.applied_gain > 0.0) {
        return Err(format!("gain {} not positive", meta.applied_gain));
    }

    let Some((cfg, manifest)) = regen else {
        return Ok(());
    };
    if manifest.clean.is_empty() {
        return Err("manifest has no clean entries".into());
    }
    if meta.seed != cfg.seed {
        return Err(format!("recorded seed {} but config seed {}", meta.seed, cfg.seed));
    }
    let path = &manifest.clean[(meta.index % manifest.clean.len() as u64) as usize];
    let signal = AudioSignal::read_wav(path).map_err(|e| e.to_string())?;
    let clean_in = NamedAudio { name: path.display().to_string(), signal };
    let state = cfg.pretrain_plan().state_at(cfg.epoch_of(meta.index));
    let out = make_example_with_signals(&clean_in, noises, cfg, &state, cfg.seed, meta.index)
        .map_err(|e| format!("regeneration failed: {e}"))?;

    if out.example.meta != meta {
        return Err("metadata differs from regeneration".into());
    }
    if out.example.x_aug.encode() != stored.aug_bytes || out.example.x_clean.encode() != stored.clean_bytes {
        return Err("features differ from regeneration".into());
    }
    if let Some(mix) = &out.mix {
        let (frame, hop) = frame_geometry(cfg.sample_rate);
        let level = |s: &AudioSignal| frame_energy_percentile(s, ENERGY_PERCENTILE, frame, hop);
        let a = level(&out.augmented).map_err(|e| e.to_string())?;
        let c = level(&out.normalized_clean).map_err(|e| e.to_string())?;
        if ((c / a) - 1.0).abs() > ENERGY_MATCH_TOLERANCE {
            return Err(format!("percentile energy ratio {}", c / a));
        }
        if mix.target_rir.first_delay() != Some(meta.applied_delay) {
            return Err(format!(
                "applied delay {} but direct path arrives at {:?}",
                meta.applied_delay,
                mix.target_rir.first_delay()
            ));
        }
    } else if meta.applied_delay != 0 || meta.applied_gain != 1.0 || out.augmented != out.normalized_clean {
        return Err("pass-through record is not the identity".into());
    }
    Ok(())
}
