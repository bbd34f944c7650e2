use serde::Deserialize;

use crate::error::{Error, Result};
use crate::room::{DEFAULT_MAX_REFLECTION_ORDER, DEFAULT_SPEED_OF_SOUND};
use crate::schedule::{PretrainPlan, Schedules, DEFAULT_HORIZON_EPOCHS};
use crate::signal::DEFAULT_SAMPLE_RATE;

/// Scene distribution and run settings, read from TOML.
///
/// Only the SNR set comes from the evaluation conditions this tool targets;
/// room sizes, T60 range, noise-source counts and the clean pass-through rate
/// are conventional choices.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub seed: u64,
    pub sample_rate: u32,
    /// Range for each of the three room dimensions, meters.
    pub room_dim_range: [f64; 2],
    /// Reverberation time range, seconds.
    pub t60_range: [f64; 2],
    pub snr_db_set: Vec<f64>,
    pub noise_source_range: [u32; 2],
    pub max_reflection_order: u32,
    pub speed_of_sound: f64,
    /// Probability that an example is emitted without any simulation.
    pub passthrough_probability: f64,
    /// Minimum distance from any wall for sources and microphone, meters.
    pub wall_clearance: f64,
    pub curriculum: CurriculumConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Training progress at example index 0.
    pub start_epoch: f64,
    /// Examples per epoch; index `i` is emitted at
    /// `start_epoch + i / examples_per_epoch`.
    pub examples_per_epoch: u64,
    pub w_horizon: f64,
    pub lambda_horizon: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            start_epoch: 0.0,
            // utterances in the 960 h LibriSpeech training set
            examples_per_epoch: 281_241,
            w_horizon: DEFAULT_HORIZON_EPOCHS,
            lambda_horizon: DEFAULT_HORIZON_EPOCHS,
        }
    }
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            seed: 0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            room_dim_range: [3.0, 8.0],
            t60_range: [0.1, 0.8],
            snr_db_set: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            noise_source_range: [1, 2],
            max_reflection_order: DEFAULT_MAX_REFLECTION_ORDER,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            passthrough_probability: 0.1,
            wall_clearance: 0.2,
            curriculum: CurriculumConfig::default(),
        }
    }
}

fn field_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

fn ordered_range(field: &str, r: [f64; 2], positive: bool) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] {
        return Err(field_err(field, format!("{r:?} is not an ordered finite range")));
    }
    if positive && r[0] <= 0.0 {
        return Err(field_err(field, "must be positive"));
    }
    Ok(())
}

impl AugmentationConfig {
    /// Parses TOML; omitted fields take their defaults. Errors name the
    /// offending field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: AugmentationConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|span| key_at(text, span.start))
                .unwrap_or_else(|| "<document>".to_string());
            field_err(&field, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(field_err("sample_rate", "must be positive"));
        }
        ordered_range("room_dim_range", self.room_dim_range, true)?;
        ordered_range("t60_range", self.t60_range, true)?;
        if self.snr_db_set.is_empty() {
            return Err(field_err("snr_db_set", "must not be empty"));
        }
        if self.snr_db_set.iter().any(|s| !s.is_finite()) {
            return Err(field_err("snr_db_set", "entries must be finite"));
        }
        let [lo, hi] = self.noise_source_range;
        if lo > hi {
            return Err(field_err("noise_source_range", format!("[{lo}, {hi}] is not ordered")));
        }
        if hi > 16 {
            return Err(field_err("noise_source_range", "at most 16 noise sources"));
        }
        if self.max_reflection_order > 40 {
            return Err(field_err("max_reflection_order", "at most 40"));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(field_err("speed_of_sound", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.passthrough_probability) {
            return Err(field_err("passthrough_probability", "must lie in [0, 1]"));
        }
        if !(self.wall_clearance.is_finite() && self.wall_clearance > 0.0) {
            return Err(field_err("wall_clearance", "must be positive"));
        }
        if 2.0 * self.wall_clearance >= self.room_dim_range[0] {
            return Err(field_err("wall_clearance", "leaves no interior in the smallest room"));
        }
        let c = &self.curriculum;
        if !(c.start_epoch.is_finite() && c.start_epoch >= 0.0) {
            return Err(field_err("curriculum.start_epoch", "must be a non-negative number"));
        }
        if c.examples_per_epoch == 0 {
            return Err(field_err("curriculum.examples_per_epoch", "must be positive"));
        }
        self.schedules().validate().map_err(|e| match e {
            Error::Config { field, reason } => field_err(&format!("curriculum.{field}"), reason),
            other => other,
        })
    }

    pub fn schedules(&self) -> Schedules {
        Schedules {
            w_horizon: self.curriculum.w_horizon,
            lambda_horizon: self.curriculum.lambda_horizon,
            ..Default::default()
        }
    }

    pub fn pretrain_plan(&self) -> PretrainPlan {
        PretrainPlan::default()
    }

    pub fn epoch_of(&self, index: u64) -> f64 {
        self.curriculum.start_epoch + index as f64 / self.curriculum.examples_per_epoch as f64
    }
}

/// The `key` of the `key = value` line containing byte offset `at`, with any
/// enclosing `[table]` prefix.
fn key_at(text: &str, at: usize) -> Option<String> {
    let mut table: Option<String> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            table = Some(trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string());
        }
        if at < offset + line.len() {
            let key = trimmed.split('=').next()?.trim();
            if key.is_empty() || key.starts_with('[') {
                return table;
            }
            return Some(match table {
                Some(t) => format!("{t}.{key}"),
                None => key.to_string(),
            });
        }
        offset += line.len();
    }
    None
}
