//! Delay-energy normalization of the clean reference.
//!
//! The simulated microphone signal lags the dry source by the direct-path
//! propagation delay and sits at an unrelated level. Before clean features are
//! used as enhancement targets the clean waveform is shifted by that delay and
//! scaled so its 95th-percentile frame energy equals the augmented signal's.

use crate::error::{Error, Result};
use crate::room::{ImagePath, RoomSpec};
use crate::signal::AudioSignal;

pub const ENERGY_PERCENTILE: f64 = 95.0;

/// Frame length and hop for energy measurement: 25 ms and 10 ms, the same
/// geometry the feature frontend uses.
pub fn frame_geometry(sample_rate: u32) -> (usize, usize) {
    let fs = f64::from(sample_rate);
    ((0.025 * fs).round() as usize, (0.010 * fs).round() as usize)
}

/// Sum-of-squares energy of each full frame.
pub fn frame_energies(samples: &[f64], frame_len: usize, hop: usize) -> Vec<f64> {
    if frame_len == 0 || hop == 0 || samples.len() < frame_len {
        return Vec::new();
    }
    let count = 1 + (samples.len() - frame_len) / hop;
    (0..count)
        .map(|i| samples[i * hop..i * hop + frame_len].iter().map(|v| v * v).sum())
        .collect()
}

/// Percentile of the frame energies, interpolating linearly between order
/// statistics at rank `p / 100 * (n - 1)`.
pub fn frame_energy_percentile(
    signal: &AudioSignal,
    percentile: f64,
    frame_len: usize,
    hop: usize,
) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::TooShort { len: 0, needed: frame_len.max(1) });
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentile {percentile} outside (0, 100]")));
    }
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidArgument("frame length and hop must be positive".into()));
    }
    if signal.len() < frame_len {
        return Err(Error::TooShort { len: signal.len(), needed: frame_len });
    }
    let mut energies = frame_energies(&signal.samples, frame_len, hop);
    energies.sort_unstable_by(f64::total_cmp);
    let rank = percentile / 100.0 * (energies.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(energies.len() - 1);
    let frac = rank - lo as f64;
    Ok(energies[lo] + frac * (energies[hi] - energies[lo]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenResult {
    pub normalized_clean: AudioSignal,
    pub applied_delay: usize,
    pub applied_gain: f64,
}

/// Delays `clean` by the direct-path arrival time `ceil(d * fs / c0)`, pads or
/// crops it to the augmented length, then scales it to the augmented signal's
/// 95th-percentile frame energy. All frames count, silent or not.
pub fn den_normalize(
    clean: &AudioSignal,
    augmented: &AudioSignal,
    direct_path: &ImagePath,
    room: &RoomSpec,
) -> Result<DenResult> {
    clean.check_rate(augmented)?;
    if clean.sample_rate != room.sample_rate {
        return Err(Error::SampleRateMismatch(clean.sample_rate, room.sample_rate));
    }
    let delay = room.delay_samples(direct_path.distance);
    let target_len = augmented.len();

    let mut shifted = vec![0.0; target_len];
    if delay < target_len {
        let n = clean.len().min(target_len - delay);
        shifted[delay..delay + n].copy_from_slice(&clean.samples[..n]);
    }
    let shifted = AudioSignal { samples: shifted, sample_rate: clean.sample_rate };

    let (frame, hop) = frame_geometry(clean.sample_rate);
    let clean_level = frame_energy_percentile(&shifted, ENERGY_PERCENTILE, frame, hop)?;
    let aug_level = frame_energy_percentile(augmented, ENERGY_PERCENTILE, frame, hop)?;
    if clean_level == 0.0 {
        return Err(Error::Silent("clean"));
    }
    if aug_level == 0.0 {
        return Err(Error::Silent("augmented"));
    }
    let gain = (aug_level / clean_level).sqrt();
    let normalized = shifted.samples.iter().map(|v| v * gain).collect();
    Ok(DenResult {
        normalized_clean: AudioSignal { samples: normalized, sample_rate: clean.sample_rate },
        applied_delay: delay,
        applied_gain: gain,
    })
}
