//! Power-mel feature frontend and the `NEF1` feature dump format.
//!
//! Per frame: periodic Hann window, zero-padded FFT, one-sided power
//! spectrum, 40 HTK-mel triangular filters spanning 0 Hz to Nyquist,
//! floor at `1e-10`, then a `1/15` power law in place of a logarithm.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub const NEF_MAGIC: &[u8; 4] = b"NEF1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub window_secs: f64,
    pub hop_secs: f64,
    pub num_mel: usize,
    pub power_exponent: f64,
    /// FFT length; `None` picks the next power of two above the window.
    pub fft_size: Option<usize>,
    pub floor_epsilon: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window_secs: 0.025,
            hop_secs: 0.010,
            num_mel: 40,
            power_exponent: 1.0 / 15.0,
            fft_size: None,
            floor_epsilon: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_secs * f64::from(sample_rate)).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop_secs * f64::from(sample_rate)).round() as usize
    }

    pub fn fft_len(&self, sample_rate: u32) -> usize {
        self.fft_size
            .unwrap_or_else(|| self.window_samples(sample_rate).next_power_of_two())
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let win = self.window_samples(sample_rate);
        if win == 0 || self.hop_samples(sample_rate) == 0 {
            return Err(Error::InvalidArgument("window and hop must span at least one sample".into()));
        }
        if self.fft_len(sample_rate) < win {
            return Err(Error::InvalidArgument(format!(
                "fft size {} is shorter than the {win}-sample window",
                self.fft_len(sample_rate)
            )));
        }
        if self.num_mel == 0 {
            return Err(Error::InvalidArgument("num_mel must be at least 1".into()));
        }
        if !(self.power_exponent > 0.0 && self.power_exponent <= 1.0) {
            return Err(Error::InvalidArgument(format!("power exponent {} outside (0, 1]", self.power_exponent)));
        }
        if !(self.floor_epsilon > 0.0) {
            return Err(Error::InvalidArgument("floor epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// `1 + floor((n - win) / hop)`, or zero when the signal is shorter than a window.
pub fn num_frames(len: usize, win: usize, hop: usize) -> usize {
    if len < win {
        0
    } else {
        1 + (len - win) / hop
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureRole {
    Clean,
    Augmented,
    Enhanced,
    Combined,
}

/// Row-major `num_frames x num_mel` matrix of non-negative values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub data: Vec<f64>,
    pub num_frames: usize,
    pub num_mel: usize,
    pub role: FeatureRole,
}

impl FeatureSequence {
    pub fn new(data: Vec<f64>, num_frames: usize, num_mel: usize, role: FeatureRole) -> Result<Self> {
        if data.len() != num_frames * num_mel {
            return Err(Error::Shape(format!(
                "{} values for {num_frames} x {num_mel}",
                data.len()
            )));
        }
        Ok(FeatureSequence { data, num_frames, num_mel, role })
    }

    pub fn frame(&self, m: usize) -> &[f64] {
        &self.data[m * self.num_mel..(m + 1) * self.num_mel]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.num_mel.max(1))
    }

    pub fn same_shape(&self, other: &FeatureSequence) -> bool {
        self.num_frames == other.num_frames && self.num_mel == other.num_mel
    }

    pub(crate) fn check_shape(&self, other: &FeatureSequence) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.num_frames, self.num_mel, other.num_frames, other.num_mel
            )))
        }
    }

    /// Index of the first entry that is negative or non-finite.
    pub fn first_invalid(&self) -> Option<usize> {
        self.data.iter().position(|v| !(v.is_finite() && *v >= 0.0))
    }

    /// Serializes as `NEF1`, u32 LE frame count, u32 LE band count, then
    /// row-major f32 LE values.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.data.len());
        out.extend_from_slice(NEF_MAGIC);
        out.extend_from_slice(&(self.num_frames as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_mel as u32).to_le_bytes());
        for &v in &self.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    /// Parses a `NEF1` buffer. Trailing bytes, truncation and negative or
    /// non-finite values are rejected.
    pub fn decode(bytes: &[u8], role: FeatureRole) -> Result<Self> {
        let bad = |why: String| Error::format("NEF1", why);
        if bytes.len() < 12 {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != NEF_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (num_frames, num_mel) = (read_u32(4), read_u32(8));
        let expected = num_frames
            .checked_mul(num_mel)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(12))
            .ok_or_else(|| bad("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(bad(format!(
                "{num_frames} x {num_mel} needs {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes[12..]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let seq = FeatureSequence { data, num_frames, num_mel, role };
        if let Some(i) = seq.first_invalid() {
            return Err(bad(format!("entry {i} is negative or not finite")));
        }
        Ok(seq)
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters sampled at the FFT bin frequencies.
///
/// Band `j` rises from edge `j` to a unit peak at edge `j + 1` and falls to
/// zero at edge `j + 2`, with `num_mel + 2` edges evenly spaced in mel from
/// 0 Hz to Nyquist. Peaks are not area-normalized, so adjacent filters sum to
/// one between the first and last centers.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    pub num_mel: usize,
    pub num_bins: usize,
    /// Row-major `num_mel x num_bins`.
    pub weights: Vec<f64>,
    /// Edge frequencies in Hz, `num_mel + 2` of them.
    pub edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(num_mel: usize, fft_size: usize, sample_rate: u32) -> Self {
        let fs = f64::from(sample_rate);
        let num_bins = fft_size / 2 + 1;
        let top = hz_to_mel(fs / 2.0);
        let edges_hz: Vec<f64> = (0..num_mel + 2)
            .map(|i| mel_to_hz(top * i as f64 / (num_mel + 1) as f64))
            .collect();
        let mut weights = vec![0.0; num_mel * num_bins];
        for j in 0..num_mel {
            let (lo, mid, hi) = (edges_hz[j], edges_hz[j + 1], edges_hz[j + 2]);
            for k in 0..num_bins {
                let f = k as f64 * fs / fft_size as f64;
                let w = if f > lo && f <= mid {
                    (f - lo) / (mid - lo)
                } else if f > mid && f < hi {
                    (hi - f) / (hi - mid)
                } else {
                    0.0
                };
                weights[j * num_bins + k] = w;
            }
        }
        MelFilterbank { num_mel, num_bins, weights, edges_hz }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.num_bins..(j + 1) * self.num_bins]
    }

    pub fn center_hz(&self, j: usize) -> f64 {
        self.edges_hz[j + 1]
    }

    pub fn apply(&self, power: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.row(j).iter().zip(power).map(|(w, p)| w * p).sum();
        }
    }
}

/// Reusable frontend for one sample rate: window, filterbank and FFT plan.
pub struct PowerMel {
    cfg: FeatureConfig,
    sample_rate: u32,
    win: usize,
    hop: usize,
    window: Vec<f64>,
    filterbank: MelFilterbank,
    fft: Arc<dyn Fft<f64>>,
}

impl PowerMel {
    pub fn new(cfg: FeatureConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate(sample_rate)?;
        let win = cfg.window_samples(sample_rate);
        let nfft = cfg.fft_len(sample_rate);
        let window = (0..win)
            .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / win as f64).cos())
            .collect();
        Ok(PowerMel {
            cfg,
            sample_rate,
            win,
            hop: cfg.hop_samples(sample_rate),
            window,
            filterbank: MelFilterbank::new(cfg.num_mel, nfft, sample_rate),
            fft: FftPlanner::new().plan_fft_forward(nfft),
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn compute(&self, signal: &AudioSignal, role: FeatureRole) -> Result<FeatureSequence> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::SampleRateMismatch(signal.sample_rate, self.sample_rate));
        }
        let frames = num_frames(signal.len(), self.win, self.hop);
        if frames == 0 {
            return Err(Error::TooShort { len: signal.len(), needed: self.win });
        }
        let nfft = self.fft.len();
        let mel = self.cfg.num_mel;
        let mut data = vec![0.0; frames * mel];
        let mut buf = vec![Complex::new(0.0, 0.0); nfft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; self.filterbank.num_bins];
        for (m, row) in data.chunks_exact_mut(mel).enumerate() {
            let frame = &signal.samples[m * self.hop..m * self.hop + self.win];
            for (b, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                *b = Complex::new(x * w, 0.0);
            }
            buf[self.win..].fill(Complex::new(0.0, 0.0));
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            self.filterbank.apply(&power, row);
            for v in row.iter_mut() {
                *v = v.max(self.cfg.floor_epsilon).powf(self.cfg.power_exponent);
            }
        }
        FeatureSequence::new(data, frames, mel, role)
    }
}

pub fn power_mel(signal: &AudioSignal, cfg: &FeatureConfig, role: FeatureRole) -> Result<FeatureSequence> {
    PowerMel::new(*cfg, signal.sample_rate)?.compute(signal, role)
}
