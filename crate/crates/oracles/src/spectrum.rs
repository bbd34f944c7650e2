//! Power-mel features by direct O(N^2) DFT and a per-bin triangle evaluation.
//!
//! Conventions: periodic Hann window over the frame, zero padding to `nfft`,
//! one-sided power spectrum, HTK mel scale, unit-peak triangles between 0 Hz
//! and Nyquist, floor then power law.

use std::f64::consts::PI;

pub struct Frontend {
    pub sample_rate: f64,
    pub win: usize,
    pub hop: usize,
    pub nfft: usize,
    pub num_mel: usize,
    pub exponent: f64,
    pub floor: f64,
}

impl Frontend {
    pub fn standard_16k() -> Self {
        Frontend {
            sample_rate: 16000.0,
            win: 400,
            hop: 160,
            nfft: 512,
            num_mel: 40,
            exponent: 1.0 / 15.0,
            floor: 1e-10,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Corner frequencies (Hz) of band `j`: (left, center, right).
pub fn band_corners(fe: &Frontend, j: usize) -> (f64, f64, f64) {
    let top = hz_to_mel(fe.sample_rate / 2.0);
    let step = top / (fe.num_mel + 1) as f64;
    (
        mel_to_hz(step * j as f64),
        mel_to_hz(step * (j + 1) as f64),
        mel_to_hz(step * (j + 2) as f64),
    )
}

/// Triangle weight of band `j` at frequency `f`.
pub fn triangle(fe: &Frontend, j: usize, f: f64) -> f64 {
    let (l, c, r) = band_corners(fe, j);
    if f <= l || f >= r {
        0.0
    } else if f <= c {
        (f - l) / (c - l)
    } else {
        (r - f) / (r - c)
    }
}

pub fn power_spectrum(fe: &Frontend, frame: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(fe.nfft / 2 + 1);
    for k in 0..=fe.nfft / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, &x) in frame.iter().enumerate().take(fe.win) {
            let w = 0.5 - 0.5 * (2.0 * PI * n as f64 / fe.win as f64).cos();
            let phase = -2.0 * PI * (k * n) as f64 / fe.nfft as f64;
            re += w * x * phase.cos();
            im += w * x * phase.sin();
        }
        out.push(re * re + im * im);
    }
    out
}

/// Returns `frames x num_mel` features, row-major as nested vectors.
pub fn power_mel(fe: &Frontend, x: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    let mut start = 0;
    while start + fe.win <= x.len() {
        let spec = power_spectrum(fe, &x[start..start + fe.win]);
        let row = (0..fe.num_mel)
            .map(|j| {
                let e: f64 = spec
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * triangle(fe, j, k as f64 * fe.sample_rate / fe.nfft as f64))
                    .sum();
                e.max(fe.floor).powf(fe.exponent)
            })
            .collect();
        rows.push(row);
        start += fe.hop;
    }
    rows
}

/// The band with the largest triangle weight at `f`.
pub fn band_containing(fe: &Frontend, f: f64) -> usize {
    (0..fe.num_mel)
        .max_by(|&a, &b| triangle(fe, a, f).total_cmp(&triangle(fe, b, f)))
        .unwrap()
}
