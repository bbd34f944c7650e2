//! Time-domain references: dense convolution, frame-energy percentiles, SNR.

/// Full linear convolution by the textbook double loop.
pub fn dense_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + h.len() - 1];
    for n in 0..y.len() {
        let mut s = 0.0;
        for k in 0..h.len() {
            if n >= k && n - k < x.len() {
                s += h[k] * x[n - k];
            }
        }
        y[n] = s;
    }
    y
}

/// Expands sparse `(delay, amplitude)` taps into a dense filter.
pub fn densify(taps: &[(usize, f64)]) -> Vec<f64> {
    let len = taps.iter().map(|t| t.0 + 1).max().unwrap_or(0);
    let mut h = vec![0.0; len];
    for &(d, a) in taps {
        h[d] += a;
    }
    h
}

/// Percentile of per-frame energies: sort, then interpolate linearly at
/// fractional rank `p/100 * (n-1)`.
pub fn energy_percentile(x: &[f64], percentile: f64, frame: usize, hop: usize) -> f64 {
    let mut energies = Vec::new();
    let mut start = 0;
    while start + frame <= x.len() {
        energies.push(x[start..start + frame].iter().map(|v| v * v).sum::<f64>());
        start += hop;
    }
    energies.sort_by(f64::total_cmp);
    let rank = percentile / 100.0 * (energies.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    energies[lo] + (energies[hi] - energies[lo]) * frac
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    10.0 * (energy(signal) / energy(noise)).log10()
}

/// Cross-correlation `sum_n a[n] b[n + lag]` for lags in `-max_lag..=max_lag`;
/// returns the lag of the maximum.
pub fn xcorr_peak_lag(a: &[f64], b: &[f64], max_lag: i64) -> i64 {
    let mut best = (i64::MIN, f64::NEG_INFINITY);
    for lag in -max_lag..=max_lag {
        let mut s = 0.0;
        for (n, &an) in a.iter().enumerate() {
            let m = n as i64 + lag;
            if m >= 0 && (m as usize) < b.len() {
                s += an * b[m as usize];
            }
        }
        if s > best.1 {
            best = (lag, s);
        }
    }
    best.0
}
