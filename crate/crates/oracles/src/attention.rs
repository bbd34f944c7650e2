//! Monotonic-attention references: a loop-based energy evaluation and a
//! Monte-Carlo simulation of the Bernoulli selection process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Energy `g * <v, tanh(Wd hd + We he + b)> / |v| + r`, written with nested
/// index loops over row-major matrices.
#[allow(clippy::too_many_arguments)]
pub fn energy(
    v: &[f64],
    w_dec: &[f64],
    w_enc: &[f64],
    b: &[f64],
    g: f64,
    r: f64,
    h_enc: &[f64],
    h_dec: &[f64],
) -> f64 {
    let da = v.len();
    let dd = h_dec.len();
    let de = h_enc.len();
    let mut norm_sq = 0.0;
    for &vi in v {
        norm_sq += vi * vi;
    }
    let mut dot = 0.0;
    for i in 0..da {
        let mut pre = b[i];
        for j in 0..dd {
            pre += w_dec[i * dd + j] * h_dec[j];
        }
        for j in 0..de {
            pre += w_enc[i * de + j] * h_enc[j];
        }
        dot += v[i] * pre.tanh();
    }
    g * dot / norm_sq.sqrt() + r
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Empirical attention frequencies from `rollouts` simulated decodes.
///
/// Each rollout starts at frame 0. At output step `l` it walks forward from
/// the frame chosen at step `l-1`, flipping a coin with probability
/// `probs[l][m]` at each frame; the first success is attended. Falling off the
/// end stops the rollout.
pub fn sampled_attention(probs: &[Vec<f64>], rollouts: usize, seed: u64) -> Vec<Vec<f64>> {
    let l_steps = probs.len();
    let t = probs[0].len();
    let mut counts = vec![vec![0u64; t]; l_steps];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..rollouts {
        let mut pos = 0usize;
        'steps: for l in 0..l_steps {
            let mut m = pos;
            loop {
                if m >= t {
                    break 'steps;
                }
                if rng.random::<f64>() < probs[l][m] {
                    counts[l][m] += 1;
                    pos = m;
                    break;
                }
                m += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / rollouts as f64).collect())
        .collect()
}

/// Softmax recomputed directly (no max shift).
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
