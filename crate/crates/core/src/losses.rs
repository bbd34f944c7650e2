//! Loss terms of the joint objective `CE + CTC + lambda * MSE` and the GAEF
//! feature blend.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::features::{FeatureRole, FeatureSequence};
use crate::schedule::{CurriculumState, Schedules};

/// `(1 - w) * enhanced + w * clean`, elementwise.
pub fn gaef_combine(x_enh: &FeatureSequence, x_clean: &FeatureSequence, w: f64) -> Result<FeatureSequence> {
    x_enh.check_shape(x_clean)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidArgument(format!("blend weight {w} outside [0, 1]")));
    }
    let data = if w == 1.0 {
        x_clean.data.clone()
    } else if w == 0.0 {
        x_enh.data.clone()
    } else {
        x_enh.data.iter().zip(&x_clean.data).map(|(e, c)| (1.0 - w) * e + w * c).collect()
    };
    FeatureSequence::new(data, x_enh.num_frames, x_enh.num_mel, FeatureRole::Combined)
}

/// Mean squared error over every frame and band.
pub fn mse_loss(x_enh: &FeatureSequence, x_clean: &FeatureSequence) -> Result<f64> {
    x_enh.check_shape(x_clean)?;
    if x_enh.data.is_empty() {
        return Err(Error::Shape("empty feature sequences".into()));
    }
    let sum: f64 = x_enh.data.iter().zip(&x_clean.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x_enh.data.len() as f64)
}

/// Row-wise log-softmax of a logit matrix.
pub fn log_softmax(logits: ArrayView2<f64>) -> ndarray::Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let peak = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = peak + row.iter().map(|x| (x - peak).exp()).sum::<f64>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

/// Mean negative log-probability of the target label at each position.
pub fn ce_loss(log_probs: ArrayView2<f64>, targets: &[usize]) -> Result<f64> {
    let (steps, vocab) = log_probs.dim();
    if steps != targets.len() {
        return Err(Error::Shape(format!("{steps} prediction rows for {} targets", targets.len())));
    }
    if steps == 0 {
        return Err(Error::Shape("empty target sequence".into()));
    }
    let mut sum = 0.0;
    for (l, &y) in targets.iter().enumerate() {
        if y >= vocab {
            return Err(Error::LabelOutOfRange { label: y, vocab });
        }
        sum -= log_probs[[l, y]];
    }
    Ok(sum / steps as f64)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// CTC negative log-likelihood by the forward recursion over the
/// blank-interleaved label sequence, in log space.
///
/// `log_probs` is `T x (V + 1)`; the last column is the blank. Returns
/// `f64::INFINITY` when no alignment of the target fits in `T` frames.
pub fn ctc_forward_loss(log_probs: ArrayView2<f64>, targets: &[usize]) -> Result<f64> {
    let (frames, classes) = log_probs.dim();
    if classes < 1 {
        return Err(Error::Shape("no output classes".into()));
    }
    let blank = classes - 1;
    if let Some(&y) = targets.iter().find(|&&y| y >= blank) {
        return Err(Error::LabelOutOfRange { label: y, vocab: blank });
    }
    if log_probs.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::InvalidArgument("log-probabilities must be finite or -inf".into()));
    }
    if frames == 0 {
        return Ok(if targets.is_empty() { 0.0 } else { f64::INFINITY });
    }

    // extended[s]: blank at even s, targets[(s - 1) / 2] at odd s
    let ext_len = 2 * targets.len() + 1;
    let label = |s: usize| if s.is_multiple_of(2) { blank } else { targets[s / 2] };
    let mut alpha = vec![f64::NEG_INFINITY; ext_len];
    let mut next = vec![f64::NEG_INFINITY; ext_len];
    alpha[0] = log_probs[[0, blank]];
    if ext_len > 1 {
        alpha[1] = log_probs[[0, label(1)]];
    }
    for t in 1..frames {
        for s in 0..ext_len {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = log_add(acc, alpha[s - 1]);
            }
            if s >= 2 && s % 2 == 1 && label(s) != label(s - 2) {
                acc = log_add(acc, alpha[s - 2]);
            }
            next[s] = if acc == f64::NEG_INFINITY { acc } else { acc + log_probs[[t, label(s)]] };
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    let mut total = alpha[ext_len - 1];
    if ext_len > 1 {
        total = log_add(total, alpha[ext_len - 2]);
    }
    Ok(-total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBundle {
    pub ce: f64,
    pub ctc: f64,
    pub mse: f64,
    pub lambda: f64,
    pub total: f64,
}

/// Assembles `ce + ctc + lambda * mse` with `lambda` taken from the GREL
/// schedule at `state`.
pub fn joint_loss(ce: f64, ctc: f64, mse: f64, state: &CurriculumState, schedules: &Schedules) -> LossBundle {
    let lambda = schedules.lambda(state);
    LossBundle { ce, ctc, mse, lambda, total: ce + ctc + lambda * mse }
}
