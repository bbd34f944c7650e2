//! CTC loss by exhaustive enumeration of every frame-level path.

/// `-ln P(target)` where `log_probs` is `T x (V+1)` with blank at index `V`.
/// Enumerates all `(V+1)^T` paths, collapses repeats then drops blanks.
pub fn brute_force_loss(log_probs: &[Vec<f64>], target: &[usize]) -> f64 {
    let t = log_probs.len();
    let k = log_probs[0].len();
    let blank = k - 1;
    let total = k.pow(t as u32);
    let mut prob = 0.0;
    let mut path = vec![0usize; t];
    for code in 0..total {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut collapsed = Vec::new();
        let mut prev = None;
        for &s in &path {
            if Some(s) != prev && s != blank {
                collapsed.push(s);
            }
            prev = Some(s);
        }
        if collapsed == target {
            let lp: f64 = path.iter().enumerate().map(|(i, &s)| log_probs[i][s]).sum();
            prob += lp.exp();
        }
    }
    -prob.ln()
}
