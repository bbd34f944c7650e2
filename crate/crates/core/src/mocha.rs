//! Monotonic chunkwise attention.
//!
//! A hard monotonic attention picks the frame to stop at; a soft attention
//! over a fixed-width trailing chunk ending at that frame produces the
//! context. Selection probabilities come from the monotonic energy
//!
//! ```text
//! e = g * <v / |v|, tanh(W_dec h_dec + W_enc h_enc + b)> + r
//! p = sigmoid(e)
//! ```
//!
//! At training time the hard selection is replaced by its expectation over the
//! Bernoulli stopping process ([`expected_monotonic_attention`]). Everything
//! here is `f64`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_WIDTH: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MoChaParams {
    pub v: Array1<f64>,
    /// `d_a x d_dec`
    pub w_dec: Array2<f64>,
    /// `d_a x d_enc`
    pub w_enc: Array2<f64>,
    pub b: Array1<f64>,
    pub g: f64,
    pub r_bias: f64,
    pub chunk_width: usize,
}

impl MoChaParams {
    pub fn attention_dim(&self) -> usize {
        self.v.len()
    }

    pub fn check(&self, h_enc: ArrayView1<f64>, h_dec: ArrayView1<f64>) -> Result<()> {
        let da = self.v.len();
        if self.b.len() != da || self.w_dec.nrows() != da || self.w_enc.nrows() != da {
            return Err(Error::Shape(format!("parameter rows disagree with |v| = {da}")));
        }
        if self.w_enc.ncols() != h_enc.len() {
            return Err(Error::Shape(format!("W_enc has {} columns, h_enc has {}", self.w_enc.ncols(), h_enc.len())));
        }
        if self.w_dec.ncols() != h_dec.len() {
            return Err(Error::Shape(format!("W_dec has {} columns, h_dec has {}", self.w_dec.ncols(), h_dec.len())));
        }
        if self.chunk_width == 0 {
            return Err(Error::InvalidArgument("chunk width must be positive".into()));
        }
        Ok(())
    }

    fn v_norm(&self) -> Result<f64> {
        let n = self.v.dot(&self.v).sqrt();
        if n == 0.0 {
            Err(Error::ZeroNorm)
        } else {
            Ok(n)
        }
    }

    fn pre_activation(&self, h_enc: ArrayView1<f64>, h_dec: ArrayView1<f64>) -> Array1<f64> {
        self.w_dec.dot(&h_dec) + self.w_enc.dot(&h_enc) + &self.b
    }
}

pub fn monotonic_energy(h_enc: ArrayView1<f64>, h_dec: ArrayView1<f64>, p: &MoChaParams) -> Result<f64> {
    p.check(h_enc, h_dec)?;
    let norm = p.v_norm()?;
    let t = p.pre_activation(h_enc, h_dec).mapv(f64::tanh);
    Ok(p.g * p.v.dot(&t) / norm + p.r_bias)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Stopping probability at every encoder frame for one decoder state.
pub fn selection_probabilities(
    enc_states: ArrayView2<f64>,
    dec_state: ArrayView1<f64>,
    p: &MoChaParams,
) -> Result<Array1<f64>> {
    if enc_states.nrows() == 0 {
        return Err(Error::Shape("no encoder frames".into()));
    }
    enc_states
        .axis_iter(Axis(0))
        .map(|h| monotonic_energy(h, dec_state, p).map(sigmoid))
        .collect::<Result<Vec<_>>>()
        .map(Array1::from)
}

/// Outcome of greedy monotonic decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAlignment {
    /// Attended frame for each output step that selected one; non-decreasing.
    pub indices: Vec<usize>,
    /// True when some step found no frame to stop at. That step is
    /// `indices.len()`, and no later step is decoded.
    pub terminated: bool,
}

/// One decode step: the first frame at or after `prev_index` with `p >= 0.5`.
pub fn hard_monotonic_step(probs: ArrayView1<f64>, prev_index: usize) -> Option<usize> {
    (prev_index..probs.len()).find(|&m| probs[m] >= 0.5)
}

/// Greedy inference over an `L x T` matrix of stopping probabilities. Each
/// scan resumes at the previously attended frame, inclusive.
pub fn hard_monotonic_decode(probs: ArrayView2<f64>, prev_index: usize) -> HardAlignment {
    let mut indices = Vec::with_capacity(probs.nrows());
    let mut pos = prev_index;
    for row in probs.axis_iter(Axis(0)) {
        match hard_monotonic_step(row, pos) {
            Some(m) => {
                indices.push(m);
                pos = m;
            }
            None => return HardAlignment { indices, terminated: true },
        }
    }
    HardAlignment { indices, terminated: false }
}

/// Probability `alpha[l, m]` that the stochastic process attends frame `m` at
/// output step `l`, starting from a one-hot alignment at frame 0:
///
/// ```text
/// q[l, m] = (1 - p[l, m-1]) q[l, m-1] + alpha[l-1, m]
/// alpha[l, m] = p[l, m] q[l, m]
/// ```
///
/// Rows may sum to less than one; the deficit is the chance the process ran
/// off the end of the input.
pub fn expected_monotonic_attention(probs: ArrayView2<f64>) -> Array2<f64> {
    let (steps, frames) = probs.dim();
    let mut alpha = Array2::zeros((steps, frames));
    if frames == 0 {
        return alpha;
    }
    let mut prev = Array1::zeros(frames);
    prev[0] = 1.0;
    for l in 0..steps {
        let mut q = 0.0;
        for m in 0..frames {
            let carry = if m == 0 { 0.0 } else { (1.0 - probs[[l, m - 1]]) * q };
            q = carry + prev[m];
            alpha[[l, m]] = probs[[l, m]] * q;
        }
        prev.assign(&alpha.row(l));
    }
    alpha
}

/// Energy for the soft chunk attention: `<v, tanh(W_dec h_dec + W_enc h_enc + b)>`,
/// with its own parameters and no gain, normalization or offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkEnergyParams {
    pub v: Array1<f64>,
    pub w_dec: Array2<f64>,
    pub w_enc: Array2<f64>,
    pub b: Array1<f64>,
}

impl ChunkEnergyParams {
    pub fn energy(&self, h_enc: ArrayView1<f64>, h_dec: ArrayView1<f64>) -> Result<f64> {
        if self.w_enc.ncols() != h_enc.len() || self.w_dec.ncols() != h_dec.len() {
            return Err(Error::Shape("chunk energy dimensions".into()));
        }
        let pre = self.w_dec.dot(&h_dec) + self.w_enc.dot(&h_enc) + &self.b;
        Ok(self.v.dot(&pre.mapv(f64::tanh)))
    }

    pub fn energies(&self, enc_states: ArrayView2<f64>, dec_state: ArrayView1<f64>) -> Result<Array1<f64>> {
        enc_states
            .axis_iter(Axis(0))
            .map(|h| self.energy(h, dec_state))
            .collect::<Result<Vec<_>>>()
            .map(Array1::from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkContext {
    /// First frame of the window.
    pub start: usize,
    /// Softmax weights over frames `start..=t`.
    pub weights: Array1<f64>,
    pub context: Array1<f64>,
}

/// Softmax over `chunk_energies[max(0, t - w + 1)..=t]` and the matching
/// weighted sum of encoder states. `chunk_energies` has one entry per frame.
pub fn chunkwise_attention(
    enc_states: ArrayView2<f64>,
    chunk_energies: ArrayView1<f64>,
    t: usize,
    chunk_width: usize,
) -> Result<ChunkContext> {
    if chunk_width == 0 {
        return Err(Error::InvalidArgument("chunk width must be positive".into()));
    }
    if t >= enc_states.nrows() || chunk_energies.len() != enc_states.nrows() {
        return Err(Error::Shape(format!(
            "index {t} with {} frames and {} energies",
            enc_states.nrows(),
            chunk_energies.len()
        )));
    }
    let start = (t + 1).saturating_sub(chunk_width);
    let window = chunk_energies.slice(s![start..=t]);
    let peak = window.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exp = window.mapv(|e| (e - peak).exp());
    let weights = &exp / exp.sum();
    let context = weights.dot(&enc_states.slice(s![start..=t, ..]));
    Ok(ChunkContext { start, weights, context })
}

/// Partial derivatives of [`monotonic_energy`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradients {
    pub v: Array1<f64>,
    pub w_dec: Array2<f64>,
    pub w_enc: Array2<f64>,
    pub b: Array1<f64>,
    pub g: f64,
    pub r_bias: f64,
    pub h_enc: Array1<f64>,
    pub h_dec: Array1<f64>,
}

/// With `a = W_dec h_dec + W_enc h_enc + b`, `t = tanh(a)`, `n = |v|` and
/// `u = v / n`:
///
/// ```text
/// de/dg = <u, t>          de/dr = 1
/// de/da = g u (1 - t^2)   =: delta
/// de/db = delta           de/dW_dec = delta h_dec^T    de/dh_dec = W_dec^T delta
/// de/dv = g (t - <u, t> u) / n
/// ```
pub fn energy_gradients(h_enc: ArrayView1<f64>, h_dec: ArrayView1<f64>, p: &MoChaParams) -> Result<EnergyGradients> {
    p.check(h_enc, h_dec)?;
    let n = p.v_norm()?;
    let u = &p.v / n;
    let t = p.pre_activation(h_enc, h_dec).mapv(f64::tanh);
    let ut = u.dot(&t);
    let delta = &u * &t.mapv(|x| 1.0 - x * x) * p.g;
    let outer = |col: ArrayView1<f64>| {
        let d = delta.view().insert_axis(Axis(1));
        d.dot(&col.insert_axis(Axis(0)))
    };
    Ok(EnergyGradients {
        v: (&t - &(&u * ut)) * (p.g / n),
        w_dec: outer(h_dec),
        w_enc: outer(h_enc),
        h_enc: p.w_enc.t().dot(&delta),
        h_dec: p.w_dec.t().dot(&delta),
        b: delta,
        g: ut,
        r_bias: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn params(g: f64, r: f64) -> MoChaParams {
        MoChaParams {
            v: array![0.3, -0.7, 0.5],
            w_dec: array![[0.1, 0.2], [-0.3, 0.4], [0.5, -0.6]],
            w_enc: array![[0.2, -0.1, 0.0, 0.3], [0.1, 0.1, -0.2, 0.0], [-0.4, 0.2, 0.1, 0.1]],
            b: array![0.05, -0.02, 0.1],
            g,
            r_bias: r,
            chunk_width: 2,
        }
    }

    #[test]
    fn zeroed_weights_leave_bias() {
        let mut p = params(1.3, -0.8);
        p.w_dec.fill(0.0);
        p.w_enc.fill(0.0);
        p.b.fill(0.0);
        let e = monotonic_energy(array![1.0, 2.0, 3.0, 4.0].view(), array![5.0, 6.0].view(), &p).unwrap();
        assert_eq!(e, -0.8);
        let p = params(0.0, 0.25);
        let e = monotonic_energy(array![1.0, 2.0, 3.0, 4.0].view(), array![5.0, 6.0].view(), &p).unwrap();
        assert_eq!(e, 0.25);
    }

    #[test]
    fn zero_v_is_rejected() {
        let mut p = params(1.0, 0.0);
        p.v.fill(0.0);
        let r = monotonic_energy(array![0.0, 0.0, 0.0, 0.0].view(), array![0.0, 0.0].view(), &p);
        assert!(matches!(r, Err(Error::ZeroNorm)));
        assert!(energy_gradients(array![0.0, 0.0, 0.0, 0.0].view(), array![0.0, 0.0].view(), &p).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let p = params(1.0, 0.0);
        assert!(matches!(
            monotonic_energy(array![0.0, 0.0].view(), array![0.0, 0.0].view(), &p),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn probabilities_at_zero_and_saturation() {
        let mut p = params(0.0, 0.0);
        let enc = Array2::from_elem((5, 4), 0.3);
        let probs = selection_probabilities(enc.view(), array![1.0, -1.0].view(), &p).unwrap();
        assert!(probs.iter().all(|&x| x == 0.5));
        p.r_bias = 20.0;
        let probs = selection_probabilities(enc.view(), array![1.0, -1.0].view(), &p).unwrap();
        assert!(probs.iter().all(|&x| (1.0 - x) < 1e-8));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn hard_decode_first_crossing() {
        let probs = array![[0.1, 0.2, 0.9, 0.8]];
        assert_eq!(
            hard_monotonic_decode(probs.view(), 0),
            HardAlignment { indices: vec![2], terminated: false }
        );
        let none = array![[0.1, 0.2, 0.4, 0.49]];
        assert_eq!(
            hard_monotonic_decode(none.view(), 0),
            HardAlignment { indices: vec![], terminated: true }
        );
        let resume = array![[0.1, 0.9, 0.1], [0.1, 0.7, 0.9], [0.9, 0.1, 0.1]];
        assert_eq!(
            hard_monotonic_decode(resume.view(), 0),
            HardAlignment { indices: vec![1, 1], terminated: true }
        );
    }

    #[test]
    fn expected_attention_extremes() {
        let ones = Array2::from_elem((3, 5), 1.0);
        let a = expected_monotonic_attention(ones.view());
        for row in a.rows() {
            assert_eq!(row.to_vec(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        }
        let zeros = Array2::zeros((3, 5));
        assert!(expected_monotonic_attention(zeros.view()).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn chunk_of_one_is_the_frame() {
        let enc = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let c = chunkwise_attention(enc.view(), array![0.3, -2.0, 7.0].view(), 1, 1).unwrap();
        assert_eq!(c.context, array![3.0, 4.0]);
        assert_eq!(c.weights, array![1.0]);
    }

    #[test]
    fn equal_energies_give_uniform_weights() {
        let enc = Array2::from_shape_fn((6, 3), |(i, j)| (i * 3 + j) as f64);
        let e = Array1::from_elem(6, 0.7);
        for t in 0..6 {
            let c = chunkwise_attention(enc.view(), e.view(), t, 4).unwrap();
            let n = 4.min(t + 1);
            assert_eq!(c.weights.len(), n);
            for &w in &c.weights {
                assert!((w - 1.0 / n as f64).abs() < 1e-15);
            }
        }
        assert!(chunkwise_attention(enc.view(), e.view(), 6, 2).is_err());
        assert!(chunkwise_attention(enc.view(), e.view(), 0, 0).is_err());
    }

    #[test]
    fn gradient_structure() {
        let p = params(1.7, 0.3);
        let he = array![0.4, -0.2, 0.9, 0.1];
        let hd = array![-0.5, 0.8];
        let gr = energy_gradients(he.view(), hd.view(), &p).unwrap();
        assert_eq!(gr.r_bias, 1.0);
        let p0 = params(0.0, 0.3);
        let gr = energy_gradients(he.view(), hd.view(), &p0).unwrap();
        assert!(gr.v.iter().chain(gr.w_dec.iter()).chain(gr.w_enc.iter()).all(|&x| x == 0.0));
        assert!(gr.b.iter().chain(gr.h_enc.iter()).chain(gr.h_dec.iter()).all(|&x| x == 0.0));
        assert!(gr.g != 0.0);
    }
}
