use fforge::mocha::{
    chunkwise_attention, energy_gradients, expected_monotonic_attention, hard_monotonic_decode, monotonic_energy,
    selection_probabilities, MoChaParams,
};
use fforge_oracles::{attention, gradcheck};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut impl Rng, da: usize, de: usize, dd: usize) -> MoChaParams {
    let mut u = || rng.random_range(-1.0..1.0);
    MoChaParams {
        v: Array1::from_shape_fn(da, |_| u()),
        w_dec: Array2::from_shape_fn((da, dd), |_| u()),
        w_enc: Array2::from_shape_fn((da, de), |_| u()),
        b: Array1::from_shape_fn(da, |_| u()),
        g: u() * 2.0,
        r_bias: u(),
        chunk_width: 2,
    }
}

fn oracle_energy(p: &MoChaParams, he: &Array1<f64>, hd: &Array1<f64>) -> f64 {
    attention::energy(
        p.v.as_slice().unwrap(),
        p.w_dec.as_slice().unwrap(),
        p.w_enc.as_slice().unwrap(),
        p.b.as_slice().unwrap(),
        p.g,
        p.r_bias,
        he.as_slice().unwrap(),
        hd.as_slice().unwrap(),
    )
}

#[test]
fn energy_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let p = random_params(&mut rng, 3, 4, 2);
        let he = Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
        let hd = Array1::from_shape_fn(2, |_| rng.random_range(-2.0..2.0));
        let e = monotonic_energy(he.view(), hd.view(), &p).unwrap();
        assert!((e - oracle_energy(&p, &he, &hd)).abs() < 1e-12);
    }
}

#[test]
fn probabilities_are_sigmoid_of_oracle_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let p = random_params(&mut rng, 5, 3, 4);
    let enc = Array2::from_shape_fn((7, 3), |_| rng.random_range(-1.0..1.0));
    let dec = Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0));
    let probs = selection_probabilities(enc.view(), dec.view(), &p).unwrap();
    for (m, h) in enc.rows().into_iter().enumerate() {
        let want = attention::sigmoid(oracle_energy(&p, &h.to_owned(), &dec));
        assert!((probs[m] - want).abs() < 1e-12);
    }
}

#[test]
fn expected_attention_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let probs = Array2::from_shape_fn((3, 5), |_| rng.random_range(0.0..1.0));
    let rows: Vec<Vec<f64>> = probs.rows().into_iter().map(|r| r.to_vec()).collect();
    let n = 200_000;
    let sampled = attention::sampled_attention(&rows, n, 99);
    let alpha = expected_monotonic_attention(probs.view());
    for l in 0..3 {
        for m in 0..5 {
            let a = alpha[[l, m]];
            let se = (a * (1.0 - a) / n as f64).sqrt();
            let tol = f64::max(3e-3, 4.0 * se);
            assert!((a - sampled[l][m]).abs() <= tol, "({l},{m}): {a} vs {}", sampled[l][m]);
        }
    }
}

#[test]
fn expected_attention_bounds_and_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..200 {
        let (l, t) = (rng.random_range(1..7), rng.random_range(1..12));
        let probs = Array2::from_shape_fn((l, t), |_| match rng.random_range(0..5) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        });
        let alpha = expected_monotonic_attention(probs.view());
        assert!(alpha.iter().all(|x| x.is_finite() && *x >= 0.0 && *x <= 1.0));
        for row in alpha.rows() {
            assert!(row.sum() <= 1.0 + 1e-9);
        }
        for i in 1..l {
            let (mut c0, mut c1) = (0.0, 0.0);
            for m in 0..t {
                c0 += alpha[[i - 1, m]];
                c1 += alpha[[i, m]];
                assert!(c0 + 1e-12 >= c1, "row {i} not dominated at frame {m}");
            }
        }
    }
}

#[test]
fn sharp_probabilities_agree_with_hard_decode() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..300 {
        let (l, t) = (rng.random_range(1..5), rng.random_range(1..9));
        let probs = Array2::from_shape_fn((l, t), |_| if rng.random_bool(0.4) { 0.99 } else { 0.01 });
        let hard = hard_monotonic_decode(probs.view(), 0);
        assert!(hard.indices.windows(2).all(|w| w[0] <= w[1]));
        let alpha = expected_monotonic_attention(probs.view());
        for (step, &idx) in hard.indices.iter().enumerate() {
            let row = alpha.row(step);
            let argmax = (0..t).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, idx);
        }
    }
}

#[test]
fn chunk_softmax_matches_direct_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..100 {
        let t = rng.random_range(1..10);
        let d = rng.random_range(1..5);
        let enc = Array2::from_shape_fn((t, d), |_| rng.random_range(-1.0..1.0));
        let energies = Array1::from_shape_fn(t, |_| rng.random_range(-3.0..3.0));
        let idx = rng.random_range(0..t);
        let w = rng.random_range(1..5);
        let c = chunkwise_attention(enc.view(), energies.view(), idx, w).unwrap();
        let start = (idx + 1).saturating_sub(w);
        let want = attention::softmax(&energies.as_slice().unwrap()[start..=idx]);
        assert_eq!(c.start, start);
        assert!((c.weights.sum() - 1.0).abs() < 1e-12);
        for (a, b) in c.weights.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        for k in 0..d {
            let ctx: f64 = (start..=idx).map(|m| want[m - start] * enc[[m, k]]).sum();
            assert!((c.context[k] - ctx).abs() < 1e-12);
        }
    }
}

/// Flattens every differentiable input of the energy into one vector.
pub fn pack(p: &MoChaParams, he: &Array1<f64>, hd: &Array1<f64>) -> Vec<f64> {
    let mut x = Vec::new();
    x.extend(p.v.iter());
    x.extend(p.w_dec.iter());
    x.extend(p.w_enc.iter());
    x.extend(p.b.iter());
    x.push(p.g);
    x.push(p.r_bias);
    x.extend(he.iter());
    x.extend(hd.iter());
    x
}

#[test]
fn analytic_gradients_match_central_differences() {
    let (da, de, dd) = (3, 4, 2);
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let p = random_params(&mut rng, da, de, dd);
        let he = Array1::from_shape_fn(de, |_| rng.random_range(-1.0..1.0));
        let hd = Array1::from_shape_fn(dd, |_| rng.random_range(-1.0..1.0));
        let x = pack(&p, &he, &hd);
        let f = |x: &[f64]| {
            let mut i = 0;
            let mut take = |n: usize| {
                let s = x[i..i + n].to_vec();
                i += n;
                s
            };
            let v = take(da);
            let wd = take(da * dd);
            let we = take(da * de);
            let b = take(da);
            let g = take(1)[0];
            let r = take(1)[0];
            let he = take(de);
            let hd = take(dd);
            attention::energy(&v, &wd, &we, &b, g, r, &he, &hd)
        };
        let numeric = gradcheck::central_gradient(f, &x, 1e-5);
        let gr = energy_gradients(he.view(), hd.view(), &p).unwrap();
        let mut analytic = Vec::new();
        analytic.extend(gr.v.iter());
        analytic.extend(gr.w_dec.iter());
        analytic.extend(gr.w_enc.iter());
        analytic.extend(gr.b.iter());
        analytic.push(gr.g);
        analytic.push(gr.r_bias);
        analytic.extend(gr.h_enc.iter());
        analytic.extend(gr.h_dec.iter());
        let worst = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| gradcheck::relative_error(*a, *n))
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "seed {seed}: {worst}");
    }
}
