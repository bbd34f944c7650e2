use fforge::features::{FeatureRole, FeatureSequence};
use fforge::losses::{ce_loss, ctc_forward_loss, gaef_combine, joint_loss, log_softmax, mse_loss};
use fforge::schedule::{format_trace, parse_trace, schedule_trace, CurriculumState, PretrainPlan, Schedules};
use fforge_oracles::ctc::brute_force_loss;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_log_probs(rng: &mut impl Rng, t: usize, k: usize) -> Array2<f64> {
    let logits = Array2::from_shape_fn((t, k), |_| rng.random_range(-3.0..3.0));
    log_softmax(logits.view())
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

#[test]
fn ctc_t5_l2_v4_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let lp = random_log_probs(&mut rng, 5, 5);
    let target = [1, 3];
    let ours = ctc_forward_loss(lp.view(), &target).unwrap();
    let oracle = brute_force_loss(&rows(&lp), &target);
    assert!((ours - oracle).abs() < 1e-10);
}

#[test]
fn ctc_matches_enumeration_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..300 {
        let t = rng.random_range(1..=6);
        let v = rng.random_range(1..=4);
        let l = rng.random_range(0..=3);
        let target: Vec<usize> = (0..l).map(|_| rng.random_range(0..v)).collect();
        let lp = random_log_probs(&mut rng, t, v + 1);
        let ours = ctc_forward_loss(lp.view(), &target).unwrap();
        let oracle = brute_force_loss(&rows(&lp), &target);
        if oracle.is_infinite() {
            assert_eq!(ours, f64::INFINITY);
        } else {
            assert!((ours - oracle).abs() < 1e-10, "{ours} vs {oracle}");
        }
    }
}

#[test]
fn ctc_low_log_probs_no_nan() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..50 {
        let lp = Array2::from_shape_fn((6, 4), |_| rng.random_range(-700.0..-600.0));
        let loss = ctc_forward_loss(lp.view(), &[0, 2]).unwrap();
        assert!(!loss.is_nan());
    }
}

#[test]
fn ce_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let logits = Array2::from_shape_fn((7, 6), |_| rng.random_range(-4.0..4.0));
    let targets: Vec<usize> = (0..7).map(|_| rng.random_range(0..6)).collect();
    let lp = log_softmax(logits.view());
    let mut want = 0.0;
    for (l, &y) in targets.iter().enumerate() {
        let row = logits.row(l);
        let z: f64 = row.iter().map(|x| x.exp()).sum();
        want -= (row[y].exp() / z).ln();
    }
    want /= 7.0;
    assert!((ce_loss(lp.view(), &targets).unwrap() - want).abs() < 1e-12);
}

#[test]
fn mse_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let a: Vec<f64> = (0..400).map(|_| rng.random_range(0.0..3.0)).collect();
    let b: Vec<f64> = (0..400).map(|_| rng.random_range(0.0..3.0)).collect();
    let mut want = 0.0;
    for i in 0..400 {
        want += (a[i] - b[i]).powi(2);
    }
    want /= 400.0;
    let fa = FeatureSequence::new(a, 10, 40, FeatureRole::Enhanced).unwrap();
    let fb = FeatureSequence::new(b, 10, 40, FeatureRole::Clean).unwrap();
    assert!((mse_loss(&fa, &fb).unwrap() - want).abs() < 1e-12);
}

#[test]
fn joint_loss_examples() {
    let s = Schedules::default();
    let b = joint_loss(1.0, 2.0, 3.0, &CurriculumState::at(8.0), &s);
    assert_eq!((b.lambda, b.total), (0.0, 3.0));
    let b = joint_loss(1.0, 2.0, 3.0, &CurriculumState::at(0.0), &s);
    assert_eq!((b.lambda, b.total), (1.0, 6.0));
    let b = joint_loss(1.0, 1.0, 4.0, &CurriculumState::at(4.0), &s);
    assert_eq!((b.lambda, b.total), (0.5, 4.0));
}

#[test]
fn trace_is_monotone_and_round_trips() {
    let s = Schedules::default();
    let pts = schedule_trace(&s, &PretrainPlan::default(), &[], 12, 20);
    for w in pts.windows(2) {
        assert!(w[1].w <= w[0].w);
        assert!(w[1].lambda <= w[0].lambda);
    }
    assert_eq!(parse_trace(&format_trace(&pts)).unwrap(), pts);
}

proptest! {
    #[test]
    fn schedules_clamp_and_decay(e1 in 0.0f64..30.0, e2 in 0.0f64..30.0, h in 0.5f64..20.0) {
        let s = Schedules { w_horizon: h, lambda_horizon: h, ..Default::default() };
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (a, b) = (CurriculumState::at(lo), CurriculumState::at(hi));
        prop_assert!(s.w(&b) <= s.w(&a));
        prop_assert!(s.lambda(&b) <= s.lambda(&a));
        prop_assert!((0.0..=1.0).contains(&s.w(&a)));
        prop_assert!((s.w(&a) - (1.0 - lo / h).max(0.0)).abs() < 1e-15);
    }

    #[test]
    fn gaef_is_affine(w in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enh: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..4.0)).collect();
        let clean: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..4.0)).collect();
        let fe = FeatureSequence::new(enh.clone(), 2, 40, FeatureRole::Enhanced).unwrap();
        let fc = FeatureSequence::new(clean.clone(), 2, 40, FeatureRole::Clean).unwrap();
        let out = gaef_combine(&fe, &fc, w).unwrap();
        prop_assert_eq!(out.role, FeatureRole::Combined);
        for i in 0..80 {
            prop_assert!((out.data[i] - (w * clean[i] + (1.0 - w) * enh[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_total_identity(ce in 0.0f64..50.0, ctc in 0.0f64..50.0, mse in 0.0f64..50.0, e in 0.0f64..12.0) {
        let b = joint_loss(ce, ctc, mse, &CurriculumState::at(e), &Schedules::default());
        prop_assert_eq!(b.total, ce + ctc + b.lambda * mse);
    }
}
