use fforge::room::{
    convolve, enumerate_images, generate_rir, mix_scene, mix_scene_components, AugmentationScene, ImagePath,
    RoomImpulseResponse, RoomSpec, Tap,
};
use fforge::AudioSignal;
use fforge_oracles::{image, signal};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut impl Rng, dims: [f64; 3]) -> [f64; 3] {
    dims.map(|l| rng.random_range(0.05 * l..0.95 * l))
}

fn random_room(rng: &mut impl Rng) -> RoomSpec {
    let dims = [0; 3].map(|_| rng.random_range(2.0..9.0));
    RoomSpec::new(dims, rng.random_range(0.0..0.95), 16000).unwrap()
}

#[test]
fn reference_scene_matches_lattice_oracle() {
    let room = RoomSpec::new([5.0, 4.0, 3.0], 0.5, 16000).unwrap();
    let (src, mic) = ([1.0, 1.0, 1.0], [2.0, 2.0, 2.0]);
    let ours = enumerate_images(&room, src, mic, 2).unwrap();
    let oracle = image::images([5.0, 4.0, 3.0], src, mic, 2);
    assert_eq!(ours.len(), oracle.len());
    // 1 direct + 6 first order + 18 second order
    assert_eq!(ours.len(), 25);
    for (a, b) in ours.iter().zip(&oracle) {
        assert_eq!(a.reflection_count, b.0);
        assert!((a.distance - b.1).abs() < 1e-12);
    }

    let rir = generate_rir(&room, src, mic, 2).unwrap();
    let expected = image::taps([5.0, 4.0, 3.0], 0.5, 343.0, 16000.0, src, mic, 2);
    assert_eq!(rir.taps.len(), expected.len());
    for (t, (d, a)) in rir.taps.iter().zip(&expected) {
        assert_eq!(t.delay, *d);
        assert!((t.amplitude - a).abs() < 1e-12);
    }
}

#[test]
fn image_counts_match_oracle_up_to_order_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for order in 0..=6 {
        let room = random_room(&mut rng);
        let (s, m) = (random_point(&mut rng, room.dimensions), random_point(&mut rng, room.dimensions));
        let ours = enumerate_images(&room, s, m, order).unwrap();
        let oracle = image::images(room.dimensions, s, m, order);
        assert_eq!(ours.len(), oracle.len(), "order {order}");
        for (a, b) in ours.iter().zip(&oracle) {
            assert_eq!(a.reflection_count, b.0);
            assert!((a.distance - b.1).abs() < 1e-12);
        }
    }
}

#[test]
fn image_paths_sorted_by_order_then_distance() {
    let room = RoomSpec::new([6.0, 5.0, 3.0], 0.7, 16000).unwrap();
    let paths = enumerate_images(&room, [1.2, 3.1, 1.7], [4.4, 1.3, 2.2], 5).unwrap();
    for w in paths.windows(2) {
        assert!((w[0].reflection_count, w[0].distance) <= (w[1].reflection_count, w[1].distance));
    }
    for p in &paths {
        let d = p.image.iter().zip([4.4, 1.3, 2.2]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!((d - p.distance).abs() < 1e-12);
    }
}

#[test]
fn amplitude_law_is_exact() {
    let room = RoomSpec::new([6.0, 5.0, 3.0], 0.6, 16000).unwrap();
    for g in 0..6u32 {
        for d in [0.3, 1.0, 2.7, 11.0] {
            let p = ImagePath { distance: d, reflection_count: g, image: [0.0; 3] };
            let r = std::hint::black_box(0.6f64);
            assert_eq!(room.tap_amplitude(&p), r.powi(g as i32) / d);
        }
    }
    // fixed g: proportional to 1/d
    let a = |g, d| room.tap_amplitude(&ImagePath { distance: d, reflection_count: g, image: [0.0; 3] });
    assert!((a(2, 1.0) / a(2, 4.0) - 4.0).abs() < 1e-15);
    // fixed d: ratio r per reflection
    assert!((a(3, 2.0) / a(2, 2.0) - 0.6).abs() < 1e-15);
}

#[test]
fn direct_delay_follows_ceiling_over_grid() {
    let room = RoomSpec::new([40.0, 40.0, 40.0], 0.5, 16000).unwrap();
    for i in 0..400 {
        let d = 0.05 + i as f64 * 0.0731;
        let mic = [20.0 + d / 3f64.sqrt(); 3];
        let rir = generate_rir(&room, [20.0; 3], mic, 1).unwrap();
        let direct = enumerate_images(&room, [20.0; 3], mic, 0).unwrap()[0];
        assert!((direct.distance - d).abs() < 1e-12);
        assert_eq!(rir.first_delay(), Some((direct.distance * 16000.0 / 343.0).ceil() as usize));
    }
}

#[test]
fn rir_taps_equal_per_image_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let dims = [0; 3].map(|_| rng.random_range(2.0..4.0));
        let room = RoomSpec::new(dims, 0.5, 16000).unwrap();
        let (s, m) = (random_point(&mut rng, dims), random_point(&mut rng, dims));
        let rir = generate_rir(&room, s, m, 2).unwrap();
        let want = image::taps(dims, 0.5, 343.0, 16000.0, s, m, 2);
        let got: Vec<(usize, f64)> = rir.taps.iter().map(|t| (t.delay, t.amplitude)).collect();
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn sparse_convolution_matches_dense(
        x in prop::collection::vec(-1.0f64..1.0, 1..1024),
        taps in prop::collection::vec((0usize..300, -2.0f64..2.0), 1..12),
    ) {
        let sig = AudioSignal::new(x.clone(), 16000).unwrap();
        let rir = RoomImpulseResponse::from_taps(taps.iter().map(|&(delay, amplitude)| Tap { delay, amplitude }), 16000);
        let ours = convolve(&sig, &rir).unwrap();
        let canon: Vec<(usize, f64)> = rir.taps.iter().map(|t| (t.delay, t.amplitude)).collect();
        let dense = signal::dense_convolve(&x, &signal::densify(&canon));
        prop_assert_eq!(ours.len(), x.len() + rir.max_delay());
        for (a, b) in ours.samples.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tap_text_round_trips(taps in prop::collection::vec((0usize..100_000, -10.0f64..10.0), 0..40)) {
        let rir = RoomImpulseResponse::from_taps(taps.iter().map(|&(delay, amplitude)| Tap { delay, amplitude }), 16000);
        prop_assert_eq!(RoomImpulseResponse::parse_text(&rir.to_text(), 16000).unwrap(), rir);
    }
}

#[test]
fn random_64_sample_signal_with_five_taps() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let taps: Vec<Tap> = (0..5)
        .map(|_| Tap { delay: rng.random_range(0..40), amplitude: rng.random_range(-1.0..1.0) })
        .collect();
    let rir = RoomImpulseResponse::from_taps(taps, 16000);
    let ours = convolve(&AudioSignal::new(x.clone(), 16000).unwrap(), &rir).unwrap();
    let canon: Vec<(usize, f64)> = rir.taps.iter().map(|t| (t.delay, t.amplitude)).collect();
    let dense = signal::dense_convolve(&x, &signal::densify(&canon));
    for (a, b) in ours.samples.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn random_scene(rng: &mut impl Rng, noises: usize) -> AugmentationScene {
    let dims = [0; 3].map(|_| rng.random_range(3.0..6.0));
    AugmentationScene {
        room: RoomSpec::new(dims, rng.random_range(0.1..0.8), 16000).unwrap(),
        target_position: random_point(rng, dims),
        mic_position: random_point(rng, dims),
        noise_positions: (0..noises).map(|_| random_point(rng, dims)).collect(),
        target_snr_db: rng.random_range(-5.0..25.0),
        max_reflection_order: rng.random_range(0..5),
    }
}

fn random_signal(rng: &mut impl Rng, len: usize) -> AudioSignal {
    AudioSignal::new((0..len).map(|_| rng.random_range(-0.5..0.5)).collect(), 16000).unwrap()
}

#[test]
fn ten_db_single_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut scene = random_scene(&mut rng, 1);
    scene.target_snr_db = 10.0;
    let target = random_signal(&mut rng, 3000);
    let noise = random_signal(&mut rng, 5000);
    let m = mix_scene_components(&scene, &target, &[noise], 3).unwrap();
    let snr = signal::snr_db(&m.reverberant_target.samples, &m.noise.samples);
    assert!((snr - 10.0).abs() < 0.01, "{snr}");
    for ((mix, t), n) in m.mixture.samples.iter().zip(&m.reverberant_target.samples).zip(&m.noise.samples) {
        assert_eq!(*mix, t + n);
    }
}

#[test]
fn snr_holds_for_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..40 {
        let n = rng.random_range(1..4);
        let scene = random_scene(&mut rng, n);
        let len = rng.random_range(500..3000);
        let target = random_signal(&mut rng, len);
        let noises: Vec<AudioSignal> = (0..n)
            .map(|_| {
                let len = rng.random_range(200..6000);
                random_signal(&mut rng, len)
            })
            .collect();
        let m = mix_scene_components(&scene, &target, &noises, i).unwrap();
        // reverberant target recomputed independently from the oracle taps
        let taps = image::taps(
            scene.room.dimensions,
            scene.room.reflection_coefficient,
            343.0,
            16000.0,
            scene.target_position,
            scene.mic_position,
            scene.max_reflection_order,
        );
        let rev = signal::dense_convolve(&target.samples, &signal::densify(&taps));
        assert_eq!(rev.len(), m.mixture.len());
        let noise_part: Vec<f64> = m.mixture.samples.iter().zip(&rev).map(|(a, b)| a - b).collect();
        let snr = signal::snr_db(&rev, &noise_part);
        assert!((snr - scene.target_snr_db).abs() < 0.01, "scene {i}: {snr} vs {}", scene.target_snr_db);
    }
}

#[test]
fn mixing_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scene = random_scene(&mut rng, 2);
    let target = random_signal(&mut rng, 2000);
    let noises = vec![random_signal(&mut rng, 9000), random_signal(&mut rng, 700)];
    let a = mix_scene(&scene, &target, &noises, 77).unwrap();
    let b = mix_scene(&scene, &target, &noises, 77).unwrap();
    assert_eq!(a.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    let c = mix_scene(&scene, &target, &noises, 78).unwrap();
    assert_ne!(a, c);
}
