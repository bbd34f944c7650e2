use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::AugmentationConfig;
use crate::error::{Error, Result};
use crate::room::{reflection_from_t60, AugmentationScene, Position, RoomSpec};

const MAX_ATTEMPTS: usize = 64;

/// Independent random stream for example `index`.
pub fn example_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Everything random about one example.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDraw {
    pub scene: AugmentationScene,
    pub t60: f64,
    /// Emit the clean utterance untouched.
    pub passthrough: bool,
    /// Seed for noise cropping offsets inside the mixer.
    pub mix_seed: u64,
    /// One raw draw per noise source; reduced modulo the noise pool size.
    pub noise_choices: Vec<u64>,
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn interior_point(rng: &mut impl Rng, dims: [f64; 3], clearance: f64) -> Position {
    dims.map(|l| uniform(rng, [clearance, l - clearance]))
}

fn distance(a: Position, b: Position) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Draws the scene for example `index`: uniform room dimensions and T60
/// (converted to a wall coefficient by Sabine's formula), uniform positions
/// at least `wall_clearance` from every wall, and an SNR drawn uniformly from
/// the configured set. Draws whose T60 is unreachable in the drawn room, or
/// that put a source within `wall_clearance` of the microphone, are redrawn.
pub fn sample_scene(cfg: &AugmentationConfig, seed: u64, index: u64) -> Result<SceneDraw> {
    let mut rng = example_rng(seed, index);
    let passthrough = rng.random::<f64>() < cfg.passthrough_probability;
    let [nlo, nhi] = cfg.noise_source_range;
    let snr_db = cfg.snr_db_set[rng.random_range(0..cfg.snr_db_set.len())];
    let noise_count = rng.random_range(nlo..=nhi) as usize;
    let mix_seed = rng.random::<u64>();
    let noise_choices = (0..noise_count).map(|_| rng.random::<u64>()).collect();

    for _ in 0..MAX_ATTEMPTS {
        let dims = [0; 3].map(|_| uniform(&mut rng, cfg.room_dim_range));
        let t60 = uniform(&mut rng, cfg.t60_range);
        let target = interior_point(&mut rng, dims, cfg.wall_clearance);
        let mic = interior_point(&mut rng, dims, cfg.wall_clearance);
        let noises: Vec<Position> = (0..noise_count)
            .map(|_| interior_point(&mut rng, dims, cfg.wall_clearance))
            .collect();
        let Ok(reflection) = reflection_from_t60(dims, t60) else {
            continue;
        };
        if distance(target, mic) < cfg.wall_clearance
            || noises.iter().any(|&n| distance(n, mic) < cfg.wall_clearance)
        {
            continue;
        }
        let room = RoomSpec {
            dimensions: dims,
            reflection_coefficient: reflection,
            speed_of_sound: cfg.speed_of_sound,
            sample_rate: cfg.sample_rate,
        };
        if room.validate().is_err() {
            continue;
        }
        return Ok(SceneDraw {
            scene: AugmentationScene {
                room,
                target_position: target,
                mic_position: mic,
                noise_positions: noises,
                target_snr_db: snr_db,
                max_reflection_order: cfg.max_reflection_order,
            },
            t60,
            passthrough,
            mix_seed,
            noise_choices,
        });
    }
    Err(Error::InfeasibleScene(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_index() {
        let cfg = AugmentationConfig::default();
        assert_eq!(sample_scene(&cfg, 5, 17).unwrap(), sample_scene(&cfg, 5, 17).unwrap());
        assert_ne!(sample_scene(&cfg, 5, 17).unwrap(), sample_scene(&cfg, 5, 18).unwrap());
        assert_ne!(sample_scene(&cfg, 5, 17).unwrap(), sample_scene(&cfg, 6, 17).unwrap());
    }

    #[test]
    fn positions_respect_clearance() {
        let cfg = AugmentationConfig::default();
        for i in 0..500 {
            let d = sample_scene(&cfg, 1, i).unwrap();
            let dims = d.scene.room.dimensions;
            for p in std::iter::once(d.scene.target_position)
                .chain(std::iter::once(d.scene.mic_position))
                .chain(d.scene.noise_positions.iter().copied())
            {
                for a in 0..3 {
                    assert!(p[a] >= 0.2 && p[a] <= dims[a] - 0.2);
                }
            }
            assert!((1..=2).contains(&d.scene.noise_positions.len()));
            assert!((0.1..=0.8).contains(&d.t60));
            assert!(d.scene.validate().is_ok());
        }
    }

    #[test]
    fn t60_range_monotone_in_fixed_room() {
        let fixed = |t60: f64| AugmentationConfig {
            room_dim_range: [5.0, 5.0],
            t60_range: [t60, t60],
            ..Default::default()
        };
        let lo = sample_scene(&fixed(0.2), 3, 0).unwrap();
        let hi = sample_scene(&fixed(0.8), 3, 0).unwrap();
        assert!(lo.scene.room.reflection_coefficient < hi.scene.room.reflection_coefficient);
    }

    #[test]
    fn infeasible_geometry_reports_error() {
        let cfg = AugmentationConfig {
            room_dim_range: [20.0, 20.0],
            t60_range: [0.05, 0.05],
            ..Default::default()
        };
        assert!(matches!(sample_scene(&cfg, 0, 0), Err(Error::InfeasibleScene(_))));
    }
}
