//! Image-method room impulse responses and reverberant scene mixing.
//!
//! A shoebox room with one reflection coefficient `r` shared by all six walls.
//! Every image source at distance `d` behind `g` wall reflections contributes
//! an impulse of height `r^g / d` at sample `ceil(d * fs / c0)`. The infinite
//! image sum is truncated at a maximum total reflection order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub type Position = [f64; 3];

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_MAX_REFLECTION_ORDER: u32 = 10;

/// Sabine's constant in s/m for metric units.
const SABINE: f64 = 0.161;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    /// Length, width, height in meters.
    pub dimensions: [f64; 3],
    pub reflection_coefficient: f64,
    pub speed_of_sound: f64,
    pub sample_rate: u32,
}

impl RoomSpec {
    pub fn new(dimensions: [f64; 3], reflection_coefficient: f64, sample_rate: u32) -> Result<Self> {
        let room = RoomSpec {
            dimensions,
            reflection_coefficient,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            sample_rate,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dimensions.iter().all(|&d| d.is_finite() && d > 0.0) {
            return Err(Error::InvalidRoom(format!("dimensions {:?} must be positive", self.dimensions)));
        }
        if !(0.0..1.0).contains(&self.reflection_coefficient) {
            return Err(Error::InvalidRoom(format!(
                "reflection coefficient {} outside [0, 1)",
                self.reflection_coefficient
            )));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::InvalidRoom("speed of sound must be positive".into()));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidRoom("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        x * y * z
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + y * z + x * z)
    }

    pub fn contains(&self, p: Position) -> bool {
        p.iter().zip(&self.dimensions).all(|(&c, &l)| c > 0.0 && c < l)
    }

    fn check_inside(&self, what: &'static str, p: Position) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideRoom { what, position: p })
        }
    }

    /// Sample index of an arrival over distance `d`: `ceil(d * fs / c0)`.
    pub fn delay_samples(&self, distance: f64) -> usize {
        (distance * f64::from(self.sample_rate) / self.speed_of_sound).ceil() as usize
    }

    pub fn tap_amplitude(&self, path: &ImagePath) -> f64 {
        self.reflection_coefficient.powi(path.reflection_count as i32) / path.distance
    }
}

/// Wall reflection coefficient giving reverberation time `t60` under Sabine's
/// formula with uniform absorption `a = 1 - r^2`:
///
/// `T60 = 0.161 V / (S a)`  so  `r = sqrt(1 - 0.161 V / (S T60))`.
pub fn reflection_from_t60(dimensions: [f64; 3], t60: f64) -> Result<f64> {
    if !(t60.is_finite() && t60 > 0.0) {
        return Err(Error::InvalidArgument(format!("T60 {t60} must be positive")));
    }
    let [x, y, z] = dimensions;
    let absorption = SABINE * x * y * z / (2.0 * (x * y + y * z + x * z) * t60);
    if absorption > 1.0 {
        return Err(Error::InvalidRoom(format!(
            "T60 {t60} s is shorter than a fully absorbing room of {dimensions:?} allows"
        )));
    }
    Ok((1.0 - absorption).sqrt())
}

/// Inverse of [`reflection_from_t60`].
pub fn t60_from_reflection(dimensions: [f64; 3], reflection: f64) -> f64 {
    let [x, y, z] = dimensions;
    SABINE * x * y * z / (2.0 * (x * y + y * z + x * z) * (1.0 - reflection * reflection))
}

/// One mirror image of the source as seen from the microphone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePath {
    pub distance: f64,
    pub reflection_count: u32,
    pub image: Position,
}

/// All images with at most `max_order` reflections, sorted by reflection
/// count then distance (ties broken by lattice index).
///
/// Along one axis of length `L` the images sit at `(1 - 2q) x + 2 n L` with
/// `q` in {0, 1} and integer `n`, and cost `|2n - q|` reflections.
pub fn enumerate_images(
    room: &RoomSpec,
    source: Position,
    mic: Position,
    max_order: u32,
) -> Result<Vec<ImagePath>> {
    room.validate()?;
    room.check_inside("source", source)?;
    room.check_inside("microphone", mic)?;
    if source == mic {
        return Err(Error::ZeroDistance);
    }

    let k = i64::from(max_order);
    // (coordinate offset from mic, reflections, lattice key) per axis
    let axis_images: Vec<Vec<(f64, u32, (i64, i64))>> = (0..3)
        .map(|axis| {
            let (x, l, m) = (source[axis], room.dimensions[axis], mic[axis]);
            let mut v = Vec::new();
            for n in -(k + 1) / 2..=(k + 1) / 2 {
                for q in 0..2i64 {
                    let refl = (2 * n - q).unsigned_abs();
                    if refl <= u64::from(max_order) {
                        let coord = (1 - 2 * q) as f64 * x + 2.0 * n as f64 * l;
                        v.push((coord - m, refl as u32, (n, q)));
                    }
                }
            }
            v
        })
        .collect();

    let mut found = Vec::new();
    for ax in &axis_images[0] {
        for ay in &axis_images[1] {
            if ax.1 + ay.1 > max_order {
                continue;
            }
            for az in &axis_images[2] {
                let g = ax.1 + ay.1 + az.1;
                if g > max_order {
                    continue;
                }
                let distance = (ax.0 * ax.0 + ay.0 * ay.0 + az.0 * az.0).sqrt();
                let image = [ax.0 + mic[0], ay.0 + mic[1], az.0 + mic[2]];
                found.push((ImagePath { distance, reflection_count: g, image }, [ax.2, ay.2, az.2]));
            }
        }
    }
    found.sort_by(|(a, ka), (b, kb)| {
        a.reflection_count
            .cmp(&b.reflection_count)
            .then(a.distance.total_cmp(&b.distance))
            .then(ka.cmp(kb))
    });
    Ok(found.into_iter().map(|(p, _)| p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: usize,
    pub amplitude: f64,
}

/// Sparse impulse response. Taps are sorted by delay with no two taps sharing
/// a delay and no exact-zero amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomImpulseResponse {
    pub taps: Vec<Tap>,
    pub sample_rate: u32,
}

impl RoomImpulseResponse {
    /// Builds a canonical response from arbitrary taps: sorts, sums
    /// coincident delays and drops zero amplitudes.
    pub fn from_taps(taps: impl IntoIterator<Item = Tap>, sample_rate: u32) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for t in taps {
            *acc.entry(t.delay).or_insert(0.0) += t.amplitude;
        }
        let taps = acc
            .into_iter()
            .filter(|&(_, a)| a != 0.0)
            .map(|(delay, amplitude)| Tap { delay, amplitude })
            .collect();
        RoomImpulseResponse { taps, sample_rate }
    }

    pub fn identity(sample_rate: u32) -> Self {
        RoomImpulseResponse { taps: vec![Tap { delay: 0, amplitude: 1.0 }], sample_rate }
    }

    pub fn first_delay(&self) -> Option<usize> {
        self.taps.first().map(|t| t.delay)
    }

    pub fn max_delay(&self) -> usize {
        self.taps.last().map_or(0, |t| t.delay)
    }

    /// Plain-text tap list: one `delay_samples amplitude` line per tap.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.taps {
            let _ = writeln!(s, "{} {:e}", t.delay, t.amplitude);
        }
        s
    }

    /// Parses the tap-list format. Blank lines and `#` comments are skipped;
    /// the result is canonicalized.
    pub fn parse_text(text: &str, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        let mut taps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: &str| Error::format("rir", format!("line {}: {why}", lineno + 1));
            let mut fields = line.split_whitespace();
            let (Some(d), Some(a), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad("expected `delay amplitude`"));
            };
            let delay: usize = d.parse().map_err(|_| bad("delay is not a non-negative integer"))?;
            let amplitude: f64 = a.parse().map_err(|_| bad("amplitude is not a number"))?;
            if !amplitude.is_finite() {
                return Err(bad("amplitude is not finite"));
            }
            if delay > MAX_TEXT_DELAY {
                return Err(bad("delay is unreasonably large"));
            }
            taps.push(Tap { delay, amplitude });
        }
        let rir = Self::from_taps(taps, sample_rate);
        if let Some(t) = rir.taps.iter().find(|t| !t.amplitude.is_finite()) {
            return Err(Error::format("rir", format!("taps at delay {} sum to a non-finite amplitude", t.delay)));
        }
        Ok(rir)
    }
}

/// Upper bound on parsed delays (about an hour at 48 kHz); keeps a hostile
/// tap list from requesting a huge output buffer in [`convolve`].
const MAX_TEXT_DELAY: usize = 1 << 28;

pub fn generate_rir(
    room: &RoomSpec,
    source: Position,
    mic: Position,
    max_order: u32,
) -> Result<RoomImpulseResponse> {
    let images = enumerate_images(room, source, mic, max_order)?;
    Ok(RoomImpulseResponse::from_taps(
        images.iter().map(|p| Tap {
            delay: room.delay_samples(p.distance),
            amplitude: room.tap_amplitude(p),
        }),
        room.sample_rate,
    ))
}

/// Sparse convolution; the output is `max_delay` samples longer than the input.
pub fn convolve(signal: &AudioSignal, rir: &RoomImpulseResponse) -> Result<AudioSignal> {
    if signal.sample_rate != rir.sample_rate {
        return Err(Error::SampleRateMismatch(signal.sample_rate, rir.sample_rate));
    }
    let mut out = vec![0.0; signal.len() + rir.max_delay()];
    for tap in &rir.taps {
        let dst = &mut out[tap.delay..tap.delay + signal.len()];
        for (o, &x) in dst.iter_mut().zip(&signal.samples) {
            *o += tap.amplitude * x;
        }
    }
    Ok(AudioSignal { samples: out, sample_rate: signal.sample_rate })
}

/// Geometry and level settings for one simulated recording. Noise waveforms
/// are supplied separately to [`mix_scene`], one per noise position.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationScene {
    pub room: RoomSpec,
    pub target_position: Position,
    pub mic_position: Position,
    pub noise_positions: Vec<Position>,
    /// Reverberant target to total reverberant noise energy ratio.
    /// `f64::INFINITY` disables noise.
    pub target_snr_db: f64,
    pub max_reflection_order: u32,
}

impl AugmentationScene {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.room.check_inside("target", self.target_position)?;
        self.room.check_inside("microphone", self.mic_position)?;
        for &p in &self.noise_positions {
            self.room.check_inside("noise", p)?;
        }
        if self.target_snr_db.is_nan() || self.target_snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("target SNR {} dB", self.target_snr_db)));
        }
        Ok(())
    }

    pub fn direct_path(&self) -> Result<ImagePath> {
        let paths = enumerate_images(&self.room, self.target_position, self.mic_position, 0)?;
        Ok(paths[0])
    }
}

/// The microphone signal together with its separated parts.
#[derive(Debug, Clone)]
pub struct SceneMix {
    pub mixture: AudioSignal,
    /// `h_0 * x_0`
    pub reverberant_target: AudioSignal,
    /// `sum_i alpha_i h_i * x_i`, same length as the mixture.
    pub noise: AudioSignal,
    /// The common scale applied to every noise source.
    pub noise_gain: f64,
    pub target_rir: RoomImpulseResponse,
}

/// Simulates `h_0 * x_0 + sum_i alpha_i h_i * x_i`.
///
/// All noise sources share one gain, solved so the reverberant target to
/// total reverberant noise energy ratio over the whole output equals the
/// scene's SNR. Noises shorter than the output are looped; longer ones are
/// cropped at an offset drawn from `rng_seed`.
pub fn mix_scene_components(
    scene: &AugmentationScene,
    target: &AudioSignal,
    noises: &[AudioSignal],
    rng_seed: u64,
) -> Result<SceneMix> {
    scene.validate()?;
    if noises.len() != scene.noise_positions.len() {
        return Err(Error::Shape(format!(
            "{} noise signals for {} noise positions",
            noises.len(),
            scene.noise_positions.len()
        )));
    }
    if target.sample_rate != scene.room.sample_rate {
        return Err(Error::SampleRateMismatch(target.sample_rate, scene.room.sample_rate));
    }
    for n in noises {
        target.check_rate(n)?;
    }

    let h0 = generate_rir(&scene.room, scene.target_position, scene.mic_position, scene.max_reflection_order)?;
    let reverberant_target = convolve(target, &h0)?;
    let target_energy = reverberant_target.energy();
    if target_energy == 0.0 {
        return Err(Error::Silent("target"));
    }
    let out_len = reverberant_target.len();
    let rate = target.sample_rate;

    let mut noise = vec![0.0; out_len];
    let mut noise_gain = 0.0;
    if !noises.is_empty() && scene.target_snr_db.is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for (signal, &pos) in noises.iter().zip(&scene.noise_positions) {
            let fitted = fit_length(signal, out_len, &mut rng)?;
            let h = generate_rir(&scene.room, pos, scene.mic_position, scene.max_reflection_order)?;
            let reverberant = convolve(&fitted, &h)?;
            for (acc, v) in noise.iter_mut().zip(&reverberant.samples) {
                *acc += v;
            }
        }
        let noise_energy: f64 = noise.iter().map(|v| v * v).sum();
        if noise_energy == 0.0 {
            return Err(Error::Silent("noise"));
        }
        noise_gain = (target_energy / (noise_energy * 10f64.powf(scene.target_snr_db / 10.0))).sqrt();
        for v in &mut noise {
            *v *= noise_gain;
        }
    }

    let mixture = reverberant_target
        .samples
        .iter()
        .zip(&noise)
        .map(|(t, n)| t + n)
        .collect();
    Ok(SceneMix {
        mixture: AudioSignal { samples: mixture, sample_rate: rate },
        reverberant_target,
        noise: AudioSignal { samples: noise, sample_rate: rate },
        noise_gain,
        target_rir: h0,
    })
}

pub fn mix_scene(
    scene: &AugmentationScene,
    target: &AudioSignal,
    noises: &[AudioSignal],
    rng_seed: u64,
) -> Result<AudioSignal> {
    mix_scene_components(scene, target, noises, rng_seed).map(|m| m.mixture)
}

fn fit_length(noise: &AudioSignal, len: usize, rng: &mut impl Rng) -> Result<AudioSignal> {
    if noise.is_empty() {
        return Err(Error::Silent("noise"));
    }
    let samples = if noise.len() >= len {
        let offset = rng.random_range(0..=noise.len() - len);
        noise.samples[offset..offset + len].to_vec()
    } else {
        noise.samples.iter().copied().cycle().take(len).collect()
    };
    Ok(AudioSignal { samples, sample_rate: noise.sample_rate })
}
