//! Image-source enumeration by repeated explicit wall mirroring.

use std::collections::{BTreeMap, HashMap, VecDeque};

/// One image coordinate along an axis: `sign * x + 2 * shift * length`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct AxisImage {
    sign: i8,
    shift: i64,
}

impl AxisImage {
    fn mirror_low(self) -> Self {
        // reflect across the plane at 0: p -> -p
        AxisImage { sign: -self.sign, shift: -self.shift }
    }

    fn mirror_high(self) -> Self {
        // reflect across the plane at L: p -> 2L - p
        AxisImage { sign: -self.sign, shift: 1 - self.shift }
    }

    fn coordinate(self, x: f64, length: f64) -> f64 {
        f64::from(self.sign) * x + 2.0 * self.shift as f64 * length
    }
}

type Image = [AxisImage; 3];

/// Every distinct image reachable with at most `max_order` wall reflections,
/// found by breadth-first mirroring across the six walls. The BFS depth at
/// which an image is first reached is its reflection count.
///
/// Returns `(reflection_count, distance)` pairs sorted by count then distance.
pub fn images(
    dims: [f64; 3],
    source: [f64; 3],
    mic: [f64; 3],
    max_order: u32,
) -> Vec<(u32, f64)> {
    let start: Image = [AxisImage { sign: 1, shift: 0 }; 3];
    let mut depth: HashMap<Image, u32> = HashMap::new();
    depth.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some(img) = queue.pop_front() {
        let g = depth[&img];
        if g == max_order {
            continue;
        }
        for axis in 0..3 {
            for wall in 0..2 {
                let mut next = img;
                next[axis] = if wall == 0 { img[axis].mirror_low() } else { img[axis].mirror_high() };
                if let std::collections::hash_map::Entry::Vacant(slot) = depth.entry(next) {
                    slot.insert(g + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    let mut out: Vec<(u32, f64)> = depth
        .into_iter()
        .map(|(img, g)| {
            let mut sq = 0.0;
            for axis in 0..3 {
                let delta = img[axis].coordinate(source[axis], dims[axis]) - mic[axis];
                sq += delta * delta;
            }
            (g, sq.sqrt())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

/// Room impulse response taps built image by image: each image adds
/// `r^g / d` at sample `ceil(d * fs / c)`. Exact-zero taps are dropped.
pub fn taps(
    dims: [f64; 3],
    reflection: f64,
    speed_of_sound: f64,
    sample_rate: f64,
    source: [f64; 3],
    mic: [f64; 3],
    max_order: u32,
) -> Vec<(usize, f64)> {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for (g, d) in images(dims, source, mic, max_order) {
        let delay = (d * sample_rate / speed_of_sound).ceil() as usize;
        let mut amp = 1.0 / d;
        for _ in 0..g {
            amp *= reflection;
        }
        *acc.entry(delay).or_insert(0.0) += amp;
    }
    acc.into_iter().filter(|&(_, a)| a != 0.0).collect()
}
