//! Seeded synthetic probability maps: a few smooth Gaussian blobs plus
//! uniform noise, clamped to `[0, 1]`. Used for benchmarks and timing runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::GridMap;

pub fn blob_map(width: usize, height: usize, seed: u64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..rng.random_range(2..=6))
        .map(|_| {
            let cy = rng.random_range(0.0..height as f64);
            let cx = rng.random_range(0.0..width as f64);
            let sigma = rng.random_range(0.04..0.2) * width.min(height) as f64;
            let amp = rng.random_range(0.4..1.0);
            (cy, cx, sigma, amp)
        })
        .collect();
    let noise = rng.random_range(0.02..0.1);
    GridMap::from_fn(width, height, |r, c| {
        let smooth: f64 = blobs
            .iter()
            .map(|&(cy, cx, s, a)| {
                let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum();
        let v = smooth + noise * rng.random_range(-1.0..1.0);
        v.clamp(0.0, 1.0) as f32
    })
    .expect("dimensions are positive")
}
