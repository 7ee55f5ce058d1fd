//! Shared inputs for the pipeline benchmarks.

use lsmtopo_core::landscape::{build_landscape, Landscape};
use lsmtopo_core::lsm::Point;
use lsmtopo_core::persistence::{diagram, vr_filtration, Convention};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `m` points uniform in the unit square.
pub fn point_cloud(m: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
}

/// Order-`order` landscapes of `count` random clouds of `m` points.
pub fn landscapes(count: usize, m: usize, order: usize, seed: u64) -> Vec<Landscape> {
    (0..count as u64)
        .map(|s| {
            let f = vr_filtration(&point_cloud(m, seed + s), Convention::Radius).expect("finite points");
            build_landscape(&diagram(&f, order).expect("order 0 or 1").without_essential())
        })
        .collect()
}
