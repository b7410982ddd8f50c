use gaeq::embed::Point3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub mod attention;
pub mod conjecture;
pub mod equivariance;
pub mod norm;
pub mod solve;
pub mod tables;

/// `n` points uniform in the cube `[-1, 1]³`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            let mut c = || rng.random_range(-1.0..=1.0);
            Point3 { x: c(), y: c(), z: c() }
        })
        .collect()
}
