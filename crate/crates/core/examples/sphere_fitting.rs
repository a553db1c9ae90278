//! Least squares versus RANSAC on a noisy front-facing cap with 20% outliers.

use fruitlet_map::sphere_fit::{fit_least_squares, fit_ransac, RansacConfig};
use fruitlet_map::{Point3, Sphere};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let truth = Sphere::new(Point3::new(0.0, 0.0, 400.0), 15.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::new();
    while points.len() < 800 {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..0.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            points.push(truth.center + v / n * (truth.radius + noise.sample(&mut rng)));
        }
    }
    for _ in 0..200 {
        points.push(truth.center + Vector3::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), rng.random_range(-60.0..0.0)));
    }

    let lsq = fit_least_squares(&points).unwrap();
    let ransac = fit_ransac(&points, &RansacConfig::default()).unwrap();
    println!("truth          centre {:.2?} r {:.2}", truth.center, truth.radius);
    for fit in [lsq, ransac] {
        println!(
            "{:<14} centre {:.2?} r {:.2}  centre error {:.2} mm, inliers {}/{}",
            fit.method.to_string(),
            fit.sphere.center,
            fit.sphere.radius,
            (fit.sphere.center - truth.center).norm(),
            fit.inlier_count,
            points.len()
        );
    }
}
