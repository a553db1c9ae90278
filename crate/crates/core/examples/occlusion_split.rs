//! A fruitlet mask that bled onto a leaf in front of it. The two-cluster split
//! drops the leaf points before fitting.

use fruitlet_map::extraction::{split_occlusion, ExtractionConfig, FruitletObservation};
use fruitlet_map::geometry::{CoordinateFrame, PointCloud};
use fruitlet_map::sphere_fit::fit_least_squares;
use fruitlet_map::Point3;
use nalgebra::Vector3;

fn main() {
    let center = Point3::new(0.0, 0.0, 400.0);
    let r = 14.0;
    let mut points = Vec::new();
    for i in 0..30 {
        for j in 0..30 {
            let theta = 1.3 * i as f64 / 29.0;
            let phi = std::f64::consts::TAU * j as f64 / 30.0;
            points.push(center + Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), -theta.cos()) * r);
        }
    }
    // leaf patch 45 mm in front of the fruitlet
    for i in 0..18 {
        for j in 0..18 {
            points.push(Point3::new(-20.0 + i as f64 * 1.5, 5.0 + j as f64 * 1.5, 345.0));
        }
    }
    let obs = FruitletObservation {
        frame_id: 0,
        instance: 1,
        cloud: PointCloud::new(points, CoordinateFrame::World).unwrap(),
        camera_center: Point3::origin(),
        score: 0.9,
        mask_centroid_ray: None,
    };

    let before = fit_least_squares(&obs.cloud.points).unwrap().sphere;
    let (clean, split) = split_occlusion(&obs, &ExtractionConfig::default());
    let after = fit_least_squares(&clean.cloud.points).unwrap().sphere;
    println!("split applied: {split}; {} -> {} points", obs.cloud.len(), clean.cloud.len());
    println!("fit before split: centre error {:.1} mm, r {:.1}", (before.center - center).norm(), before.radius);
    println!("fit after split:  centre error {:.1} mm, r {:.1}", (after.center - center).norm(), after.radius);
}
