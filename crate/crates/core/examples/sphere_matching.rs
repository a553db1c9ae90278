//! Volume-overlap matching: how the intersection ratio falls off with centre
//! distance, and how a short observation stream collapses into tracks.

use fruitlet_map::fruit_map::{intersection_ratio, FruitletMap, MatchConfig, Registration};
use fruitlet_map::{Point3, Sphere};

fn sphere(x: f64, r: f64) -> Sphere {
    Sphere::new(Point3::new(x, 0.0, 400.0), r).unwrap()
}

fn main() {
    let base = sphere(0.0, 12.0);
    for d in [0.0, 3.0, 6.0, 9.0, 12.0, 18.0, 24.0] {
        println!("d = {d:>4} mm  ratio {:.3}", intersection_ratio(&base, &sphere(d, 12.0)));
    }

    // two fruitlets 40 mm apart, each seen three times with small jitter
    let stream = [(0, 0.0), (0, 40.0), (1, 1.5), (1, 41.0), (2, -1.0), (2, 38.5)];
    let mut map = FruitletMap::new();
    let cfg = MatchConfig::default();
    for (frame, x) in stream {
        let what = match map.register(sphere(x, 12.0), frame, &cfg) {
            Registration::Merged(id) => format!("merged into track {id}"),
            Registration::Created(id) => format!("new track {id}"),
        };
        println!("frame {frame}: sphere at x = {x:>5} -> {what}");
    }
    for t in map.tracks() {
        println!("track {}: x {:.2}, {} observations", t.id, t.sphere.center.x, t.observations);
    }
}
