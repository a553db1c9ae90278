//! Counts fruitlets in a bundle written by `simulate_scan` (or any bundle).
//! Usage: `cargo run --release --example count_scan [BUNDLE_DIR]`.

use std::path::PathBuf;

use fruitlet_map::io::read_bundle;
use fruitlet_map::pipeline::{process_scan, PipelineConfig};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/scan-bundle".into()));
    let bundle = match read_bundle(&dir) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{e}\nrun `cargo run --release --example simulate_scan` first");
            std::process::exit(1);
        }
    };
    let res = process_scan(&bundle.frames, &PipelineConfig::default()).unwrap();
    let s = res.stats;
    println!(
        "{} frames: {} detections, {} observations, {} occlusion splits, {} fit failures, {} merges",
        s.frames, s.detections, s.observations, s.occlusion_splits, s.fit_failures, s.merges
    );
    println!("count: {}", res.map.count());
    for t in res.map.tracks() {
        let c = t.sphere.center;
        println!(
            "  #{:<3} ({:7.1}, {:6.1}, {:6.1}) r {:5.1} mm, seen {:2}x in frames {}..{}",
            t.id, c.x, c.y, c.z, t.sphere.radius, t.observations, t.first_frame, t.last_frame
        );
    }
}
