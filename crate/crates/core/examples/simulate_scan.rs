//! Simulates the default 72-view scan of a 40-fruitlet branch and writes it as
//! a bundle. Usage: `cargo run --release --example simulate_scan [OUT_DIR] [SEED]`.

use std::path::PathBuf;

use fruitlet_map::commands::cmd_simulate;
use fruitlet_map::simulator::{NoiseSpec, SimulationConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/scan-bundle".into()));
    let seed = args.next().map(|s| s.parse().expect("seed must be an integer")).unwrap_or(0);

    let mut cfg = SimulationConfig::default();
    cfg.scene.seed = seed;
    cfg.noise = NoiseSpec {
        depth_sigma: 1.0,
        outlier_rate: 0.01,
        mask_contamination_px: 1,
        frame_drop_rate: 0.0,
    };
    let manifest = cmd_simulate(&cfg, &format!("sim-{seed}"), &out).unwrap();
    let instances: usize = manifest.frames.iter().map(|f| f.instances.len()).sum();
    println!(
        "wrote {} frames ({} fruitlet masks) to {}",
        manifest.frame_count,
        instances,
        out.display()
    );
}
