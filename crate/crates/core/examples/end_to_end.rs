//! Simulate, count and evaluate through the same functions the binary uses,
//! then re-run the evaluation from the config embedded in its own report.

use fruitlet_map::commands::{cmd_evaluate, cmd_simulate, load_pipeline_config};
use fruitlet_map::pipeline::PipelineConfig;
use fruitlet_map::simulator::SimulationConfig;

fn main() {
    let dir = std::env::temp_dir().join(format!("fruitlet-e2e-{}", std::process::id()));
    let bundle = dir.join("bundle");
    cmd_simulate(&SimulationConfig::default(), "e2e", &bundle).unwrap();

    let report_path = dir.join("evaluate.json");
    let report = cmd_evaluate(&bundle, &PipelineConfig::default(), &report_path).unwrap();
    println!(
        "truth {}, counted {}: tp {} fp {} fn {} (never visible {})",
        report.full.ground_truth, report.count, report.full.tp, report.full.fp, report.full.fn_, report.never_visible
    );

    let embedded = load_pipeline_config(&report_path).unwrap();
    let again = dir.join("evaluate-again.json");
    cmd_evaluate(&bundle, &embedded, &again).unwrap();
    let same = std::fs::read(&report_path).unwrap() == std::fs::read(&again).unwrap();
    println!("re-run from embedded config is byte-identical: {same}");
    std::fs::remove_dir_all(&dir).unwrap();
}
