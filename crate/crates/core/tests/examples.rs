//! Every example runs to completion.

#[allow(dead_code)]
#[path = "../examples/paths_and_times.rs"]
mod paths_and_times;

#[test]
fn paths_and_times_runs() {
    paths_and_times::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/scenario_tree.rs"]
mod scenario_tree;

#[test]
fn scenario_tree_runs() {
    scenario_tree::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/pathwise_integration.rs"]
mod pathwise_integration;

#[test]
fn pathwise_integration_runs() {
    pathwise_integration::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/fatou_limit.rs"]
mod fatou_limit;

#[test]
fn fatou_limit_runs() {
    fatou_limit::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/compensator_limits.rs"]
mod compensator_limits;

#[test]
fn compensator_limits_runs() {
    compensator_limits::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/komlos.rs"]
mod komlos;

#[test]
fn komlos_runs() {
    komlos::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/approximation.rs"]
mod approximation;

#[test]
fn approximation_runs() {
    approximation::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/block_martingales.rs"]
mod block_martingales;

#[test]
fn block_martingales_runs() {
    block_martingales::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/adaptive_counterexample.rs"]
mod adaptive_counterexample;

#[test]
fn adaptive_counterexample_runs() {
    adaptive_counterexample::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/run_preset.rs"]
mod run_preset;

#[test]
fn run_preset_runs() {
    run_preset::run_example().unwrap();
}
