//! Running a lab preset from code instead of the `lab` binary.

use ladlag_lab::lab::{run_experiment, ExperimentConfig, Overrides};

pub fn run_example() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("ladlag-lab-example");
    let cfg = ExperimentConfig::from_json(r#"{"preset": "integration-ibp", "scenarios": 50, "seed": 4}"#)?
        .resolve(&Overrides { output_dir: Some(dir.clone()), ..Default::default() })?;
    let manifest = run_experiment(&cfg)?;
    for v in &manifest.verdicts {
        println!("{} {} = {:e} (threshold {} = {:e})", if v.passed { "PASS" } else { "FAIL" }, v.id, v.value, v.threshold_key, v.threshold);
    }
    println!("files in {}: {:?}", dir.display(), manifest.files);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
