use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ladlag_lab::lab::{catalog, run_experiment, ExperimentConfig, Overrides};
use ladlag_lab::LabError;

/// Run experiment presets from JSON configs.
///
/// Exit codes: 0 all criteria passed, 1 a criterion failed, 2 config error,
/// 3 runtime error.
#[derive(Parser)]
#[command(name = "lab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List presets with their defaults and thresholds.
    List,
    /// Check a config file without running it.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn overrides(f: RunFlags) -> Overrides {
    Overrides { name: f.name, seed: f.seed, scenarios: f.scenarios, output_dir: f.output_dir, workers: f.workers }
}

fn exit_for(e: &LabError) -> ExitCode {
    match e {
        LabError::Config(_) | LabError::Json(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            for p in catalog() {
                println!("{}", p.name);
                println!("  {}", p.description);
                let grid = p.default_level.map_or("none".to_string(), |m| format!("dyadic level {m}"));
                println!("  default scenarios {}, grid {grid}", p.default_scenarios);
                let th: Vec<String> = p.thresholds.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
                println!("  thresholds {}", th.join(", "));
            }
            ExitCode::SUCCESS
        }
        Cmd::Validate { config, flags } => {
            let r = ExperimentConfig::load(&config).and_then(|c| c.resolve(&overrides(flags)));
            match r {
                Ok(c) => {
                    println!("ok: {} (preset {}, {} scenarios, seed {}, hash {})", c.name, c.preset, c.scenarios, c.seed, c.hash());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("invalid config: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Cmd::Run { config, flags } => {
            let cfg = match ExperimentConfig::load(&config).and_then(|c| c.resolve(&overrides(flags))) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("invalid config: {e}");
                    return ExitCode::from(2);
                }
            };
            match run_experiment(&cfg) {
                Ok(m) => {
                    for v in &m.verdicts {
                        println!(
                            "{} {}: {:?} ({} {:?})",
                            if v.passed { "PASS" } else { "FAIL" },
                            v.id,
                            v.value,
                            v.threshold_key,
                            v.threshold
                        );
                    }
                    println!("wrote {}", cfg.output_dir.display());
                    if m.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    exit_for(&e)
                }
            }
        }
    }
}
