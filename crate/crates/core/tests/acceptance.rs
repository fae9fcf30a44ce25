//! Acceptance suite: one line per criterion, run with
//! `cargo test --test acceptance`. Tolerances are pinned here and passed to
//! the presets as explicit thresholds.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ladlag_lab::lab::{catalog, run_experiment, ExperimentConfig, Outcome, Overrides, ResolvedConfig};
use ladlag_lab::lab::presets::run_preset;
use serde_json::{json, Value};

fn resolve(preset: &str, scenarios: Option<usize>, params: Value, thresholds: &[(&str, f64)], out: &Path) -> ResolvedConfig {
    let cfg = ExperimentConfig {
        preset: preset.into(),
        seed: Some(7),
        scenarios,
        params: Some(params),
        thresholds: thresholds.iter().map(|&(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
        ..ExperimentConfig::for_preset(preset)
    };
    cfg.resolve(&Overrides { output_dir: Some(out.to_path_buf()), ..Default::default() }).expect("valid acceptance config")
}

fn run(preset: &str, scenarios: Option<usize>, params: Value, thresholds: &[(&str, f64)]) -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_preset(&resolve(preset, scenarios, params, thresholds, dir.path())).map_err(|e| e.to_string())
}

/// Passes when every listed verdict passed; the detail shows their values.
fn verdicts(o: &Outcome, ids: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for id in ids {
        match o.verdict(id) {
            Some(v) => {
                ok &= v.passed;
                parts.push(format!("{id}={:.4e} ({} {:e})", v.value, v.threshold_key, v.threshold));
            }
            None => {
                ok = false;
                parts.push(format!("{id} missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn summary(o: &Outcome, key: &str) -> String {
    o.summary.get(key).map_or("?".into(), |v| v.to_string())
}

fn c1() -> Result<(bool, String), String> {
    let o = run("ex0-fatou", Some(2000), json!({"n_list": [2, 10, 100]}), &[("mean_tol", 1e-12), ("fatou_mismatch_max", 0.0)])?;
    Ok(verdicts(&o, &["mean-exact", "martingale-exact", "fatou-limit", "pointwise-at-half"]))
}

fn c2() -> Result<(bool, String), String> {
    let o = run("relation-2-12", None, json!({"trees": 100}), &[("martingale_tol", 1e-12)])?;
    Ok(verdicts(&o, &["mertens-random-trees", "mertens-optional-jump"]))
}

fn c3() -> Result<(bool, String), String> {
    let o = run(
        "integration-ibp",
        Some(1000),
        json!({"nodes": 64, "brute_max_nodes": 16}),
        &[("ibp_rel_tol", 1e-10), ("brute_mismatch_max", 0.0)],
    )?;
    Ok(verdicts(&o, &["ibp-residual", "discrete-integral"]))
}

fn c4() -> Result<(bool, String), String> {
    let o = run(
        "compensator-example",
        Some(20_000),
        json!({"eps": 0.1, "n_min": 100}),
        &[("exceedance_max", 0.05), ("left_limit_max", 0.05), ("jump_gap_min", 0.05)],
    )?;
    let (ok, d) = verdicts(&o, &["node-convergence", "left-limit-one-minus-a", "left-limit-x2-left", "left-limit-misses-jump"]);
    Ok((ok, format!("{d}; P(jump)={}", summary(&o, "p_jump"))))
}

fn c5() -> Result<(bool, String), String> {
    let o = run("relation-2-12", None, json!({}), &[("relation_tol", 1e-12)])?;
    let (ok, d) = verdicts(&o, &["relation"]);
    Ok((ok, format!("{d}; tree scenarios={}", summary(&o, "relation_tree_scenarios"))))
}

fn c6() -> Result<(bool, String), String> {
    let o = run(
        "left-limit-ti",
        Some(2000),
        json!({"zoo_paths": 10_000, "move_eps": 0.5, "move_delta": 0.1}),
        &[("move_exceed_max", 0.0)],
    )?;
    let (ok, d) = verdicts(&o, &["move-count-bound"]);
    Ok((ok, format!("{d}; C={} p99={} max={}", summary(&o, "move_bound"), summary(&o, "move_count_p99"), summary(&o, "move_count_max"))))
}

fn c7() -> Result<(bool, String), String> {
    let o = run(
        "counterexample-ex2",
        Some(1000),
        json!({"recursion": {"m_max": 5, "eps": 0.1}}),
        &[("p_tau_min", 0.9), ("p_levels_min", 0.9), ("stderr_mult", 3.0)],
    )?;
    Ok(verdicts(&o, &["tau-below-one", "levels-reached", "excursion-bound"]))
}

fn c8() -> Result<(bool, String), String> {
    let o = run("approximate-supermartingale", None, json!({"eps": 0.1}), &[("exceedance_max", 0.1), ("martingale_tol", 1e-12)])?;
    Ok(verdicts(
        &o,
        &[
            "bounded-martingale-exceedance",
            "bounded-martingale-martingale",
            "deterministic-decrease-exceedance",
            "deterministic-decrease-martingale",
            "optional-jump-exceedance",
            "optional-jump-martingale",
        ],
    ))
}

fn c9() -> Result<(bool, String), String> {
    let o = run(
        "komlos-extract",
        Some(2000),
        json!({"master_seeds": 100, "eps": 0.1}),
        &[("exceedance_max", 0.05), ("seed_pass_min", 0.95)],
    )?;
    let (ok, d) = verdicts(&o, &["seeds-passing"]);
    Ok((ok, format!("{d}; mean exceedance={}", summary(&o, "mean_exceedance"))))
}

/// Small configs so every preset runs twice in a few seconds.
fn reduced(preset: &str) -> (Option<usize>, Value) {
    match preset {
        "ex0-fatou" => (Some(500), json!({"n_list": [2, 10, 100]})),
        "compensator-example" | "limit-integral" => (Some(2000), json!({"n_list": [10, 100]})),
        "komlos-extract" => (Some(300), json!({"master_seeds": 4, "n_max": 256})),
        "integration-ibp" => (Some(50), json!({"brute_max_nodes": 6, "brute_cases": 5})),
        "counterexample-ex2" => (Some(40), json!({"recursion": {"m_max": 2, "n_max": 2000}})),
        "left-limit-ti" => (Some(1000), json!({"zoo_paths": 500, "gap_paths": 300})),
        "relation-2-12" => (None, json!({"trees": 10})),
        _ => (None, json!({})),
    }
}

fn c10() -> Result<(bool, String), String> {
    let mut differing = Vec::new();
    for p in catalog() {
        let (scen, params) = reduced(p.name);
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let cfg = resolve(p.name, scen, params.clone(), &[], dir.path());
            let m = run_experiment(&cfg).map_err(|e| e.to_string())?;
            if m.verdicts.iter().any(|v| !cfg.thresholds.contains_key(&v.threshold_key)) {
                return Err(format!("{} reports a verdict against an undeclared threshold", p.name));
            }
            let files: Vec<(String, Vec<u8>)> = m
                .files
                .iter()
                .filter(|f| f.ends_with(".csv"))
                .map(|f| std::fs::read(dir.path().join(f)).map(|b| (f.clone(), b)))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            outputs.push(files);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(p.name);
        }
    }
    let n = catalog().len();
    Ok((differing.is_empty(), format!("{} of {n} presets byte-identical; differing: {differing:?}", n - differing.len())))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<(bool, String), String>;
    let criteria: [(&str, Check); 10] = [
        ("1 jump-after-half example: exact means, Fatou and pointwise limits", c1),
        ("2 Mertens decomposition on random trees and the optional jump", c2),
        ("3 integration by parts and discrete integrals", c3),
        ("4 convergence at stopping times and left limits at the jump", c4),
        ("5 optional/predictable limit sandwich", c5),
        ("6 move-count bound over the supermartingale zoo", c6),
        ("7 adaptive stopping time and excursion bound", c7),
        ("8 bounded martingale approximation", c8),
        ("9 Komlos extraction over 100 master seeds", c9),
        ("10 determinism of CSV outputs", c10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !ok as usize;
        println!("[{}] criterion {name} ({:.1}s): {detail}", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
