//! A jump at an unannounced time with its compensator. The martingales
//! correcting the jump converge in probability to the optional limit at
//! stopping times, and their left limits to the predictable one.

use ladlag_lab::constructions::compensator::{compensator_example, HazardSpec};
use ladlag_lab::limits::{convergence_in_probability, left_limit_convergence_check};
use ladlag_lab::path::EvalSide;
use ladlag_lab::tree::left_limit_process;
use ladlag_lab::GridStoppingTime;

pub fn run_example() -> anyhow::Result<()> {
    let (m, n_list) = (3, [10, 100, 1000]);
    let ex = compensator_example(&HazardSpec::constant(m, 0.05, true), m, &n_list, 5000, 11)?;
    let sigma = ex.sigma_capped();
    let half = GridStoppingTime::at_time(ex.grid.clone(), 5000, 0.5)?;
    let taus = [("sigma".to_string(), sigma.clone()), ("half".to_string(), half)];
    let rep = convergence_in_probability(&n_list, &ex.m2, &ex.x2, &taus, &[0.1], EvalSide::At, EvalSide::At, 11)?;
    for c in &rep.cells {
        println!("n={:<5} tau={:<6} P(|M_tau - X_tau| > 0.1) = {:.4} +- {:.4}", c.n, c.tau_id, c.estimate, c.stderr);
    }
    let x0 = left_limit_process(&ex.x2)?;
    let left = left_limit_convergence_check(&n_list, &ex.m2, &x0, &sigma, 0.1, 0.05)?;
    println!("left limits at sigma: {:?} passed {}", left.estimates, left.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
