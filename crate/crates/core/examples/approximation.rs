//! Bounded martingales approximating a supermartingale with an optional
//! jump, with the exact probability of a deviation at a few stopping times.

use ladlag_lab::constructions::approx::{approximate_supermartingale, ApproximationPlan};
use ladlag_lab::constructions::compensator::{compensator_tree, HazardSpec};
use ladlag_lab::GridStoppingTime;

pub fn run_example() -> anyhow::Result<()> {
    let m = 2;
    let ex = compensator_tree(&HazardSpec::constant(m, 0.1, true), m, &[])?;
    let tree = ex.tree.clone().unwrap();
    let plan = ApproximationPlan::default();
    for ap in approximate_supermartingale(&tree, &ex.x2, &plan)? {
        let mut line = format!("n={} scenarios={:<6} blocks<={:<4}", ap.n, ap.tree.n_scenarios(), ap.max_blocks);
        for t in [0.25, 0.5, 1.0] {
            let tau = GridStoppingTime::at_time(tree.grid().clone(), tree.n_scenarios(), t)?;
            line += &format!(" P(dev at {t}) = {:.4}", ap.exceedance(&tau, 0.1)?);
        }
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
