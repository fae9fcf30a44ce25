//! Làdlàg paths on a dyadic grid: values, one-sided limits, jumps, move and
//! up-crossing counts, and evaluation at stopping times.

use std::sync::Arc;

use ladlag_lab::path::{evaluate_at, hitting_time, EvalSide};
use ladlag_lab::{GridStoppingTime, LadlagPath, PathBundle, Provenance, TimeGrid};

pub fn run_example() -> anyhow::Result<()> {
    let grid = Arc::new(TimeGrid::dyadic(2)?);
    // node values at 0, 1/4, 1/2, 3/4, 1 and values on the open intervals
    let p = LadlagPath::new(grid.clone(), vec![1.0, 0.8, 2.0, 0.5, 0.4], vec![0.9, 0.7, 1.0, 0.45])?;
    println!("grid {:?}", grid.nodes());
    for k in 0..grid.len() {
        let (left, right) = p.jumps(k);
        println!(
            "t={:<5} X_t-={:<5} X_t={:<5} X_t+={:<5} left jump {left:+} right jump {right:+}",
            grid.time(k),
            p.left_limit(k),
            p.value(k),
            p.right_limit(k)
        );
    }
    println!("cadlag: {}", p.is_cadlag());
    println!("moves larger than 0.5: {}", p.eps_move_count(0.5)?);
    println!("up-crossings of [0.6, 1.5]: {}", p.upcrossings(0.6, 1.5)?);

    // a second path, and the first time each path drops to 0.5 or below
    let q = LadlagPath::from_fn(grid.clone(), |t| 1.0 - t / 2.0);
    let bundle = PathBundle::uniform(grid.clone(), vec![p, q], Provenance::new(0, "demo"))?;
    let tau = hitting_time(&bundle, |v| v <= 0.5);
    println!("hitting nodes {:?}", tau.nodes);
    let half = GridStoppingTime::at_time(grid, 2, 0.5)?;
    println!("X_1/2 {:?}, X_1/2- {:?}", evaluate_at(&bundle, &half, EvalSide::At)?, evaluate_at(&bundle, &half, EvalSide::Left)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
