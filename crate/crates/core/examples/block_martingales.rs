//! Bounded martingales started at a stopping time and driven by Brownian
//! increments: they end at `−1` with probability `k/(k+1)` and at `k`
//! otherwise, within `2^-n` of their start.

use std::sync::Arc;

use ladlag_lab::constructions::blocks::{block_grid, doubling_depth, indicator_block_martingales};
use ladlag_lab::{GridStoppingTime, TimeGrid};

pub fn run_example() -> anyhow::Result<()> {
    let (n, k, scenarios) = (3, 7, 20_000);
    let grid = Arc::new(block_grid(&TimeGrid::dyadic(2)?, &[0.25], n, doubling_depth(k)?)?);
    let start = grid.node_index(0.25).unwrap();
    let rho = GridStoppingTime::constant(grid.clone(), scenarios, start)?;
    let b = indicator_block_martingales(&rho, n, k, grid.clone(), 9)?;
    println!("grid {:?}", grid.nodes());
    let last = grid.last();
    let top = b.paths().iter().filter(|p| p.value(last) == k as f64).count() as f64 / scenarios as f64;
    println!("P(end at {k}) = {top:.4} (exact {:.4})", 1.0 / (k as f64 + 1.0));
    println!("mean at each node {:?}", (0..grid.len()).map(|j| (b.mean_at(j) * 1e3).round() / 1e3).collect::<Vec<_>>());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
