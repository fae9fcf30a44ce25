//! Martingales that jump to `n` or `0` just after 1/2. Their means stay 1,
//! the pointwise limit is 1 on [0,1/2] and 0 after, and the càdlàg Fatou
//! limit drops already at 1/2.

use std::sync::Arc;

use ladlag_lab::constructions::ex0::{ex0_fatou_target, ex0_pointwise_limit, ex0_tree, jump_time};
use ladlag_lab::limits::fatou_regularize;
use ladlag_lab::tree::{check_martingale, TREE_TOL};
use ladlag_lab::TimeGrid;

pub fn run_example() -> anyhow::Result<()> {
    let n_list = [2, 10, 100];
    let extra: Vec<f64> = n_list.iter().map(|&n| jump_time(n)).collect();
    let grid = Arc::new(TimeGrid::dyadic(2)?.refine(&extra)?);
    let ex = ex0_tree(&n_list, grid.clone())?;
    println!("tree with {} scenarios on {:?}", ex.tree.n_scenarios(), grid.nodes());
    for (n, b) in n_list.iter().zip(&ex.bundles) {
        let means: Vec<f64> = (0..grid.len()).map(|k| b.mean_at(k)).collect();
        let ok = check_martingale(&ex.tree, b, TREE_TOL)?.passed;
        println!("n={n:<4} martingale {ok} means {means:?}");
    }
    let z = ex0_pointwise_limit(&ex.bundles[0])?;
    let fatou = fatou_regularize(&z, &grid.dyadic_nodes(2)?)?;
    let target = ex0_fatou_target(&z)?;
    println!("{:>8} {:>10} {:>8} {:>8}", "t", "pointwise", "fatou", "target");
    for k in 0..grid.len() {
        println!("{:>8.4} {:>10} {:>8} {:>8}", grid.time(k), z.path(0).value(k), fatou.path(0).value(k), target.path(0).value(k));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
