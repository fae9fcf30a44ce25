//! Exact calculus on a finite filtration: conditional expectations, the
//! martingale check and the Mertens decomposition of a random tree
//! supermartingale.

use ladlag_lab::constructions::zoo::random_tree_supermartingales;
use ladlag_lab::tree::{
    check_martingale, check_optional_strong_supermartingale, is_non_decreasing, mertens_decomposition, TREE_TOL,
};

pub fn run_example() -> anyhow::Result<()> {
    let (tree, x) = random_tree_supermartingales(1, 7)?.remove(0);
    println!("{} nodes, {} scenarios", tree.grid().len(), tree.n_scenarios());
    for k in 0..tree.grid().len() {
        println!("  level {k}: {} atoms", tree.level(k).n_atoms());
    }
    let rep = check_optional_strong_supermartingale(&tree, &x, TREE_TOL)?;
    println!("supermartingale check passed: {} (min slack {:.3e})", rep.passed, rep.min_slack);

    let d = mertens_decomposition(&tree, &x, TREE_TOL)?;
    let m = check_martingale(&tree, &d.martingale, TREE_TOL)?;
    println!("martingale part exact: {} (max slack {:.1e})", m.passed, m.max_abs_slack);
    println!("increasing part non-decreasing: {}", is_non_decreasing(&d.increasing, 0.0));
    println!("increasing part predictable: {}", tree.check_predictable(&d.increasing).is_ok());
    println!("scenario 0 chain X: {:?}", x.path(0).chain());
    println!("scenario 0 chain A: {:?}", d.increasing.path(0).chain());

    // conditional expectation of the terminal value given time 0
    let last = tree.grid().last();
    let terminal: Vec<f64> = x.paths().iter().map(|p| p.value(last)).collect();
    println!("E[X_1] = {:.6}, X_0 = {:.6}", tree.conditional_expectation(&terminal, 0)?[0], x.path(0).value(0));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
