//! Martingales `M^n = 1 + (Y_n − 1) 1_{[[t_n, 1]]}` with `t_n = (1 + 1/n)/2`
//! and `P(Y_n = n) = 1/n`, otherwise `Y_n = 0`. They converge pointwise to
//! `1_{[0,1/2]}`, whose càdlàg regularization `1_{[0,1/2)}` is the Fatou limit.
//!
//! The jump sits on the node `t_n` itself (càdlàg). A jump just after `t_n`
//! would be a right jump, and a right jump of a tree martingale is zero: the
//! node value and the following interval value are known at the same level.
//!
//! All `Y_n` are driven by one uniform `U` through `Y_n = n 1{U ≤ 1/n}`, so
//! the sequence converges almost surely and not just in probability.

use std::sync::Arc;

use rand::Rng;

use crate::error::{LabError, Result};
use crate::path::{LadlagPath, PathBundle, Provenance};
use crate::rng;
use crate::timebase::TimeGrid;
use crate::tree::ScenarioTree;

/// Jump time `(1 + 1/n)/2`.
pub fn jump_time(n: usize) -> f64 {
    0.5 * (1.0 + 1.0 / n as f64)
}

/// `D_m` refined with the jump times of every `n` in `n_list`.
pub fn ex0_grid(m: u32, n_list: &[usize]) -> Result<TimeGrid> {
    let extra: Vec<f64> = n_list.iter().map(|&n| jump_time(n)).collect();
    TimeGrid::dyadic(m)?.refine(&extra)
}

fn jump_node(grid: &TimeGrid, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(LabError::InvalidArgument("n must be at least 1".into()));
    }
    let t = jump_time(n);
    grid.node_index(t)
        .ok_or_else(|| LabError::RefinementRequired(format!("jump time {t} for n = {n} is not a grid node")))
}

/// One trajectory: 1 before node `kn`, `y` from `kn` on.
fn trajectory(grid: &Arc<TimeGrid>, kn: usize, y: f64) -> Result<LadlagPath> {
    let node = (0..grid.len()).map(|k| if k < kn { 1.0 } else { y }).collect();
    LadlagPath::cadlag(grid.clone(), node)
}

/// Monte Carlo backend. The uniform driving `Y_n` depends on the scenario
/// only, so bundles for different `n` with the same seed are coupled.
pub fn ex0_bundle(n: usize, grid: Arc<TimeGrid>, n_scenarios: usize, seed: u64) -> Result<PathBundle> {
    let kn = jump_node(&grid, n)?;
    if n_scenarios == 0 {
        return Err(LabError::InvalidArgument("need at least one scenario".into()));
    }
    let ys = rng::par_scenarios(n_scenarios, seed, &[rng::tag("ex0")], |r, _| {
        let u: f64 = r.random();
        if u * n as f64 <= 1.0 {
            n as f64
        } else {
            0.0
        }
    });
    let paths = ys.into_iter().map(|y| trajectory(&grid, kn, y)).collect::<Result<_>>()?;
    PathBundle::uniform(grid, paths, Provenance::new(seed, format!("ex0-n{n}")))
}

/// Exact backend: one scenario per outcome of the independent `Y_n`,
/// `n ∈ n_list`, and one bundle per entry (kept in the given order).
///
/// The Monte Carlo coupling through a common `U` cannot be used here: in the
/// joint filtration `Y_m` for `m > n` is revealed before `t_n` and would make
/// `Y_n` predictable on `{Y_m = m}`.
#[derive(Clone, Debug)]
pub struct Ex0Tree {
    pub tree: ScenarioTree,
    pub n_list: Vec<usize>,
    pub bundles: Vec<PathBundle>,
}

pub fn ex0_tree(n_list: &[usize], grid: Arc<TimeGrid>) -> Result<Ex0Tree> {
    let nodes = n_list.iter().map(|&n| jump_node(&grid, n)).collect::<Result<Vec<_>>>()?;
    let mut sorted = n_list.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != n_list.len() {
        return Err(LabError::InvalidArgument("n_list entries must be distinct".into()));
    }
    // n = 1 has Y_1 = 1 surely and gets no coin
    let coins: Vec<usize> = (0..n_list.len()).filter(|&i| n_list[i] > 1).collect();
    if coins.len() > 16 {
        return Err(LabError::InvalidArgument("at most 16 random entries on the tree backend".into()));
    }
    let n_sc = 1usize << coins.len();
    let bit = |s: usize, i: usize| coins.iter().position(|&c| c == i).map(|j| s >> j & 1 == 1);
    let weights: Vec<f64> = (0..n_sc)
        .map(|s| {
            coins.iter().enumerate().fold(1.0, |w, (j, &i)| {
                let p = 1.0 / n_list[i] as f64;
                w * if s >> j & 1 == 1 { p } else { 1.0 - p }
            })
        })
        .collect();
    let mut keys = vec![vec![0u64; n_sc]; grid.len()];
    for (i, &k) in nodes.iter().enumerate() {
        for (s, key) in keys[k].iter_mut().enumerate() {
            *key = bit(s, i).unwrap_or(false) as u64;
        }
    }
    let tree = ScenarioTree::from_reveals(grid.clone(), weights, &keys)?;
    let bundles = n_list
        .iter()
        .zip(&nodes)
        .enumerate()
        .map(|(i, (&n, &k))| {
            let paths = (0..n_sc)
                .map(|s| {
                    let y = match bit(s, i) {
                        None => 1.0,
                        Some(true) => n as f64,
                        Some(false) => 0.0,
                    };
                    trajectory(&grid, k, y)
                })
                .collect::<Result<_>>()?;
            tree.bundle(paths, &format!("ex0-n{n}"))
        })
        .collect::<Result<_>>()?;
    Ok(Ex0Tree { tree, n_list: n_list.to_vec(), bundles })
}

fn indicator_bundle(like: &PathBundle, include_half: bool, tag: &str) -> Result<PathBundle> {
    let grid = like.grid().clone();
    let f = |t: f64| if t < 0.5 || (include_half && t == 0.5) { 1.0 } else { 0.0 };
    let node: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
    let interval: Vec<f64> = grid.nodes().windows(2).map(|w| if w[1] <= 0.5 { 1.0 } else { 0.0 }).collect();
    let p = LadlagPath::new(grid, node, interval)?;
    like.with_paths(vec![p; like.n_scenarios()], tag)
}

/// The pointwise limit `1_{[0,1/2]}`, aligned with `like`.
pub fn ex0_pointwise_limit(like: &PathBundle) -> Result<PathBundle> {
    indicator_bundle(like, true, "ex0-pointwise-limit")
}

/// The Fatou limit `1_{[0,1/2)}`, aligned with `like`.
pub fn ex0_fatou_target(like: &PathBundle) -> Result<PathBundle> {
    indicator_bundle(like, false, "ex0-fatou-target")
}
