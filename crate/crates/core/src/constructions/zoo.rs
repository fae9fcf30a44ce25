//! Random test material: small tree supermartingales, a mixed population of
//! non-negative supermartingale paths, and a sequence whose left limits fail
//! to converge at a deterministic time.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::path::{LadlagPath, PathBundle, Provenance};
use crate::rng;
use crate::timebase::{GridStoppingTime, TimeGrid};
use crate::tree::ScenarioTree;

/// Most scenarios a random tree may have.
pub const MAX_TREE_SCENARIOS: usize = 64;

/// Random tree with `levels` equally spaced nodes on `[0, 1]` (2 to 6), every
/// atom splitting into 1 to 3 children, and at most 64 scenarios.
pub fn random_tree(levels: usize, rng: &mut ChaCha8Rng) -> Result<ScenarioTree> {
    if !(2..=6).contains(&levels) {
        return Err(LabError::InvalidArgument(format!("random trees have 2 to 6 levels, got {levels}")));
    }
    let times: Vec<f64> = (0..levels).map(|k| k as f64 / (levels - 1) as f64).collect();
    let grid = Arc::new(TimeGrid::from_times(&times)?);
    // each leaf: (branch keys per level, probability)
    let mut leaves: Vec<(Vec<u64>, f64)> = vec![(vec![0], 1.0)];
    for _ in 1..levels {
        let mut next = Vec::new();
        let mut budget = MAX_TREE_SCENARIOS - leaves.len();
        for (keys, p) in &leaves {
            let b = rng.random_range(1..=3usize).min(1 + budget);
            budget -= b - 1;
            let raw: Vec<f64> = (0..b).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            for (c, r) in raw.iter().enumerate() {
                let mut k = keys.clone();
                k.push(c as u64);
                next.push((k, p * r / total));
            }
        }
        leaves = next;
    }
    let total: f64 = leaves.iter().map(|l| l.1).sum();
    let weights: Vec<f64> = leaves.iter().map(|l| l.1 / total).collect();
    let keys: Vec<Vec<u64>> = (0..levels).map(|k| leaves.iter().map(|l| l.0[k]).collect()).collect();
    ScenarioTree::from_reveals(grid, weights, &keys)
}

/// Optional strong supermartingale on `tree`, built backwards along the
/// chain: each entry is the conditional expectation of the next one plus a
/// random non-negative slack (zero on roughly 40% of the atoms).
pub fn random_supermartingale(tree: &ScenarioTree, rng: &mut ChaCha8Rng) -> Result<PathBundle> {
    let n = tree.n_scenarios();
    let len = 2 * tree.grid().len() - 1;
    let mut chains = vec![vec![0.0; len]; n];
    let last = tree.grid().last();
    let top = tree.level(last);
    let term: Vec<f64> =
        (0..top.n_atoms()).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) }).collect();
    for (s, c) in chains.iter_mut().enumerate() {
        c[len - 1] = term[top.atom_of[s]];
    }
    for j in (0..len - 1).rev() {
        let level = j / 2;
        let next: Vec<f64> = chains.iter().map(|c| c[j + 1]).collect();
        let ce = tree.conditional_expectation(&next, level)?;
        let part = tree.level(level);
        let slack: Vec<f64> =
            (0..part.n_atoms()).map(|_| if rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.0..0.5) }).collect();
        for (s, c) in chains.iter_mut().enumerate() {
            c[j] = ce[s] + slack[part.atom_of[s]];
        }
    }
    tree.bundle_from_chains(&chains, "random-supermartingale")
}

/// `count` random `(tree, supermartingale)` pairs with 2 to 6 levels.
pub fn random_tree_supermartingales(count: usize, seed: u64) -> Result<Vec<(ScenarioTree, PathBundle)>> {
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, &[rng::tag("random-tree"), i as u64]);
            let levels = r.random_range(2..=6usize);
            let tree = random_tree(levels, &mut r)?;
            let x = random_supermartingale(&tree, &mut r)?;
            Ok((tree, x))
        })
        .collect()
}

/// One step factor with mean at most 1 for the given family.
fn family_step(family: usize, x: f64, r: &mut ChaCha8Rng, v: f64, d: f64) -> f64 {
    let next = match family {
        // multiplicative ±v
        0 => x * if r.random_bool(0.5) { 1.0 + v } else { 1.0 - v },
        // rare double or nothing
        1 => {
            if r.random_bool(0.1) {
                if r.random_bool(0.5) {
                    2.0 * x
                } else {
                    0.0
                }
            } else {
                x
            }
        }
        // rare large jump: times m w.p. 1/m, else 0
        2 => {
            if r.random_bool(0.05) {
                let m = r.random_range(2..=10u32) as f64;
                if r.random_bool(1.0 / m) {
                    m * x
                } else {
                    0.0
                }
            } else {
                x
            }
        }
        // additive ±v, two-point step to 0 near the floor
        _ => {
            if x >= v {
                x + if r.random_bool(0.5) { v } else { -v }
            } else if r.random_bool(x / (x + v)) {
                x + v
            } else {
                0.0
            }
        }
    };
    next * (1.0 - d)
}

/// `n_paths` non-negative supermartingale paths started at 1 on `D_level`,
/// cycling through four families (multiplicative, double or nothing, rare
/// large jumps, additive). With `cadlag = false` node and interval values
/// move separately, giving làdlàg paths.
pub fn supermartingale_zoo(n_paths: usize, level: u32, cadlag: bool, seed: u64) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(LabError::InvalidArgument("need at least one path".into()));
    }
    let grid = Arc::new(TimeGrid::dyadic(level)?);
    let len = if cadlag { grid.len() } else { 2 * grid.len() - 1 };
    let values = rng::par_scenarios(n_paths, seed, &[rng::tag("zoo"), cadlag as u64], |r, s| {
        let family = s % 4;
        let v = r.random_range(0.05..0.95);
        let d = r.random_range(0.0..0.02);
        let mut c = vec![1.0; len];
        for j in 1..len {
            c[j] = family_step(family, c[j - 1], r, v, d);
        }
        c
    });
    let paths = values
        .into_iter()
        .map(|c| if cadlag { LadlagPath::cadlag(grid.clone(), c) } else { LadlagPath::from_chain(grid.clone(), &c) })
        .collect::<Result<_>>()?;
    PathBundle::uniform(grid, paths, Provenance::new(seed, if cadlag { "zoo-cadlag" } else { "zoo-ladlag" }))
}

/// Stopping time uniform on the nodes `1..=last`, independent of the paths.
pub fn independent_time(grid: Arc<TimeGrid>, n_scenarios: usize, seed: u64) -> Result<GridStoppingTime> {
    let last = grid.last();
    let nodes = rng::par_scenarios(n_scenarios, seed, &[rng::tag("independent-time")], |r, _| {
        Some(r.random_range(1..=last))
    });
    GridStoppingTime::new(grid, nodes)
}

/// `X^n = 1 + (Y_n − 1) 1_{[1/2 − 1/n, 1]}` with independent `Y_n = n` w.p.
/// `1/n`, else 0. Every `X^n` is a martingale and `X^n_t → 1_{[0,1/2)}(t)` in
/// probability, but `X^n_{1/2−} = Y_n → 0` while the limit has left limit 1
/// at `1/2`. Each `1/2 − 1/n` must be a grid node.
pub fn broken_left_limit_bundles(ns: &[usize], grid: Arc<TimeGrid>, n_scenarios: usize, seed: u64) -> Result<Vec<PathBundle>> {
    ns.iter()
        .map(|&n| {
            if n < 3 {
                return Err(LabError::InvalidArgument(format!("n = {n} must be at least 3")));
            }
            let t = 0.5 - 1.0 / n as f64;
            let kn = grid
                .node_index(t)
                .ok_or_else(|| LabError::RefinementRequired(format!("jump time {t} for n = {n} is not a grid node")))?;
            let ys = rng::par_scenarios(n_scenarios, seed, &[rng::tag("broken-left-limit"), n as u64], |r, _| {
                if r.random_bool(1.0 / n as f64) {
                    n as f64
                } else {
                    0.0
                }
            });
            let paths = ys
                .into_iter()
                .map(|y| LadlagPath::cadlag(grid.clone(), (0..grid.len()).map(|k| if k < kn { 1.0 } else { y }).collect()))
                .collect::<Result<_>>()?;
            PathBundle::uniform(grid.clone(), paths, Provenance::new(seed, format!("broken-left-limit-n{n}")))
        })
        .collect()
}

/// The limit `1_{[0,1/2)}` of the broken sequence, aligned with `like`.
pub fn broken_left_limit_target(like: &PathBundle) -> Result<PathBundle> {
    let grid = like.grid().clone();
    let p = LadlagPath::from_fn(grid, |t| if t < 0.5 { 1.0 } else { 0.0 });
    like.with_paths(vec![p; like.n_scenarios()], "broken-left-limit-target")
}
