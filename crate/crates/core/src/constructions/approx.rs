//! Bounded martingales approximating an optional strong supermartingale
//! `X = M − A` at grid stopping times.
//!
//! - The martingale part is truncated: `E[(M_1 ∧ 2^n) ∨ −2^n | ℱ]`.
//! - Every increment of `A` is cancelled by a block martingale that ends at
//!   `−d` with probability `1 − 2^-n` and at `(2^n − 1) d` otherwise.
//!   - Right jumps of `A` at `t_k` get a block right after `t_k`.
//!   - Left jumps at `t_{k+1}` of at least `left_jump_threshold` get an
//!     announcing block before `t_{k+1}`. Their size is known at `t_k`.
//!   - Smaller left jumps form the continuous part `A^c`. It is replaced by
//!     the staircase `Σ_i δ 1_{]]σ_i,1]]}`, with `σ_i` the first node where
//!     `A^c ≥ iδ`, and a block follows each `σ_i`.
//!
//! Blocks are collapsed to their exit law: one coin per block, revealed at
//! an extra node inside the base interval. The coins play the role of the
//! Brownian carrier, and the result is an exact martingale on the product
//! tree "base tree × coins". Only active blocks get a coin, so a scenario
//! with `b` blocks splits into `2^b` scenarios.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::path::{accurate_sum, LadlagPath, PathBundle};
use crate::timebase::GridStoppingTime;
use crate::tree::{mertens_decomposition, ScenarioTree, TREE_TOL};

const MAX_BLOCKS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproximationPlan {
    /// Approximation indices; index `n` uses truncation and block level `2^n`.
    pub n_list: Vec<u32>,
    /// Step `δ` of the staircase for the continuous part.
    pub continuous_step: f64,
    /// Left jumps at least this large are announced; smaller ones count as continuous.
    pub left_jump_threshold: f64,
    /// Position of the block node inside a base interval, as a fraction of its length.
    pub block_offset: f64,
}

impl Default for ApproximationPlan {
    fn default() -> Self {
        ApproximationPlan { n_list: vec![2, 4, 6, 8], continuous_step: 1.0 / 16.0, left_jump_threshold: 0.1, block_offset: 0.5 }
    }
}

impl ApproximationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n == 0 || n > 40) {
            return Err(LabError::InvalidArgument("approximation indices must lie in 1..=40".into()));
        }
        if !(self.continuous_step > 0.0) || !(self.left_jump_threshold > 0.0) {
            return Err(LabError::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.block_offset > 0.0 && self.block_offset < 1.0) {
            return Err(LabError::InvalidArgument("block offset must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// One member of the approximating sequence, on its own product tree.
#[derive(Clone, Debug)]
pub struct Approximation {
    pub n: u32,
    pub tree: ScenarioTree,
    /// `X` lifted to the refined grid.
    pub target: PathBundle,
    pub martingale: PathBundle,
    /// Base scenario of every product scenario.
    pub base_scenario: Vec<usize>,
    /// Refined node index of every base node.
    pub node_map: Vec<usize>,
    /// Largest number of blocks on one base scenario.
    pub max_blocks: usize,
}

impl Approximation {
    /// Carry a stopping time of the base tree over to the product tree.
    pub fn lift(&self, tau: &GridStoppingTime) -> Result<GridStoppingTime> {
        let nodes = self.base_scenario.iter().map(|&s| tau.nodes[s].map(|k| self.node_map[k])).collect();
        GridStoppingTime::new(self.tree.grid().clone(), nodes)
    }

    /// Exact `P(|M^n_τ − X_τ| > ε)` for a base-tree stopping time.
    pub fn exceedance(&self, tau: &GridStoppingTime, eps: f64) -> Result<f64> {
        let t = self.lift(tau)?;
        let m = crate::path::evaluate_at(&self.martingale, &t, crate::path::EvalSide::At)?;
        let x = crate::path::evaluate_at(&self.target, &t, crate::path::EvalSide::At)?;
        Ok(crate::limits::exceedance(&m, &x, self.tree.weights(), eps))
    }
}

/// Block sizes per base scenario and base interval.
fn block_sizes(a: &PathBundle, plan: &ApproximationPlan, cap: f64) -> Vec<Vec<f64>> {
    let kk = a.grid().last();
    a.paths()
        .iter()
        .map(|p| {
            let mut d = vec![0.0; kk];
            let mut cont = 0.0;
            let mut steps_done = 0u64;
            for k in 0..kk {
                let right = p.interval_values()[k] - p.value(k);
                if right > TREE_TOL {
                    d[k] += right.min(cap);
                }
                // the continuous part as it stands at node k decides σ_i ≤ t_k
                let reached = ((cont / plan.continuous_step) + 1e-9).floor() as u64;
                if reached > steps_done {
                    d[k] += (reached - steps_done) as f64 * plan.continuous_step;
                    steps_done = reached;
                }
                let left = p.value(k + 1) - p.interval_values()[k];
                if left >= plan.left_jump_threshold {
                    d[k] += left.min(cap);
                } else if left > TREE_TOL {
                    cont += left;
                }
            }
            d
        })
        .collect()
}

/// Run the pipeline for every index of the plan.
pub fn approximate_supermartingale(tree: &ScenarioTree, x: &PathBundle, plan: &ApproximationPlan) -> Result<Vec<Approximation>> {
    plan.validate()?;
    let dec = mertens_decomposition(tree, x, TREE_TOL)?;
    let base = tree.grid();
    let kk = base.last();
    let n_base = tree.n_scenarios();
    let terminal: Vec<f64> = dec.martingale.paths().iter().map(|p| p.value(kk)).collect();
    plan.n_list
        .iter()
        .map(|&n| {
            let cap = 2f64.powi(n as i32);
            let sizes = block_sizes(&dec.increasing, plan, cap);
            let used: Vec<usize> = (0..kk).filter(|&k| sizes.iter().any(|d| d[k] > 0.0)).collect();
            let extra: Vec<f64> =
                used.iter().map(|&k| base.time(k) + plan.block_offset * (base.time(k + 1) - base.time(k))).collect();
            let grid = Arc::new(base.refine(&extra)?);
            let node_map: Vec<usize> = base.nodes().iter().map(|&t| grid.node_index(t).unwrap()).collect();
            let block_node: Vec<Option<usize>> =
                (0..kk).map(|k| used.iter().position(|&u| u == k).map(|i| grid.node_index(extra[i]).unwrap())).collect();
            let active: Vec<Vec<usize>> = sizes.iter().map(|d| (0..kk).filter(|&k| d[k] > 0.0).collect()).collect();
            let max_blocks = active.iter().map(Vec::len).max().unwrap_or(0);
            if max_blocks > MAX_BLOCKS {
                return Err(LabError::InvalidArgument(format!(
                    "{max_blocks} blocks on one scenario (max {MAX_BLOCKS}); use a coarser staircase step"
                )));
            }

            // truncated martingale on the base tree: one value per base node
            let trunc: Vec<f64> = terminal.iter().map(|&m| m.clamp(-cap, cap)).collect();
            let mtr: Vec<Vec<f64>> = (0..=kk).map(|k| tree.conditional_expectation(&trunc, k)).collect::<Result<_>>()?;

            let up = 1.0 / cap;
            let top = cap - 1.0;
            let mut weights = Vec::new();
            let mut base_scenario = Vec::new();
            let mut coins = Vec::new();
            for s in 0..n_base {
                let b = active[s].len();
                for bits in 0..1usize << b {
                    let w = (0..b).fold(tree.weights()[s], |w, i| w * if bits >> i & 1 == 1 { up } else { 1.0 - up });
                    weights.push(w);
                    base_scenario.push(s);
                    coins.push(bits);
                }
            }
            let total = accurate_sum(&weights);
            let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

            let len = grid.len();
            let mut keys = vec![vec![0u64; weights.len()]; len];
            let mut target = Vec::with_capacity(weights.len());
            let mut mart = Vec::with_capacity(weights.len());
            for (j, (&s, &bits)) in base_scenario.iter().zip(&coins).enumerate() {
                for k in 0..=kk {
                    keys[node_map[k]][j] = tree.level(k).atom_of[s] as u64;
                }
                for (i, &k) in active[s].iter().enumerate() {
                    keys[block_node[k].unwrap()][j] = (bits >> i & 1) as u64 + 1;
                }
                // lift: refined node r lies in [t_k, t_{k+1})
                let p = x.path(s);
                let mut xn = vec![0.0; len];
                let mut xi = vec![0.0; len - 1];
                let mut mn = vec![0.0; len];
                let mut shift = 0.0;
                let mut k = 0;
                for r in 0..len {
                    if k < kk && r == node_map[k + 1] {
                        k += 1;
                    }
                    let on_base = r == node_map[k];
                    xn[r] = if on_base { p.value(k) } else { p.interval_values()[k] };
                    if r + 1 < len {
                        xi[r] = p.interval_values()[k];
                    }
                    if let Some(i) = active[s].iter().position(|&a| block_node[a] == Some(r)) {
                        let d = sizes[s][active[s][i]];
                        shift += if bits >> i & 1 == 1 { top * d } else { -d };
                    }
                    mn[r] = mtr[k][s] + shift;
                }
                target.push(LadlagPath::new(grid.clone(), xn, xi)?);
                mart.push(LadlagPath::cadlag(grid.clone(), mn)?);
            }
            let ptree = ScenarioTree::from_reveals(grid.clone(), weights, &keys)?;
            Ok(Approximation {
                n,
                target: ptree.bundle(target, "approx-target")?,
                martingale: ptree.bundle(mart, &format!("approx-n{n}"))?,
                tree: ptree,
                base_scenario,
                node_map,
                max_blocks,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::compensator::{compensator_tree, HazardSpec};
    use crate::tree::check_martingale;
    use crate::timebase::TimeGrid;

    fn deterministic_tree(m: u32) -> ScenarioTree {
        let g = Arc::new(TimeGrid::dyadic(m).unwrap());
        let keys = vec![vec![0u64]; g.len()];
        ScenarioTree::from_reveals(g, vec![1.0], &keys).unwrap()
    }

    #[test]
    fn bounded_martingale_is_reproduced() {
        let spec = HazardSpec::constant(2, 0.25, true);
        let ex = compensator_tree(&spec, 2, &[]).unwrap();
        let tree = ex.tree.unwrap();
        // 1_{[[σ,1]]} − A is a martingale bounded by 1
        let paths = ex
            .a
            .paths()
            .iter()
            .zip(&ex.sigma.nodes)
            .map(|(a, s)| {
                let v = (0..ex.grid.len()).map(|k| s.is_some_and(|s| k >= s) as u8 as f64 - a.value(k)).collect();
                LadlagPath::cadlag(ex.grid.clone(), v).unwrap()
            })
            .collect();
        let m = tree.bundle(paths, "m").unwrap();
        let out = approximate_supermartingale(&tree, &m, &ApproximationPlan::default()).unwrap();
        for ap in &out {
            assert_eq!(ap.max_blocks, 0);
            for (p, q) in ap.martingale.paths().iter().zip(m.paths()) {
                for (a, b) in p.chain().iter().zip(q.chain()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_decrease_uses_a_staircase() {
        let tree = deterministic_tree(4);
        let x = tree.bundle(vec![LadlagPath::from_fn(tree.grid().clone(), |t| 1.0 - t / 2.0)], "x").unwrap();
        let out = approximate_supermartingale(&tree, &x, &ApproximationPlan::default()).unwrap();
        let last = out.last().unwrap();
        assert_eq!(last.max_blocks, 7);
        assert!(check_martingale(&last.tree, &last.martingale, 1e-12).unwrap().passed);
        let one = GridStoppingTime::constant(tree.grid().clone(), 1, 16).unwrap();
        let e: Vec<f64> = out.iter().map(|ap| ap.exceedance(&one, 0.1).unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
        // 7 coins, each up with probability 2^-8
        let oracle = 1.0 - (1.0 - 1.0 / 256.0f64).powi(7);
        assert!((e[3] - oracle).abs() < 1e-12);
        for ap in &out {
            let bound = 2f64.powi(ap.n as i32) * 8.0;
            assert!(ap.martingale.paths().iter().all(|p| p.node_values().iter().all(|v| v.abs() <= bound)));
        }
    }

    #[test]
    fn jump_of_the_optional_supermartingale() {
        let spec = HazardSpec::constant(3, 0.1, true);
        let ex = compensator_tree(&spec, 3, &[]).unwrap();
        let tree = ex.tree.unwrap();
        let out = approximate_supermartingale(&tree, &ex.x2, &ApproximationPlan::default()).unwrap();
        let tau = ex.sigma.clone();
        let capped = GridStoppingTime::new(tree.grid().clone(), tau.nodes.iter().map(|v| Some(v.unwrap_or(8))).collect()).unwrap();
        for ap in &out {
            assert_eq!(ap.max_blocks, 1);
            assert!(check_martingale(&ap.tree, &ap.martingale, 1e-12).unwrap().passed);
            // at σ the optional value 2 − A_σ is matched exactly
            assert_eq!(ap.exceedance(&capped, 1e-9).unwrap(), 0.0);
        }
        let end = GridStoppingTime::constant(tree.grid().clone(), tree.n_scenarios(), 8).unwrap();
        let p_jump = 1.0 - 0.9f64.powi(7);
        for ap in &out {
            let want = p_jump * 2f64.powi(-(ap.n as i32));
            assert!((ap.exceedance(&end, 0.1).unwrap() - want).abs() < 1e-12);
        }
    }
}
