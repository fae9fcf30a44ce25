//! A jump time `σ` with its compensator `A`, the continuous-looking
//! supermartingale `X1 = 1 − A`, the optional one `X2 = X1 + 1_{[[σ]]}` and
//! the martingale sequences
//!
//! - `M1n = 1 − A + Y1_n 1_{[[σ,1]]}`
//! - `M2n = 1 − A + 1_{[[σ,1]]} + (Y2_n − 1) 1_{[[σ+1/n,1]]}`
//!
//! with `P(Y_n = n) = 1/n`, `Y_n ∈ {0, n}`, independent of `σ`.
//!
//! Jumps live on the dyadic base grid `D_m`; the fine grid adds `t + 1/n` for
//! every base node `t`. Totally inaccessible times do not exist on a finite
//! tree; the surrogate is a jump revealed only at `σ` itself, drawn with a
//! small conditional hazard, so that the compensator moves by `h < ε` at each
//! base node and never announces the jump.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::path::{LadlagPath, PathBundle, Provenance};
use crate::rng;
use crate::timebase::{GridStoppingTime, TimeGrid};
use crate::tree::{compensator_of_jump_time, ScenarioTree};

/// Conditional jump probabilities at the base nodes `t_1, ..., t_K` of `D_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardSpec {
    pub hazards: Vec<f64>,
    /// `true`: the jump is revealed at `σ` (inaccessible surrogate).
    /// `false`: it is revealed one fine node earlier, so `σ` is predictable.
    pub independent: bool,
}

impl HazardSpec {
    pub fn constant(m: u32, h: f64, independent: bool) -> Self {
        HazardSpec { hazards: vec![h; 1 << m], independent }
    }

    pub fn validate(&self, m: u32) -> Result<()> {
        let k = 1usize << m;
        if self.hazards.len() != k {
            return Err(LabError::InvalidArgument(format!("{} hazards for {k} base nodes", self.hazards.len())));
        }
        for (j, &h) in self.hazards.iter().enumerate() {
            let ok = (0.0..1.0).contains(&h) || (j + 1 == k && h == 1.0);
            if !ok {
                return Err(LabError::InvalidArgument(format!("hazard {h} at base node {} outside [0,1)", j + 1)));
            }
        }
        Ok(())
    }

    /// `P(σ = t_j)` for `j = 1..K`, then `P(σ = ∞)`.
    pub fn law(&self) -> Vec<f64> {
        let mut surv = 1.0;
        let mut out = Vec::with_capacity(self.hazards.len() + 1);
        for &h in &self.hazards {
            out.push(surv * h);
            surv *= 1.0 - h;
        }
        out.push(surv);
        out
    }
}

/// `D_m` plus `t + 1/n` for every base node `t` and `n ∈ n_list`.
pub fn compensator_grid(m: u32, n_list: &[usize]) -> Result<TimeGrid> {
    let base = TimeGrid::dyadic(m)?;
    let mut extra = Vec::new();
    for &t in base.nodes() {
        for &n in n_list {
            if n == 0 {
                return Err(LabError::InvalidArgument("n must be at least 1".into()));
            }
            extra.push(t + 1.0 / n as f64);
        }
    }
    base.refine(&extra)
}

/// All bundles of the example on one grid. `m1[i]`, `m2[i]` belong to
/// `n_list[i]`. `sigma` is `None` on scenarios without a jump.
#[derive(Clone, Debug)]
pub struct CompensatorExample {
    pub grid: Arc<TimeGrid>,
    pub base_nodes: Vec<usize>,
    pub n_list: Vec<usize>,
    pub sigma: GridStoppingTime,
    pub a: PathBundle,
    pub x1: PathBundle,
    pub x2: PathBundle,
    pub m1: Vec<PathBundle>,
    pub m2: Vec<PathBundle>,
    /// Present for the exact backend.
    pub tree: Option<ScenarioTree>,
}

impl CompensatorExample {
    /// `σ ∧ 1`.
    pub fn sigma_capped(&self) -> GridStoppingTime {
        let last = self.grid.last();
        GridStoppingTime::new(self.grid.clone(), self.sigma.nodes.iter().map(|v| Some(v.unwrap_or(last))).collect())
            .expect("nodes are on the grid")
    }

    /// The predictable process `1 − A` (node values are those of `X1`,
    /// read as the left point of the double-arrow index).
    pub fn x0(&self) -> Result<PathBundle> {
        self.x1.with_paths(self.x1.paths().to_vec(), "compensator-x0")
    }
}

/// Per-scenario ingredients shared by both backends.
struct Draw {
    sigma: Option<usize>,
    y1: Vec<f64>,
    y2: Vec<f64>,
}

fn indicator_from(grid: &TimeGrid, k: Option<usize>) -> Vec<f64> {
    (0..grid.len()).map(|j| if k.is_some_and(|k| j >= k) { 1.0 } else { 0.0 }).collect()
}

fn later_node(grid: &TimeGrid, sigma: Option<usize>, n: usize) -> Option<usize> {
    sigma.and_then(|k| grid.node_index(grid.time(k) + 1.0 / n as f64))
}

#[allow(clippy::type_complexity)]
fn assemble(
    grid: &Arc<TimeGrid>,
    n_list: &[usize],
    draws: &[Draw],
    a_nodes: &[Vec<f64>],
) -> Result<(Vec<LadlagPath>, Vec<LadlagPath>, Vec<Vec<LadlagPath>>, Vec<Vec<LadlagPath>>)> {
    let mut x1 = Vec::with_capacity(draws.len());
    let mut x2 = Vec::with_capacity(draws.len());
    let mut m1 = vec![Vec::with_capacity(draws.len()); n_list.len()];
    let mut m2 = vec![Vec::with_capacity(draws.len()); n_list.len()];
    for (d, a) in draws.iter().zip(a_nodes) {
        let base: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
        let jump = indicator_from(grid, d.sigma);
        x1.push(LadlagPath::cadlag(grid.clone(), base.clone())?);
        let mut node = base.clone();
        if let Some(k) = d.sigma {
            node[k] += 1.0;
        }
        x2.push(LadlagPath::new(grid.clone(), node, base[..base.len() - 1].to_vec())?);
        for (i, &n) in n_list.iter().enumerate() {
            let v1: Vec<f64> = base.iter().zip(&jump).map(|(b, j)| b + d.y1[i] * j).collect();
            m1[i].push(LadlagPath::cadlag(grid.clone(), v1)?);
            let late = indicator_from(grid, later_node(grid, d.sigma, n));
            let v2: Vec<f64> =
                (0..grid.len()).map(|k| base[k] + jump[k] + (d.y2[i] - 1.0) * late[k]).collect();
            m2[i].push(LadlagPath::cadlag(grid.clone(), v2)?);
        }
    }
    Ok((x1, x2, m1, m2))
}

fn base_nodes(grid: &TimeGrid, m: u32) -> Result<Vec<usize>> {
    Ok(grid.dyadic_nodes(m)?[1..].to_vec())
}

/// Exact backend: scenarios are `σ`-outcomes times the coins `Y1_n`, `Y2_n`.
/// `Y1_n` is revealed at `σ`, `Y2_n` at `σ + 1/n`. With an empty `n_list`
/// this is the bare `σ` tree.
pub fn compensator_tree(spec: &HazardSpec, m: u32, n_list: &[usize]) -> Result<CompensatorExample> {
    spec.validate(m)?;
    if n_list.len() > 6 {
        return Err(LabError::InvalidArgument("at most 6 entries of n_list on the tree backend".into()));
    }
    let grid = Arc::new(compensator_grid(m, n_list)?);
    let base = base_nodes(&grid, m)?;
    let law = spec.law();
    let l = n_list.len();
    let mut weights = Vec::new();
    let mut draws = Vec::new();
    for (o, &p_sigma) in law.iter().enumerate() {
        if p_sigma == 0.0 {
            continue;
        }
        let sigma = base.get(o).copied();
        for bits in 0..1usize << (2 * l) {
            let mut w = p_sigma;
            let mut y1 = vec![0.0; l];
            let mut y2 = vec![0.0; l];
            for (i, &n) in n_list.iter().enumerate() {
                let p = 1.0 / n as f64;
                let b1 = bits >> i & 1 == 1;
                let b2 = bits >> (l + i) & 1 == 1;
                for (b, y) in [(b1, &mut y1[i]), (b2, &mut y2[i])] {
                    if n == 1 {
                        // Y_1 = 1 surely; keep a single branch
                        if b {
                            w = 0.0;
                        }
                        *y = 1.0;
                    } else {
                        w *= if b { p } else { 1.0 - p };
                        *y = if b { n as f64 } else { 0.0 };
                    }
                }
            }
            if w > 0.0 {
                weights.push(w);
                draws.push((Draw { sigma, y1, y2 }, bits));
            }
        }
    }
    let total: f64 = crate::path::accurate_sum(&weights);
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // reveal keys: bit 0 the jump flag, then Y1 bits at σ, Y2_n bit at σ + 1/n
    let mut keys = vec![vec![0u64; draws.len()]; grid.len()];
    for (s, (d, bits)) in draws.iter().enumerate() {
        let Some(k) = d.sigma else { continue };
        let flag_node = if spec.independent { k } else { k - 1 };
        keys[flag_node][s] |= 1;
        keys[k][s] |= ((*bits as u64) & ((1 << l) - 1)) << 1;
        for (i, &n) in n_list.iter().enumerate() {
            if let Some(kk) = later_node(&grid, Some(k), n) {
                keys[kk][s] |= ((*bits as u64 >> (l + i)) & 1) << (1 + l + i);
            }
        }
    }
    let tree = ScenarioTree::from_reveals(grid.clone(), weights, &keys)?;
    let draws: Vec<Draw> = draws.into_iter().map(|(d, _)| d).collect();
    let sigma = GridStoppingTime::new(grid.clone(), draws.iter().map(|d| d.sigma).collect())?;
    let a = compensator_of_jump_time(&tree, &sigma)?;
    let a_nodes: Vec<Vec<f64>> = a.paths().iter().map(|p| p.node_values().to_vec()).collect();
    let (x1, x2, m1, m2) = assemble(&grid, n_list, &draws, &a_nodes)?;
    let bundle = |paths, tag: String| tree.bundle(paths, &tag);
    Ok(CompensatorExample {
        x1: bundle(x1, "compensator-x1".into())?,
        x2: bundle(x2, "compensator-x2".into())?,
        m1: m1.into_iter().zip(n_list).map(|(p, n)| bundle(p, format!("compensator-m1-n{n}"))).collect::<Result<_>>()?,
        m2: m2.into_iter().zip(n_list).map(|(p, n)| bundle(p, format!("compensator-m2-n{n}"))).collect::<Result<_>>()?,
        grid,
        base_nodes: base,
        n_list: n_list.to_vec(),
        sigma,
        a,
        tree: Some(tree),
    })
}

/// Monte Carlo backend. `σ` is drawn against the hazards, the coins
/// independently for every `n`. The compensator is the running hazard sum up
/// to `σ` when the jump is unannounced and `1_{[[σ,1]]}` when it is announced.
pub fn compensator_example(
    spec: &HazardSpec,
    m: u32,
    n_list: &[usize],
    n_scenarios: usize,
    seed: u64,
) -> Result<CompensatorExample> {
    spec.validate(m)?;
    if n_scenarios == 0 {
        return Err(LabError::InvalidArgument("need at least one scenario".into()));
    }
    let grid = Arc::new(compensator_grid(m, n_list)?);
    let base = base_nodes(&grid, m)?;
    let draws = rng::par_scenarios(n_scenarios, seed, &[rng::tag("compensator")], |r, _| {
        let sigma = spec.hazards.iter().position(|&h| r.random::<f64>() < h).map(|j| base[j]);
        let mut coin = |n: usize| if r.random::<f64>() * n as f64 <= 1.0 { n as f64 } else { 0.0 };
        let y1 = n_list.iter().map(|&n| coin(n)).collect();
        let y2 = n_list.iter().map(|&n| coin(n)).collect();
        Draw { sigma, y1, y2 }
    });
    let a_nodes: Vec<Vec<f64>> = draws
        .iter()
        .map(|d| {
            if spec.independent {
                let mut acc = 0.0;
                let mut j = 0;
                (0..grid.len())
                    .map(|k| {
                        if j < base.len() && base[j] == k && d.sigma.is_none_or(|s| k <= s) {
                            acc += spec.hazards[j];
                        }
                        if j < base.len() && base[j] == k {
                            j += 1;
                        }
                        acc
                    })
                    .collect()
            } else {
                indicator_from(&grid, d.sigma)
            }
        })
        .collect();
    let (x1, x2, m1, m2) = assemble(&grid, n_list, &draws, &a_nodes)?;
    let mk = |paths: Vec<LadlagPath>, tag: String| PathBundle::uniform(grid.clone(), paths, Provenance::new(seed, tag));
    let a = a_nodes.into_iter().map(|v| LadlagPath::cadlag(grid.clone(), v)).collect::<Result<Vec<_>>>()?;
    Ok(CompensatorExample {
        a: mk(a, "compensator".into())?,
        x1: mk(x1, "compensator-x1".into())?,
        x2: mk(x2, "compensator-x2".into())?,
        m1: m1.into_iter().zip(n_list).map(|(p, n)| mk(p, format!("compensator-m1-n{n}"))).collect::<Result<_>>()?,
        m2: m2.into_iter().zip(n_list).map(|(p, n)| mk(p, format!("compensator-m2-n{n}"))).collect::<Result<_>>()?,
        sigma: GridStoppingTime::new(grid.clone(), draws.iter().map(|d| d.sigma).collect())?,
        grid,
        base_nodes: base,
        n_list: n_list.to_vec(),
        tree: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{check_martingale, check_optional_strong_supermartingale, mertens_decomposition, TREE_TOL};

    #[test]
    fn hazard_spec_validation_and_law() {
        let h = HazardSpec::constant(2, 0.25, true);
        assert!(h.validate(2).is_ok());
        assert!(h.validate(3).is_err());
        let law = h.law();
        assert_eq!(law, vec![0.25, 0.1875, 0.140625, 0.10546875, 0.31640625]);
        let mut bad = h.clone();
        bad.hazards[0] = 1.0;
        assert!(bad.validate(2).is_err());
        bad.hazards = vec![0.5, 0.5, 0.5, 1.0];
        assert!(bad.validate(2).is_ok());
    }

    #[test]
    fn tree_backend_martingales_and_limits() {
        let spec = HazardSpec::constant(2, 0.2, true);
        let ex = compensator_tree(&spec, 2, &[8, 16]).unwrap();
        let tree = ex.tree.as_ref().unwrap();
        for b in ex.m1.iter().chain(&ex.m2) {
            assert!(check_martingale(tree, b, TREE_TOL).unwrap().passed, "{}", b.provenance.tag);
        }
        // A is the hazard sum up to σ
        for s in 0..tree.n_scenarios() {
            for (j, &k) in ex.base_nodes.iter().enumerate() {
                let alive = ex.base_nodes[..=j].iter().filter(|&&b| ex.sigma.nodes[s].is_none_or(|sg| b <= sg)).count();
                assert!((ex.a.path(s).value(k) - 0.2 * alive as f64).abs() < 1e-12);
            }
        }
        // X2 shares left and right limits with X1
        for (p1, p2) in ex.x1.paths().iter().zip(ex.x2.paths()) {
            for k in 0..ex.grid.len() {
                assert_eq!(p1.left_limit(k), p2.left_limit(k));
            }
            // the right limit at t = 1 is the terminal value by convention
            for k in 0..ex.grid.last() {
                assert_eq!(p1.right_limit(k), p2.right_limit(k));
            }
        }
        assert!(check_optional_strong_supermartingale(tree, &ex.x2, TREE_TOL).unwrap().passed);
    }

    #[test]
    fn mertens_parts_of_x2() {
        let spec = HazardSpec::constant(2, 0.3, true);
        let ex = compensator_tree(&spec, 2, &[]).unwrap();
        let tree = ex.tree.as_ref().unwrap();
        let d = mertens_decomposition(tree, &ex.x2, TREE_TOL).unwrap();
        for (s, p) in d.increasing.paths().iter().enumerate() {
            // A2 = 1 strictly after σ
            for k in 0..ex.grid.len() {
                let after = ex.sigma.nodes[s].is_some_and(|sg| k > sg);
                assert!((p.value(k) - if after { 1.0 } else { 0.0 }).abs() < 1e-12);
                let after_i = ex.sigma.nodes[s].is_some_and(|sg| k >= sg);
                if k < ex.grid.last() {
                    assert!((p.interval_values()[k] - if after_i { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
        // X1 = 1 − A has martingale part 1
        let d1 = mertens_decomposition(tree, &ex.x1, TREE_TOL).unwrap();
        assert!(d1.martingale.paths().iter().all(|p| p.chain().iter().all(|&v| (v - 1.0).abs() < 1e-12)));
    }

    #[test]
    fn announced_jump_has_unit_compensator_jump() {
        let spec = HazardSpec::constant(2, 0.3, false);
        let ex = compensator_tree(&spec, 2, &[8]).unwrap();
        for (s, p) in ex.a.paths().iter().enumerate() {
            if let Some(k) = ex.sigma.nodes[s] {
                assert_eq!(p.value(k) - p.left_limit(k), 1.0);
            }
        }
        let tree = ex.tree.as_ref().unwrap();
        assert!(check_martingale(tree, &ex.m2[0], TREE_TOL).unwrap().passed);
    }

    #[test]
    fn monte_carlo_matches_tree_law() {
        let spec = HazardSpec::constant(2, 0.2, true);
        let n = 40_000;
        let ex = compensator_example(&spec, 2, &[10], n, 1).unwrap();
        let jumped = ex.sigma.nodes.iter().filter(|v| v.is_some()).count() as f64 / n as f64;
        let p = 1.0 - 0.8f64.powi(4);
        assert!((jumped - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        // E[M^{2,n}_1] = 1 within CLT tolerance (sd of Y_10 is 3)
        let last = ex.grid.last();
        assert!((ex.m2[0].mean_at(last) - 1.0).abs() < 4.0 * 3.2 / (n as f64).sqrt());
        let tree = compensator_tree(&spec, 2, &[10]).unwrap();
        assert_eq!(ex.grid, tree.grid);
        // same A along the paths up to the law of σ
        for (s, d) in ex.sigma.nodes.iter().enumerate().take(50) {
            let t = tree.sigma.nodes.iter().position(|v| v == d).unwrap();
            for (x, y) in ex.a.path(s).node_values().iter().zip(tree.a.path(t).node_values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
