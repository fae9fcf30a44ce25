//! Finite filtered probability spaces.
//!
//! A [`ScenarioTree`] carries one partition of the scenario set per grid
//! node; partitions refine as time moves forward. Processes on a tree are
//! [`PathBundle`]s whose weights are the scenario probabilities. The
//! double-arrow chain `V_0, I_0, V_1, ...` is filtered by
//! level `k` at `V_k` and at `I_k`, while the left point `(k, Left)` sees the
//! previous level `k-1` (trivial before time 0).

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::path::{accurate_sum, LadlagPath, PathBundle, Provenance};
use crate::timebase::{validate_stopping_time, GridStoppingTime, StoppingTimeCheck, TimeGrid};

/// Default tolerance for tree identities.
pub const TREE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// Atom id of each scenario.
    pub atom_of: Vec<usize>,
    /// Scenarios of each atom, in increasing order.
    pub atoms: Vec<Vec<usize>>,
    /// Probability of each atom.
    pub atom_weight: Vec<f64>,
}

impl Partition {
    fn from_atoms(atoms: Vec<Vec<usize>>, n: usize, weights: &[f64]) -> Result<Self> {
        let mut atom_of = vec![usize::MAX; n];
        for (a, members) in atoms.iter().enumerate() {
            if members.is_empty() {
                return Err(LabError::Tree(format!("atom {a} is empty")));
            }
            for &s in members {
                if s >= n || atom_of[s] != usize::MAX {
                    return Err(LabError::Tree(format!("scenario {s} missing or listed twice")));
                }
                atom_of[s] = a;
            }
        }
        if let Some(s) = atom_of.iter().position(|&a| a == usize::MAX) {
            return Err(LabError::Tree(format!("scenario {s} belongs to no atom")));
        }
        let atom_weight = atoms
            .iter()
            .map(|m| accurate_sum(&m.iter().map(|&s| weights[s]).collect::<Vec<_>>()))
            .collect();
        Ok(Partition { atom_of, atoms, atom_weight })
    }

    fn trivial(n: usize) -> Self {
        Partition { atom_of: vec![0; n], atoms: vec![(0..n).collect()], atom_weight: vec![1.0] }
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioTree {
    grid: Arc<TimeGrid>,
    weights: Vec<f64>,
    levels: Vec<Partition>,
    trivial: Partition,
}

/// JSON layout of a tree file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub grid: TimeGrid,
    pub weights: Vec<f64>,
    pub levels: Vec<Vec<Vec<usize>>>,
}

impl ScenarioTree {
    /// Build from explicit atom lists, one partition per grid node.
    pub fn from_levels(grid: Arc<TimeGrid>, weights: Vec<f64>, levels: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(LabError::Tree("a tree needs at least one scenario".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (accurate_sum(&weights) - 1.0).abs() > 1e-12 {
            return Err(LabError::Tree("weights must be non-negative and sum to 1".into()));
        }
        if levels.len() != grid.len() {
            return Err(LabError::Tree(format!("{} levels for a grid of {} nodes", levels.len(), grid.len())));
        }
        let parts = levels
            .into_iter()
            .map(|atoms| Partition::from_atoms(atoms, n, &weights))
            .collect::<Result<Vec<_>>>()?;
        for k in 1..parts.len() {
            for (a, members) in parts[k].atoms.iter().enumerate() {
                let parent = parts[k - 1].atom_of[members[0]];
                if members.iter().any(|&s| parts[k - 1].atom_of[s] != parent) {
                    return Err(LabError::Tree(format!("level {k} atom {a} does not refine level {}", k - 1)));
                }
            }
        }
        Ok(ScenarioTree { grid, weights, levels: parts, trivial: Partition::trivial(n) })
    }

    /// Build from reveal keys: `keys[k][s]` is the information revealed at
    /// node `k` on scenario `s`. Atoms at level `k` group scenarios sharing
    /// the whole key history, so refinement holds by construction.
    pub fn from_reveals(grid: Arc<TimeGrid>, weights: Vec<f64>, keys: &[Vec<u64>]) -> Result<Self> {
        let n = weights.len();
        if keys.len() != grid.len() || keys.iter().any(|k| k.len() != n) {
            return Err(LabError::Tree("need one key per scenario and grid node".into()));
        }
        let mut prev = vec![0usize; n];
        let mut levels = Vec::with_capacity(keys.len());
        for level_keys in keys {
            let mut index: HashMap<(usize, u64), usize> = HashMap::new();
            let mut atoms: Vec<Vec<usize>> = Vec::new();
            let mut cur = vec![0usize; n];
            for s in 0..n {
                let id = *index.entry((prev[s], level_keys[s])).or_insert_with(|| {
                    atoms.push(Vec::new());
                    atoms.len() - 1
                });
                atoms[id].push(s);
                cur[s] = id;
            }
            levels.push(atoms);
            prev = cur;
        }
        Self::from_levels(grid, weights, levels)
    }

    pub fn from_file(f: TreeFile) -> Result<Self> {
        Self::from_levels(Arc::new(f.grid), f.weights, f.levels)
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            grid: (*self.grid).clone(),
            weights: self.weights.clone(),
            levels: self.levels.iter().map(|p| p.atoms.clone()).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_scenarios(&self) -> usize {
        self.weights.len()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &Partition {
        &self.levels[k]
    }

    /// The partition modelling `ℱ_{t_k-}`: level `k-1`, trivial at `k = 0`.
    pub fn pre_level(&self, k: usize) -> &Partition {
        if k == 0 {
            &self.trivial
        } else {
            &self.levels[k - 1]
        }
    }

    /// Wrap paths into a bundle weighted by the tree probabilities.
    pub fn bundle(&self, paths: Vec<LadlagPath>, tag: &str) -> Result<PathBundle> {
        PathBundle::new(self.grid.clone(), paths, self.weights.clone(), Provenance::new(0, tag))
    }

    /// Bundle from per-scenario chains.
    pub fn bundle_from_chains(&self, chains: &[Vec<f64>], tag: &str) -> Result<PathBundle> {
        let paths = chains.iter().map(|c| LadlagPath::from_chain(self.grid.clone(), c)).collect::<Result<_>>()?;
        self.bundle(paths, tag)
    }

    pub fn check_bundle(&self, b: &PathBundle) -> Result<()> {
        if **b.grid() != *self.grid {
            return Err(LabError::GridMismatch("bundle and tree use different grids".into()));
        }
        if b.n_scenarios() != self.n_scenarios() {
            return Err(LabError::GridMismatch(format!(
                "bundle has {} scenarios, tree has {}",
                b.n_scenarios(),
                self.n_scenarios()
            )));
        }
        if b.weights().iter().zip(&self.weights).any(|(a, w)| (a - w).abs() > 1e-12) {
            return Err(LabError::GridMismatch("bundle weights differ from tree probabilities".into()));
        }
        Ok(())
    }

    fn expect_on(&self, part: &Partition, level: usize, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_scenarios() {
            return Err(LabError::InvalidArgument("one value per scenario required".into()));
        }
        let mut means = Vec::with_capacity(part.n_atoms());
        for (a, members) in part.atoms.iter().enumerate() {
            let w = part.atom_weight[a];
            if !(w > 0.0) {
                return Err(LabError::ZeroProbabilityAtom { level, atom: a });
            }
            let v0 = values[members[0]];
            if members.iter().all(|&s| values[s] == v0) {
                // measurable on the atom: exact, no rounding from reweighting
                means.push(v0);
                continue;
            }
            let s = accurate_sum(&members.iter().map(|&s| self.weights[s] * values[s]).collect::<Vec<_>>());
            means.push(s / w);
        }
        Ok(part.atom_of.iter().map(|&a| means[a]).collect())
    }

    /// `E[values | level k]`, constant on each atom.
    pub fn conditional_expectation(&self, values: &[f64], level: usize) -> Result<Vec<f64>> {
        self.expect_on(&self.levels[level], level, values)
    }

    /// `E[values | ℱ_{t_k-}]`.
    pub fn conditional_expectation_pre(&self, values: &[f64], k: usize) -> Result<Vec<f64>> {
        self.expect_on(self.pre_level(k), k.saturating_sub(1), values)
    }

    /// First atom of `part` on which `values` is not constant (within `tol`).
    fn non_measurable_atom(part: &Partition, values: &[f64], tol: f64) -> Option<usize> {
        part.atoms.iter().position(|m| {
            let v0 = values[m[0]];
            m.iter().any(|&s| (values[s] - v0).abs() > tol * (1.0 + v0.abs()))
        })
    }

    pub fn is_measurable(&self, values: &[f64], level: usize) -> bool {
        Self::non_measurable_atom(&self.levels[level], values, TREE_TOL).is_none()
    }

    /// Adaptedness: `V_k` and `I_k` measurable at level `k`.
    pub fn check_adapted(&self, x: &PathBundle) -> Result<()> {
        self.check_bundle(x)?;
        let k_last = self.grid.last();
        for k in 0..=k_last {
            let v: Vec<f64> = x.paths().iter().map(|p| p.value(k)).collect();
            if let Some(a) = Self::non_measurable_atom(&self.levels[k], &v, TREE_TOL) {
                return Err(LabError::Tree(format!("node value at node {k} not measurable on level-{k} atom {a}")));
            }
            if k < k_last {
                let i: Vec<f64> = x.paths().iter().map(|p| p.interval_values()[k]).collect();
                if let Some(a) = Self::non_measurable_atom(&self.levels[k], &i, TREE_TOL) {
                    return Err(LabError::Tree(format!(
                        "interval value after node {k} not measurable on level-{k} atom {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Predictability: `V_k` measurable at `ℱ_{t_k-}` and `I_k` at level `k`.
    pub fn check_predictable(&self, x: &PathBundle) -> Result<()> {
        self.check_bundle(x)?;
        let k_last = self.grid.last();
        for k in 0..=k_last {
            let v: Vec<f64> = x.paths().iter().map(|p| p.value(k)).collect();
            if let Some(a) = Self::non_measurable_atom(self.pre_level(k), &v, TREE_TOL) {
                return Err(LabError::NotPredictable(format!(
                    "node {k}: value splits atom {a} of the preceding level"
                )));
            }
            if k < k_last {
                let i: Vec<f64> = x.paths().iter().map(|p| p.interval_values()[k]).collect();
                if let Some(a) = Self::non_measurable_atom(&self.levels[k], &i, TREE_TOL) {
                    return Err(LabError::NotPredictable(format!("interval after node {k}: splits level-{k} atom {a}")));
                }
            }
        }
        Ok(())
    }
}

/// Which one-step inequality a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// node value against the following interval value (right jump)
    NodeToInterval,
    /// interval value against the next node value (left jump)
    IntervalToNode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub node: usize,
    pub step: Step,
    /// atom id within the conditioning level
    pub atom: usize,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    /// Smallest slack over every checked atom (≥ 0 means no violation).
    pub min_slack: f64,
    /// Largest absolute slack, useful for martingale checks.
    pub max_abs_slack: f64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    fn new() -> Self {
        CheckReport { passed: true, min_slack: f64::INFINITY, max_abs_slack: 0.0, violations: Vec::new() }
    }

    /// Record `slack` per atom of `part`; negative below `-tol` is a violation,
    /// and when `two_sided` any `|slack| > tol` is.
    fn record(&mut self, part: &Partition, slack: &[f64], node: usize, step: Step, tol: f64, two_sided: bool) {
        for (a, m) in part.atoms.iter().enumerate() {
            let s = m.iter().map(|&i| slack[i]).fold(f64::INFINITY, f64::min);
            let worst = m.iter().map(|&i| slack[i].abs()).fold(0.0, f64::max);
            self.min_slack = self.min_slack.min(s);
            self.max_abs_slack = self.max_abs_slack.max(worst);
            let bad = if two_sided { worst > tol } else { s < -tol };
            if bad {
                self.passed = false;
                self.violations.push(Violation { node, step, atom: a, slack: if two_sided { worst } else { s } });
            }
        }
    }
}

fn column(x: &PathBundle, f: impl Fn(&LadlagPath) -> f64) -> Vec<f64> {
    x.paths().iter().map(f).collect()
}

fn one_step_checks(tree: &ScenarioTree, x: &PathBundle, tol: f64, two_sided: bool) -> Result<CheckReport> {
    tree.check_adapted(x)?;
    let mut rep = CheckReport::new();
    for k in 0..tree.grid.last() {
        let v = column(x, |p| p.value(k));
        let i = column(x, |p| p.interval_values()[k]);
        let vn = column(x, |p| p.value(k + 1));
        let ei = tree.conditional_expectation(&i, k)?;
        let ev = tree.conditional_expectation(&vn, k)?;
        let s1: Vec<f64> = v.iter().zip(&ei).map(|(a, b)| a - b).collect();
        let s2: Vec<f64> = i.iter().zip(&ev).map(|(a, b)| a - b).collect();
        rep.record(tree.level(k), &s1, k, Step::NodeToInterval, tol, two_sided);
        rep.record(tree.level(k), &s2, k, Step::IntervalToNode, tol, two_sided);
    }
    if rep.min_slack == f64::INFINITY {
        rep.min_slack = 0.0;
    }
    Ok(rep)
}

/// One-step supermartingale inequalities along the chain; by backward
/// induction they give the inequality for every pair of grid stopping times.
pub fn check_optional_strong_supermartingale(tree: &ScenarioTree, x: &PathBundle, tol: f64) -> Result<CheckReport> {
    one_step_checks(tree, x, tol, false)
}

/// Exact martingale check along the chain (`|slack| ≤ tol` at every step).
pub fn check_martingale(tree: &ScenarioTree, x: &PathBundle, tol: f64) -> Result<CheckReport> {
    one_step_checks(tree, x, tol, true)
}

/// Predictable strong supermartingale check: `V_k ≥ E[I_k | ℱ_{t_k-}]` and
/// `I_k ≥ E[V_{k+1} | level k]`.
///
/// Node 0 is skipped in the first inequality: the left point at time 0 is
/// pinned to zero by convention, so it carries no information.
pub fn check_predictable_strong_supermartingale(tree: &ScenarioTree, x: &PathBundle, tol: f64) -> Result<CheckReport> {
    tree.check_predictable(x)?;
    let mut rep = CheckReport::new();
    for k in 0..tree.grid.last() {
        let i = column(x, |p| p.interval_values()[k]);
        if k > 0 {
            let v = column(x, |p| p.value(k));
            let ei = tree.conditional_expectation_pre(&i, k)?;
            let s: Vec<f64> = v.iter().zip(&ei).map(|(a, b)| a - b).collect();
            rep.record(tree.pre_level(k), &s, k, Step::NodeToInterval, tol, false);
        }
        let vn = column(x, |p| p.value(k + 1));
        let ev = tree.conditional_expectation(&vn, k)?;
        let s: Vec<f64> = i.iter().zip(&ev).map(|(a, b)| a - b).collect();
        rep.record(tree.level(k), &s, k, Step::IntervalToNode, tol, false);
    }
    if rep.min_slack == f64::INFINITY {
        rep.min_slack = 0.0;
    }
    Ok(rep)
}

/// `X = M − A` with `M` a chain martingale and `A` non-decreasing, predictable, `A_0 = 0`.
#[derive(Clone, Debug)]
pub struct Mertens {
    pub martingale: PathBundle,
    pub increasing: PathBundle,
}

/// Doob recursion along the chain: the increment of `A` into chain position
/// `j` is `E[c_{j-1} − c_j | level of j-1]`.
pub fn mertens_decomposition(tree: &ScenarioTree, x: &PathBundle, tol: f64) -> Result<Mertens> {
    let rep = check_optional_strong_supermartingale(tree, x, tol)?;
    if !rep.passed {
        let v = &rep.violations[0];
        return Err(LabError::NotSupermartingale(format!(
            "{} violations; first at node {} ({:?}) atom {} slack {:.3e}",
            rep.violations.len(),
            v.node,
            v.step,
            v.atom,
            v.slack
        )));
    }
    let n = tree.n_scenarios();
    let chains: Vec<Vec<f64>> = x.paths().iter().map(|p| p.chain()).collect();
    let len = chains[0].len();
    let mut a = vec![vec![0.0; len]; n];
    for j in 1..len {
        let level = (j - 1) / 2;
        let dec: Vec<f64> = chains.iter().map(|c| c[j - 1] - c[j]).collect();
        let da = tree.conditional_expectation(&dec, level)?;
        for s in 0..n {
            // clamp tiny negative rounding so that A stays non-decreasing
            let d = if da[s] < 0.0 && da[s] >= -tol { 0.0 } else { da[s] };
            a[s][j] = a[s][j - 1] + d;
        }
    }
    let m: Vec<Vec<f64>> = chains.iter().zip(&a).map(|(c, a)| c.iter().zip(a).map(|(x, y)| x + y).collect()).collect();
    Ok(Mertens {
        martingale: tree.bundle_from_chains(&m, "mertens-martingale")?,
        increasing: tree.bundle_from_chains(&a, "mertens-increasing")?,
    })
}

/// Whether `A` is non-decreasing along every chain (within `tol`).
pub fn is_non_decreasing(a: &PathBundle, tol: f64) -> bool {
    a.paths().iter().all(|p| p.chain().windows(2).all(|w| w[1] >= w[0] - tol))
}

/// Compensator of the jump time `σ`: `ΔA_k = E[1{σ = t_k} | ℱ_{t_k-}]`,
/// which equals the conditional hazard on `{σ ≥ t_k}` and vanishes after `σ`.
/// `A` jumps at nodes only (càdlàg, predictable).
pub fn compensator_of_jump_time(tree: &ScenarioTree, sigma: &GridStoppingTime) -> Result<PathBundle> {
    if let StoppingTimeCheck::Violation { level, atom } = validate_stopping_time(sigma, tree)? {
        return Err(LabError::Tree(format!("σ is not a stopping time: level {level} atom {atom} is split")));
    }
    let n = tree.n_scenarios();
    let mut node = vec![Vec::with_capacity(tree.grid.len()); n];
    let mut acc = vec![0.0; n];
    for k in 0..tree.grid.len() {
        let ind: Vec<f64> = sigma.nodes.iter().map(|&v| if v == Some(k) { 1.0 } else { 0.0 }).collect();
        let da = tree.conditional_expectation_pre(&ind, k)?;
        for s in 0..n {
            acc[s] += da[s];
            node[s].push(acc[s]);
        }
    }
    let paths = node.into_iter().map(|v| LadlagPath::cadlag(tree.grid.clone(), v)).collect::<Result<_>>()?;
    tree.bundle(paths, "compensator")
}

/// Slack report for `X1_{t-} ≥ X0_t ≥ E[X1_t | ℱ_{t-}]` at every node `k ≥ 1`.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub passed: bool,
    pub min_upper_slack: f64,
    pub min_lower_slack: f64,
    pub violations: Vec<Violation>,
}

pub fn check_relation_2_12(tree: &ScenarioTree, x1: &PathBundle, x0: &PathBundle, tol: f64) -> Result<RelationReport> {
    tree.check_adapted(x1)?;
    tree.check_predictable(x0)?;
    let mut upper = CheckReport::new();
    let mut lower = CheckReport::new();
    for k in 1..tree.grid.len() {
        let l1 = column(x1, |p| p.left_limit(k));
        let v0 = column(x0, |p| p.value(k));
        let v1 = column(x1, |p| p.value(k));
        let e1 = tree.conditional_expectation_pre(&v1, k)?;
        let su: Vec<f64> = l1.iter().zip(&v0).map(|(a, b)| a - b).collect();
        let sl: Vec<f64> = v0.iter().zip(&e1).map(|(a, b)| a - b).collect();
        upper.record(tree.pre_level(k), &su, k, Step::IntervalToNode, tol, false);
        lower.record(tree.pre_level(k), &sl, k, Step::IntervalToNode, tol, false);
    }
    let mut violations = upper.violations;
    violations.extend(lower.violations);
    Ok(RelationReport {
        passed: upper.passed && lower.passed,
        min_upper_slack: if upper.min_slack.is_finite() { upper.min_slack } else { 0.0 },
        min_lower_slack: if lower.min_slack.is_finite() { lower.min_slack } else { 0.0 },
        violations,
    })
}

/// Left-limit process `X_-` as a predictable bundle: node values are the
/// left limits, interval values are kept.
pub fn left_limit_process(x: &PathBundle) -> Result<PathBundle> {
    let paths = x
        .paths()
        .iter()
        .map(|p| {
            let node = (0..p.node_values().len()).map(|k| p.left_limit(k)).collect();
            LadlagPath::new(p.grid().clone(), node, p.interval_values().to_vec())
        })
        .collect::<Result<_>>()?;
    x.with_paths(paths, format!("{}-left", x.provenance.tag))
}
