//! Làdlàg trajectories on a grid and Monte Carlo bundles of them.
//!
//! A path stores node values `V_k` and open-interval values `I_k`, so left
//! limits, right limits and both jump kinds are exact. The chain
//! `V_0, I_0, V_1, I_1, ..., V_K` is the path read along the double-arrow
//! order.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::timebase::{GridStoppingTime, TimeGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct LadlagPath {
    grid: Arc<TimeGrid>,
    node: Vec<f64>,
    interval: Vec<f64>,
}

impl LadlagPath {
    pub fn new(grid: Arc<TimeGrid>, node: Vec<f64>, interval: Vec<f64>) -> Result<Self> {
        if node.len() != grid.len() || interval.len() + 1 != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "path needs {} node and {} interval values, got {} and {}",
                grid.len(),
                grid.len() - 1,
                node.len(),
                interval.len()
            )));
        }
        Ok(LadlagPath { grid, node, interval })
    }

    /// Càdlàg path: each interval carries the value of its left node.
    pub fn cadlag(grid: Arc<TimeGrid>, node: Vec<f64>) -> Result<Self> {
        let interval = node[..node.len().saturating_sub(1)].to_vec();
        Self::new(grid, node, interval)
    }

    pub fn constant(grid: Arc<TimeGrid>, c: f64) -> Self {
        let k = grid.len();
        LadlagPath { grid, node: vec![c; k], interval: vec![c; k - 1] }
    }

    /// Càdlàg path `t -> f(t)` sampled at the nodes.
    pub fn from_fn(grid: Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Self {
        let node: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
        let interval = node[..node.len() - 1].to_vec();
        LadlagPath { grid, node, interval }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node
    }

    pub fn interval_values(&self) -> &[f64] {
        &self.interval
    }

    pub fn value(&self, k: usize) -> f64 {
        self.node[k]
    }

    /// `X_{t_k-}`; zero at the first node.
    pub fn left_limit(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.interval[k - 1]
        }
    }

    /// `X_{t_k+}`; equals the terminal value at the last node.
    pub fn right_limit(&self, k: usize) -> f64 {
        if k + 1 == self.node.len() {
            self.node[k]
        } else {
            self.interval[k]
        }
    }

    /// `(ΔX_k, Δ₊X_k)`.
    pub fn jumps(&self, k: usize) -> (f64, f64) {
        (self.node[k] - self.left_limit(k), self.right_limit(k) - self.node[k])
    }

    pub fn is_cadlag(&self) -> bool {
        self.interval.iter().zip(&self.node).all(|(i, v)| i == v)
    }

    pub fn is_continuous(&self) -> bool {
        self.is_cadlag() && (1..self.node.len()).all(|k| self.interval[k - 1] == self.node[k])
    }

    /// The `2K+1` values along the double-arrow chain.
    pub fn chain(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * self.node.len() - 1);
        for k in 0..self.node.len() {
            c.push(self.node[k]);
            if k < self.interval.len() {
                c.push(self.interval[k]);
            }
        }
        c
    }

    /// Inverse of [`chain`](Self::chain).
    pub fn from_chain(grid: Arc<TimeGrid>, chain: &[f64]) -> Result<Self> {
        let node = chain.iter().step_by(2).copied().collect();
        let interval = chain.iter().skip(1).step_by(2).copied().collect();
        Self::new(grid, node, interval)
    }

    /// Maximal number of moves of size strictly greater than `eps` along the chain.
    pub fn eps_move_count(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return Err(LabError::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        Ok(longest_eps_chain(&self.chain(), eps))
    }

    /// Up-crossings from strictly below `a` to strictly above `b` along the chain.
    pub fn upcrossings(&self, a: f64, b: f64) -> Result<usize> {
        if !(a < b) {
            return Err(LabError::InvalidArgument(format!("up-crossing levels need a < b, got {a}, {b}")));
        }
        let mut below = false;
        let mut count = 0;
        for x in self.chain() {
            if x < a {
                below = true;
            } else if below && x > b {
                count += 1;
                below = false;
            }
        }
        Ok(count)
    }

    /// Pointwise `alpha * self + beta * other`.
    pub fn affine(&self, alpha: f64, other: &LadlagPath, beta: f64) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let node = self.node.iter().zip(&other.node).map(|(a, b)| alpha * a + beta * b).collect();
        let interval = self.interval.iter().zip(&other.interval).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(LadlagPath { grid: self.grid.clone(), node, interval })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LadlagPath {
            grid: self.grid.clone(),
            node: self.node.iter().map(|&x| f(x)).collect(),
            interval: self.interval.iter().map(|&x| f(x)).collect(),
        }
    }
}

pub(crate) fn same_grid(a: &Arc<TimeGrid>, b: &Arc<TimeGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(LabError::GridMismatch("paths live on different grids".into()))
    }
}

/// Neumaier-compensated sum, so that `N` copies of `1/N` add up to 1.
pub fn accurate_sum(v: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Fenwick tree for prefix maxima.
struct MaxFenwick(Vec<usize>);

impl MaxFenwick {
    fn new(n: usize) -> Self {
        MaxFenwick(vec![0; n + 1])
    }
    fn update(&mut self, i: usize, v: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] = self.0[i].max(v);
            i += i & i.wrapping_neg();
        }
    }
    /// Maximum over positions `0..i`.
    fn query(&self, i: usize) -> usize {
        let mut i = i;
        let mut m = 0;
        while i > 0 {
            m = m.max(self.0[i]);
            i -= i & i.wrapping_neg();
        }
        m
    }
}

/// Longest subsequence with consecutive gaps `> eps`, returned as number of
/// moves (length minus one). Dynamic programming over value ranks; a plain
/// greedy extremum scan is not optimal on monotone runs.
fn longest_eps_chain(c: &[f64], eps: f64) -> usize {
    if c.is_empty() {
        return 0;
    }
    let mut sorted: Vec<f64> = c.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let n = sorted.len();
    let mut low = MaxFenwick::new(n); // indexed by rank
    let mut high = MaxFenwick::new(n); // indexed by reversed rank
    let mut best = 0;
    for &x in c {
        // ranks with value < x - eps
        let lo = sorted.partition_point(|&v| v < x - eps);
        // ranks with value > x + eps, counted from the top
        let hi = n - sorted.partition_point(|&v| v <= x + eps);
        let len = 1 + low.query(lo).max(high.query(hi));
        let r = sorted.partition_point(|&v| v < x);
        low.update(r, len);
        high.update(n - 1 - r, len);
        best = best.max(len);
    }
    best - 1
}

/// The move-count constant `C = 2(C̃₂+1)N` with `n = ⌈2/ε⌉`, `C₁ = ⌈2/δ⌉`,
/// `N = n C₁` and `C̃₂ = 2N²/δ`.
pub fn move_count_bound(eps: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(LabError::InvalidArgument("need eps > 0 and 0 < delta < 1".into()));
    }
    let n = (2.0 / eps).ceil();
    let c1 = (2.0 / delta).ceil();
    let big_n = n * c1;
    let c2 = 2.0 * big_n * big_n / delta;
    Ok(2.0 * (c2 + 1.0) * big_n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tag: String,
}

impl Provenance {
    pub fn new(seed: u64, tag: impl Into<String>) -> Self {
        Provenance { seed, tag: tag.into() }
    }
}

/// Where a bundle is evaluated at a stopping time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSide {
    /// `X_τ`
    At,
    /// `X_{τ-}`
    Left,
}

/// Weighted ensemble of paths on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    grid: Arc<TimeGrid>,
    paths: Vec<LadlagPath>,
    weights: Vec<f64>,
    pub provenance: Provenance,
}

impl PathBundle {
    pub fn new(grid: Arc<TimeGrid>, paths: Vec<LadlagPath>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(LabError::InvalidArgument(format!(
                "bundle needs matching non-empty paths and weights ({} vs {})",
                paths.len(),
                weights.len()
            )));
        }
        for p in &paths {
            same_grid(&grid, p.grid())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(LabError::InvalidArgument("weights must be non-negative".into()));
        }
        let s = accurate_sum(&weights);
        if (s - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidArgument(format!("weights sum to {s}, not 1")));
        }
        Ok(PathBundle { grid, paths, weights, provenance })
    }

    /// Equal weights `1/N`.
    pub fn uniform(grid: Arc<TimeGrid>, paths: Vec<LadlagPath>, provenance: Provenance) -> Result<Self> {
        let n = paths.len().max(1);
        Self::new(grid, paths, vec![1.0 / n as f64; n], provenance)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn paths(&self) -> &[LadlagPath] {
        &self.paths
    }

    pub fn path(&self, s: usize) -> &LadlagPath {
        &self.paths[s]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_scenarios(&self) -> usize {
        self.paths.len()
    }

    /// Same scenarios and weights, new paths.
    pub fn with_paths(&self, paths: Vec<LadlagPath>, tag: impl Into<String>) -> Result<Self> {
        PathBundle::new(
            self.grid.clone(),
            paths,
            self.weights.clone(),
            Provenance::new(self.provenance.seed, tag),
        )
    }

    /// Weighted mean of node values at node `k`.
    pub fn mean_at(&self, k: usize) -> f64 {
        self.paths.iter().zip(&self.weights).map(|(p, w)| w * p.value(k)).sum()
    }

    /// Weighted mean of `f` over per-scenario values.
    pub fn weighted_mean(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Effective sample size `(Σw)²/Σw²`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn check_aligned(&self, other: &PathBundle) -> Result<()> {
        same_grid(&self.grid, &other.grid)?;
        if self.n_scenarios() != other.n_scenarios() {
            return Err(LabError::GridMismatch(format!(
                "bundles have {} and {} scenarios",
                self.n_scenarios(),
                other.n_scenarios()
            )));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["scenario", "node", "V", "I", "weight"])?;
        for (s, (p, wt)) in self.paths.iter().zip(&self.weights).enumerate() {
            for k in 0..self.grid.len() {
                let i = p.interval.get(k).map(|v| v.to_string()).unwrap_or_default();
                w.write_record([s.to_string(), k.to_string(), p.node[k].to_string(), i, wt.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn manifest(&self) -> BundleManifest {
        BundleManifest {
            grid: (*self.grid).clone(),
            seed: self.provenance.seed,
            tag: self.provenance.tag.clone(),
            n_scenarios: self.n_scenarios(),
        }
    }

    /// Write `<stem>.csv` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.write_csv(&dir.join(format!("{stem}.csv")))?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.manifest())?)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let m: BundleManifest = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let grid = Arc::new(m.grid);
        let k = grid.len();
        let mut rows: BTreeMap<usize, (Vec<f64>, Vec<f64>, f64)> = BTreeMap::new();
        let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| LabError::InvalidArgument(format!("bad number {:?}: {e}", &rec[i])))
            };
            let s: usize = rec[0].parse().map_err(|_| LabError::InvalidArgument("bad scenario id".into()))?;
            let e = rows.entry(s).or_insert_with(|| (Vec::with_capacity(k), Vec::with_capacity(k), 0.0));
            e.0.push(parse(2)?);
            if !rec[3].is_empty() {
                e.1.push(parse(3)?);
            }
            e.2 = parse(4)?;
        }
        let mut paths = Vec::new();
        let mut weights = Vec::new();
        for (_, (v, i, w)) in rows {
            paths.push(LadlagPath::new(grid.clone(), v, i)?);
            weights.push(w);
        }
        PathBundle::new(grid, paths, weights, Provenance::new(m.seed, m.tag))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub grid: TimeGrid,
    pub seed: u64,
    pub tag: String,
    pub n_scenarios: usize,
}

fn check_tau(bundle: &PathBundle, tau: &GridStoppingTime) -> Result<()> {
    same_grid(bundle.grid(), &tau.grid)?;
    if tau.len() != bundle.n_scenarios() {
        return Err(LabError::GridMismatch(format!(
            "stopping time has {} scenarios, bundle has {}",
            tau.len(),
            bundle.n_scenarios()
        )));
    }
    Ok(())
}

/// `X_τ` or `X_{τ-}` per scenario; +∞ is an error naming the scenario.
pub fn evaluate_at(bundle: &PathBundle, tau: &GridStoppingTime, side: EvalSide) -> Result<Vec<f64>> {
    check_tau(bundle, tau)?;
    bundle
        .paths
        .iter()
        .zip(&tau.nodes)
        .enumerate()
        .map(|(s, (p, k))| {
            let k = k.ok_or(LabError::InfiniteStoppingTime { scenario: s })?;
            Ok(match side {
                EvalSide::At => p.value(k),
                EvalSide::Left => p.left_limit(k),
            })
        })
        .collect()
}

/// Replace node values on the graphs of the given stopping times; interval
/// values (and hence right limits) are untouched.
pub fn override_at_stopping_times(
    bundle: &PathBundle,
    taus: &[GridStoppingTime],
    values: &[Vec<f64>],
) -> Result<PathBundle> {
    if taus.len() != values.len() {
        return Err(LabError::InvalidArgument("one value vector per stopping time required".into()));
    }
    for (tau, v) in taus.iter().zip(values) {
        check_tau(bundle, tau)?;
        if v.len() != bundle.n_scenarios() {
            return Err(LabError::InvalidArgument("override values must cover every scenario".into()));
        }
    }
    let mut clashes = Vec::new();
    for s in 0..bundle.n_scenarios() {
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (m, tau) in taus.iter().enumerate() {
            if let Some(k) = tau.nodes[s] {
                if let Some(&(m0, _)) = seen.iter().find(|(_, k0)| *k0 == k) {
                    clashes.push(format!("scenario {s}: stopping times {m0} and {m} both equal t={}", bundle.grid.time(k)));
                }
                seen.push((m, k));
            }
        }
    }
    if !clashes.is_empty() {
        return Err(LabError::OverlappingGraphs(clashes.join("; ")));
    }
    let mut paths = bundle.paths.clone();
    for (tau, v) in taus.iter().zip(values) {
        for (s, k) in tau.nodes.iter().enumerate() {
            if let Some(k) = *k {
                paths[s].node[k] = v[s];
            }
        }
    }
    Ok(PathBundle { paths, ..bundle.clone() })
}

/// First node at which the node value satisfies `pred`, +∞ if none.
pub fn hitting_time(bundle: &PathBundle, pred: impl Fn(f64) -> bool) -> GridStoppingTime {
    let nodes = bundle.paths.iter().map(|p| p.node.iter().position(|&v| pred(v))).collect();
    GridStoppingTime { grid: bundle.grid.clone(), nodes, side: crate::timebase::Side::Right }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(m: u32) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::dyadic(m).unwrap())
    }

    /// Exhaustive oracle: longest subsequence with gaps `> eps`.
    fn brute_moves(c: &[f64], eps: f64) -> usize {
        let n = c.len();
        let mut best = 0;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if idx.windows(2).all(|w| (c[w[1]] - c[w[0]]).abs() > eps) {
                best = best.max(idx.len() - 1);
            }
        }
        best
    }

    #[test]
    fn limits_and_jumps() {
        let g = grid(2);
        let c = LadlagPath::constant(g.clone(), 3.0);
        for k in 0..5 {
            assert_eq!(c.right_limit(k), 3.0);
            if k >= 1 {
                assert_eq!(c.left_limit(k), 3.0);
                assert_eq!(c.jumps(k), (0.0, 0.0));
            }
        }
        assert_eq!(c.left_limit(0), 0.0);
        // indicator of (1/4, 1]
        let p = LadlagPath::new(g, vec![0.0, 0.0, 1.0, 1.0, 1.0], vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.jumps(1), (0.0, 1.0));
        assert!(!p.is_cadlag());
    }

    #[test]
    fn jump_at_one_half_example_n2() {
        // M^2 with Y_2 = 2: jump right after 3/4
        let g = grid(2);
        let p = LadlagPath::new(g, vec![1.0, 1.0, 1.0, 1.0, 2.0], vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.left_limit(3), 1.0);
        assert_eq!(p.right_limit(3), 2.0);
        assert_eq!(p.value(4), 2.0);
    }

    #[test]
    fn move_counts() {
        let g = grid(2);
        assert_eq!(LadlagPath::constant(g.clone(), 1.0).eps_move_count(0.1).unwrap(), 0);
        let down = LadlagPath::cadlag(grid(1), vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(down.eps_move_count(0.5).unwrap(), brute_moves(&down.chain(), 0.5));
        assert_eq!(down.eps_move_count(0.5).unwrap(), 1);
        let zz = LadlagPath::cadlag(g, vec![1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(zz.eps_move_count(0.5).unwrap(), brute_moves(&zz.chain(), 0.5));
        assert_eq!(zz.eps_move_count(0.5).unwrap(), 4);
        assert!(zz.eps_move_count(0.0).is_err());
        // ties at exactly eps do not count
        assert_eq!(zz.eps_move_count(1.0).unwrap(), 0);
    }

    #[test]
    fn upcrossing_examples() {
        let g = grid(2);
        let dec = LadlagPath::from_fn(g.clone(), |t| 1.0 - t);
        assert_eq!(dec.upcrossings(0.2, 0.8).unwrap(), 0);
        let z = LadlagPath::cadlag(grid(1), vec![0.0, 1.0, 0.0]).unwrap();
        // chain 0,0,1,1,0 -> one crossing; 0,1,0,1 needs two
        assert_eq!(z.upcrossings(0.25, 0.75).unwrap(), 1);
        let z2 = LadlagPath::new(grid(1), vec![0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(z2.chain(), vec![0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(z2.upcrossings(0.25, 0.75).unwrap(), 2);
        let inside = LadlagPath::constant(g, 0.5);
        assert_eq!(inside.upcrossings(0.25, 0.75).unwrap(), 0);
        assert!(inside.upcrossings(1.0, 1.0).is_err());
    }

    #[test]
    fn bound_constant_matches_formula() {
        // eps = 0.5, delta = 0.1: n = 4, C1 = 20, N = 80, C2 = 128000
        assert_eq!(move_count_bound(0.5, 0.1).unwrap(), 2.0 * 128_001.0 * 80.0);
    }

    fn two_path_bundle() -> PathBundle {
        let g = grid(2);
        let a = LadlagPath::cadlag(g.clone(), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let b = LadlagPath::new(g.clone(), vec![0.0, 1.0, 0.0, 1.0, 0.0], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        PathBundle::new(g, vec![a, b], vec![0.25, 0.75], Provenance::new(1, "t")).unwrap()
    }

    #[test]
    fn evaluation_and_override() {
        let b = two_path_bundle();
        let g = b.grid().clone();
        let zero = GridStoppingTime::constant(g.clone(), 2, 0).unwrap();
        assert_eq!(evaluate_at(&b, &zero, EvalSide::Left).unwrap(), vec![0.0, 0.0]);
        let one = GridStoppingTime::constant(g.clone(), 2, 4).unwrap();
        assert_eq!(evaluate_at(&b, &one, EvalSide::At).unwrap(), vec![5.0, 0.0]);
        let inf = GridStoppingTime::new(g.clone(), vec![Some(1), None]).unwrap();
        assert!(matches!(evaluate_at(&b, &inf, EvalSide::At), Err(LabError::InfiniteStoppingTime { scenario: 1 })));

        assert_eq!(override_at_stopping_times(&b, &[], &[]).unwrap(), b);
        let t2 = GridStoppingTime::constant(g.clone(), 2, 2).unwrap();
        assert_eq!(override_at_stopping_times(&b, &[t2.clone()], &[vec![3.0, 0.0]]).unwrap(), b);
        let o = override_at_stopping_times(&b, &[t2.clone()], &[vec![9.0, 9.0]]).unwrap();
        for s in 0..2 {
            for k in 0..5 {
                assert_eq!(o.path(s).right_limit(k), b.path(s).right_limit(k));
            }
        }
        let clash = override_at_stopping_times(&b, &[t2.clone(), t2], &[vec![0.0; 2], vec![0.0; 2]]);
        assert!(matches!(clash, Err(LabError::OverlappingGraphs(m)) if m.contains("scenario 0")));
    }

    #[test]
    fn csv_round_trip() {
        let b = two_path_bundle();
        let dir = tempfile::tempdir().unwrap();
        b.save(dir.path(), "b").unwrap();
        assert_eq!(PathBundle::load(dir.path(), "b").unwrap(), b);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let g = grid(1);
        let p = LadlagPath::constant(g.clone(), 0.0);
        assert!(PathBundle::new(g, vec![p.clone(), p], vec![0.5, 0.6], Provenance::new(0, "x")).is_err());
    }

    fn arb_chain() -> impl Strategy<Value = Vec<f64>> {
        (1usize..5).prop_flat_map(|k| prop::collection::vec((-4i32..5).prop_map(|v| v as f64 / 2.0), 2 * k + 1))
    }

    proptest! {
        #[test]
        fn moves_match_brute_force(c in arb_chain(), eps in 0.1f64..3.0) {
            let p = LadlagPath::from_chain(grid_for(c.len()), &c).unwrap();
            prop_assert_eq!(p.eps_move_count(eps).unwrap(), brute_moves(&c, eps));
        }

        #[test]
        fn moves_monotone_and_dominate_upcrossings(c in arb_chain(), a in -2.0f64..2.0, w in 0.1f64..2.0) {
            let p = LadlagPath::from_chain(grid_for(c.len()), &c).unwrap();
            prop_assert!(p.eps_move_count(w).unwrap() >= p.eps_move_count(w + 0.5).unwrap());
            prop_assert!(p.upcrossings(a, a + w).unwrap() <= p.eps_move_count(w).unwrap());
        }

        #[test]
        fn jumps_round_trip(c in arb_chain()) {
            let p = LadlagPath::from_chain(grid_for(c.len()), &c).unwrap();
            for k in 1..p.node_values().len() {
                prop_assert_eq!(p.left_limit(k) + p.jumps(k).0, p.value(k));
            }
            for k in 0..p.node_values().len() {
                prop_assert_eq!(p.value(k) + p.jumps(k).1, p.right_limit(k));
            }
        }

        #[test]
        fn left_equals_at_without_jump(c in arb_chain(), k in 1usize..4) {
            let p = LadlagPath::from_chain(grid_for(c.len()), &c).unwrap();
            let k = k.min(p.node_values().len() - 1);
            let b = PathBundle::uniform(p.grid().clone(), vec![p.clone()], Provenance::new(0, "x")).unwrap();
            let tau = GridStoppingTime::constant(p.grid().clone(), 1, k).unwrap();
            if p.jumps(k).0 == 0.0 {
                prop_assert_eq!(evaluate_at(&b, &tau, EvalSide::Left).unwrap(), evaluate_at(&b, &tau, EvalSide::At).unwrap());
            }
        }
    }

    fn grid_for(chain_len: usize) -> Arc<TimeGrid> {
        let k = (chain_len - 1) / 2;
        let times: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        Arc::new(TimeGrid::from_times(&times).unwrap())
    }
}
