//! Time grids on [0,1], the double-arrow index and grid stopping times.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::tree::ScenarioTree;

/// Relative tolerance for node identity on non-dyadic grids.
pub const NODE_TOL: f64 = 1e-12;

/// Deepest dyadic level tracked exactly (numerators must fit in an f64 mantissa).
const MAX_EXACT_LEVEL: u32 = 52;

/// Config-facing grid description: `{"dyadic_level": m}` or a sorted list of times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Dyadic { dyadic_level: u32 },
    Times(Vec<f64>),
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        match self {
            GridSpec::Dyadic { dyadic_level } => TimeGrid::dyadic(*dyadic_level),
            GridSpec::Times(t) => TimeGrid::from_times(t),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct DyadicInfo {
    level: u32,
    numerators: Vec<u64>,
}

/// Strictly increasing nodes `0 = t_0 < ... < t_K = 1`.
///
/// When every node is a binary rational the grid also keeps integer
/// numerators over a common power of two so that membership of `D_m` is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TimeGrid {
    nodes: Vec<f64>,
    dyadic: Option<DyadicInfo>,
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = LabError;
    fn try_from(spec: GridSpec) -> Result<Self> {
        spec.build()
    }
}

impl From<TimeGrid> for GridSpec {
    fn from(g: TimeGrid) -> Self {
        if let Some(d) = &g.dyadic {
            if d.numerators.len() as u64 == (1u64 << d.level) + 1 {
                return GridSpec::Dyadic { dyadic_level: d.level };
            }
        }
        GridSpec::Times(g.nodes)
    }
}

fn detect_dyadic(nodes: &[f64]) -> Option<DyadicInfo> {
    let mut level = 0u32;
    for &t in nodes {
        loop {
            let s = t * (1u64 << level) as f64;
            if s.fract() == 0.0 {
                break;
            }
            level += 1;
            if level > MAX_EXACT_LEVEL {
                return None;
            }
        }
    }
    let scale = (1u64 << level) as f64;
    Some(DyadicInfo { level, numerators: nodes.iter().map(|&t| (t * scale) as u64).collect() })
}

impl TimeGrid {
    /// The dyadic grid `D_m = {j 2^-m}`.
    pub fn dyadic(m: u32) -> Result<Self> {
        if m > 24 {
            return Err(LabError::Grid(format!("dyadic level {m} too fine (max 24)")));
        }
        let n = 1u64 << m;
        let nodes = (0..=n).map(|j| j as f64 / n as f64).collect();
        Ok(TimeGrid { nodes, dyadic: Some(DyadicInfo { level: m, numerators: (0..=n).collect() }) })
    }

    /// Grid from explicit times; must start at 0, end at 1 and increase strictly.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(LabError::Grid("a grid needs at least the nodes 0 and 1".into()));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(LabError::Grid("grid must start at 0 and end at 1".into()));
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(LabError::Grid(format!("times not strictly increasing at position {}", i + 1)));
            }
        }
        Ok(TimeGrid { dyadic: detect_dyadic(times), nodes: times.to_vec() })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes `K + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the terminal node `K`.
    pub fn last(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Whether all nodes are binary rationals (tracked exactly).
    pub fn is_dyadic(&self) -> bool {
        self.dyadic.is_some()
    }

    /// Exact node lookup on dyadic grids, relative tolerance otherwise.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        if let Some(d) = &self.dyadic {
            let s = t * (1u64 << d.level) as f64;
            if s.fract() == 0.0 && s >= 0.0 {
                return d.numerators.binary_search(&(s as u64)).ok();
            }
            if d.level < MAX_EXACT_LEVEL {
                return None;
            }
        }
        let i = self.nodes.partition_point(|&x| x < t);
        let tol = NODE_TOL * t.abs().max(1.0);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < self.nodes.len())
            .find(|&j| (self.nodes[j] - t).abs() <= tol)
    }

    /// Node indices of `D_m`, or a refinement error if some dyadic is missing.
    pub fn dyadic_nodes(&self, m: u32) -> Result<Vec<usize>> {
        if m > 30 {
            return Err(LabError::RefinementRequired(format!("dyadic level {m} unsupported")));
        }
        let n = 1u64 << m;
        (0..=n)
            .map(|j| {
                let t = j as f64 / n as f64;
                self.node_index(t).ok_or_else(|| {
                    LabError::RefinementRequired(format!("grid lacks dyadic node {j}/2^{m} = {t}"))
                })
            })
            .collect()
    }

    pub fn contains_dyadic_level(&self, m: u32) -> bool {
        self.dyadic_nodes(m).is_ok()
    }

    /// Largest `m` with `D_m` contained in the grid (0 always qualifies).
    pub fn max_dyadic_level(&self) -> u32 {
        let mut m = 0;
        while m < 30 && (1usize << (m + 1)) < self.nodes.len() && self.contains_dyadic_level(m + 1) {
            m += 1;
        }
        m
    }

    /// Union with extra times; values outside (0,1) and duplicates are dropped.
    pub fn refine(&self, extra: &[f64]) -> Result<Self> {
        let mut all: Vec<f64> = self.nodes.clone();
        all.extend(extra.iter().copied().filter(|t| *t > 0.0 && *t < 1.0 && t.is_finite()));
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<f64> = Vec::with_capacity(all.len());
        for t in all {
            match out.last() {
                Some(&p) if (t - p).abs() <= NODE_TOL * t.abs().max(1.0) => {}
                _ => out.push(t),
            }
        }
        TimeGrid::from_times(&out)
    }

    /// Smallest node index with time strictly greater than `t`.
    pub fn first_node_after(&self, t: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|&x| x <= t);
        (i < self.nodes.len()).then_some(i)
    }

    /// Largest node index with time strictly less than `t`.
    pub fn last_node_before(&self, t: f64) -> Option<usize> {
        self.nodes.partition_point(|&x| x < t).checked_sub(1)
    }

    /// Geometric points `a + h(1 - 2^-i)` for `i = 0..=depth`, plus `a + h`.
    pub fn geometric_points(a: f64, h: f64, depth: u32) -> Vec<f64> {
        let mut v: Vec<f64> = (0..=depth).map(|i| a + h * (1.0 - 0.5f64.powi(i as i32))).collect();
        v.push(a + h);
        v
    }
}

/// Which half of a split instant: `Left` is the point carrying the left
/// limit, `Right` the point carrying the value itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Grid node plus side; the derived order is lexicographic,
/// `(k,Left) < (k,Right) < (k+1,Left)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DoubleIndex {
    pub node: usize,
    pub side: Side,
}

impl DoubleIndex {
    pub fn new(node: usize, side: Side) -> Self {
        DoubleIndex { node, side }
    }

    /// Position in the chain `V_0, I_0, V_1, ..., V_K` (node values at even
    /// positions, interval values at odd ones). `(k,Left)` is the left limit
    /// `I_{k-1}`; `(0,Left)` maps to -1, the conventional zero before time 0.
    pub fn chain_position(&self) -> isize {
        match self.side {
            Side::Left => 2 * self.node as isize - 1,
            Side::Right => 2 * self.node as isize,
        }
    }
}

/// Compare two double indices; both must refer to the same grid.
pub fn compare(grid_a: &TimeGrid, a: DoubleIndex, grid_b: &TimeGrid, b: DoubleIndex) -> Result<Ordering> {
    if !std::ptr::eq(grid_a, grid_b) && grid_a != grid_b {
        return Err(LabError::GridMismatch("double indices live on different grids".into()));
    }
    for d in [a, b] {
        if d.node >= grid_a.len() {
            return Err(LabError::InvalidArgument(format!("node {} outside grid", d.node)));
        }
    }
    Ok(a.cmp(&b))
}

/// Per-scenario grid node, `None` standing for the value +∞.
#[derive(Clone, Debug, PartialEq)]
pub struct GridStoppingTime {
    pub grid: Arc<TimeGrid>,
    pub nodes: Vec<Option<usize>>,
    pub side: Side,
}

impl GridStoppingTime {
    pub fn new(grid: Arc<TimeGrid>, nodes: Vec<Option<usize>>) -> Result<Self> {
        if let Some(k) = nodes.iter().flatten().find(|&&k| k >= grid.len()) {
            return Err(LabError::InvalidArgument(format!("stopping time node {k} outside grid")));
        }
        Ok(GridStoppingTime { grid, nodes, side: Side::Right })
    }

    /// Deterministic time `t_k` on every scenario.
    pub fn constant(grid: Arc<TimeGrid>, n_scenarios: usize, k: usize) -> Result<Self> {
        Self::new(grid, vec![Some(k); n_scenarios])
    }

    /// Deterministic time given as a real; it must be a grid node.
    pub fn at_time(grid: Arc<TimeGrid>, n_scenarios: usize, t: f64) -> Result<Self> {
        let k = grid
            .node_index(t)
            .ok_or_else(|| LabError::RefinementRequired(format!("time {t} is not a grid node")))?;
        Self::constant(grid, n_scenarios, k)
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Time value on a scenario (`f64::INFINITY` for the sentinel).
    pub fn time(&self, scenario: usize) -> f64 {
        self.nodes[scenario].map_or(f64::INFINITY, |k| self.grid.time(k))
    }

    pub fn is_finite(&self) -> bool {
        self.nodes.iter().all(Option::is_some)
    }
}

/// Smallest dyadic of level `m` strictly above τ, capped at 1.
///
/// The sentinel +∞ is returned unchanged.
pub fn dyadic_approximation(tau: &GridStoppingTime, m: u32) -> Result<GridStoppingTime> {
    let grid = &tau.grid;
    let dn = grid.dyadic_nodes(m)?;
    let scale = (1u64 << m) as f64;
    let last = grid.last();
    let nodes = tau
        .nodes
        .iter()
        .map(|v| {
            v.map(|k| {
                if k == last {
                    return last;
                }
                let j = ((grid.time(k) * scale).floor() as usize + 1).min(dn.len() - 1);
                dn[j]
            })
        })
        .collect();
    Ok(GridStoppingTime { grid: grid.clone(), nodes, side: tau.side })
}

/// Outcome of the adaptedness check of a grid stopping time against a tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StoppingTimeCheck {
    /// For each level `k`, the atoms of that level on which `τ = t_k`.
    Certificate(Vec<Vec<usize>>),
    /// First level whose event `{τ = t_k}` splits the named atom.
    Violation { level: usize, atom: usize },
}

impl StoppingTimeCheck {
    pub fn is_certificate(&self) -> bool {
        matches!(self, StoppingTimeCheck::Certificate(_))
    }
}

/// Check that `{τ = t_k}` is a union of level-k atoms for every k.
pub fn validate_stopping_time(tau: &GridStoppingTime, tree: &ScenarioTree) -> Result<StoppingTimeCheck> {
    if *tau.grid != **tree.grid() {
        return Err(LabError::GridMismatch("stopping time and tree use different grids".into()));
    }
    if tau.len() != tree.n_scenarios() {
        return Err(LabError::GridMismatch(format!(
            "stopping time has {} scenarios, tree has {}",
            tau.len(),
            tree.n_scenarios()
        )));
    }
    let mut cert = Vec::with_capacity(tree.n_levels());
    for k in 0..tree.n_levels() {
        let part = tree.level(k);
        let mut hits = Vec::new();
        for (a, members) in part.atoms.iter().enumerate() {
            let first = tau.nodes[members[0]] == Some(k);
            if members.iter().any(|&s| (tau.nodes[s] == Some(k)) != first) {
                return Ok(StoppingTimeCheck::Violation { level: k, atom: a });
            }
            if first {
                hits.push(a);
            }
        }
        cert.push(hits);
    }
    Ok(StoppingTimeCheck::Certificate(cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(m: u32) -> Arc<TimeGrid> {
        Arc::new(TimeGrid::dyadic(m).unwrap())
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::from_times(&[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::from_times(&[0.1, 1.0]).is_err());
        assert!(TimeGrid::from_times(&[0.0, 0.9]).is_err());
        let g = TimeGrid::from_times(&[0.0, 0.25, 0.3, 1.0]).unwrap();
        assert_eq!(g.node_index(0.3), Some(2));
        assert_eq!(g.node_index(0.3 + 1e-14), Some(2));
        assert_eq!(g.node_index(0.31), None);
    }

    #[test]
    fn dyadic_membership_is_exact() {
        let g = TimeGrid::dyadic(3).unwrap();
        assert!(g.is_dyadic());
        assert!(g.contains_dyadic_level(2));
        assert!(!g.contains_dyadic_level(4));
        assert_eq!(g.node_index(0.375), Some(3));
        assert_eq!(g.node_index(0.375 + 1e-15), None);
        let r = g.refine(&[0.3]).unwrap();
        assert!(!r.is_dyadic() || r.node_index(0.3).is_some());
        assert_eq!(r.max_dyadic_level(), 3);
        assert_eq!(r.node_index(0.3), Some(3));
    }

    #[test]
    fn grid_spec_round_trip() {
        let g: TimeGrid = serde_json::from_str(r#"{"dyadic_level": 2}"#).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g2: TimeGrid = serde_json::from_str("[0.0, 0.3, 1.0]").unwrap();
        assert_eq!(g2.len(), 3);
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"dyadic_level":2}"#);
        assert!(serde_json::from_str::<TimeGrid>("[0.0, 0.7, 0.3, 1.0]").is_err());
    }

    #[test]
    fn dyadic_approximation_examples() {
        let g = Arc::new(TimeGrid::dyadic(2).unwrap().refine(&[0.3]).unwrap());
        let k03 = g.node_index(0.3).unwrap();
        let tau = GridStoppingTime::constant(g.clone(), 3, k03).unwrap();
        let a = dyadic_approximation(&tau, 2).unwrap();
        assert!(a.nodes.iter().all(|&k| g.time(k.unwrap()) == 0.5));

        let one = GridStoppingTime::constant(g.clone(), 2, g.last()).unwrap();
        for m in 0..=2 {
            assert!(dyadic_approximation(&one, m).unwrap().nodes.iter().all(|&k| k == Some(g.last())));
        }

        // D_1 = {0, 1/2, 1}: strictly above 1/2 is 1.
        let half = GridStoppingTime::at_time(g.clone(), 1, 0.5).unwrap();
        assert_eq!(dyadic_approximation(&half, 1).unwrap().time(0), 1.0);

        assert!(matches!(dyadic_approximation(&tau, 3), Err(LabError::RefinementRequired(_))));

        let inf = GridStoppingTime::new(g, vec![None]).unwrap();
        assert_eq!(dyadic_approximation(&inf, 1).unwrap().nodes, vec![None]);
    }

    #[test]
    fn compare_examples() {
        let g = TimeGrid::dyadic(3).unwrap();
        let l3 = DoubleIndex::new(3, Side::Left);
        let r3 = DoubleIndex::new(3, Side::Right);
        let l4 = DoubleIndex::new(4, Side::Left);
        assert_eq!(compare(&g, l3, &g, r3).unwrap(), Ordering::Less);
        assert_eq!(compare(&g, r3, &g, l4).unwrap(), Ordering::Less);
        assert_eq!(compare(&g, l3, &g, l3).unwrap(), Ordering::Equal);
        let h = TimeGrid::dyadic(2).unwrap();
        assert!(matches!(compare(&g, l3, &h, l3), Err(LabError::GridMismatch(_))));
        assert_eq!(l3.chain_position(), 5);
        assert_eq!(r3.chain_position(), 6);
    }

    proptest! {
        #[test]
        fn dyadic_approximation_monotone(num in 0u64..=256, m in 1u32..7) {
            let g = d(8);
            let tau = GridStoppingTime::constant(g.clone(), 1, num as usize).unwrap();
            let a = dyadic_approximation(&tau, m).unwrap().time(0);
            let b = dyadic_approximation(&tau, m + 1).unwrap().time(0);
            let t = tau.time(0);
            prop_assert!(b <= a);
            if t < 1.0 { prop_assert!(a > t); } else { prop_assert_eq!(a, 1.0); }
        }

        #[test]
        fn compare_is_total_order(a in 0usize..10, sa in any::<bool>(), b in 0usize..10, sb in any::<bool>(), c in 0usize..10, sc in any::<bool>()) {
            let g = TimeGrid::dyadic(4).unwrap();
            let side = |s: bool| if s { Side::Right } else { Side::Left };
            let (x, y, z) = (DoubleIndex::new(a, side(sa)), DoubleIndex::new(b, side(sb)), DoubleIndex::new(c, side(sc)));
            let xy = compare(&g, x, &g, y).unwrap();
            prop_assert_eq!(xy.reverse(), compare(&g, y, &g, x).unwrap());
            if xy != Ordering::Greater && compare(&g, y, &g, z).unwrap() != Ordering::Greater {
                prop_assert!(compare(&g, x, &g, z).unwrap() != Ordering::Greater);
            }
            // order agrees with chain positions
            prop_assert_eq!(xy, x.chain_position().cmp(&y.chain_position()));
        }
    }
}
