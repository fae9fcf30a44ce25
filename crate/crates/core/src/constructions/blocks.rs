//! Bounded martingales that start at a stopping time `ρ`, stay at 0 up to
//! `ρ` and end at `−1` with probability `k/(k+1)` or at `k` otherwise.
//!
//! In continuous time they come from a stochastic integral whose integrand
//! blows up at `ρ + 2^-n`, so the integral reaches `−1` or `k` before that
//! time. On a grid the blow-up is resolved by the geometric nodes
//! `a_j = ρ + 2^-n (1 − 2^-j)`, `j = 1..J`, with `k = 2^J − 1`. On each
//! sub-interval `[a_{j−1}, a_j]` the sign of the Brownian increment decides
//! between the two exits of a doubling walk: from `m` to `−1` or to `2m + 1`.
//! The walk is a martingale, absorbed at `−1` and at `k`.

use std::sync::Arc;

use crate::constructions::brownian::brownian_bundle;
use crate::error::{LabError, Result};
use crate::path::{LadlagPath, PathBundle, Provenance};
use crate::timebase::{GridStoppingTime, TimeGrid};

/// Number of doubling steps for the upper level `k = 2^J − 1`.
pub fn doubling_depth(k: u64) -> Result<u32> {
    if k == 0 || !(k + 1).is_power_of_two() {
        return Err(LabError::InvalidArgument(format!("upper level {k} must be of the form 2^J - 1 with J >= 1")));
    }
    Ok((k + 1).trailing_zeros())
}

/// Geometric nodes `ρ + 2^-n (1 − 2^-j)`, `j = 0..=J`, that fall inside `[0, 1)`.
pub fn block_nodes(rho: f64, n: u32, depth: u32) -> Vec<f64> {
    let h = 0.5f64.powi(n as i32);
    (0..=depth).map(|j| rho + h * (1.0 - 0.5f64.powi(j as i32))).filter(|&t| t < 1.0).collect()
}

/// `grid` refined so that every block started at one of `rho_times` is resolved.
pub fn block_grid(grid: &TimeGrid, rho_times: &[f64], n: u32, depth: u32) -> Result<TimeGrid> {
    let extra: Vec<f64> = rho_times.iter().flat_map(|&r| block_nodes(r, n, depth)).collect();
    grid.refine(&extra)
}

/// Block martingales driven by the increments of `carrier` (one Brownian
/// path per scenario). Scenarios with `ρ = ∞` stay at zero; a block that
/// runs past `t = 1` is cut there.
pub fn block_martingales_on(carrier: &PathBundle, rho: &GridStoppingTime, n: u32, k: u64) -> Result<PathBundle> {
    let depth = doubling_depth(k)?;
    let grid = carrier.grid().clone();
    if rho.len() != carrier.n_scenarios() || *rho.grid != *grid {
        return Err(LabError::GridMismatch("ρ and carrier must share grid and scenarios".into()));
    }
    let top = k as f64;
    let paths = carrier
        .paths()
        .iter()
        .zip(&rho.nodes)
        .map(|(w, r)| {
            let mut node = vec![0.0; grid.len()];
            if let Some(r) = *r {
                let pts = block_nodes(grid.time(r), n, depth);
                let idx = pts
                    .iter()
                    .map(|&t| {
                        grid.node_index(t).ok_or_else(|| {
                            LabError::RefinementRequired(format!("block node {t} (ρ = {}) is not a grid node", grid.time(r)))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut m = 0.0;
                let mut next = 1;
                for j in idx[0]..grid.len() {
                    if next < idx.len() && idx[next] == j {
                        if m != -1.0 && m != top {
                            let up = w.value(j) - w.value(idx[next - 1]) >= 0.0;
                            m = if up { 2.0 * m + 1.0 } else { -1.0 };
                        }
                        next += 1;
                    }
                    node[j] = m;
                }
            }
            LadlagPath::cadlag(grid.clone(), node)
        })
        .collect::<Result<_>>()?;
    PathBundle::new(
        grid,
        paths,
        carrier.weights().to_vec(),
        Provenance::new(carrier.provenance.seed, format!("block-n{n}-k{k}")),
    )
}

/// Block martingales with a fresh Brownian carrier on `grid`.
pub fn indicator_block_martingales(
    rho: &GridStoppingTime,
    n: u32,
    k: u64,
    grid: Arc<TimeGrid>,
    seed: u64,
) -> Result<PathBundle> {
    let w = brownian_bundle(grid, rho.len(), seed)?;
    block_martingales_on(&w, rho, n, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: u32, k: u64, scen: usize) -> (Arc<TimeGrid>, GridStoppingTime) {
        let depth = doubling_depth(k).unwrap();
        let base = TimeGrid::dyadic(2).unwrap();
        let grid = Arc::new(block_grid(&base, &[0.25, 0.5], n, depth).unwrap());
        let a = grid.node_index(0.25).unwrap();
        let b = grid.node_index(0.5).unwrap();
        let rho = GridStoppingTime::new(grid.clone(), (0..scen).map(|s| [Some(a), Some(b), None][s % 3]).collect()).unwrap();
        (grid, rho)
    }

    #[test]
    fn depth_and_errors() {
        assert_eq!(doubling_depth(1).unwrap(), 1);
        assert_eq!(doubling_depth(7).unwrap(), 3);
        assert!(doubling_depth(6).is_err());
        assert!(doubling_depth(0).is_err());
        let grid = Arc::new(TimeGrid::dyadic(2).unwrap());
        let rho = GridStoppingTime::constant(grid.clone(), 4, 1).unwrap();
        assert!(matches!(indicator_block_martingales(&rho, 3, 7, grid, 1), Err(LabError::RefinementRequired(_))));
    }

    #[test]
    fn bounds_support_and_exit_law() {
        let (grid, rho) = setup(3, 15, 30_000);
        let b = indicator_block_martingales(&rho, 3, 15, grid.clone(), 4).unwrap();
        let last = grid.last();
        let mut low = 0usize;
        let mut started = 0usize;
        for (p, r) in b.paths().iter().zip(&rho.nodes) {
            assert!(p.node_values().iter().all(|&v| (-1.0..=15.0).contains(&v)));
            assert!(p.is_cadlag());
            match r {
                None => assert!(p.node_values().iter().all(|&v| v == 0.0)),
                Some(r) => {
                    assert!(p.node_values()[..=*r].iter().all(|&v| v == 0.0));
                    let end = p.value(last);
                    assert!(end == -1.0 || end == 15.0);
                    started += 1;
                    low += (end == -1.0) as usize;
                }
            }
        }
        let p = low as f64 / started as f64;
        let want = 15.0 / 16.0;
        assert!((p - want).abs() < 4.0 * (want * (1.0 - want) / started as f64).sqrt());
    }

    #[test]
    fn zero_drift_per_step() {
        let (grid, rho) = setup(2, 7, 40_000);
        let b = indicator_block_martingales(&rho, 2, 7, grid.clone(), 9).unwrap();
        let n = b.n_scenarios() as f64;
        for k in 1..grid.len() {
            let inc: Vec<f64> = b.paths().iter().map(|p| p.value(k) - p.value(k - 1)).collect();
            let mean = inc.iter().sum::<f64>() / n;
            let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() <= 4.0 * (var / n).sqrt() + 1e-12, "node {k}: drift {mean}");
        }
    }
}
