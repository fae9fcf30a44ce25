//! Discretized Brownian motion, the noise carrier for the block martingales.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};
use crate::path::{LadlagPath, PathBundle, Provenance};
use crate::rng;
use crate::timebase::TimeGrid;

/// `n` Brownian paths sampled at the grid nodes, càdlàg (interval value =
/// preceding node value).
pub fn brownian_bundle(grid: Arc<TimeGrid>, n: usize, seed: u64) -> Result<PathBundle> {
    if n == 0 {
        return Err(LabError::InvalidArgument("need at least one scenario".into()));
    }
    let nodes = grid.nodes().to_vec();
    let paths = rng::par_scenarios(n, seed, &[rng::tag("brownian")], |r, _| {
        let mut v = Vec::with_capacity(nodes.len());
        let mut w = 0.0;
        v.push(0.0);
        for pair in nodes.windows(2) {
            let z: f64 = StandardNormal.sample(r);
            w += z * (pair[1] - pair[0]).sqrt();
            v.push(w);
        }
        v
    });
    let paths = paths.into_iter().map(|v| LadlagPath::cadlag(grid.clone(), v)).collect::<Result<_>>()?;
    PathBundle::uniform(grid, paths, Provenance::new(seed, "brownian"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_independent_increments() {
        let g = Arc::new(TimeGrid::dyadic(2).unwrap());
        let n = 100_000;
        let b = brownian_bundle(g, n, 11).unwrap();
        let w1: Vec<f64> = b.paths().iter().map(|p| p.value(4)).collect();
        let wh: Vec<f64> = b.paths().iter().map(|p| p.value(2)).collect();
        let var = w1.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // sd of the sample second moment of N(0,1) is sqrt(2/n)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
        let inc: Vec<f64> = w1.iter().zip(&wh).map(|(a, b)| a - b).collect();
        let cov = wh.iter().zip(&inc).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let corr = cov / (0.5f64.sqrt() * 0.5f64.sqrt());
        assert!(corr.abs() < 3.0 / (n as f64).sqrt());
        assert!(b.paths().iter().all(|p| p.is_cadlag()));
    }

    #[test]
    fn seeded() {
        let g = Arc::new(TimeGrid::dyadic(3).unwrap());
        let a = brownian_bundle(g.clone(), 300, 5).unwrap();
        let b = brownian_bundle(g.clone(), 300, 5).unwrap();
        let c = brownian_bundle(g.clone(), 300, 6).unwrap();
        assert_eq!(a.paths(), b.paths());
        assert_ne!(a.paths(), c.paths());
        assert!(brownian_bundle(g, 0, 5).is_err());
    }
}
