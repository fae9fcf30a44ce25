//! Pathwise integrals for finite-variation integrands.
//!
//! An integrand is stored as a jump-free part `φ^c` (node samples, linear in
//! between) plus left jumps `Δφ_k` and right jumps `Δ₊φ_k` at nodes. Left-jump
//! sums run over `0 < u ≤ t`, right-jump sums over `0 ≤ u < t`.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::path::{same_grid, LadlagPath, PathBundle};
use crate::timebase::{GridStoppingTime, TimeGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct FVIntegrand {
    grid: Arc<TimeGrid>,
    /// `φ^c` at the nodes.
    cont: Vec<f64>,
    /// `Δφ_k`; entry 0 is unused and kept at 0.
    left: Vec<f64>,
    /// `Δ₊φ_k`; entry `K` is 0.
    right: Vec<f64>,
}

/// Samples of a finite-variation function at the nodes together with its
/// one-sided limits there.
#[derive(Clone, Debug)]
pub struct FvSamples {
    pub grid: Arc<TimeGrid>,
    pub value: Vec<f64>,
    pub left_limit: Vec<f64>,
    pub right_limit: Vec<f64>,
}

impl FvSamples {
    /// Samples from closures for the value and the two one-sided limits.
    pub fn from_fns(
        grid: Arc<TimeGrid>,
        value: impl Fn(f64) -> f64,
        left: impl Fn(f64) -> f64,
        right: impl Fn(f64) -> f64,
    ) -> Self {
        let t = grid.nodes();
        FvSamples {
            value: t.iter().map(|&s| value(s)).collect(),
            left_limit: t.iter().map(|&s| left(s)).collect(),
            right_limit: t.iter().map(|&s| right(s)).collect(),
            grid,
        }
    }
}

impl FVIntegrand {
    pub fn from_parts(grid: Arc<TimeGrid>, cont: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let k = grid.len();
        if cont.len() != k || left.len() != k || right.len() != k {
            return Err(LabError::InvalidArgument(format!("integrand parts need {k} entries each")));
        }
        let mut left = left;
        let mut right = right;
        left[0] = 0.0;
        right[k - 1] = 0.0;
        Ok(FVIntegrand { grid, cont, left, right })
    }

    /// Split node values and one-sided limits into `φ^c`, `Δφ`, `Δ₊φ`.
    pub fn from_samples(s: &FvSamples) -> Result<Self> {
        let k = s.grid.len();
        if s.value.len() != k || s.left_limit.len() != k || s.right_limit.len() != k {
            return Err(LabError::InvalidArgument(format!("samples need {k} entries each")));
        }
        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];
        for j in 0..k {
            if j > 0 {
                left[j] = s.value[j] - s.left_limit[j];
            }
            if j + 1 < k {
                right[j] = s.right_limit[j] - s.value[j];
            }
        }
        let mut cont = vec![0.0; k];
        let (mut cl, mut cr) = (0.0, 0.0);
        for j in 0..k {
            cl += left[j];
            cont[j] = s.value[j] - cl - cr;
            cr += right[j];
        }
        Ok(FVIntegrand { grid: s.grid.clone(), cont, left, right })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn continuous_part(&self) -> &[f64] {
        &self.cont
    }

    pub fn left_jumps(&self) -> &[f64] {
        &self.left
    }

    pub fn right_jumps(&self) -> &[f64] {
        &self.right
    }

    /// `φ^c_k` plus left jumps at nodes `1..l_end` and right jumps at `0..r_end`.
    fn assemble(&self, k: usize, l_end: usize, r_end: usize) -> f64 {
        self.cont[k] + self.left[1.min(l_end)..l_end].iter().sum::<f64>() + self.right[..r_end].iter().sum::<f64>()
    }

    /// `φ_{t_k}`.
    pub fn value(&self, k: usize) -> f64 {
        self.assemble(k, k + 1, k)
    }

    /// `φ_{t_k-}` (zero at the first node).
    pub fn left_limit(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.assemble(k, k, k)
        }
    }

    /// `φ_{t_k+}`.
    pub fn right_limit(&self, k: usize) -> f64 {
        self.assemble(k, k + 1, k + 1)
    }

    /// Total variation on the grid.
    pub fn variation(&self) -> f64 {
        self.cont.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
            + self.left.iter().map(|x| x.abs()).sum::<f64>()
            + self.right.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Split a piecewise-constant path: all of its variation sits in jumps, so
/// `φ^c` is constant.
pub fn split_integrand(phi: &LadlagPath) -> Result<FVIntegrand> {
    let k = phi.node_values().len();
    FVIntegrand::from_samples(&FvSamples {
        grid: phi.grid().clone(),
        value: phi.node_values().to_vec(),
        left_limit: (0..k).map(|j| if j == 0 { phi.value(0) } else { phi.left_limit(j) }).collect(),
        right_limit: (0..k).map(|j| phi.right_limit(j)).collect(),
    })
}

fn check(x: &LadlagPath, phi: &FVIntegrand, t: usize) -> Result<()> {
    same_grid(x.grid(), &phi.grid)?;
    if t >= phi.grid.len() {
        return Err(LabError::InvalidArgument(format!("node {t} outside grid")));
    }
    Ok(())
}

/// `∫₀ᵗ X dφ` at node `t`.
pub fn integrate_x_dphi(x: &LadlagPath, phi: &FVIntegrand, t: usize) -> Result<f64> {
    check(x, phi, t)?;
    let iv = x.interval_values();
    let mut s = 0.0;
    for k in 0..t {
        s += iv[k] * (phi.cont[k + 1] - phi.cont[k]);
        s += x.value(k) * phi.right[k];
    }
    for k in 1..=t {
        s += x.left_limit(k) * phi.left[k];
    }
    Ok(s)
}

/// `∫₀ᵗ φ dX` at node `t`.
pub fn integrate_phi_dx(phi: &FVIntegrand, x: &LadlagPath, t: usize) -> Result<f64> {
    check(x, phi, t)?;
    let xt = x.value(t);
    let mut s = 0.0;
    for k in 1..=t {
        let (dl, _) = x.jumps(k);
        s += phi.cont[k] * dl + phi.left[k] * (xt - x.left_limit(k));
    }
    for k in 0..t {
        let (_, dr) = x.jumps(k);
        s += phi.cont[k] * dr + phi.right[k] * (xt - x.value(k));
    }
    Ok(s)
}

/// `φ_t X_t − φ_0 X_0 − ∫φ dX − ∫X dφ`.
pub fn integration_by_parts_residual(phi: &FVIntegrand, x: &LadlagPath, t: usize) -> Result<f64> {
    let a = integrate_phi_dx(phi, x, t)?;
    let b = integrate_x_dphi(x, phi, t)?;
    Ok(phi.value(t) * x.value(t) - phi.value(0) * x.value(0) - a - b)
}

fn pick<'a>(phis: &'a [FVIntegrand], s: usize) -> &'a FVIntegrand {
    if phis.len() == 1 {
        &phis[0]
    } else {
        &phis[s]
    }
}

/// `∫₀^τ φ dX` per scenario; `phis` holds one integrand per scenario or a
/// single shared one.
pub fn integrate_at(phis: &[FVIntegrand], x: &PathBundle, tau: &GridStoppingTime) -> Result<Vec<f64>> {
    check_family(phis, x.n_scenarios())?;
    (0..x.n_scenarios())
        .map(|s| {
            let k = tau.nodes[s].ok_or(LabError::InfiniteStoppingTime { scenario: s })?;
            integrate_phi_dx(pick(phis, s), x.path(s), k)
        })
        .collect()
}

fn check_family(phis: &[FVIntegrand], n: usize) -> Result<()> {
    if phis.len() != 1 && phis.len() != n {
        return Err(LabError::InvalidArgument(format!("{} integrands for {n} scenarios", phis.len())));
    }
    Ok(())
}

/// Limit object for integrals along a converging sequence: left jumps of
/// `φ` are paired with the predictable limit `X0`, everything else with the
/// optional limit `X1`.
pub fn limit_integral_formula(
    phis: &[FVIntegrand],
    x1: &PathBundle,
    x0: &PathBundle,
    tau: &GridStoppingTime,
) -> Result<Vec<f64>> {
    x1.check_aligned(x0)?;
    check_family(phis, x1.n_scenarios())?;
    (0..x1.n_scenarios())
        .map(|s| {
            let t = tau.nodes[s].ok_or(LabError::InfiniteStoppingTime { scenario: s })?;
            let phi = pick(phis, s);
            let (p1, p0) = (x1.path(s), x0.path(s));
            check(p1, phi, t)?;
            let xt = p1.value(t);
            let mut v = 0.0;
            for k in 1..=t {
                v += phi.cont[k] * p1.jumps(k).0 + phi.left[k] * (xt - p0.value(k));
            }
            for k in 0..t {
                v += phi.cont[k] * p1.jumps(k).1 + phi.right[k] * (xt - p1.value(k));
            }
            Ok(v)
        })
        .collect()
}
