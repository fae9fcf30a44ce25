//! Convex-combination extraction, Fatou limits and convergence-in-probability
//! estimators for sequences of path bundles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::path::{evaluate_at, EvalSide, LadlagPath, PathBundle};
use crate::timebase::GridStoppingTime;
use crate::tree::left_limit_process;

/// For each output index `n`, a finite convex weight vector over input
/// indices `≥ n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexScheme {
    rows: Vec<Vec<(usize, f64)>>,
}

const WEIGHT_TOL: f64 = 1e-12;

impl ConvexScheme {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for (n, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(LabError::InvalidArgument(format!("scheme row {n} is empty")));
            }
            if let Some(&(i, _)) = row.iter().find(|(i, _)| *i < n) {
                return Err(LabError::InvalidArgument(format!("scheme row {n} uses earlier input {i}")));
            }
            if row.iter().any(|(_, w)| !(*w >= 0.0)) {
                return Err(LabError::InvalidArgument(format!("scheme row {n} has a negative weight")));
            }
            let s: f64 = row.iter().map(|(_, w)| w).sum();
            if (s - 1.0).abs() > WEIGHT_TOL {
                return Err(LabError::InvalidArgument(format!("scheme row {n} sums to {s}")));
            }
        }
        Ok(ConvexScheme { rows })
    }

    pub fn identity(n: usize) -> Self {
        ConvexScheme { rows: (0..n).map(|i| vec![(i, 1.0)]).collect() }
    }

    /// Output `j` is the mean of inputs `sub[j..j + window]`.
    pub fn cesaro(sub: &[usize], window: usize) -> Result<Self> {
        if window == 0 || window > sub.len() {
            return Err(LabError::InvalidArgument(format!("window {window} for {} indices", sub.len())));
        }
        if sub.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidArgument("subsequence must be strictly increasing".into()));
        }
        let w = 1.0 / window as f64;
        Self::new((0..=sub.len() - window).map(|j| sub[j..j + window].iter().map(|&i| (i, w)).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// Number of inputs the scheme reads.
    pub fn input_len(&self) -> usize {
        self.rows.iter().flatten().map(|(i, _)| i + 1).max().unwrap_or(0)
    }

    /// `self ∘ inner`: the outputs of `inner` feed `self`.
    pub fn compose(&self, inner: &ConvexScheme) -> Result<Self> {
        if self.input_len() > inner.len() {
            return Err(LabError::InvalidArgument(format!(
                "outer scheme reads {} inputs, inner provides {}",
                self.input_len(),
                inner.len()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = std::collections::BTreeMap::<usize, f64>::new();
                for &(i, wo) in row {
                    for &(j, wi) in &inner.rows[i] {
                        *acc.entry(j).or_default() += wo * wi;
                    }
                }
                acc.into_iter().filter(|(_, w)| *w > 0.0).collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Combine one scenario's index sequence.
    pub fn apply(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if self.input_len() > inputs.len() {
            return Err(LabError::InvalidArgument(format!("scheme needs {} inputs", self.input_len())));
        }
        Ok(self.rows.iter().map(|r| r.iter().map(|&(i, w)| w * inputs[i]).sum()).collect())
    }

    /// Combine every scenario row of a scenarios×indices matrix.
    pub fn apply_rows(&self, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        samples.iter().map(|r| self.apply(r)).collect()
    }
}

/// Pathwise convex combinations of aligned bundles.
pub fn apply_scheme(bundles: &[PathBundle], scheme: &ConvexScheme) -> Result<Vec<PathBundle>> {
    if scheme.input_len() > bundles.len() {
        return Err(LabError::InvalidArgument(format!(
            "scheme reads {} bundles, got {}",
            scheme.input_len(),
            bundles.len()
        )));
    }
    for b in &bundles[1..] {
        bundles[0].check_aligned(b)?;
    }
    let first = &bundles[0];
    scheme
        .rows()
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let paths = (0..first.n_scenarios())
                .map(|s| {
                    let p0 = first.path(s);
                    let mut node = vec![0.0; p0.node_values().len()];
                    let mut iv = vec![0.0; p0.interval_values().len()];
                    for &(i, w) in row {
                        let p = bundles[i].path(s);
                        node.iter_mut().zip(p.node_values()).for_each(|(a, b)| *a += w * b);
                        iv.iter_mut().zip(p.interval_values()).for_each(|(a, b)| *a += w * b);
                    }
                    LadlagPath::new(first.grid().clone(), node, iv)
                })
                .collect::<Result<Vec<_>>>()?;
            first.with_paths(paths, format!("{}-comb{n}", first.provenance.tag))
        })
        .collect()
}

/// Running means along `sub`, per scenario row.
pub fn cesaro_means(samples: &[Vec<f64>], sub: &[usize]) -> Result<Vec<Vec<f64>>> {
    if sub.is_empty() {
        return Err(LabError::InvalidArgument("empty subsequence".into()));
    }
    if sub.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument("subsequence must be strictly increasing".into()));
    }
    samples
        .iter()
        .map(|row| {
            if *sub.last().unwrap() >= row.len() {
                return Err(LabError::InvalidArgument(format!("index {} outside row", sub.last().unwrap())));
            }
            let mut s = 0.0;
            Ok(sub
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    s += row[i];
                    s / (j + 1) as f64
                })
                .collect())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KomlosParams {
    /// Level of the Cauchy diagnostic.
    pub eps: f64,
    /// Allowed exceedance in the Cauchy diagnostic.
    pub delta: f64,
    /// Quantile of pooled `|f|` that sets the scale of the truncation ladder.
    pub scale_quantile: f64,
    /// Ladder slope: `C_k = slope · (k+1) · scale`.
    pub ladder_slope: f64,
    /// Late-to-early ratio of mean `|f|` above which the columns count as unbounded.
    pub growth_limit: f64,
}

impl Default for KomlosParams {
    fn default() -> Self {
        KomlosParams { eps: 0.1, delta: 0.05, scale_quantile: 0.99, ladder_slope: 0.5, growth_limit: 20.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KomlosExtraction {
    pub scheme: ConvexScheme,
    pub subsequence: Vec<usize>,
    pub window: usize,
    /// Estimated `P(|f̃_last − f̃_{last−window}| > eps)` for the chosen window.
    pub cauchy_estimate: f64,
    pub cauchy_passed: bool,
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let i = ((v.len() - 1) as f64 * q).round() as usize;
    *v.select_nth_unstable_by(i, |a, b| a.total_cmp(b)).1
}

/// Forward convex combinations for a scenarios×indices sample matrix.
///
/// A subsequence is chosen greedily along a truncation ladder: `n_k` is the
/// first index after `n_{k−1}` whose estimated `P(|f| > C_k)` is at most
/// `2^{−k}`. Once `2^{−k}` drops below the sample resolution the rest of the
/// indices are accepted only if none of them shows a single exceedance. The
/// combination window is the shortest power of two whose disjoint-window
/// Cauchy diagnostic passes.
pub fn komlos_extract(samples: &[Vec<f64>], params: &KomlosParams) -> Result<KomlosExtraction> {
    let s = samples.len();
    let n = samples.first().map_or(0, |r| r.len());
    if s == 0 || n == 0 {
        return Err(LabError::InvalidArgument("empty sample matrix".into()));
    }
    if samples.iter().any(|r| r.len() != n) {
        return Err(LabError::InvalidArgument("ragged sample matrix".into()));
    }
    let means: Vec<f64> = (0..n).map(|j| samples.iter().map(|r| r[j].abs()).sum::<f64>() / s as f64).collect();
    if let Some(j) = means.iter().position(|m| !m.is_finite()) {
        return Err(LabError::Unbounded(format!("column {j} has non-finite mean")));
    }
    let q = (n / 4).max(1);
    let early = means[..q].iter().sum::<f64>() / q as f64;
    let late = means[n - q..].iter().sum::<f64>() / q as f64;
    if late > params.growth_limit * early.max(1e-300) && late > 1e-12 {
        return Err(LabError::Unbounded(format!(
            "mean |f| grows from {early:.4} (first quarter) to {late:.4} (last quarter)"
        )));
    }
    let scale = quantile(samples.iter().flatten().map(|x| x.abs()).collect(), params.scale_quantile);
    let tail = |j: usize, c: f64| samples.iter().filter(|r| r[j].abs() > c).count();

    let mut sub = Vec::new();
    let mut next = 0;
    let mut k = 0i32;
    while next < n {
        let c = params.ladder_slope * (k + 1) as f64 * scale;
        let target = 2f64.powi(-k);
        if target * (s as f64) < 1.0 {
            if (next..n).all(|j| tail(j, c) == 0) {
                sub.extend(next..n);
            }
            break;
        }
        match (next..n).find(|&j| tail(j, c) as f64 <= target * s as f64) {
            Some(j) => {
                sub.push(j);
                next = j + 1;
                k += 1;
            }
            None => break,
        }
    }
    if sub.is_empty() {
        sub.push(n - 1);
    }
    let l = sub.len();
    let cauchy = |w: usize| -> f64 {
        let (a, b) = (l - w, l - 2 * w);
        let cnt = samples
            .iter()
            .filter(|r| {
                let ma: f64 = sub[a..a + w].iter().map(|&i| r[i]).sum::<f64>() / w as f64;
                let mb: f64 = sub[b..b + w].iter().map(|&i| r[i]).sum::<f64>() / w as f64;
                (ma - mb).abs() > params.eps
            })
            .count();
        cnt as f64 / s as f64
    };
    let mut chosen = None;
    let mut w = 1;
    while 2 * w <= l {
        let est = cauchy(w);
        if est <= params.delta {
            chosen = Some((w, est, true));
            break;
        }
        w *= 2;
    }
    let (window, cauchy_estimate, cauchy_passed) = chosen.unwrap_or_else(|| {
        let w = (l / 2).max(1);
        (w, if 2 * w <= l { cauchy(w) } else { 1.0 }, false)
    });
    Ok(KomlosExtraction {
        scheme: ConvexScheme::cesaro(&sub, window)?,
        subsequence: sub,
        window,
        cauchy_estimate,
        cauchy_passed,
    })
}

/// Weighted fraction of scenarios with `|a − b| > eps`.
pub fn exceedance(a: &[f64], b: &[f64], weights: &[f64], eps: f64) -> f64 {
    a.iter().zip(b).zip(weights).filter(|((x, y), _)| (*x - *y).abs() > eps).fold(0.0, |acc, (_, w)| acc + w)
}

/// Binomial standard error for a weighted proportion.
pub fn binomial_stderr(p: f64, effective_n: f64) -> f64 {
    (p * (1.0 - p) / effective_n.max(1.0)).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Stabilization {
    pub eps: f64,
    pub eps_stab: f64,
}

impl Default for Stabilization {
    fn default() -> Self {
        Stabilization { eps: 0.1, eps_stab: 1e-3 }
    }
}

fn check_stable(bundles: &[PathBundle], nodes: &[usize], st: Stabilization, what: &str, f: impl Fn(&LadlagPath, usize) -> f64) -> Result<()> {
    let tail = &bundles[bundles.len().saturating_sub(3)..];
    let w = bundles[0].weights();
    for &k in nodes {
        let vals: Vec<Vec<f64>> = tail.iter().map(|b| b.paths().iter().map(|p| f(p, k)).collect()).collect();
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let e = exceedance(&vals[i], &vals[j], w, st.eps);
                if e > st.eps_stab {
                    return Err(LabError::NotStabilized(format!(
                        "{what} at node {k}: exceedance {e:.3e} between the last indices exceeds {:.1e}",
                        st.eps_stab
                    )));
                }
            }
        }
    }
    Ok(())
}

fn check_seq(bundles: &[PathBundle]) -> Result<()> {
    let first = bundles.first().ok_or_else(|| LabError::InvalidArgument("empty bundle sequence".into()))?;
    for b in &bundles[1..] {
        first.check_aligned(b)?;
    }
    Ok(())
}

/// Right limit along `subgrid` of the pointwise limits `z`:
/// `X̄_{t_k} = Z_q` for the first subgrid node `q > t_k`, `X̄_1 = Z_1`.
pub fn fatou_regularize(z: &PathBundle, subgrid: &[usize]) -> Result<PathBundle> {
    let last = z.grid().last();
    if subgrid.last() != Some(&last) || subgrid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument("subgrid must be increasing and end at the last node".into()));
    }
    let next: Vec<usize> = (0..=last)
        .map(|k| if k == last { last } else { subgrid[subgrid.partition_point(|&q| q <= k)] })
        .collect();
    let paths = z
        .paths()
        .iter()
        .map(|p| LadlagPath::cadlag(p.grid().clone(), next.iter().map(|&q| p.value(q)).collect()))
        .collect::<Result<Vec<_>>>()?;
    z.with_paths(paths, format!("{}-fatou", z.provenance.tag))
}

/// Fatou limit of a bundle sequence: the last member stands in for the
/// pointwise limit once the last three members agree on `subgrid`.
pub fn fatou_limit(bundles: &[PathBundle], subgrid: &[usize], st: Stabilization) -> Result<PathBundle> {
    check_seq(bundles)?;
    check_stable(bundles, subgrid, st, "node value", |p, k| p.value(k))?;
    fatou_regularize(bundles.last().unwrap(), subgrid)
}

/// Both limits of a sequence: `X1` from node values, `X0` from left limits.
pub fn double_limit(bundles: &[PathBundle], check_nodes: &[usize], st: Stabilization) -> Result<(PathBundle, PathBundle)> {
    check_seq(bundles)?;
    check_stable(bundles, check_nodes, st, "node value", |p, k| p.value(k))?;
    check_stable(bundles, check_nodes, st, "left limit", |p, k| p.left_limit(k))?;
    let x1 = bundles.last().unwrap().clone();
    let x0 = left_limit_process(&x1)?;
    Ok((x1, x0))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceCell {
    pub n: usize,
    pub tau_id: String,
    pub side: EvalSide,
    pub eps: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub seed: u64,
    pub cells: Vec<ConvergenceCell>,
}

impl ConvergenceReport {
    /// Estimate at the largest `n` for a given `(tau, eps, side)`.
    pub fn final_estimate(&self, tau_id: &str, eps: f64, side: EvalSide) -> Option<&ConvergenceCell> {
        self.cells
            .iter()
            .filter(|c| c.tau_id == tau_id && c.eps == eps && c.side == side)
            .max_by_key(|c| c.n)
    }

    /// Whether every estimate with `n ≥ n_min` lies below `threshold`.
    pub fn eventually_below(&self, n_min: usize, threshold: f64) -> bool {
        self.cells.iter().filter(|c| c.n >= n_min).all(|c| c.estimate < threshold)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exceedance estimates `P(|X^n_τ − X_τ| > ε)` for every `(n, τ, ε)`; `side`
/// picks node value or left limit of the sequence, `target_side` the same for
/// the target.
#[allow(clippy::too_many_arguments)]
pub fn convergence_in_probability(
    ns: &[usize],
    bundles: &[PathBundle],
    target: &PathBundle,
    taus: &[(String, GridStoppingTime)],
    eps_list: &[f64],
    side: EvalSide,
    target_side: EvalSide,
    seed: u64,
) -> Result<ConvergenceReport> {
    if ns.len() != bundles.len() {
        return Err(LabError::InvalidArgument("one label per bundle required".into()));
    }
    check_seq(bundles)?;
    target.check_aligned(&bundles[0])?;
    let tv: Vec<Vec<f64>> = taus.iter().map(|(_, t)| evaluate_at(target, t, target_side)).collect::<Result<_>>()?;
    let w = target.weights();
    let neff = target.effective_size();
    let cells: Vec<Vec<ConvergenceCell>> = bundles
        .par_iter()
        .zip(ns.par_iter())
        .map(|(b, &n)| -> Result<Vec<ConvergenceCell>> {
            let mut out = Vec::new();
            for ((id, tau), tvals) in taus.iter().zip(&tv) {
                let xv = evaluate_at(b, tau, side)?;
                for &eps in eps_list {
                    let p = exceedance(&xv, tvals, w, eps);
                    out.push(ConvergenceCell {
                        n,
                        tau_id: id.clone(),
                        side,
                        eps,
                        estimate: p,
                        stderr: binomial_stderr(p, neff),
                        samples: b.n_scenarios(),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport { seed, cells: cells.into_iter().flatten().collect() })
}

/// `E[(X^n_τ − X̄_τ)^−]` per member of the sequence.
pub fn one_sided_gap(bundles: &[PathBundle], target: &PathBundle, tau: &GridStoppingTime) -> Result<Vec<f64>> {
    check_seq(bundles)?;
    target.check_aligned(&bundles[0])?;
    let tv = evaluate_at(target, tau, EvalSide::At)?;
    bundles
        .iter()
        .map(|b| {
            let xv = evaluate_at(b, tau, EvalSide::At)?;
            Ok(xv.iter().zip(&tv).zip(target.weights()).map(|((x, t), w)| w * (t - x).max(0.0)).sum())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LeftLimitReport {
    /// `(n, estimate, stderr)` for `P(|X^n_{σ−} − X_{σ−}| > ε)`.
    pub estimates: Vec<(usize, f64, f64)>,
    pub threshold: f64,
    pub passed: bool,
}

/// Left-limit convergence at `sigma`; passes when the estimate for the
/// largest `n` is below `threshold`.
pub fn left_limit_convergence_check(
    ns: &[usize],
    bundles: &[PathBundle],
    target: &PathBundle,
    sigma: &GridStoppingTime,
    eps: f64,
    threshold: f64,
) -> Result<LeftLimitReport> {
    let rep = convergence_in_probability(
        ns,
        bundles,
        target,
        &[("sigma".into(), sigma.clone())],
        &[eps],
        EvalSide::Left,
        EvalSide::Left,
        0,
    )?;
    let estimates: Vec<_> = rep.cells.iter().map(|c| (c.n, c.estimate, c.stderr)).collect();
    let passed = rep.final_estimate("sigma", eps, EvalSide::Left).is_some_and(|c| c.estimate < threshold);
    Ok(LeftLimitReport { estimates, threshold, passed })
}

/// Worst case over `zoo` of `P(|X_{ρ_m} − X_{τ−}| > ε)`, where `ρ_m` is the
/// last level-`m` dyadic strictly before `τ` (`ρ_m = 0` and the node value is
/// used when `τ = 0`). Returns `(m, estimate)` pairs.
pub fn dyadic_gap_diagnostic(zoo: &[(PathBundle, GridStoppingTime)], levels: &[u32], eps: f64) -> Result<Vec<(u32, f64)>> {
    levels
        .iter()
        .map(|&m| {
            let mut worst: f64 = 0.0;
            for (b, tau) in zoo {
                let dy = b.grid().dyadic_nodes(m)?;
                let mut approx = Vec::with_capacity(b.n_scenarios());
                let mut exact = Vec::with_capacity(b.n_scenarios());
                for s in 0..b.n_scenarios() {
                    let k = tau.nodes[s].ok_or(LabError::InfiniteStoppingTime { scenario: s })?;
                    let p = b.path(s);
                    if k == 0 {
                        approx.push(p.value(0));
                        exact.push(p.value(0));
                    } else {
                        let rho = dy[dy.partition_point(|&q| q < k) - 1];
                        approx.push(p.value(rho));
                        exact.push(p.left_limit(k));
                    }
                }
                worst = worst.max(exceedance(&approx, &exact, b.weights(), eps));
            }
            Ok((m, worst))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Provenance;
    use crate::timebase::TimeGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn cesaro_examples() {
        let m = cesaro_means(&[vec![3.0; 5]], &[0, 1, 2, 3, 4]).unwrap();
        assert!(m[0].iter().all(|&v| v == 3.0));
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
        let m = cesaro_means(&[alt], &(0..1000).collect::<Vec<_>>()).unwrap();
        assert_eq!(*m[0].last().unwrap(), 1.0);
        assert!(cesaro_means(&[vec![1.0]], &[]).is_err());
        assert!(cesaro_means(&[vec![1.0, 2.0]], &[1, 0]).is_err());
    }

    #[test]
    fn cesaro_along_squares_kills_rare_spikes() {
        // f_n = n·1(U_n ≤ 1/n) along n = k², one path per seed
        let k_max = 100_000usize;
        let good = (0..1000u64)
            .filter(|&seed| {
                let mut rng = seeded(seed);
                let row: Vec<f64> = (1..=k_max)
                    .map(|k| {
                        let n = (k * k) as f64;
                        if rng.random::<f64>() <= 1.0 / n { n } else { 0.0 }
                    })
                    .collect();
                let m = cesaro_means(&[row], &(0..k_max).collect::<Vec<_>>()).unwrap();
                *m[0].last().unwrap() < 0.05
            })
            .count();
        assert!(good >= 950, "{good}");
    }

    #[test]
    fn scheme_validation_and_composition() {
        assert!(ConvexScheme::new(vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 1.0)]]).is_err());
        assert!(ConvexScheme::new(vec![vec![(0, 0.7)]]).is_err());
        let a = ConvexScheme::cesaro(&[0, 1, 2, 3], 2).unwrap();
        let b = ConvexScheme::cesaro(&[0, 2, 4, 6, 8], 2).unwrap();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.len(), 3);
        let x: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
        let direct = c.apply(&x).unwrap();
        let staged = a.apply(&b.apply(&x).unwrap()).unwrap();
        for (u, v) in direct.iter().zip(&staged) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    fn random_scheme(rng: &mut impl Rng, outputs: usize, inputs: usize) -> ConvexScheme {
        let rows = (0..outputs)
            .map(|n| {
                let k = rng.random_range(1..=3usize);
                let idx: Vec<usize> = (0..k).map(|_| rng.random_range(n..inputs)).collect();
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let mut row: Vec<(usize, f64)> = idx.into_iter().zip(raw.into_iter().map(|w| w / s)).collect();
                row.sort_by_key(|r| r.0);
                row
            })
            .collect();
        ConvexScheme::new(rows).unwrap()
    }

    proptest! {
        #[test]
        fn composition_associative_and_forward(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let a = random_scheme(&mut rng, 3, 5);
            let b = random_scheme(&mut rng, 5, 8);
            let c = random_scheme(&mut rng, 8, 12);
            let l = a.compose(&b).unwrap().compose(&c).unwrap();
            let r = a.compose(&b.compose(&c).unwrap()).unwrap();
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            for (u, v) in l.apply(&x).unwrap().iter().zip(r.apply(&x).unwrap()) {
                prop_assert!((u - v).abs() < 1e-12);
            }
            for (n, row) in l.rows().iter().enumerate() {
                prop_assert!(row.iter().all(|(i, _)| *i >= n));
            }
        }

        #[test]
        fn apply_commutes_with_evaluation(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let g = Arc::new(TimeGrid::dyadic(2).unwrap());
            let bundles: Vec<PathBundle> = (0..4).map(|i| {
                let paths = (0..3).map(|_| LadlagPath::new(g.clone(),
                    (0..5).map(|_| rng.random_range(0.0..2.0)).collect(),
                    (0..4).map(|_| rng.random_range(0.0..2.0)).collect()).unwrap()).collect();
                PathBundle::uniform(g.clone(), paths, Provenance::new(i, "p")).unwrap()
            }).collect();
            let sch = random_scheme(&mut rng, 2, 4);
            let comb = apply_scheme(&bundles, &sch).unwrap();
            let tau = GridStoppingTime::new(g.clone(), vec![Some(1), Some(4), Some(2)]).unwrap();
            for side in [EvalSide::At, EvalSide::Left] {
                let evals: Vec<f64> = bundles.iter().map(|b| evaluate_at(b, &tau, side).unwrap()).flat_map(|v| v.into_iter()).collect();
                for (n, b) in comb.iter().enumerate() {
                    let got = evaluate_at(b, &tau, side).unwrap();
                    for s in 0..3 {
                        let want: f64 = sch.rows()[n].iter().map(|&(i, w)| w * evals[i * 3 + s]).sum();
                        prop_assert!((got[s] - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    fn spikes(seed: u64, s: usize, n: usize) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..s)
            .map(|_| (1..=n).map(|i| if rng.random::<f64>() <= 1.0 / i as f64 { i as f64 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn komlos_on_spikes_out_of_sample() {
        let ex = komlos_extract(&spikes(1, 2000, 1024), &KomlosParams::default()).unwrap();
        assert!(ex.cauchy_passed);
        assert!(ex.subsequence.len() < 40, "{:?}", ex.subsequence);
        let fresh = ex.scheme.apply_rows(&spikes(2, 2000, 1024)).unwrap();
        let p = fresh.iter().filter(|r| r.last().unwrap().abs() > 0.1).count() as f64 / 2000.0;
        assert!(p < 0.05, "{p}");
    }

    #[test]
    fn komlos_iid_behaves_like_long_means() {
        let gen = |seed| {
            let mut rng = seeded(seed);
            (0..2000).map(|_| (0..1024).map(|_| rng.random_range(0.0..2.0)).collect::<Vec<f64>>()).collect::<Vec<_>>()
        };
        let ex = komlos_extract(&gen(3), &KomlosParams::default()).unwrap();
        assert_eq!(ex.subsequence.len(), 1024);
        assert!(ex.window >= 64);
        let out = ex.scheme.apply_rows(&gen(4)).unwrap();
        // LLN oracle: sd of the mean is 1/sqrt(3·window)
        let sd = (1.0 / (3.0 * ex.window as f64)).sqrt();
        let far = out.iter().filter(|r| (r.last().unwrap() - 1.0).abs() > 5.0 * sd).count();
        assert!(far <= 2, "{far}");
    }

    #[test]
    fn komlos_convergent_and_unbounded() {
        let s: Vec<Vec<f64>> = (0..50).map(|i| (0..64).map(|n| 1.0 + (i as f64) / (n as f64 + 1.0)).collect()).collect();
        let ex = komlos_extract(&s, &KomlosParams::default()).unwrap();
        let out = ex.scheme.apply_rows(&s).unwrap();
        assert!(out.iter().enumerate().all(|(i, r)| (r.last().unwrap() - 1.0).abs() < 1.0 + i as f64 / 16.0));
        let bad: Vec<Vec<f64>> = (0..50).map(|_| (0..64).map(|n| (n * n) as f64).collect()).collect();
        assert!(matches!(komlos_extract(&bad, &KomlosParams::default()), Err(LabError::Unbounded(_))));
    }

    fn grid3() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::dyadic(3).unwrap())
    }

    #[test]
    fn fatou_regularization_right_limit() {
        let g = grid3();
        // pointwise limit 1_{[0,1/2]}
        let z = LadlagPath::cadlag(g.clone(), (0..9).map(|k| (k <= 4) as u8 as f64).collect()).unwrap();
        let zb = PathBundle::uniform(g.clone(), vec![z], Provenance::new(0, "z")).unwrap();
        let x = fatou_regularize(&zb, &(0..9).collect::<Vec<_>>()).unwrap();
        let want: Vec<f64> = (0..9).map(|k| (k < 4) as u8 as f64).collect();
        assert_eq!(x.path(0).node_values(), &want[..]);
        assert!(x.path(0).is_cadlag());
        assert!(fatou_regularize(&zb, &[0, 4]).is_err());
    }

    #[test]
    fn stabilization_and_double_limit() {
        let g = grid3();
        let mk = |c: f64| {
            let p = LadlagPath::new(g.clone(), vec![1.0, 2.0, 3.0, 2.0, 1.0, 0.0, 1.0, 2.0, c], vec![1.5; 8]).unwrap();
            PathBundle::uniform(g.clone(), vec![p], Provenance::new(0, "c")).unwrap()
        };
        let seq = vec![mk(1.0), mk(1.0), mk(1.0)];
        let (x1, x0) = double_limit(&seq, &(0..9).collect::<Vec<_>>(), Stabilization::default()).unwrap();
        assert_eq!(x1.path(0), seq[0].path(0));
        assert_eq!(x0.path(0).node_values()[3], 1.5);
        let moving = vec![mk(1.0), mk(2.0), mk(3.0)];
        match double_limit(&moving, &[8], Stabilization::default()) {
            Err(LabError::NotStabilized(msg)) => assert!(msg.contains("node 8")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convergence_report_zero_against_self_and_gap() {
        let g = grid3();
        let mut rng = seeded(8);
        let b = {
            let paths = (0..20).map(|_| LadlagPath::cadlag(g.clone(), (0..9).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()).collect();
            PathBundle::uniform(g.clone(), paths, Provenance::new(8, "r")).unwrap()
        };
        let tau = GridStoppingTime::constant(g.clone(), 20, 5).unwrap();
        let rep = convergence_in_probability(&[1, 2], &[b.clone(), b.clone()], &b, &[("t".into(), tau.clone())], &[0.1, 0.5], EvalSide::At, EvalSide::At, 8).unwrap();
        assert!(rep.cells.iter().all(|c| c.estimate == 0.0 && c.stderr == 0.0));
        assert!(one_sided_gap(&[b.clone()], &b, &tau).unwrap()[0] == 0.0);
        let zoo = vec![(b.clone(), tau)];
        let gaps = dyadic_gap_diagnostic(&zoo, &[1, 2, 3], 0.1).unwrap();
        // càdlàg paths: at the finest level the gap vanishes
        assert_eq!(gaps[2].1, 0.0);
    }
}
