//! Adaptive stopping time along which convex combinations of independent
//! martingales blow up, and the lower bound on excursion probabilities that
//! drives it.
//!
//! Inputs are sequences of non-negative martingales with `M^n_τ ≈ 1 − τ`.
//! The built-in generator ([`ExcursionSequence`]) produces i.i.d. members on
//! a fine dyadic grid. Each member sits on the baseline `1 − t` and leaves it
//! rarely for a multiplicative excursion that returns to the baseline or
//! climbs. Every step is an exact two-point martingale step, so the mass the
//! baseline loses is carried by rare high excursions.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::limits::{binomial_stderr, ConvexScheme};
use crate::path::PathBundle;
use crate::rng;
use crate::timebase::{GridStoppingTime, TimeGrid};

/// Random access to a sequence of path bundles on one grid. Member and
/// scenario indices are 0-based.
pub trait PathSequence: Sync {
    fn grid(&self) -> &Arc<TimeGrid>;
    fn n_scenarios(&self) -> usize;
    /// Number of members, `None` when unbounded.
    fn n_members(&self) -> Option<usize>;
    fn value(&self, n: usize, s: usize, k: usize) -> f64;

    /// First node in `from..=to` whose value is at least `level`.
    fn first_at_least(&self, n: usize, s: usize, from: usize, to: usize, level: f64) -> Option<usize> {
        (from..=to).find(|&k| self.value(n, s, k) >= level)
    }

    /// First node in `from..=to` whose value is below `level`.
    fn first_below(&self, n: usize, s: usize, from: usize, to: usize, level: f64) -> Option<usize> {
        (from..=to).find(|&k| self.value(n, s, k) < level)
    }
}

impl PathSequence for [PathBundle] {
    fn grid(&self) -> &Arc<TimeGrid> {
        self[0].grid()
    }

    fn n_scenarios(&self) -> usize {
        self[0].n_scenarios()
    }

    fn n_members(&self) -> Option<usize> {
        Some(self.len())
    }

    fn value(&self, n: usize, s: usize, k: usize) -> f64 {
        self[n].path(s).value(k)
    }
}

/// Convex combinations `M̃^n = Σ_j w_{nj} M^j` of an underlying sequence.
pub struct Combined<'a, P: PathSequence + ?Sized> {
    pub inner: &'a P,
    pub scheme: &'a ConvexScheme,
}

impl<P: PathSequence + ?Sized> PathSequence for Combined<'_, P> {
    fn grid(&self) -> &Arc<TimeGrid> {
        self.inner.grid()
    }

    fn n_scenarios(&self) -> usize {
        self.inner.n_scenarios()
    }

    fn n_members(&self) -> Option<usize> {
        Some(self.scheme.len())
    }

    fn value(&self, n: usize, s: usize, k: usize) -> f64 {
        self.scheme.rows()[n].iter().map(|&(j, w)| w * self.inner.value(j, s, k)).sum()
    }
}

/// Parameters of the excursion generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcursionParams {
    /// Fine grid `D_m`.
    pub level: u32,
    /// Relative step size while close to the baseline.
    pub rel_step: f64,
    /// Cap on the absolute step size.
    pub max_step: f64,
}

impl Default for ExcursionParams {
    fn default() -> Self {
        ExcursionParams { level: 17, rel_step: 0.15, max_step: 0.2 }
    }
}

/// I.i.d. excursion martingales, generated lazily per `(member, scenario)`.
pub struct ExcursionSequence {
    grid: Arc<TimeGrid>,
    params: ExcursionParams,
    n_scenarios: usize,
    seed: u64,
    /// Cumulative baseline hazard: an excursion starts on step `j → j+1`
    /// with probability `1 − exp(−(cum[j+1] − cum[j]))`.
    cum: Vec<f64>,
}

impl ExcursionSequence {
    pub fn new(params: ExcursionParams, n_scenarios: usize, seed: u64) -> Result<Self> {
        if !(params.rel_step > 0.0 && params.rel_step < 1.0) || !(params.max_step > 0.0) {
            return Err(LabError::InvalidArgument("steps must satisfy 0 < rel_step < 1 and max_step > 0".into()));
        }
        if n_scenarios == 0 {
            return Err(LabError::InvalidArgument("need at least one scenario".into()));
        }
        let grid = Arc::new(TimeGrid::dyadic(params.level)?);
        let kk = grid.last();
        let dt = 1.0 / kk as f64;
        let mut cum = vec![0.0; kk + 1];
        for j in 0..kk {
            let b = 1.0 - grid.time(j);
            let d = (params.rel_step * b).min(params.max_step);
            cum[j + 1] = cum[j] + (dt / d).ln_1p();
        }
        Ok(ExcursionSequence { grid, params, n_scenarios, seed, cum })
    }

    fn baseline(&self, k: usize) -> f64 {
        1.0 - self.grid.time(k)
    }

    fn step(&self, x: f64) -> f64 {
        (self.params.rel_step * x).min(self.params.max_step)
    }

    fn sim(&self, n: usize, s: usize) -> Sim<'_> {
        Sim { seq: self, rng: rng::stream(self.seed, &[rng::tag("excursion"), n as u64, s as u64]), k: 0, x: 1.0, pending: None }
    }

    /// Dense path of one member, for inspection and the move-count zoo.
    pub fn dense_path(&self, n: usize, s: usize) -> Vec<f64> {
        let mut sim = self.sim(n, s);
        let mut out = vec![1.0; self.grid.len()];
        for (k, v) in out.iter_mut().enumerate().skip(1) {
            sim.advance(k, Stop::Never);
            *v = sim.x;
        }
        out
    }
}

/// Stopping rule for [`Sim::advance`].
#[derive(Clone, Copy)]
enum Stop {
    Never,
    AtLeast(f64),
    Below(f64),
}

impl Stop {
    fn hit(self, v: f64) -> bool {
        match self {
            Stop::Never => false,
            Stop::AtLeast(l) => v >= l,
            Stop::Below(l) => v < l,
        }
    }
}

/// Simulation state of one member on one scenario.
struct Sim<'a> {
    seq: &'a ExcursionSequence,
    rng: ChaCha8Rng,
    k: usize,
    x: f64,
    /// Step `j → j+1` on which the next excursion starts, once drawn.
    pending: Option<usize>,
}

impl Sim<'_> {
    fn idle(&self) -> bool {
        self.x <= self.seq.baseline(self.k)
    }

    /// First node in `from..=to` where the (decreasing) baseline triggers `stop`.
    fn baseline_hit(&self, from: usize, to: usize, stop: Stop) -> Option<usize> {
        if from > to {
            return None;
        }
        let seq = self.seq;
        match stop {
            Stop::Never => None,
            Stop::AtLeast(l) => (seq.baseline(from) >= l).then_some(from),
            Stop::Below(l) => {
                let last = seq.grid.last();
                // 1 - i/K < l  <=>  i > K(1 - l)
                let guess = ((last as f64) * (1.0 - l)).floor().max(0.0) as usize;
                let mut i = guess.saturating_sub(1).max(from);
                while i <= to && seq.baseline(i) >= l {
                    i += 1;
                }
                (i <= to).then_some(i)
            }
        }
    }

    /// Advance until `stop` holds at the current node or node `end` is
    /// reached. Idle stretches are skipped in one draw, and the draw is kept
    /// across calls so the path does not depend on how it is queried.
    fn advance(&mut self, end: usize, stop: Stop) -> bool {
        let seq = self.seq;
        while self.k < end {
            if self.idle() {
                let j = match self.pending {
                    Some(j) => j,
                    None => {
                        let e: f64 = Exp1.sample(&mut self.rng);
                        let target = seq.cum[self.k] + e;
                        // first j ≥ k with cum[j+1] ≥ target
                        let j = seq.cum.partition_point(|&c| c < target).saturating_sub(1).max(self.k);
                        self.pending = Some(j);
                        j
                    }
                };
                let stretch_end = j.min(end);
                if let Some(i) = self.baseline_hit(self.k + 1, stretch_end, stop) {
                    self.k = i;
                    self.x = seq.baseline(i);
                    return true;
                }
                if j >= end {
                    self.k = end;
                    self.x = seq.baseline(end);
                    return false;
                }
                self.pending = None;
                let b = seq.baseline(j);
                self.k = j + 1;
                self.x = b + seq.step(b);
            } else {
                let d = seq.step(self.x);
                let floor = seq.baseline(self.k + 1);
                let up = if self.x - d >= floor {
                    self.rng.random::<bool>()
                } else {
                    let gap = self.x - floor;
                    self.rng.random::<f64>() * (gap + d) < gap
                };
                self.k += 1;
                self.x = if up {
                    self.x + d
                } else if self.x - d >= floor {
                    self.x - d
                } else {
                    floor
                };
            }
            if stop.hit(self.x) {
                return true;
            }
        }
        false
    }
}

impl PathSequence for ExcursionSequence {
    fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    fn n_members(&self) -> Option<usize> {
        None
    }

    fn value(&self, n: usize, s: usize, k: usize) -> f64 {
        let mut sim = self.sim(n, s);
        sim.advance(k, Stop::Never);
        sim.x
    }

    fn first_at_least(&self, n: usize, s: usize, from: usize, to: usize, level: f64) -> Option<usize> {
        let mut sim = self.sim(n, s);
        if from > 0 {
            sim.advance(from, Stop::Never);
        }
        if sim.x >= level {
            return Some(sim.k);
        }
        sim.advance(to, Stop::AtLeast(level)).then_some(sim.k)
    }

    fn first_below(&self, n: usize, s: usize, from: usize, to: usize, level: f64) -> Option<usize> {
        let mut sim = self.sim(n, s);
        if from > 0 {
            sim.advance(from, Stop::Never);
        }
        if sim.x < level {
            return Some(sim.k);
        }
        sim.advance(to, Stop::Below(level)).then_some(sim.k)
    }
}

/// Lower bound `γ = ((α − 3ε − (c+1)ε)/(c+1)) p_A` on
/// `P(sup_{[τ,σ]} M̃^n > c + 1)`, where `α` is the mean length of `[τ, σ]`
/// on the event `A` of probability `p_A`.
pub fn ex2_gamma_bound(c: f64, alpha: f64, eps: f64, p_a: f64) -> Result<f64> {
    if !(c > 1.0 || c == 1.0) {
        return Err(LabError::Precondition(format!("level c = {c} must be at least 1")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LabError::Precondition(format!("ε = {eps} must lie in (0, 1)")));
    }
    if !(p_a > 0.0 && p_a <= 1.0) {
        return Err(LabError::Precondition(format!("P(A) = {p_a} must lie in (0, 1]")));
    }
    if !(alpha > (c + 4.0) * eps) {
        return Err(LabError::Precondition(format!("need α > (c + 4) ε, got α = {alpha}, (c + 4) ε = {}", (c + 4.0) * eps)));
    }
    Ok((alpha - 3.0 * eps - (c + 1.0) * eps) / (c + 1.0) * p_a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ex2Config {
    /// Target level `1 − ε` for `P(τ < 1)`.
    pub eps: f64,
    pub m_max: u32,
    /// Candidates searched per scenario before a level counts as failed.
    pub n_max: usize,
    /// Deviation size in the hypothesis check `P(|M^n_τ − (1 − τ)| > hyp_eps)`.
    pub hyp_eps: f64,
    /// Largest deviation probability accepted by the hypothesis check.
    pub hyp_tol: f64,
    /// Members used by the hypothesis check.
    pub hyp_members: usize,
    /// Dyadic level of the deterministic times in the hypothesis check.
    pub hyp_level: u32,
}

impl Default for Ex2Config {
    fn default() -> Self {
        Ex2Config { eps: 0.1, m_max: 5, n_max: 100_000, hyp_eps: 0.05, hyp_tol: 0.05, hyp_members: 3, hyp_level: 3 }
    }
}

/// Per-time estimates of `P(|M^n_t − (1 − t)| > hyp_eps)`, maximised over the checked members.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub passed: bool,
}

/// Check `M^n_t ≈ 1 − t` at the level-`hyp_level` dyadics `t ≤ 1/2`.
pub fn check_hypothesis<P: PathSequence + ?Sized>(seq: &P, cfg: &Ex2Config) -> Result<HypothesisCheck> {
    let grid = seq.grid();
    let dy = grid.dyadic_nodes(cfg.hyp_level)?;
    let nodes: Vec<usize> = dy.into_iter().filter(|&k| grid.time(k) <= 0.5).collect();
    let members = cfg.hyp_members.min(seq.n_members().unwrap_or(usize::MAX)).max(1);
    let n_sc = seq.n_scenarios();
    let mut estimates = Vec::new();
    let mut stderr = Vec::new();
    for &k in &nodes {
        let target = 1.0 - grid.time(k);
        let mut worst: f64 = 0.0;
        for n in 0..members {
            let bad = (0..n_sc).into_par_iter().filter(|&s| (seq.value(n, s, k) - target).abs() > cfg.hyp_eps).count();
            worst = worst.max(bad as f64 / n_sc as f64);
        }
        estimates.push(worst);
        stderr.push(binomial_stderr(worst, n_sc as f64));
    }
    let passed = estimates.iter().all(|&p| p <= cfg.hyp_tol);
    Ok(HypothesisCheck { times: nodes.iter().map(|&k| grid.time(k)).collect(), estimates, stderr, passed })
}

/// Recursion record of one scenario: `levels[m-1] = (n_m, τ_m, σ_m)`.
#[derive(Clone, Debug, Serialize)]
pub struct Ex2Trace {
    pub levels: Vec<(usize, usize, usize)>,
    /// Candidates examined in total.
    pub candidates: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ex2Report {
    pub hypothesis: HypothesisCheck,
    pub m_max: u32,
    pub p_tau_below_one: f64,
    pub p_tau_below_one_stderr: f64,
    /// `P(M̃^{n_m}_τ ≥ 2^m for all m ≤ m_max)`.
    pub p_all_levels: f64,
    pub p_all_levels_stderr: f64,
    /// Fraction of scenarios that completed level `m`, for `m = 1..=m_max`.
    pub level_success: Vec<f64>,
    pub mean_candidates: f64,
    pub traces: Vec<Ex2Trace>,
}

fn run_scenario<P: PathSequence + ?Sized>(seq: &P, s: usize, m_max: u32, n_max: usize) -> Ex2Trace {
    let half = seq.grid().node_index(0.5).expect("dyadic grid contains 1/2");
    let limit = seq.n_members().map_or(n_max, |l| l.min(n_max));
    let (mut tau, mut sigma, mut next_n) = (0usize, half, 0usize);
    let mut levels = Vec::new();
    let mut candidates = 0;
    for m in 1..=m_max {
        // interior nodes of the window; endpoints carry no room to move
        if sigma <= tau + 1 {
            break;
        }
        let (lo, hi) = (tau + 1, sigma - 1);
        let hit_level = 2f64.powi(m as i32) + 1.0;
        let mut found = None;
        for n in next_n..limit {
            candidates += 1;
            if let Some(k) = seq.first_at_least(n, s, lo, hi, hit_level) {
                found = Some((n, k));
                break;
            }
        }
        let Some((n, t_m)) = found else { break };
        let keep = 2f64.powi(m as i32);
        let s_m = seq.first_below(n, s, t_m + 1, sigma, keep).unwrap_or(sigma).min(sigma);
        levels.push((n, t_m, s_m));
        tau = t_m;
        sigma = s_m;
        next_n = n + 1;
    }
    Ex2Trace { levels, candidates }
}

/// Run the recursion on every scenario. `τ` is `τ_{m_max}` where all levels
/// succeed and 1 elsewhere. Members are searched in the order given by
/// `scheme` (identity when `None`).
pub fn ex2_adaptive_tau<P: PathSequence + ?Sized>(
    seq: &P,
    scheme: Option<&ConvexScheme>,
    cfg: &Ex2Config,
) -> Result<(GridStoppingTime, Ex2Report)> {
    match scheme {
        None => adaptive(seq, cfg),
        Some(sc) => adaptive(&Combined { inner: seq, scheme: sc }, cfg),
    }
}

fn adaptive<P: PathSequence + ?Sized>(seq: &P, cfg: &Ex2Config) -> Result<(GridStoppingTime, Ex2Report)> {
    let hypothesis = check_hypothesis(seq, cfg)?;
    if !hypothesis.passed {
        let worst = hypothesis.estimates.iter().cloned().fold(0.0, f64::max);
        return Err(LabError::Hypothesis(format!(
            "P(|M_t - (1 - t)| > {}) reaches {worst:.4} > {} at some t in {:?}",
            cfg.hyp_eps, cfg.hyp_tol, hypothesis.times
        )));
    }
    let grid = seq.grid().clone();
    let last = grid.last();
    let n_sc = seq.n_scenarios();
    let traces: Vec<Ex2Trace> = (0..n_sc).into_par_iter().map(|s| run_scenario(seq, s, cfg.m_max, cfg.n_max)).collect();
    let full = |t: &Ex2Trace| t.levels.len() == cfg.m_max as usize;
    let nodes: Vec<Option<usize>> =
        traces.iter().map(|t| Some(if full(t) && cfg.m_max > 0 { t.levels.last().unwrap().1 } else { last })).collect();
    let tau = GridStoppingTime::new(grid.clone(), nodes)?;
    let below = traces.iter().zip(&tau.nodes).filter(|(_, k)| k.unwrap() < last).count();
    let all_levels = traces
        .par_iter()
        .enumerate()
        .filter(|(s, t)| {
            full(t) && {
                let k = tau.nodes[*s].unwrap();
                t.levels.iter().enumerate().all(|(i, &(n, _, _))| seq.value(n, *s, k) >= 2f64.powi(i as i32 + 1))
            }
        })
        .count();
    let nf = n_sc as f64;
    let p1 = below as f64 / nf;
    let p2 = all_levels as f64 / nf;
    let level_success =
        (1..=cfg.m_max as usize).map(|m| traces.iter().filter(|t| t.levels.len() >= m).count() as f64 / nf).collect();
    let report = Ex2Report {
        hypothesis,
        m_max: cfg.m_max,
        p_tau_below_one: p1,
        p_tau_below_one_stderr: binomial_stderr(p1, nf),
        p_all_levels: p2,
        p_all_levels_stderr: binomial_stderr(p2, nf),
        level_success,
        mean_candidates: traces.iter().map(|t| t.candidates as f64).sum::<f64>() / nf,
        traces,
    };
    Ok((tau, report))
}

/// Monte Carlo side of the excursion bound: estimate of
/// `P(sup_{[τ,σ]} M^n > c + 1)` for member `n` and deterministic `τ ≤ σ`.
pub fn excursion_probability<P: PathSequence + ?Sized>(seq: &P, n: usize, tau: usize, sigma: usize, c: f64) -> (f64, f64) {
    let n_sc = seq.n_scenarios();
    let level = (c + 1.0).next_up();
    let hits = (0..n_sc).into_par_iter().filter(|&s| seq.first_at_least(n, s, tau, sigma, level).is_some()).count();
    let p = hits as f64 / n_sc as f64;
    (p, binomial_stderr(p, n_sc as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_bound_examples() {
        assert!((ex2_gamma_bound(1.0, 0.5, 0.05, 1.0).unwrap() - 0.125).abs() < 1e-15);
        // ε → 0 gives α p_A / (c + 1)
        let g = ex2_gamma_bound(3.0, 0.8, 1e-9, 0.5).unwrap();
        assert!((g - 0.8 * 0.5 / 4.0).abs() < 1e-8);
        assert!(matches!(ex2_gamma_bound(1.0, 0.2, 0.05, 1.0), Err(LabError::Precondition(_))));
        assert!(ex2_gamma_bound(1.0, 0.5, 0.0, 1.0).is_err());
        assert!(ex2_gamma_bound(1.0, 0.5, 0.05, 0.0).is_err());
    }

    fn small() -> ExcursionSequence {
        ExcursionSequence::new(ExcursionParams { level: 10, ..Default::default() }, 400, 5).unwrap()
    }

    #[test]
    fn lazy_queries_agree_with_dense_paths() {
        let seq = small();
        for (n, s) in [(0, 0), (3, 17), (8, 250)] {
            let dense = seq.dense_path(n, s);
            for k in [0, 1, 100, 512, 1000, 1024] {
                assert_eq!(seq.value(n, s, k), dense[k]);
            }
            let lvl = 1.5;
            assert_eq!(seq.first_at_least(n, s, 10, 600, lvl), (10..=600).find(|&k| dense[k] >= lvl));
            assert_eq!(seq.first_below(n, s, 10, 600, 0.7), (10..=600).find(|&k| dense[k] < 0.7));
            assert!(dense.iter().all(|&v| v > 0.0 || v == 0.0));
        }
    }

    #[test]
    fn generator_is_a_martingale_above_the_baseline() {
        let seq = ExcursionSequence::new(ExcursionParams { level: 8, ..Default::default() }, 20_000, 2).unwrap();
        let vals: Vec<Vec<f64>> = (0..seq.n_scenarios()).map(|s| seq.dense_path(0, s)).collect();
        let nf = vals.len() as f64;
        for k in [64, 128, 256] {
            let col: Vec<f64> = vals.iter().map(|v| v[k]).collect();
            let mean = col.iter().sum::<f64>() / nf;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf).sqrt();
            assert!((mean - 1.0).abs() < 5.0 * sd / nf.sqrt(), "t = {k}: mean {mean}");
            let base = 1.0 - k as f64 / 256.0;
            assert!(col.iter().all(|&x| x >= base - 1e-12));
        }
    }

    #[test]
    fn recursion_on_explicit_bundles() {
        use crate::path::{LadlagPath, Provenance};
        // member 0 never rises, member 1 reaches 3 at t = 1/8 and drops below 2 at 1/2
        let g = Arc::new(TimeGrid::dyadic(3).unwrap());
        let flat = LadlagPath::from_fn(g.clone(), |t| 1.0 - t);
        let up = LadlagPath::cadlag(g.clone(), vec![1.0, 3.0, 3.5, 2.5, 1.0, 0.5, 0.3, 0.2, 0.0]).unwrap();
        let b0 = PathBundle::uniform(g.clone(), vec![flat.clone()], Provenance::new(0, "a")).unwrap();
        let b1 = PathBundle::uniform(g.clone(), vec![up], Provenance::new(0, "b")).unwrap();
        let seq = vec![b0, b1];
        let tr = run_scenario(seq.as_slice(), 0, 2, 10);
        assert_eq!(tr.levels, vec![(1, 1, 4)]);
        assert_eq!(tr.candidates, 2);
        // no level at all: τ_0 = 0, σ_0 = 1/2
        let tr0 = run_scenario(seq.as_slice(), 0, 0, 10);
        assert!(tr0.levels.is_empty());
    }

    #[test]
    fn recursion_invariants_on_generator() {
        let seq = ExcursionSequence::new(ExcursionParams { level: 15, ..Default::default() }, 60, 11).unwrap();
        let cfg = Ex2Config { m_max: 3, n_max: 5_000, ..Default::default() };
        let (tau, rep) = ex2_adaptive_tau(&seq, None, &cfg).unwrap();
        let half = seq.grid().node_index(0.5).unwrap();
        for (s, t) in rep.traces.iter().enumerate() {
            let (mut prev_tau, mut prev_sigma) = (0, half);
            for (m, &(n, tm, sm)) in t.levels.iter().enumerate() {
                assert!(tm > prev_tau && tm < prev_sigma && sm <= prev_sigma && sm > tm);
                assert!(seq.value(n, s, tm) >= 2f64.powi(m as i32 + 1) + 1.0);
                (prev_tau, prev_sigma) = (tm, sm);
            }
            if t.levels.len() == 3 {
                assert_eq!(tau.nodes[s], Some(prev_tau));
            } else {
                assert_eq!(tau.nodes[s], Some(seq.grid().last()));
            }
        }
        assert!(rep.level_success.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn failed_hypothesis_is_reported() {
        // steps so large that the baseline is left almost surely
        let seq = ExcursionSequence::new(ExcursionParams { level: 8, rel_step: 0.9, max_step: 0.9 }, 200, 1).unwrap();
        let cfg = Ex2Config { hyp_eps: 0.01, hyp_tol: 0.001, ..Default::default() };
        assert!(matches!(ex2_adaptive_tau(&seq, None, &cfg), Err(LabError::Hypothesis(_))));
    }
}
