//! Independent martingales that stay close to `1 − t` but make rare large
//! excursions. An adaptive stopping time picks, level after level, a member
//! whose value exceeds `2^m`.

use ladlag_lab::constructions::ex2::{ex2_adaptive_tau, ex2_gamma_bound, Ex2Config, ExcursionParams, ExcursionSequence};

pub fn run_example() -> anyhow::Result<()> {
    let seq = ExcursionSequence::new(ExcursionParams::default(), 200, 5)?;
    let cfg = Ex2Config { m_max: 3, n_max: 5000, ..Default::default() };
    let (tau, rep) = ex2_adaptive_tau(&seq, None, &cfg)?;
    println!("lower bound on an excursion above 2: {:.4}", ex2_gamma_bound(1.0, 0.5, 0.05, 1.0)?);
    println!("P(tau < 1) = {:.3} +- {:.3}", rep.p_tau_below_one, rep.p_tau_below_one_stderr);
    println!("success per level {:?}", rep.level_success);
    for (s, t) in rep.traces.iter().take(5).enumerate() {
        println!("scenario {s}: (member, tau node, window end) {:?}, tau = {}", t.levels, tau.time(s));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
