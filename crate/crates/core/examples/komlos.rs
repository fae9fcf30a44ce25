//! Forward convex combinations of rare spikes `n 1(U <= 1/n)`: the sequence
//! does not converge in probability to its mean, but Cesàro means over a
//! sparse subsequence do.

use rand::Rng;

use ladlag_lab::limits::{komlos_extract, KomlosParams};
use ladlag_lab::rng;

pub fn run_example() -> anyhow::Result<()> {
    let (rows, cols) = (2000, 1024);
    let samples = rng::par_scenarios(rows, 3, &[rng::tag("spikes")], |r, _| {
        (1..=cols).map(|i| if r.random::<f64>() * i as f64 <= 1.0 { i as f64 } else { 0.0 }).collect::<Vec<f64>>()
    });
    let ex = komlos_extract(&samples, &KomlosParams::default())?;
    println!("subsequence {:?}", &ex.subsequence[..ex.subsequence.len().min(12)]);
    println!("window {}, Cauchy estimate {:.4}, passed {}", ex.window, ex.cauchy_estimate, ex.cauchy_passed);
    let last = ex.scheme.rows().last().unwrap();
    let big = samples.iter().filter(|r| last.iter().map(|&(j, w)| w * r[j]).sum::<f64>() > 0.1).count();
    println!("P(last combination > 0.1) in sample: {:.4}", big as f64 / rows as f64);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
