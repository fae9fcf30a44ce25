//! Pathwise integrals of a finite-variation integrand with left and right
//! jumps against a làdlàg path, and the integration by parts identity.

use std::sync::Arc;

use ladlag_lab::integration::{integrate_phi_dx, integrate_x_dphi, integration_by_parts_residual, FVIntegrand, FvSamples};
use ladlag_lab::{LadlagPath, TimeGrid};

pub fn run_example() -> anyhow::Result<()> {
    let grid = Arc::new(TimeGrid::dyadic(3)?);
    let ind = |b: bool| b as u8 as f64;
    // linear drift, a jump at 1/2 taken at the node, a jump at 1/4 taken just after it
    let phi = FVIntegrand::from_samples(&FvSamples::from_fns(
        grid.clone(),
        |t| t + ind(t >= 0.5) - 0.5 * ind(t > 0.25),
        |t| t + ind(t > 0.5) - 0.5 * ind(t > 0.25),
        |t| t + ind(t >= 0.5) - 0.5 * ind(t >= 0.25),
    ))?;
    println!("total variation of phi: {}", phi.variation());
    let x = LadlagPath::from_chain(
        grid.clone(),
        &(0..2 * grid.len() - 1).map(|j| 1.0 + ((j * 7) % 5) as f64 / 4.0 - j as f64 / 20.0).collect::<Vec<_>>(),
    )?;
    println!("{:>6} {:>12} {:>12} {:>10}", "t", "int phi dX", "int X dphi", "residual");
    for k in 0..grid.len() {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>10.1e}",
            grid.time(k),
            integrate_phi_dx(&phi, &x, k)?,
            integrate_x_dphi(&x, &phi, k)?,
            integration_by_parts_residual(&phi, &x, k)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
