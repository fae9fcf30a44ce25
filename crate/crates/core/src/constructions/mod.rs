//! Concrete processes: the jump-at-one-half example, the compensator
//! example, block martingales, the approximation pipeline, the adaptive
//! counterexample and a zoo of random supermartingales.

pub mod approx;
pub mod blocks;
pub mod brownian;
pub mod compensator;
pub mod ex0;
pub mod ex2;
pub mod zoo;
