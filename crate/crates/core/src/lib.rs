//! Làdlàg paths on finite grids, exact scenario-tree calculus and Monte Carlo
//! diagnostics for limits of non-negative supermartingales.
//!
//! The crate is organised bottom-up:
//!
//! - [`timebase`]: grids, the double-arrow index and grid stopping times.
//! - [`path`]: làdlàg trajectories, bundles, move and up-crossing counters.
//! - [`tree`]: finite filtrations, conditional expectations, Mertens
//!   decomposition, compensators and supermartingale checks.
//! - [`integration`]: pathwise integrals against finite-variation integrands.
//! - [`limits`]: convex schemes, Komlós extraction, Fatou limits and
//!   convergence-in-probability estimators.
//! - [`constructions`]: the concrete processes (jump-at-one-half example,
//!   compensator example, block martingales, approximation pipeline,
//!   adaptive counterexample).
//! - [`lab`]: the experiment runner behind the `lab` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod constructions;
pub mod error;
pub mod integration;
pub mod lab;
pub mod limits;
pub mod path;
pub mod rng;
pub mod timebase;
pub mod tree;

pub use error::{LabError, Result};
pub use path::{LadlagPath, PathBundle, Provenance};
pub use timebase::{DoubleIndex, GridStoppingTime, Side, TimeGrid};
pub use tree::ScenarioTree;
