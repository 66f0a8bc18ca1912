//! Point-process models of spike trains and the age-structured PDEs
//! satisfied by their age distributions.
//!
//! The crate is organised bottom-up:
//!
//! - [`processes`]: spike trains, ages, kernels and conditional intensities.
//! - [`thinning`]: exact simulation by thinning a planar Poisson field, and
//!   the cluster (branching) construction of linear Hawkes processes.
//! - [`analytics`]: hazard/density conversions, the Hawkes fixed-point
//!   functions and the conditional intensity surfaces `Phi_+`, `Phi_-`.
//! - [`pde`]: transport solvers for the age density `u` and the survival
//!   function `v`, and the weak-form residual of a single trajectory.
//! - [`montecarlo`]: population estimators linking simulations to PDEs.

pub mod analytics;
pub mod csv;
mod error;
pub mod grid;
mod par;
pub mod montecarlo;
pub mod pde;
pub mod processes;
pub mod rng;
pub mod thinning;

pub use error::{Error, Result};
