//! Macroscopic solvers: the expectation system for the age density `u`,
//! the survival function `v` under a conditional rate `Phi`, the order-1
//! Wold system in `(s, a)`, and the weak-form residual of a single
//! trajectory's age measure.
//!
//! All transport solvers use `dt = ds`, so advection along the diagonal is
//! exact and the error sits in the absorption and reinjection terms.

mod pps;
mod survival;
mod weak;
mod wold;

pub use pps::{
    bin_density, bin_point_mass, conservation_check, rate_limit, solve_pps, GridMeasure2D, RateSurface,
    MASS_TOLERANCE,
};
pub use survival::{solve_v_characteristics, solve_v_limit, solve_v_upwind, SurvivalGrid};
pub use weak::{weak_residual_micro, weak_terms, PolyBump, TestFunction, TransportRule, WeakTerms};
pub use wold::{bin_wold_point_mass, solve_wold_k1, WoldMeasure};
