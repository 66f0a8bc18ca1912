//! Analytic side of the models: renewal conversions, the Hawkes fixed-point
//! functions `G_s`, `L_s`, the derived `K_s`, `q`, the conditional intensity
//! surfaces `Phi_+`, `Phi_-`, and the mean-intensity Volterra equation.
//!
//! Integrals against the kernel use product integration on the common grid:
//! the unknown is linear between nodes, the kernel is integrated exactly.
//! Integrals of grid functions alone use the trapezoidal rule.

mod conv;
mod fixed_point;
mod hawkes;
mod renewal;
mod volterra;

pub use fixed_point::{solve_g, solve_l, FixedPoint, FIXED_POINT_MAX_ITERATIONS, FIXED_POINT_TOLERANCE};
pub use hawkes::{
    compute_k, compute_q, phi_minus_a1, phi_minus_a1_at, phi_minus_a2, phi_minus_a2_at, phi_plus, phi_plus_at,
    PhiSurface, DEGENERATE_MASS,
};
pub use renewal::{density_from_hazard, hazard_from_density, renewal_generator_apply, wold_transition};
pub use volterra::expected_intensity_volterra;
