//! Population estimators over independent replications: empirical age
//! laws, survival probabilities, conditional intensities in the `>=` form,
//! and Kolmogorov-Smirnov distances to PDE or analytic CDFs.

mod estimate;
mod hist;

pub use estimate::{
    avoids_window, empirical_conditional_intensity, empirical_survival, phi_minus_monte_carlo, Estimate,
    MIN_CONDITIONED,
};
pub use hist::{
    empirical_age_measure, isi_pairs, joint_age_measure, ks_distance, ks_samples, AgeBins, EmpiricalAgeHistogram,
    JointAgeHistogram,
};
