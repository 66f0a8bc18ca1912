//! Mean intensity of a linear Hawkes process started empty at 0:
//! `lambda_bar = mu + h * lambda_bar` on `[0, T]`.

use super::conv::{March, Weights};
use super::fixed_point::check_subcritical;
use crate::grid::GridFunction1D;
use crate::processes::Kernel;
use crate::{Error, Result};

/// Marches the Volterra equation with product-trapezoid weights.
pub fn expected_intensity_volterra(mu: f64, h: &Kernel, t_max: f64, step: f64) -> Result<GridFunction1D> {
    check_subcritical(h)?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("baseline {mu} must be finite and >= 0")));
    }
    if !(step > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {step} / horizon {t_max} invalid")));
    }
    let n = (t_max / step).round() as usize;
    let w = Weights::new(h, step);
    let b = w.implicit();
    let mut lam = vec![mu; n + 1];
    let mut march = March::new(&w, 0);
    for k in 1..=n {
        lam[k] = (mu + march.explicit(k, &lam)) / (1.0 - b);
    }
    GridFunction1D::new(0.0, step, lam)
}
