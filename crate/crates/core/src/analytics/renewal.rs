//! Hazard rate / ISI density conversions and the renewal generator.

use crate::grid::{cell_integrals, GridFunction1D};
use crate::processes::{RateFn, WoldRate};
use crate::{Error, Result};

/// `f(x) = nu(x) / int_x^inf nu`, with `f = 0` where the tail vanishes.
/// Mass beyond the last node is taken to be zero.
pub fn hazard_from_density(nu: &GridFunction1D) -> Result<GridFunction1D> {
    let v = nu.values();
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::NotADensity { mass: f64::NAN });
    }
    let cells = cell_integrals(v, nu.step());
    let mass: f64 = cells.iter().sum();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::NotADensity { mass });
    }
    let mut tail = vec![0.0; v.len()];
    for k in (0..cells.len()).rev() {
        tail[k] = tail[k + 1] + cells[k];
    }
    let f = v.iter().zip(&tail).map(|(&n, &t)| if t > 0.0 { n / t } else { 0.0 }).collect();
    GridFunction1D::new(nu.x0(), nu.step(), f)
}

/// `nu(x) = f(x) exp(-int_{x0}^x f)`.
pub fn density_from_hazard(f: &GridFunction1D) -> Result<GridFunction1D> {
    let v = f.values();
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("hazard must be nonnegative".into()));
    }
    let cells = cell_integrals(v, f.step());
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(v.len());
    out.push(v[0]);
    for (k, c) in cells.iter().enumerate() {
        acc += c.max(0.0);
        out.push(v[k + 1] * (-acc).exp());
    }
    GridFunction1D::new(f.x0(), f.step(), out)
}

/// Density of the next ISI of a generalized Wold process given the previous
/// ISIs `delays`, on `[0, n * step]`.
pub fn wold_transition(f: &WoldRate, delays: &[f64], step: f64, n: usize) -> Result<GridFunction1D> {
    let hazard = GridFunction1D::from_fn(0.0, step, n, |x| f.eval(x, delays))?;
    density_from_hazard(&hazard)
}

/// `(G phi)(x) = phi'(x) + f(x) (phi(0) - phi(x))`. Without a derivative the
/// central difference with step `1e-6` is used.
pub fn renewal_generator_apply(
    f: &RateFn,
    phi: &dyn Fn(f64) -> f64,
    dphi: Option<&dyn Fn(f64) -> f64>,
    x: f64,
) -> f64 {
    let d = match dphi {
        Some(d) => d(x),
        None => {
            let e = 1e-6;
            (phi(x + e) - phi(x - e)) / (2.0 * e)
        }
    };
    d + f.eval(x) * (phi(0.0) - phi(x))
}
