//! The pair `(G_s, L_s)`: `G_s(x)` is the probability that a cluster rooted
//! at 0 (root excluded) avoids `[x - s, x)`, and `L_s(x)` the mean of
//! `int h(x - z) N_c(dz)` on that event.
//!
//! `log G_s(x) = int_s^x G_s(u) h(x - u) du - int_0^x h` (for `x > s`, and
//! `exp(-int_0^x h)` below), `L_s(x) = int_s^x (h + L_s)(u) G_s(u) h(x - u) du`.
//! [`solve_g`] and [`solve_l`] run the Picard iteration and report its
//! residuals; [`march_g`] and [`march_l`] solve the same discrete equations
//! node by node and back the surfaces.

use super::conv::{March, Weights};
use crate::grid::GridFunction1D;
use crate::processes::Kernel;
use crate::{Error, Result};

pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 10_000;

/// Result of a Picard iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub function: GridFunction1D,
    /// Distance between successive iterates (sup norm for `G`, `L^1` for `L`).
    pub residuals: Vec<f64>,
}

impl FixedPoint {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// `residual[i + 1] / residual[i]`, skipping zero residuals.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

pub(crate) fn check_subcritical(h: &Kernel) -> Result<()> {
    let norm = h.l1_norm();
    if !h.is_nonnegative() {
        return Err(Error::InvalidKernel("the cluster functions need a nonnegative kernel".into()));
    }
    if norm >= 1.0 {
        return Err(Error::SupercriticalKernel { norm });
    }
    Ok(())
}

/// Index of the node closest to `s`.
pub(crate) fn snap(s: f64, step: f64) -> Result<usize> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("age {s} must be finite and >= 0")));
    }
    Ok((s / step).round() as usize)
}

fn nodes(step: f64, x_max: f64) -> Result<usize> {
    if !(step > 0.0 && x_max >= 0.0 && x_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {step} / extent {x_max} invalid")));
    }
    Ok((x_max / step).round() as usize)
}

/// `G_s` on `[0, x_max]` by Picard iteration from `G = 1`. `s` is snapped to
/// the nearest node.
pub fn solve_g(h: &Kernel, s: f64, step: f64, x_max: f64) -> Result<FixedPoint> {
    check_subcritical(h)?;
    let n = nodes(step, x_max)?;
    let m = snap(s, step)?;
    let w = Weights::new(h, step);
    let cum: Vec<f64> = (0..=n).map(|k| w.cumulative(k)).collect();
    let mut g = vec![1.0; n + 1];
    let mut residuals = Vec::new();
    loop {
        let c = w.convolve(m, &g);
        let next: Vec<f64> = (0..=n).map(|k| (c[k] - cum[k]).exp()).collect();
        let r = sup_distance(&g, &next);
        residuals.push(r);
        g = next;
        if r < FIXED_POINT_TOLERANCE {
            break;
        }
        if residuals.len() >= FIXED_POINT_MAX_ITERATIONS {
            return Err(Error::FixedPointDivergence { iterations: residuals.len(), residual: r });
        }
    }
    Ok(FixedPoint { function: GridFunction1D::new(0.0, step, g)?, residuals })
}

/// `L_s` on the grid of `g` by Picard iteration from `L = 0`.
pub fn solve_l(h: &Kernel, s: f64, g: &GridFunction1D) -> Result<FixedPoint> {
    check_subcritical(h)?;
    let step = g.step();
    let m = snap(s, step)?;
    let w = Weights::new(h, step);
    let gv = g.values();
    let hn: Vec<f64> = (0..gv.len()).map(|k| w.node(k)).collect();
    let mut l = vec![0.0; gv.len()];
    let mut residuals = Vec::new();
    loop {
        let f: Vec<f64> = (0..gv.len()).map(|k| (hn[k] + l[k]) * gv[k]).collect();
        let next = w.convolve(m, &f);
        let r = step * l.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>();
        residuals.push(r);
        l = next;
        if r < FIXED_POINT_TOLERANCE {
            break;
        }
        if residuals.len() >= FIXED_POINT_MAX_ITERATIONS {
            return Err(Error::FixedPointDivergence { iterations: residuals.len(), residual: r });
        }
    }
    Ok(FixedPoint { function: GridFunction1D::new(0.0, step, l)?, residuals })
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

/// `G_s` at nodes `0..=n` with `s` at node `m`, solved node by node.
pub(crate) fn march_g(w: &Weights, m: usize, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    for k in 0..=n.min(m) {
        g.push((-w.cumulative(k)).exp());
    }
    if n <= m {
        return g;
    }
    g.resize(n + 1, 0.0);
    let b = w.implicit();
    let mut march = March::new(w, m);
    for k in m + 1..=n {
        let c = march.explicit(k, &g) - w.cumulative(k);
        // y = exp(c + b y) by Newton from the previous node
        let mut y = g[k - 1];
        for _ in 0..50 {
            let e = (c + b * y).exp();
            let dy = (y - e) / (1.0 - b * e);
            y -= dy;
            if dy.abs() <= 1e-16 * y.abs().max(1e-300) {
                break;
            }
        }
        g[k] = y;
    }
    g
}

/// `L_s` at nodes `0..=n` given `G_s` and the kernel nodes `h(k step)`.
pub(crate) fn march_l(w: &Weights, m: usize, g: &[f64], hn: &[f64]) -> Vec<f64> {
    let n = g.len() - 1;
    let mut l = vec![0.0; n + 1];
    if n <= m {
        return l;
    }
    let mut f = vec![0.0; n + 1];
    for k in 0..=m {
        f[k] = hn[k] * g[k];
    }
    let b = w.implicit();
    let mut march = March::new(w, m);
    for k in m + 1..=n {
        let e = march.explicit(k, &f);
        l[k] = (e + b * hn[k] * g[k]) / (1.0 - b * g[k]);
        f[k] = (hn[k] + l[k]) * g[k];
    }
    l
}
