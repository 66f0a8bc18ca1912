use std::fmt;
use std::sync::Arc;

use crate::grid::{integrate, GridFunction2D, SurfaceGrid};
use crate::processes::RateFn;
use crate::{Error, Result};

/// Tolerance on the total mass of an initial distribution.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// Firing rate `rho(t, s)` driving the transport.
#[derive(Clone)]
pub enum RateSurface {
    Constant(f64),
    /// `rho(t, s) = f(s)`.
    AgeOnly(RateFn),
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    /// Bilinear interpolation of node values.
    Grid(GridFunction2D),
}

impl fmt::Debug for RateSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSurface::Constant(c) => write!(f, "Constant({c})"),
            RateSurface::AgeOnly(r) => write!(f, "AgeOnly({r:?})"),
            RateSurface::Function(_) => f.write_str("Function(..)"),
            RateSurface::Grid(g) => write!(f, "Grid({}x{})", g.nt(), g.ns()),
        }
    }
}

impl RateSurface {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        RateSurface::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            RateSurface::Constant(c) => *c,
            RateSurface::AgeOnly(f) => f.eval(s),
            RateSurface::Function(f) => f(t, s),
            RateSurface::Grid(g) => g.eval(t, s),
        }
    }

    fn time_independent(&self) -> bool {
        matches!(self, RateSurface::Constant(_) | RateSurface::AgeOnly(_))
    }
}

/// Largest rate the exponential integrator accepts at step `dt`.
pub fn rate_limit(dt: f64) -> f64 {
    std::f64::consts::LN_10 / dt
}

pub(crate) fn check_rate(rate: f64, limit: f64) -> Result<()> {
    if !(rate >= 0.0) || rate > limit {
        return Err(Error::UnboundedRate { rate, limit });
    }
    Ok(())
}

/// Cell masses of the age distribution at recorded times. Cell `j` holds
/// ages in `[j step, (j + 1) step)`; the last cell also holds every age
/// beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure2D {
    step: f64,
    cells: usize,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl GridMeasure2D {
    pub fn new(step: f64, times: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cells = rows.first().map_or(0, Vec::len);
        if times.len() != rows.len() || rows.iter().any(|r| r.len() != cells) || cells == 0 {
            return Err(Error::InvalidParameter("measure rows must share one nonempty length".into()));
        }
        if rows.iter().flatten().any(|&m| !(m >= 0.0)) {
            return Err(Error::NotADensity { mass: f64::NAN });
        }
        Ok(Self { step, cells, times, rows })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn last(&self) -> &[f64] {
        &self.rows[self.rows.len() - 1]
    }

    /// Index of the recorded time closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.rows[i].iter().sum()
    }

    /// Mass of ages `< s` in row `i`, linear within a cell.
    pub fn cdf(&self, i: usize, s: f64) -> f64 {
        cdf_of(&self.rows[i], self.step, s)
    }

    /// `v(s_j) = sum_{k >= j} u_k` at the nodes `s_j = j step`, `j = 0..=cells`.
    pub fn survival(&self, i: usize) -> Vec<f64> {
        let row = &self.rows[i];
        let mut v = vec![0.0; row.len() + 1];
        for j in (0..row.len()).rev() {
            v[j] = v[j + 1] + row[j];
        }
        v
    }
}

pub(crate) fn cdf_of(cells: &[f64], step: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let pos = s / step;
    let full = (pos.floor() as usize).min(cells.len());
    let mut acc: f64 = cells[..full].iter().sum();
    if full < cells.len() {
        acc += cells[full] * (pos - full as f64);
    }
    acc
}

/// Maximum deviation of a row total from 1.
pub fn conservation_check(u: &GridMeasure2D) -> f64 {
    (0..u.rows.len()).map(|i| (u.mass(i) - 1.0).abs()).fold(0.0, f64::max)
}

pub(crate) fn check_distribution(masses: &[f64]) -> Result<()> {
    if masses.iter().any(|&m| !(m >= 0.0)) {
        return Err(Error::NotADensity { mass: f64::NAN });
    }
    let mass: f64 = masses.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NotADensity { mass });
    }
    Ok(())
}

pub(crate) fn cell_count(step: f64, extent: f64) -> Result<usize> {
    if !(step > 0.0 && extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {step} / extent {extent} invalid")));
    }
    Ok(((extent / step).round() as usize).max(1))
}

/// Unit mass in the cell containing `x > 0`, on `ceil(s_max / step)` cells.
pub fn bin_point_mass(x: f64, step: f64, s_max: f64) -> Result<Vec<f64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial age {x} must be > 0")));
    }
    let n = cell_count(step, s_max)?;
    let mut u = vec![0.0; n];
    u[((x / step).floor() as usize).min(n - 1)] = 1.0;
    Ok(u)
}

/// Cell integrals of a density supported in `[0, inf)`; mass beyond `s_max`
/// lands in the last cell. The total must be 1 within [`MASS_TOLERANCE`].
pub fn bin_density(density: impl Fn(f64) -> f64, step: f64, s_max: f64, tail_max: f64) -> Result<Vec<f64>> {
    let n = cell_count(step, s_max)?;
    let mut u: Vec<f64> = (0..n).map(|j| integrate(&density, j as f64 * step, (j + 1) as f64 * step, 1, 6)).collect();
    if tail_max > s_max {
        let panels = ((tail_max - s_max) / step).ceil() as usize;
        u[n - 1] += integrate(&density, s_max, tail_max, panels, 6);
    }
    check_distribution(&u)?;
    Ok(u)
}

/// Age density `u(t, ds)` of the expectation system
/// `d_t u + d_s u + rho u = 0`, `u(t, 0) = int rho u(t, ds)`, `u(0) = u_in`.
///
/// With `dt = ds = step` the transport is exact: mass in cell `j` moves to
/// cell `j + 1` scaled by `exp(-rho step)`, `rho` taken at the midpoint of the
/// characteristic, and the fired mass enters cell 0. `u_in` is given as
/// cell masses on `[0, s_max)`; rows are recorded every `record_every` steps
/// and at the final time.
pub fn solve_pps(rate: &RateSurface, u_in: &[f64], grid: &SurfaceGrid, record_every: usize) -> Result<GridMeasure2D> {
    check_distribution(u_in)?;
    let step = grid.step;
    let nt = grid.nt();
    let n = u_in.len();
    if n != grid.ns().max(1) {
        return Err(Error::InvalidParameter(format!("initial data has {n} cells, grid has {}", grid.ns())));
    }
    let limit = rate_limit(step);
    let every = record_every.max(1);
    let decay_at = |t: f64, j: usize| -> Result<f64> {
        let s = ((j + 1) as f64 * step).min(n as f64 * step - 0.5 * step);
        let r = rate.eval(t, s);
        check_rate(r, limit)?;
        Ok((-r * step).exp())
    };
    let fixed: Option<Vec<f64>> = if rate.time_independent() {
        Some((0..n).map(|j| decay_at(0.0, j)).collect::<Result<_>>()?)
    } else {
        None
    };

    let mut u = u_in.to_vec();
    let mut next = vec![0.0; n];
    let mut times = vec![0.0];
    let mut rows = vec![u.clone()];
    let mut scratch = vec![0.0; n];
    for i in 0..nt {
        let decay: &[f64] = match &fixed {
            Some(d) => d,
            None => {
                let tm = (i as f64 + 0.5) * step;
                for (j, d) in scratch.iter_mut().enumerate() {
                    *d = decay_at(tm, j)?;
                }
                &scratch
            }
        };
        let mut fired = 0.0;
        next[0] = 0.0;
        for j in 0..n {
            let kept = u[j] * decay[j];
            fired += u[j] - kept;
            let to = (j + 1).min(n - 1);
            if to == j {
                next[to] += kept;
            } else {
                next[to] = kept;
            }
        }
        next[0] += fired;
        std::mem::swap(&mut u, &mut next);
        let done = i + 1;
        if done % every == 0 || done == nt {
            times.push(done as f64 * step);
            rows.push(u.clone());
        }
    }
    GridMeasure2D::new(step, times, rows)
}
