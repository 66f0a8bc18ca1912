//! Uniform grids and the quadrature rules shared by the analytic and PDE
//! modules.

use crate::{Error, Result};

/// Function sampled at `x0 + k * step`, `k = 0..len`, linearly interpolated
/// in between and held constant beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D {
    x0: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridFunction1D {
    pub fn new(x0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step {step} must be > 0")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("grid function needs at least one node".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {k}")));
        }
        Ok(Self { x0, step, values })
    }

    /// Samples `f` at `n + 1` nodes `x0, x0 + step, ..., x0 + n * step`.
    pub fn from_fn(x0: f64, step: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(x0, step, (0..=n).map(|k| f(x0 + k as f64 * step)).collect())
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.step
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.step;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    /// Fourth-order integral over the grid, see [`cell_integrals`].
    pub fn integral_high_order(&self) -> f64 {
        cell_integrals(&self.values, self.step).iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(k, &v)| f(self.x(k), v)).collect();
        Self { values, ..*self }
    }
}

/// Function on the nodes `(i * step, j * step)`, `i = 0..=nt`, `j = 0..=ns`,
/// stored row-major in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    step: f64,
    nt: usize,
    ns: usize,
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(step: f64, nt: usize, ns: usize, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step {step} must be > 0")));
        }
        if values.len() != (nt + 1) * (ns + 1) {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for a {}x{} node grid, got {}",
                (nt + 1) * (ns + 1),
                nt + 1,
                ns + 1,
                values.len()
            )));
        }
        Ok(Self { step, nt, ns, values })
    }

    pub fn zeros(step: f64, nt: usize, ns: usize) -> Self {
        Self { step, nt, ns, values: vec![0.0; (nt + 1) * (ns + 1)] }
    }

    pub fn from_fn(step: f64, nt: usize, ns: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity((nt + 1) * (ns + 1));
        for i in 0..=nt {
            for j in 0..=ns {
                values.push(f(i as f64 * step, j as f64 * step));
            }
        }
        Self { step, nt, ns, values }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of `t` intervals.
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Number of `s` intervals.
    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn t_max(&self) -> f64 {
        self.nt as f64 * self.step
    }

    pub fn s_max(&self) -> f64 {
        self.ns as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.ns + 1) + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * (self.ns + 1) + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * (self.ns + 1)..(i + 1) * (self.ns + 1)]
    }

    /// Bilinear interpolation, clamped to the grid.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let (i, ft) = locate(t / self.step, self.nt);
        let (j, fs) = locate(s / self.step, self.ns);
        let i1 = (i + 1).min(self.nt);
        let j1 = (j + 1).min(self.ns);
        let a = self.get(i, j) * (1.0 - fs) + self.get(i, j1) * fs;
        let b = self.get(i1, j) * (1.0 - fs) + self.get(i1, j1) * fs;
        a * (1.0 - ft) + b * ft
    }

    /// Same grid shape and step.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.nt == other.nt && self.ns == other.ns && self.step == other.step
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::InvalidParameter("grid functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { values, ..*self })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| (a - b).abs())?.values.iter().fold(0.0, |m: f64, &v| m.max(v)))
    }
}

fn locate(pos: f64, n: usize) -> (usize, f64) {
    if !(pos > 0.0) {
        return (0, 0.0);
    }
    if pos >= n as f64 {
        return (n, 0.0);
    }
    let i = pos.floor() as usize;
    (i, pos - i as f64)
}

/// Node grid `[0, t_max] x [0, s_max]` with a common step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub step: f64,
    pub t_max: f64,
    pub s_max: f64,
}

impl SurfaceGrid {
    pub fn new(step: f64, t_max: f64, s_max: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step {step} must be > 0")));
        }
        if !(t_max >= 0.0 && s_max >= 0.0 && t_max.is_finite() && s_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid extent [0, {t_max}] x [0, {s_max}] is invalid")));
        }
        Ok(Self { step, t_max, s_max })
    }

    pub fn nt(&self) -> usize {
        (self.t_max / self.step).round() as usize
    }

    pub fn ns(&self) -> usize {
        (self.s_max / self.step).round() as usize
    }
}

pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoidal integral, same length as `values`, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * step * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(values.len());
    out
}

/// Integral over each cell `[x_k, x_{k+1}]` of the local cubic through four
/// neighbouring nodes (one-sided at the ends); trapezoid below four nodes.
pub fn cell_integrals(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return Vec::new();
    }
    if n < 4 {
        return values.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).collect();
    }
    let c = step / 24.0;
    let f = values;
    let mut out = Vec::with_capacity(n - 1);
    out.push(c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]));
    for k in 1..n - 2 {
        out.push(c * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]));
    }
    out.push(c * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]));
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]` over `panels` panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        acc += x.iter().zip(&w).map(|(&xi, &wi)| wi * f(mid + 0.5 * h * xi)).sum::<f64>();
    }
    0.5 * h * acc
}
