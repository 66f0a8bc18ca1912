//! Conditional intensity of a linear Hawkes process given the age:
//! `Phi(t, s) = E[lambda(t) | no point in [t - s, t)] = Phi_+ + Phi_-`, where
//! `Phi_+` collects immigrants after 0 and their clusters and `Phi_-` the
//! points before 0 and their descendants.

use super::conv::Weights;
use super::fixed_point::{check_subcritical, march_g, march_l, snap};
use crate::grid::{cumulative_trapezoid, integrate, GridFunction1D, GridFunction2D, SurfaceGrid};
use crate::par::map_range;
use crate::processes::{Kernel, PastDensity, PAST_TRUNCATION_MASS};
use crate::{Error, Result};

/// Denominator below which the one-point past is treated as impossible.
pub const DEGENERATE_MASS: f64 = 1e-300;

// panel width of the Gauss-Legendre rule over past-point positions
const PAST_PANEL: f64 = 1.0 / 32.0;

/// `q(t, s, z)`: probability that a point at `z <= 0` has neither a child nor
/// a further descendant in `[t - s, t)`.
///
/// `log q = -int_{(t-s)v0}^t h(x - z) dx - int_0^{(t-s)v0} (1 - G_s(t - x)) h(x - z) dx`,
/// the second integral by the trapezoidal rule at the step of `g`.
pub fn compute_q(h: &Kernel, s: f64, g: &GridFunction1D, t: f64, z: f64) -> f64 {
    let cut = (t - s).max(0.0);
    let direct = h.integral(cut - z, t - z);
    let cascade = along_window(g.step(), s, t, |u| (1.0 - g.eval(u)) * h.eval(t - u - z));
    (-(direct + cascade).max(0.0)).exp()
}

/// `K_s(t, z) = int_0^{(t-s)v0} (h + L_s)(t - x) G_s(t - x) h(x - z) dx`: mean
/// intensity at `t` from the descendants of a point at `z` on the avoidance event.
pub fn compute_k(h: &Kernel, s: f64, l: &GridFunction1D, g: &GridFunction1D, t: f64, z: f64) -> f64 {
    along_window(g.step(), s, t, |u| (h.eval(u) + l.eval(u)) * g.eval(u) * h.eval(t - u - z))
}

// trapezoid of f(u) over [s, t] at roughly the given step
fn along_window(step: f64, s: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
    if t <= s {
        return 0.0;
    }
    let n = ((t - s) / step - 1e-9).ceil().max(1.0) as usize;
    let d = (t - s) / n as f64;
    let mut acc = 0.5 * (f(s) + f(t));
    for i in 1..n {
        acc += f(s + i as f64 * d);
    }
    acc * d
}

/// `G_s`, `L_s` and the derived quantities along `x = t` for one window `s`.
struct Column {
    step: f64,
    m: usize,
    g: Vec<f64>,
    l: Vec<f64>,
    hn: Vec<f64>,
}

impl Column {
    fn new(w: &Weights, m: usize, n: usize) -> Self {
        let g = march_g(w, m, n);
        let hn: Vec<f64> = (0..=n).map(|k| w.node(k)).collect();
        let l = march_l(w, m, &g, &hn);
        Self { step: w.step(), m, g, l, hn }
    }

    fn g_fn(&self) -> GridFunction1D {
        GridFunction1D::new(0.0, self.step, self.g.clone()).expect("finite column")
    }

    fn l_fn(&self) -> GridFunction1D {
        GridFunction1D::new(0.0, self.step, self.l.clone()).expect("finite column")
    }

    /// `Phi_+ / mu` at every node.
    fn plus(&self) -> Vec<f64> {
        let n = self.g.len() - 1;
        let mut out = vec![1.0; n + 1];
        if n > self.m {
            let f: Vec<f64> = (self.m..=n).map(|k| (self.hn[k] + self.l[k]) * self.g[k]).collect();
            for (i, c) in cumulative_trapezoid(&f, self.step).into_iter().enumerate() {
                out[self.m + i] = 1.0 + c;
            }
        }
        out
    }

    /// For exponential kernels `log q(t, s, z) = -e^{dz} Q(t, s)` and
    /// `K_s(t, z) = e^{dz} L_s(t)`; returns `Q` at every node.
    fn q_exponent(&self, w: &Weights) -> Vec<f64> {
        let one_minus: Vec<f64> = self.g.iter().map(|g| 1.0 - g).collect();
        let c = w.convolve(self.m, &one_minus);
        (0..self.g.len()).map(|k| w.cumulative(k) - w.cumulative(k.saturating_sub(self.m)) + c[k]).collect()
    }
}

fn check_kernel(h: &Kernel) -> Result<()> {
    if !h.is_nonnegative() {
        return Err(Error::InvalidKernel("conditional intensity surfaces need a nonnegative kernel".into()));
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {step} must be > 0")));
    }
    Ok(())
}

/// `int_{y_lo}^{y_hi} e^{-y q} dy`.
fn exp_integral(y_lo: f64, y_hi: f64, q: f64) -> f64 {
    if y_hi <= y_lo {
        return 0.0;
    }
    let w = y_hi - y_lo;
    if q * w < 1e-12 {
        return w * (-y_lo * q).exp();
    }
    (-y_lo * q).exp() * -(-w * q).exp_m1() / q
}

fn minus_a2_exp(decay: f64, alpha: f64, depth: f64, t: f64, s: f64, hk: f64, lk: f64, qk: f64) -> f64 {
    let top = 0.0f64.min(t - s);
    if top <= -depth {
        return 0.0;
    }
    alpha * (hk + lk) / decay * exp_integral((-decay * depth).exp(), (decay * top).exp(), qk)
}

fn minus_a1_exp(decay: f64, f0: &PastDensity, t: f64, s: f64, hk: f64, lk: f64, qk: f64) -> Result<f64> {
    let (lo, hi) = f0.support();
    let top = hi.min(0.0).min(t - s);
    if top <= lo {
        return Err(Error::DegenerateConditioning { t, s, mass: 0.0 });
    }
    let panels = ((top - lo) / PAST_PANEL).ceil().max(1.0) as usize;
    let den = integrate(|z| (-(decay * z).exp() * qk).exp() * f0.eval(z), lo, top, panels, 4);
    if !(den >= DEGENERATE_MASS) {
        return Err(Error::DegenerateConditioning { t, s, mass: den });
    }
    let num = integrate(|z| (decay * z).exp() * (-(decay * z).exp() * qk).exp() * f0.eval(z), lo, top, panels, 4);
    Ok((hk + lk) * num / den)
}

fn minus_a2_general(h: &Kernel, alpha: f64, depth: f64, s: f64, g: &GridFunction1D, l: &GridFunction1D, t: f64) -> f64 {
    let top = 0.0f64.min(t - s);
    if top <= -depth {
        return 0.0;
    }
    let integrand = |z: f64| (h.eval(t - z) + compute_k(h, s, l, g, t, z)) * compute_q(h, s, g, t, z);
    alpha * along_window(g.step(), -depth, top, integrand)
}

fn minus_a1_general(h: &Kernel, f0: &PastDensity, s: f64, g: &GridFunction1D, l: &GridFunction1D, t: f64) -> Result<f64> {
    let (lo, hi) = f0.support();
    let top = hi.min(0.0).min(t - s);
    if top <= lo {
        return Err(Error::DegenerateConditioning { t, s, mass: 0.0 });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let n = ((top - lo) / g.step()).ceil().max(1.0) as usize;
    let d = (top - lo) / n as f64;
    for i in 0..=n {
        let z = lo + i as f64 * d;
        let wt = if i == 0 || i == n { 0.5 * d } else { d } * f0.eval(z);
        if wt == 0.0 {
            continue;
        }
        let q = compute_q(h, s, g, t, z);
        den += wt * q;
        num += wt * q * (h.eval(t - z) + compute_k(h, s, l, g, t, z));
    }
    if !(den >= DEGENERATE_MASS) {
        return Err(Error::DegenerateConditioning { t, s, mass: den });
    }
    Ok(num / den)
}

/// Which past the `Phi_-` surface conditions on.
#[derive(Clone, Copy)]
enum Past<'a> {
    OnePoint(&'a PastDensity),
    Poisson { alpha: f64, depth: f64 },
}

fn minus_column(h: &Kernel, w: &Weights, past: Past, m: usize, n: usize, force_general: bool) -> Result<Vec<f64>> {
    let col = Column::new(w, m, n);
    let step = w.step();
    let s = m as f64 * step;
    let mut out = Vec::with_capacity(n + 1);
    match (h.as_exponential(), force_general) {
        (Some((_, decay)), false) => {
            let q = col.q_exponent(w);
            for k in 0..=n {
                let t = k as f64 * step;
                out.push(match past {
                    Past::Poisson { alpha, depth } => minus_a2_exp(decay, alpha, depth, t, s, col.hn[k], col.l[k], q[k]),
                    Past::OnePoint(f0) => minus_a1_exp(decay, f0, t, s, col.hn[k], col.l[k], q[k])?,
                });
            }
        }
        _ => {
            let (g, l) = (col.g_fn(), col.l_fn());
            for k in 0..=n {
                let t = k as f64 * step;
                out.push(match past {
                    Past::Poisson { alpha, depth } => minus_a2_general(h, alpha, depth, s, &g, &l, t),
                    Past::OnePoint(f0) => minus_a1_general(h, f0, s, &g, &l, t)?,
                });
            }
        }
    }
    Ok(out)
}

fn assemble(grid: &SurfaceGrid, columns: Vec<Vec<f64>>) -> GridFunction2D {
    let (nt, ns) = (grid.nt(), grid.ns());
    let mut out = GridFunction2D::zeros(grid.step, nt, ns);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

/// `Phi_+(t, s) = mu (1 + int_{s^t}^t (h + L_s) G_s)` on the grid nodes.
pub fn phi_plus(mu: f64, h: &Kernel, grid: &SurfaceGrid) -> Result<GridFunction2D> {
    check_subcritical(h)?;
    check_mu(mu)?;
    let w = Weights::new(h, grid.step);
    let nt = grid.nt();
    let cols = map_range(grid.ns() + 1, |j| Column::new(&w, j, nt).plus().into_iter().map(|v| mu * v).collect());
    Ok(assemble(grid, cols))
}

/// `Phi_-` for a homogeneous Poisson past of rate `alpha`, the past truncated
/// at the same depth as the simulator.
pub fn phi_minus_a2(h: &Kernel, alpha: f64, grid: &SurfaceGrid) -> Result<GridFunction2D> {
    phi_minus_a2_impl(h, alpha, grid, false)
}

pub(crate) fn phi_minus_a2_impl(h: &Kernel, alpha: f64, grid: &SurfaceGrid, force_general: bool) -> Result<GridFunction2D> {
    check_kernel(h)?;
    check_alpha(alpha)?;
    let past = Past::Poisson { alpha, depth: h.tail_depth(alpha, PAST_TRUNCATION_MASS) };
    let w = Weights::new(h, grid.step);
    let nt = grid.nt();
    let cols = map_range(grid.ns() + 1, |j| minus_column(h, &w, past, j, nt, force_general));
    Ok(assemble(grid, cols.into_iter().collect::<Result<_>>()?))
}

/// `Phi_-` for a single past point `T_0` with density `f0`.
pub fn phi_minus_a1(h: &Kernel, f0: &PastDensity, grid: &SurfaceGrid) -> Result<GridFunction2D> {
    phi_minus_a1_impl(h, f0, grid, false)
}

pub(crate) fn phi_minus_a1_impl(h: &Kernel, f0: &PastDensity, grid: &SurfaceGrid, force_general: bool) -> Result<GridFunction2D> {
    check_kernel(h)?;
    let w = Weights::new(h, grid.step);
    let nt = grid.nt();
    let cols = map_range(grid.ns() + 1, |j| minus_column(h, &w, Past::OnePoint(f0), j, nt, force_general));
    Ok(assemble(grid, cols.into_iter().collect::<Result<_>>()?))
}

/// Single-point versions: the column for `s` is solved on `[0, t]` with
/// `t / step` rounded to a whole number of nodes and `s` snapped to a node.
fn point_setup(h: &Kernel, t: f64, s: f64, step: f64) -> Result<(Weights, usize, usize)> {
    check_step(step)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t} must be finite and >= 0")));
    }
    let n = (t / step).round().max(1.0) as usize;
    let step = if t > 0.0 { t / n as f64 } else { step };
    let n = if t > 0.0 { n } else { 0 };
    let m = snap(s, step)?;
    Ok((Weights::new(h, step), m, n))
}

pub fn phi_plus_at(mu: f64, h: &Kernel, t: f64, s: f64, step: f64) -> Result<f64> {
    check_subcritical(h)?;
    check_mu(mu)?;
    let (w, m, n) = point_setup(h, t, s, step)?;
    Ok(mu * Column::new(&w, m, n).plus()[n])
}

pub fn phi_minus_a2_at(h: &Kernel, alpha: f64, t: f64, s: f64, step: f64) -> Result<f64> {
    check_kernel(h)?;
    check_alpha(alpha)?;
    let (w, m, n) = point_setup(h, t, s, step)?;
    let past = Past::Poisson { alpha, depth: h.tail_depth(alpha, PAST_TRUNCATION_MASS) };
    Ok(minus_column(h, &w, past, m, n, false)?[n])
}

pub fn phi_minus_a1_at(h: &Kernel, f0: &PastDensity, t: f64, s: f64, step: f64) -> Result<f64> {
    check_kernel(h)?;
    let (w, m, n) = point_setup(h, t, s, step)?;
    Ok(minus_column(h, &w, Past::OnePoint(f0), m, n, false)?[n])
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("baseline {mu} must be finite and >= 0")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("Poisson past rate {alpha} must be > 0")));
    }
    Ok(())
}

/// `Phi = Phi_+ + Phi_-` with both parts kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSurface {
    plus: GridFunction2D,
    minus: GridFunction2D,
}

impl PhiSurface {
    pub fn new(plus: GridFunction2D, minus: GridFunction2D) -> Result<Self> {
        if !plus.same_grid(&minus) {
            return Err(Error::InvalidParameter("Phi_+ and Phi_- live on different grids".into()));
        }
        for v in plus.values().iter().chain(minus.values()) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidParameter(format!("surface value {v} must be finite and >= 0")));
            }
        }
        Ok(Self { plus, minus })
    }

    /// Surface for a Poisson past of rate `alpha`.
    pub fn poisson_past(mu: f64, h: &Kernel, alpha: f64, grid: &SurfaceGrid) -> Result<Self> {
        Self::new(phi_plus(mu, h, grid)?, phi_minus_a2(h, alpha, grid)?)
    }

    /// Surface for a single past point with density `f0`.
    pub fn one_point_past(mu: f64, h: &Kernel, f0: &PastDensity, grid: &SurfaceGrid) -> Result<Self> {
        Self::new(phi_plus(mu, h, grid)?, phi_minus_a1(h, f0, grid)?)
    }

    pub fn plus(&self) -> &GridFunction2D {
        &self.plus
    }

    pub fn minus(&self) -> &GridFunction2D {
        &self.minus
    }

    pub fn total(&self) -> GridFunction2D {
        self.plus.zip_with(&self.minus, |a, b| a + b).expect("same grid")
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        self.plus.eval(t, s) + self.minus.eval(t, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{expected_intensity_volterra, solve_g, solve_l};

    fn h() -> Kernel {
        Kernel::exponential(0.5, 1.0).unwrap()
    }

    #[test]
    fn q_and_k_at_time_zero() {
        let h = h();
        let g = solve_g(&h, 0.5, 1.0 / 128.0, 3.0).unwrap().function;
        let l = solve_l(&h, 0.5, &g).unwrap().function;
        for z in [-3.0, -1.0, 0.0] {
            assert_eq!(compute_q(&h, 0.5, &g, 0.0, z), 1.0);
            assert_eq!(compute_k(&h, 0.5, &l, &g, 0.0, z), 0.0);
        }
        let zero = Kernel::zero();
        assert_eq!(compute_q(&zero, 0.5, &g, 2.0, -1.0), 1.0);
        assert_eq!(compute_k(&zero, 0.5, &l, &g, 2.0, -1.0), 0.0);
    }

    #[test]
    fn q_is_bounded_below() {
        let h = h();
        let floor = (-2.0 * h.l1_norm()).exp();
        for s in [0.0, 0.5, 2.0] {
            let g = solve_g(&h, s, 1.0 / 64.0, 5.0).unwrap().function;
            for t in [0.25, 1.0, 3.0, 5.0] {
                for z in [-4.0, -0.5, 0.0] {
                    let q = compute_q(&h, s, &g, t, z);
                    assert!(q >= floor && q <= 1.0, "{q}");
                }
            }
        }
    }

    #[test]
    fn k_tail_bound() {
        let h = h();
        let s = 0.5;
        let g = solve_g(&h, s, 1.0 / 64.0, 40.0).unwrap().function;
        let l = solve_l(&h, s, &g).unwrap().function;
        let l_norm = l.integral();
        for m in [1.0, 3.0] {
            for t in [1.0, 3.0] {
                let mass = integrate(|z| compute_k(&h, s, &l, &g, t, z), -m - 1.0, -m, 16, 6);
                let bound = h.integral(m, f64::INFINITY) * (h.l1_norm() + l_norm);
                assert!(mass <= bound, "{mass} {bound}");
            }
        }
    }

    #[test]
    fn exponential_shortcut_matches_direct_quadrature() {
        let h = h();
        let step = 1.0 / 64.0;
        let g = solve_g(&h, 0.5, step, 3.0).unwrap().function;
        let l = solve_l(&h, 0.5, &g).unwrap().function;
        let w = Weights::new(&h, step);
        let col = Column::new(&w, 32, 192);
        let q = col.q_exponent(&w);
        for k in [40, 100, 192] {
            let t = k as f64 * step;
            for z in [-2.0, -0.3] {
                let direct = compute_q(&h, 0.5, &g, t, z);
                assert!((direct - (-(z).exp() * q[k]).exp()).abs() < 1e-4);
                let kd = compute_k(&h, 0.5, &l, &g, t, z);
                assert!((kd - z.exp() * col.l[k]).abs() < 1e-4);
            }
        }
        let grid = SurfaceGrid::new(1.0 / 16.0, 1.0, 1.0).unwrap();
        let fast = phi_minus_a2(&h, 1.0, &grid).unwrap();
        let slow = phi_minus_a2_impl(&h, 1.0, &grid, true).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 2e-3);
        let f0 = PastDensity::uniform(-2.0, -1.0).unwrap();
        let fast = phi_minus_a1(&h, &f0, &grid).unwrap();
        let slow = phi_minus_a1_impl(&h, &f0, &grid, true).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 2e-3);
    }

    #[test]
    fn plus_is_mu_above_diagonal_and_without_kernel() {
        let grid = SurfaceGrid::new(1.0 / 32.0, 2.0, 3.0).unwrap();
        let p = phi_plus(1.5, &h(), &grid).unwrap();
        for i in 0..=grid.nt() {
            for j in i..=grid.ns() {
                assert_eq!(p.get(i, j), 1.5);
            }
        }
        let z = phi_plus(1.5, &Kernel::zero(), &grid).unwrap();
        assert!(z.values().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn plus_at_zero_window_is_mean_intensity() {
        let step = 1.0 / 256.0;
        let grid = SurfaceGrid::new(step, 5.0, 0.0).unwrap();
        let p = phi_plus(1.0, &h(), &grid).unwrap();
        let lam = expected_intensity_volterra(1.0, &h(), 5.0, step).unwrap();
        for i in 0..=grid.nt() {
            assert!((p.get(i, 0) - lam.values()[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn minus_at_time_zero_closed_forms() {
        let step = 1.0 / 64.0;
        for s in [0.0, 0.5, 1.0, 2.5] {
            let e = (-s as f64).exp();
            // h = 0.5 e^{-x}
            assert!((phi_minus_a2_at(&h(), 1.0, 0.0, s, step).unwrap() - 0.5 * e).abs() < 1e-9);
            let f0 = PastDensity::exponential(1.0).unwrap();
            assert!((phi_minus_a1_at(&h(), &f0, 0.0, s, step).unwrap() - 0.25 * e).abs() < 1e-9);
            // h = e^{-x}
            let unit = Kernel::exponential(1.0, 1.0).unwrap();
            assert!((phi_minus_a2_at(&unit, 1.0, 0.0, s, step).unwrap() - e).abs() < 1e-9);
            assert!((phi_minus_a1_at(&unit, &f0, 0.0, s, step).unwrap() - 0.5 * e).abs() < 1e-9);
        }
        let grid = SurfaceGrid::new(0.25, 1.0, 1.0).unwrap();
        assert!(phi_minus_a2(&Kernel::zero(), 1.0, &grid).unwrap().values().iter().all(|&v| v == 0.0));
        let f0 = PastDensity::uniform(-2.0, 0.0).unwrap();
        assert!(phi_minus_a1(&Kernel::zero(), &f0, &grid).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn past_point_forced_into_window_is_degenerate() {
        let f0 = PastDensity::uniform(-0.5, 0.0).unwrap();
        let r = phi_minus_a1_at(&h(), &f0, 0.0, 1.0, 1.0 / 64.0);
        assert!(matches!(r, Err(Error::DegenerateConditioning { .. })));
    }

    #[test]
    fn surface_parts_sum() {
        let grid = SurfaceGrid::new(1.0 / 16.0, 1.0, 1.0).unwrap();
        let phi = PhiSurface::poisson_past(1.0, &h(), 1.0, &grid).unwrap();
        let total = phi.total();
        for i in 0..=grid.nt() {
            for j in 0..=grid.ns() {
                assert_eq!(total.get(i, j), phi.plus().get(i, j) + phi.minus().get(i, j));
            }
        }
        assert!((phi.eval(0.5, 0.5) - total.get(8, 8)).abs() < 1e-15);
    }
}
