use super::pps::{check_rate, rate_limit};
use crate::analytics::phi_plus;
use crate::grid::{GridFunction2D, SurfaceGrid};
use crate::processes::Kernel;
use crate::{Error, Result};

/// `v(t, s) = P(S_{t-} >= s)` at the nodes of a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalGrid {
    values: GridFunction2D,
}

impl SurvivalGrid {
    /// Checks `v(t, 0) = 1` and `0 <= v <= 1` to `1e-12`.
    pub fn new(values: GridFunction2D) -> Result<Self> {
        for i in 0..=values.nt() {
            if (values.get(i, 0) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("v(t, 0) = {} at row {i}", values.get(i, 0))));
            }
        }
        if values.values().iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::InvalidParameter("survival values must lie in [0, 1]".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &GridFunction2D {
        &self.values
    }

    pub fn into_inner(self) -> GridFunction2D {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        self.values.eval(t, s)
    }

    /// Largest increase `v(t, s_{j+1}) - v(t, s_j)` over the grid (0 for a
    /// family of survival functions).
    pub fn max_increase(&self) -> f64 {
        let g = &self.values;
        let mut worst: f64 = 0.0;
        for i in 0..=g.nt() {
            for w in g.row(i).windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.values.max_abs_diff(&other.values)
    }
}

fn initial_row(v_in: &dyn Fn(f64) -> f64, step: f64, ns: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = (0..=ns).map(|j| v_in(j as f64 * step)).collect();
    if (row[0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("v_in(0) = {} must be 1", row[0])));
    }
    if row.iter().any(|&v| !(0.0..=1.0 + 1e-12).contains(&v)) || row.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::InvalidParameter("v_in must be a survival function".into()));
    }
    Ok(row)
}

/// Closed-form solution of `d_t v + d_s v + Phi v = 0`, `v(t, 0) = 1`,
/// `v(0, s) = v_in(s)` on the grid of `phi`: `v` is the value at the foot of
/// the characteristic times `exp(-int Phi)` along it, the integral taken by
/// the trapezoid rule between consecutive diagonal nodes.
pub fn solve_v_characteristics(phi: &GridFunction2D, v_in: &dyn Fn(f64) -> f64) -> Result<SurvivalGrid> {
    if phi.values().iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter("Phi must be finite and nonnegative".into()));
    }
    let (step, nt, ns) = (phi.step(), phi.nt(), phi.ns());
    let mut v = GridFunction2D::zeros(step, nt, ns);
    for (j, x) in initial_row(v_in, step, ns)?.into_iter().enumerate() {
        v.set(0, j, x);
    }
    for i in 1..=nt {
        v.set(i, 0, 1.0);
        for j in 1..=ns {
            let w = 0.5 * step * (phi.get(i - 1, j - 1) + phi.get(i, j));
            v.set(i, j, v.get(i - 1, j - 1) * (-w).exp());
        }
    }
    SurvivalGrid::new(v)
}

/// Upwind scheme for the same system with `dt = ds = step`: exact transport
/// along the diagonal and an absorption factor `exp(-Phi step)` with `Phi`
/// taken at the start of each step. First order in `step`.
pub fn solve_v_upwind(phi: &GridFunction2D, v_in: &dyn Fn(f64) -> f64) -> Result<SurvivalGrid> {
    let (step, nt, ns) = (phi.step(), phi.nt(), phi.ns());
    let limit = rate_limit(step);
    for &p in phi.values() {
        check_rate(p, limit)?;
    }
    let mut v = GridFunction2D::zeros(step, nt, ns);
    for (j, x) in initial_row(v_in, step, ns)?.into_iter().enumerate() {
        v.set(0, j, x);
    }
    for i in 1..=nt {
        v.set(i, 0, 1.0);
        for j in 1..=ns {
            v.set(i, j, v.get(i - 1, j - 1) * (-step * phi.get(i - 1, j - 1)).exp());
        }
    }
    SurvivalGrid::new(v)
}

/// Limit `M -> inf` of the survival function when the past recedes to
/// `-inf`: rate `Phi_+` only and `v_in = 1`.
pub fn solve_v_limit(mu: f64, h: &Kernel, grid: &SurfaceGrid) -> Result<SurvivalGrid> {
    solve_v_characteristics(&phi_plus(mu, h, grid)?, &|_| 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: f64, step: f64, n: usize) -> GridFunction2D {
        GridFunction2D::from_fn(step, n, n, |_, _| c)
    }

    #[test]
    fn zero_rate_transports_initial_survival() {
        let phi = constant(0.0, 0.125, 16);
        let v_in = |s: f64| (-s).exp();
        for v in [solve_v_characteristics(&phi, &v_in).unwrap(), solve_v_upwind(&phi, &v_in).unwrap()] {
            for i in 0..=16 {
                for j in 0..=16 {
                    let (t, s) = (i as f64 * 0.125, j as f64 * 0.125);
                    let want = if s >= t { v_in(s - t) } else { 1.0 };
                    assert!((v.get(i, j) - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn constant_rate_closed_form() {
        let c = 0.7;
        let v = solve_v_characteristics(&constant(c, 1.0 / 32.0, 64), &|_| 1.0).unwrap();
        for i in (0..=64).step_by(7) {
            for j in (0..=64).step_by(5) {
                let (t, s) = (i as f64 / 32.0, j as f64 / 32.0);
                assert!((v.get(i, j) - (-c * t.min(s)).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_kernel_limit() {
        let grid = SurfaceGrid::new(1.0 / 64.0, 2.0, 2.0).unwrap();
        let v = solve_v_limit(1.3, &Kernel::zero(), &grid).unwrap();
        for i in (0..=128).step_by(9) {
            for j in (0..=128).step_by(11) {
                let (t, s) = (i as f64 / 64.0, j as f64 / 64.0);
                assert!((v.get(i, j) - (-1.3 * t.min(s)).exp()).abs() < 1e-13);
            }
        }
        let bad = Kernel::exponential(1.5, 1.0).unwrap();
        assert!(matches!(solve_v_limit(1.0, &bad, &grid), Err(Error::SupercriticalKernel { .. })));
    }

    #[test]
    fn upwind_converges_at_first_order() {
        let rate = |t: f64, s: f64| 1.0 + 0.5 * (t - s).sin() + 0.3 * s;
        let mut errors = Vec::new();
        for k in 5..=7 {
            let step = 1.0 / (1u32 << k) as f64;
            let n = 2 << k;
            let phi = GridFunction2D::from_fn(step, n, n, rate);
            let a = solve_v_characteristics(&phi, &|s| (-s * s).exp()).unwrap();
            let b = solve_v_upwind(&phi, &|s| (-s * s).exp()).unwrap();
            errors.push(a.max_abs_diff(&b).unwrap());
        }
        for w in errors.windows(2) {
            let r = w[0] / w[1];
            assert!((1.5..=3.0).contains(&r), "{errors:?}");
        }
    }

    #[test]
    fn survival_shape_and_comparison() {
        let step = 1.0 / 32.0;
        let lo = GridFunction2D::from_fn(step, 64, 64, |t, s| 0.5 + 0.2 * t.cos().abs() + 0.1 * s);
        let hi = lo.zip_with(&constant(0.3, step, 64), |a, b| a + b).unwrap();
        let v_in = |s: f64| 1.0 / (1.0 + s);
        for solve in [solve_v_characteristics, solve_v_upwind] {
            let a = solve(&lo, &v_in).unwrap();
            let b = solve(&hi, &v_in).unwrap();
            assert!(a.max_increase() <= 1e-15);
            assert!(b.max_increase() <= 1e-15);
            assert!(a.values().values().iter().zip(b.values().values()).all(|(x, y)| x >= y));
        }
    }

    #[test]
    fn rejects_invalid_input() {
        let phi = constant(1.0, 0.1, 4);
        assert!(solve_v_characteristics(&phi, &|s| 1.0 + s).is_err());
        assert!(solve_v_characteristics(&phi, &|_| 0.5).is_err());
        assert!(matches!(solve_v_upwind(&constant(50.0, 0.1, 4), &|_| 1.0), Err(Error::UnboundedRate { .. })));
    }
}
