use super::pps::{cdf_of, check_distribution, check_rate, rate_limit};
use crate::grid::SurfaceGrid;
use crate::{Error, Result};

/// Joint law of the age `s` and the last inter-spike interval `a` at one
/// time, as cell masses `mass[j * a_cells + k]` over
/// `[j step, (j + 1) step) x [k step, (k + 1) step)`. The last cell on each
/// axis also holds everything beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct WoldMeasure {
    pub step: f64,
    pub t: f64,
    pub s_cells: usize,
    pub a_cells: usize,
    pub mass: Vec<f64>,
    /// Resets whose new interval fell beyond the last `a` cell.
    pub clamped_resets: usize,
    pub clamped_mass: f64,
}

impl WoldMeasure {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.mass[j * self.a_cells + k]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn s_marginal(&self) -> Vec<f64> {
        self.mass.chunks(self.a_cells).map(|r| r.iter().sum()).collect()
    }

    pub fn a_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.a_cells];
        for row in self.mass.chunks(self.a_cells) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += m;
            }
        }
        out
    }

    pub fn s_cdf(&self, s: f64) -> f64 {
        cdf_of(&self.s_marginal(), self.step, s)
    }

    pub fn a_cdf(&self, a: f64) -> f64 {
        cdf_of(&self.a_marginal(), self.step, a)
    }
}

/// Unit mass in the cell containing `(s, a)`, both `> 0`.
pub fn bin_wold_point_mass(s: f64, a: f64, step: f64, s_max: f64) -> Result<Vec<f64>> {
    if !(s > 0.0 && a > 0.0 && s.is_finite() && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial state ({s}, {a}) must be positive")));
    }
    let n = super::pps::cell_count(step, s_max)?;
    let mut u = vec![0.0; n * n];
    let j = ((s / step).floor() as usize).min(n - 1);
    let k = ((a / step).floor() as usize).min(n - 1);
    u[j * n + k] = 1.0;
    Ok(u)
}

/// Expectation system of a generalized Wold process of order 1 with rate
/// `f(s, a)`: transport in `(t, s)` at fixed `a` with absorption `f`, and the
/// mass fired from age cell `j` re-enters at `s = 0` with `a` equal to the
/// firing age, split evenly between `a` cells `j` and `j + 1`. Both axes are
/// truncated at `grid.s_max`; `u_in` has `ns * ns` cells.
pub fn solve_wold_k1(f: &(dyn Fn(f64, f64) -> f64 + Sync), u_in: &[f64], grid: &SurfaceGrid) -> Result<WoldMeasure> {
    let step = grid.step;
    let n = grid.ns().max(1);
    if u_in.len() != n * n {
        return Err(Error::InvalidParameter(format!("initial data has {} cells, expected {}", u_in.len(), n * n)));
    }
    check_distribution(u_in)?;
    let limit = rate_limit(step);
    let mut decay = vec![0.0; n * n];
    for j in 0..n {
        let s = ((j + 1) as f64 * step).min((n as f64 - 0.5) * step);
        for k in 0..n {
            let r = f(s, (k as f64 + 0.5) * step);
            check_rate(r, limit)?;
            decay[j * n + k] = (-r * step).exp();
        }
    }

    let mut u = u_in.to_vec();
    let mut next = vec![0.0; n * n];
    let (mut clamped_resets, mut clamped_mass) = (0usize, 0.0);
    for _ in 0..grid.nt() {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut fired_into = vec![0.0; n];
        for j in 0..n {
            let to = (j + 1).min(n - 1);
            let mut fired = 0.0;
            for k in 0..n {
                let m = u[j * n + k];
                if m == 0.0 {
                    continue;
                }
                let kept = m * decay[j * n + k];
                fired += m - kept;
                next[to * n + k] += kept;
            }
            if fired == 0.0 {
                continue;
            }
            let half = 0.5 * fired;
            fired_into[j] += half;
            if j + 1 < n {
                fired_into[j + 1] += half;
            } else {
                fired_into[n - 1] += half;
                clamped_resets += 1;
                clamped_mass += half;
            }
        }
        for (k, m) in fired_into.into_iter().enumerate() {
            next[k] += m;
        }
        std::mem::swap(&mut u, &mut next);
    }
    Ok(WoldMeasure {
        step,
        t: grid.nt() as f64 * step,
        s_cells: n,
        a_cells: n,
        mass: u,
        clamped_resets,
        clamped_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::super::pps::{bin_point_mass, solve_pps, RateSurface};
    use super::*;
    use crate::processes::RateFn;

    #[test]
    fn zero_rate_freezes_interval() {
        let grid = SurfaceGrid::new(0.125, 1.0, 4.0).unwrap();
        let u0 = bin_wold_point_mass(0.3, 1.1, 0.125, 4.0).unwrap();
        let u = solve_wold_k1(&|_, _| 0.0, &u0, &grid).unwrap();
        assert_eq!(u.get(10, 8), 1.0);
        assert_eq!(u.total(), 1.0);
    }

    #[test]
    fn age_only_rate_reduces_to_pps() {
        let step = 1.0 / 64.0;
        let grid = SurfaceGrid::new(step, 4.0, 8.0).unwrap();
        let g = |s: f64| s.min(2.0);
        let u0 = bin_wold_point_mass(0.5, 1.0, step, 8.0).unwrap();
        let w = solve_wold_k1(&|s, _| g(s), &u0, &grid).unwrap();
        let p0 = bin_point_mass(0.5, step, 8.0).unwrap();
        let p = solve_pps(&RateSurface::AgeOnly(RateFn::capped_linear(1.0, 2.0)), &p0, &grid, usize::MAX).unwrap();
        let marg = w.s_marginal();
        let worst = marg.iter().zip(p.last()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-13, "{worst}");
        assert!((w.total() - 1.0).abs() < 1e-12);
        assert_eq!(w.clamped_resets, 0);
    }

    #[test]
    fn resets_record_firing_age() {
        let step = 0.25;
        let grid = SurfaceGrid::new(step, 0.25, 2.0).unwrap();
        let u0 = bin_wold_point_mass(0.6, 0.1, step, 2.0).unwrap();
        let u = solve_wold_k1(&|_, _| 1.0, &u0, &grid).unwrap();
        let fired = 1.0 - (-0.25f64).exp();
        assert!((u.get(0, 2) - fired / 2.0).abs() < 1e-15);
        assert!((u.get(0, 3) - fired / 2.0).abs() < 1e-15);
        assert!((u.get(3, 0) - (1.0 - fired)).abs() < 1e-15);
    }

    #[test]
    fn clamped_resets_are_counted() {
        let grid = SurfaceGrid::new(0.5, 1.0, 1.0).unwrap();
        let u0 = bin_wold_point_mass(0.7, 0.2, 0.5, 1.0).unwrap();
        let u = solve_wold_k1(&|_, _| 1.0, &u0, &grid).unwrap();
        assert!(u.clamped_resets > 0 && u.clamped_mass > 0.0);
        assert!((u.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = SurfaceGrid::new(0.5, 1.0, 1.0).unwrap();
        assert!(solve_wold_k1(&|_, _| 1.0, &[0.5, 0.0, 0.0, 0.0], &grid).is_err());
        let u0 = bin_wold_point_mass(0.7, 0.2, 0.5, 1.0).unwrap();
        assert!(matches!(solve_wold_k1(&|_, _| 100.0, &u0, &grid), Err(Error::UnboundedRate { .. })));
    }
}
