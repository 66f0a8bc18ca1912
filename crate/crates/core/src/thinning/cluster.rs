use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{sample_past, SimConfig};
use crate::processes::{IntensityModel, Kernel, PastSpec, RateFn, SpikeTrain};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

fn check_subcritical(h: &Kernel) -> Result<()> {
    if !h.is_nonnegative() {
        return Err(Error::InvalidKernel("cluster construction needs a nonnegative kernel".into()));
    }
    let norm = h.l1_norm();
    if norm >= 1.0 {
        return Err(Error::SupercriticalKernel { norm });
    }
    Ok(())
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean > 0.0 {
        Poisson::new(mean).unwrap().sample(rng) as usize
    } else {
        0
    }
}

/// Children of a point at `origin`: a Poisson process of intensity
/// `h(. - origin)` restricted to `(max(origin, from), until]`.
fn children<R: Rng + ?Sized>(h: &Kernel, origin: f64, from: f64, until: f64, rng: &mut R, out: &mut Vec<f64>) {
    let lo = (from - origin).max(0.0);
    let hi = until - origin;
    if hi <= lo {
        return;
    }
    let c_lo = h.cumulative(lo);
    let mass = h.cumulative(hi) - c_lo;
    for _ in 0..poisson_count(mass, rng) {
        let y = c_lo + mass * rng.random::<f64>();
        let x = origin + h.inverse_cumulative(y).clamp(lo, hi);
        if x > origin && x > from && x <= until {
            out.push(x);
        }
    }
}

/// All descendants of a point at `origin` that fall in `(origin, until]`,
/// generation by generation. Fails once more than `max_events` are produced.
pub fn cluster_family<R: Rng + ?Sized>(
    h: &Kernel,
    origin: f64,
    until: f64,
    max_events: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut family = Vec::new();
    grow(h, vec![origin], until, max_events, rng, &mut family)?;
    Ok(family)
}

// Appends every descendant of `generation` to `out`.
fn grow<R: Rng + ?Sized>(
    h: &Kernel,
    mut generation: Vec<f64>,
    until: f64,
    max_events: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    let mut next = Vec::new();
    while !generation.is_empty() {
        next.clear();
        for &p in &generation {
            children(h, p, f64::NEG_INFINITY, until, rng, &mut next);
        }
        out.extend_from_slice(&next);
        if out.len() > max_events {
            return Err(Error::ExplosionGuard { max_events, t: until });
        }
        std::mem::swap(&mut generation, &mut next);
    }
    Ok(())
}

/// Inhomogeneous Poisson points of intensity `g` on `(0, until]`.
fn immigrants<R: Rng + ?Sized>(g: &RateFn, until: f64, strip: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut a = 0.0;
    while a < until {
        let b = (a + strip).min(until);
        let bound = match g.sup_on(a, b) {
            Some(c) => c,
            None => {
                let m = (0..=16).map(|i| g.eval(a + (b - a) * i as f64 / 16.0)).fold(0.0, f64::max);
                1.5 * m + 1e-9
            }
        };
        for _ in 0..poisson_count(bound * (b - a), rng) {
            let t = a + (b - a) * rng.random::<f64>();
            let v = g.eval(t);
            if v > bound {
                return Err(Error::CeilingExceeded { t, ceiling: bound, rate: v });
            }
            if rng.random::<f64>() * bound < v && t > 0.0 {
                out.push(t);
            }
        }
        a = b;
    }
    Ok(out)
}

fn finish(past: Vec<f64>, mut future: Vec<f64>, horizon: f64) -> Result<SpikeTrain> {
    future.sort_by(|a, b| a.partial_cmp(b).unwrap());
    future.dedup();
    SpikeTrain::new(past, future, horizon)
}

/// Linear Hawkes process on `(0, T]` with no past, built from Poisson(`g`)
/// immigrants, each followed by its subcritical cascade of offspring.
pub fn simulate_cluster_hawkes(g: &RateFn, h: &Kernel, cfg: &SimConfig) -> Result<SpikeTrain> {
    cfg.validate()?;
    check_subcritical(h)?;
    let mut rng = rng_from_seed(cfg.seed);
    let anc = immigrants(g, cfg.horizon, cfg.strip_width.max(cfg.horizon / 64.0), &mut rng)?;
    let mut all = anc.clone();
    grow(h, anc, cfg.horizon, cfg.max_events, &mut rng, &mut all)?;
    finish(Vec::new(), all, cfg.horizon)
}

/// Linear Hawkes process with baseline `mu` and a given past: the cluster
/// process of the immigrants, superposed with, for each past point, its
/// first-generation children on `(0, T]` and their cascades.
pub fn simulate_hawkes_with_past(mu: f64, h: &Kernel, past: &PastSpec, cfg: &SimConfig) -> Result<SpikeTrain> {
    cfg.validate()?;
    check_subcritical(h)?;
    let model = IntensityModel::linear_hawkes(mu, h.clone())?;
    let mut rng = rng_from_seed(cfg.seed);
    let past_points = sample_past(&model, past, &mut rng)?;
    let g = RateFn::constant(mu);
    let anc = immigrants(&g, cfg.horizon, cfg.horizon, &mut rng)?;
    let mut all = anc.clone();
    grow(h, anc, cfg.horizon, cfg.max_events, &mut rng, &mut all)?;
    for &t0 in &past_points {
        let mut first = Vec::new();
        children(h, t0, 0.0, cfg.horizon, &mut rng, &mut first);
        all.extend_from_slice(&first);
        grow(h, first, cfg.horizon, cfg.max_events, &mut rng, &mut all)?;
    }
    if all.len() > cfg.max_events {
        return Err(Error::ExplosionGuard { max_events: cfg.max_events, t: cfg.horizon });
    }
    finish(past_points, all, cfg.horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn zero_kernel_gives_poisson_immigrants() {
        let cfg = SimConfig::new(50.0, 3);
        let n = 400;
        let total: usize = (0..n)
            .map(|i| simulate_cluster_hawkes(&RateFn::constant(2.0), &Kernel::zero(), &cfg.with_seed(i)).unwrap().future().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 100.0).abs() < 3.0 * (100.0 / n as f64).sqrt());
    }

    #[test]
    fn zero_baseline_no_past_is_empty() {
        let h = Kernel::exponential(0.5, 1.0).unwrap();
        let tr = simulate_hawkes_with_past(0.0, &h, &PastSpec::Empty, &SimConfig::new(10.0, 1)).unwrap();
        assert!(tr.points().is_empty());
    }

    #[test]
    fn first_generation_of_fixed_past_point() {
        // mu = 0, h = e^{-x}: mean number of direct children of -1 on (0, T] is int_0^T e^{-(v+1)} dv
        let h = Kernel::exponential(1.0 - 1e-6, 1.0).unwrap();
        let t_end: f64 = 3.0;
        let expected = (1.0 - 1e-6) * ((-1.0f64).exp() - (-(t_end + 1.0)).exp());
        let mut rng = rng_from_seed(17);
        let n = 40_000;
        let mut total = 0usize;
        for _ in 0..n {
            let mut out = Vec::new();
            children(&h, -1.0, 0.0, t_end, &mut rng, &mut out);
            assert!(out.iter().all(|&x| x > 0.0 && x <= t_end));
            total += out.len();
        }
        let mean = total as f64 / n as f64;
        assert!((mean - expected).abs() < 3.0 * (expected / n as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn family_size_matches_branching_mean() {
        let h = Kernel::piecewise_constant(vec![0.0, 0.5, 2.0], vec![0.6, 0.2]).unwrap();
        let norm = h.l1_norm();
        let mut rng = rng_from_seed(23);
        let n = 20_000;
        let sizes: Vec<f64> =
            (0..n).map(|_| 1.0 + cluster_family(&h, 0.0, 1e12, 1_000_000, &mut rng).unwrap().len() as f64).collect();
        let mean = sizes.iter().sum::<f64>() / n as f64;
        // total progeny of a Poisson(m) Galton-Watson tree: mean 1/(1-m), variance m/(1-m)^3
        let var = norm / (1.0 - norm).powi(3);
        assert!((mean - 1.0 / (1.0 - norm)).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn supercritical_rejected() {
        let h = Kernel::piecewise_constant(vec![0.0, 1.0], vec![1.5]).unwrap();
        assert!(matches!(
            simulate_cluster_hawkes(&RateFn::constant(1.0), &h, &SimConfig::new(1.0, 0)),
            Err(Error::SupercriticalKernel { .. })
        ));
    }
}
