use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::func::RateFn;
use super::model::IntensityModel;
use crate::{Error, Result};

/// Number of tabulation nodes for inverse-CDF sampling of a past density.
pub const PAST_DENSITY_NODES: usize = 1 << 14;

/// Neglected mass allowed when truncating an infinite past.
pub const PAST_TRUNCATION_MASS: f64 = 1e-10;

/// Bounded density of the single past point `T_0`, supported on `[lo, hi]` with `hi <= 0`.
#[derive(Debug, Clone)]
pub struct PastDensity {
    density: RateFn,
    lo: f64,
    hi: f64,
    // CDF at the tabulation nodes
    cdf: Vec<f64>,
}

impl PastDensity {
    pub fn new(density: RateFn, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && hi <= 0.0 && lo.is_finite()) {
            return Err(Error::InvalidParameter(format!("past density support [{lo}, {hi}] must lie in R_-")));
        }
        let n = PAST_DENSITY_NODES;
        let step = (hi - lo) / n as f64;
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut fa = density.eval(lo);
        for i in 0..n {
            let a = lo + i as f64 * step;
            let fm = density.eval(a + 0.5 * step);
            let fb = density.eval(if i + 1 == n { hi } else { a + step });
            if fa < 0.0 || fm < 0.0 || !fm.is_finite() {
                return Err(Error::NotADensity { mass: f64::NAN });
            }
            acc += step * (fa + 4.0 * fm + fb) / 6.0;
            cdf.push(acc);
            fa = fb;
        }
        if (acc - 1.0).abs() > 1e-8 {
            return Err(Error::NotADensity { mass: acc });
        }
        Ok(Self { density, lo, hi, cdf })
    }

    /// `alpha * exp(alpha * t0)` on `(-inf, 0]`, truncated where the
    /// remaining mass drops below `1e-12`.
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("rate {alpha} must be > 0")));
        }
        let depth = (1e12f64).ln() / alpha;
        Self::new(RateFn::new(move |t0| if t0 <= 0.0 { alpha * (alpha * t0).exp() } else { 0.0 }, super::Envelope::Bounded(alpha)), -depth, 0.0)
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("uniform past needs lo < hi, got [{lo}, {hi}]")));
        }
        let c = 1.0 / (hi - lo);
        Self::new(RateFn::new(move |t0| if (lo..=hi).contains(&t0) { c } else { 0.0 }, super::Envelope::Bounded(c)), lo, hi)
    }

    pub fn eval(&self, t0: f64) -> f64 {
        if t0 < self.lo || t0 > self.hi {
            0.0
        } else {
            self.density.eval(t0)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Inverse-CDF draw by binary search on the tabulated CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let step = (self.hi - self.lo) / PAST_DENSITY_NODES as f64;
        let width = self.cdf[i + 1] - self.cdf[i];
        let frac = if width > 0.0 { (u - self.cdf[i]) / width } else { 0.5 };
        (self.lo + (i as f64 + frac) * step).min(self.hi)
    }
}

/// Distribution of the points before time 0.
#[derive(Debug, Clone)]
pub enum PastSpec {
    Empty,
    FixedPoints(Vec<f64>),
    SinglePointWithDensity(PastDensity),
    /// Homogeneous Poisson process of rate `alpha` on `R_-`.
    PoissonPast(f64),
}

impl PastSpec {
    /// Truncation depth for a Poisson past driving `model`: for kernel models
    /// the neglected contribution `alpha * int_D^inf h` stays below
    /// [`PAST_TRUNCATION_MASS`]; otherwise the probability of seeing fewer
    /// points than the model needs does.
    pub fn poisson_depth(model: &IntensityModel, alpha: f64) -> f64 {
        if let Some(k) = model.kernel() {
            return k.tail_depth(alpha, PAST_TRUNCATION_MASS);
        }
        let need = model.required_history().max(1);
        let mut depth = 1.0 / alpha;
        while poisson_cdf(alpha * depth, need - 1) > PAST_TRUNCATION_MASS {
            depth *= 1.25;
        }
        depth
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, poisson_depth: f64) -> Result<Vec<f64>> {
        match self {
            PastSpec::Empty => Ok(Vec::new()),
            PastSpec::FixedPoints(p) => {
                if p.iter().any(|&x| !(x <= 0.0)) || p.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidTrain("fixed past points must be <= 0 and increasing".into()));
                }
                Ok(p.clone())
            }
            PastSpec::SinglePointWithDensity(d) => Ok(vec![d.sample(rng)]),
            PastSpec::PoissonPast(alpha) => {
                if !(*alpha > 0.0) {
                    return Err(Error::InvalidParameter(format!("Poisson past rate {alpha} must be > 0")));
                }
                let mean = alpha * poisson_depth;
                let n = if mean > 0.0 { Poisson::new(mean).unwrap().sample(rng) as usize } else { 0 };
                let mut pts: Vec<f64> = (0..n).map(|_| -poisson_depth * rng.random::<f64>()).collect();
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts.dedup();
                Ok(pts)
            }
        }
    }
}

// P(Poisson(m) <= k)
fn poisson_cdf(m: f64, k: usize) -> f64 {
    let mut term = (-m).exp();
    let mut acc = term;
    for j in 1..=k {
        term *= m / j as f64;
        acc += term;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::Kernel;
    use crate::rng::rng_from_seed;

    #[test]
    fn density_mass_checked() {
        let bad = RateFn::new(|_| 2.0, crate::processes::Envelope::Bounded(2.0));
        assert!(matches!(PastDensity::new(bad, -1.0, 0.0), Err(Error::NotADensity { .. })));
        assert!(PastDensity::exponential(1.0).is_ok());
        assert!(PastDensity::uniform(-5.0, -4.0).is_ok());
    }

    #[test]
    fn exponential_past_sample_mean() {
        let d = PastDensity::exponential(2.0).unwrap();
        let mut rng = rng_from_seed(3);
        let n = 200_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        // E[T0] = -1/2, sd 1/2
        assert!((mean + 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt() + 1e-3);
    }

    #[test]
    fn uniform_past_stays_in_support() {
        let d = PastDensity::uniform(-9.0, -8.0).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..1000 {
            let x = d.sample(&mut rng);
            assert!((-9.0..=-8.0).contains(&x));
        }
    }

    #[test]
    fn poisson_depth_for_kernel() {
        let m = IntensityModel::linear_hawkes(1.0, Kernel::exponential(0.5, 1.0).unwrap()).unwrap();
        let d = PastSpec::poisson_depth(&m, 1.0);
        assert!((0.5 * (-d).exp() - PAST_TRUNCATION_MASS).abs() < 1e-18);
    }

    #[test]
    fn poisson_past_is_sorted_and_negative() {
        let mut rng = rng_from_seed(11);
        let pts = PastSpec::PoissonPast(3.0).sample(&mut rng, 10.0).unwrap();
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!(pts.iter().all(|&p| (-10.0..=0.0).contains(&p)));
    }
}
