use crate::processes::{evaluate_intensity, IntensityModel, Kernel, PastSpec, SpikeTrain};
use crate::rng::replicate;
use crate::thinning::{simulate_hawkes_with_past, SimConfig};
use crate::{Error, Result};

/// Replications that must satisfy a conditioning event.
pub const MIN_CONDITIONED: usize = 100;

/// A Monte Carlo mean with its standard error over `n` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { value: f64::NAN, se: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { value: mean, se: (var / n as f64).sqrt(), n }
    }

    /// `|value - target| <= k se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

/// `E_{t,s}`: no point in `[t - s, t)`.
pub fn avoids_window(train: &SpikeTrain, t: f64, s: f64) -> bool {
    s <= 0.0 || train.count_in(t - s, t) == 0
}

/// Fraction of trains with no point in `[t - s, t)`, with its binomial
/// standard error.
pub fn empirical_survival(trains: &[SpikeTrain], t: f64, s: f64) -> Estimate {
    let n = trains.len();
    let hits = trains.iter().filter(|tr| avoids_window(tr, t, s)).count();
    let p = if n > 0 { hits as f64 / n as f64 } else { f64::NAN };
    Estimate { value: p, se: (p * (1.0 - p) / n as f64).sqrt(), n }
}

/// Mean intensity at `t` over the trains with no point in `[t - s, t)`.
pub fn empirical_conditional_intensity(
    trains: &[SpikeTrain],
    model: &IntensityModel,
    t: f64,
    s: f64,
) -> Result<Estimate> {
    let mut xs = Vec::new();
    for tr in trains.iter().filter(|tr| avoids_window(tr, t, s)) {
        xs.push(evaluate_intensity(model, t, tr)?);
    }
    if xs.len() < MIN_CONDITIONED {
        return Err(Error::InsufficientConditioningMass { count: xs.len(), needed: MIN_CONDITIONED });
    }
    Ok(Estimate::from_samples(&xs))
}

/// Conditioned-simulation estimate of the part of the Hawkes conditional
/// rate due to the past: with no baseline, the process consists of the past
/// points and their descendants only, and its intensity at `t` averaged over
/// `{no point in [t - s, t)}` is `Phi_-(t, s)` for any past law.
pub fn phi_minus_monte_carlo(h: &Kernel, past: &PastSpec, t: f64, s: f64, reps: usize, master: u64) -> Result<Estimate> {
    let model = IntensityModel::linear_hawkes(0.0, h.clone())?;
    let cfg = SimConfig::new(t.max(1e-9), master);
    let trains: Vec<SpikeTrain> = replicate(master, reps, |_, seed| simulate_hawkes_with_past(0.0, h, past, &cfg.with_seed(seed)))
        .into_iter()
        .collect::<Result<_>>()?;
    empirical_conditional_intensity(&trains, &model, t, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::RateFn;
    use crate::thinning::simulate_thinning;

    fn trains(model: &IntensityModel, past: &PastSpec, t: f64, n: usize, master: u64) -> Vec<SpikeTrain> {
        let cfg = SimConfig::new(t, master);
        replicate(master, n, |_, seed| simulate_thinning(model, past, &cfg.with_seed(seed)).unwrap())
    }

    #[test]
    fn survival_of_poisson() {
        let lam = 2.0;
        let model = IntensityModel::homogeneous_poisson(lam).unwrap();
        let tr = trains(&model, &PastSpec::PoissonPast(lam), 1.0, 20_000, 3);
        assert_eq!(empirical_survival(&tr, 1.0, 0.0).value, 1.0);
        let mut prev = 1.0;
        for s in [0.1, 0.3, 0.6, 1.0, 1.5] {
            let e = empirical_survival(&tr, 1.0, s);
            assert!(e.within((-lam * s).exp(), 3.0), "s={s}: {e:?}");
            assert!(e.value <= prev);
            prev = e.value;
        }
    }

    #[test]
    fn conditional_intensity_examples() {
        let model = IntensityModel::homogeneous_poisson(1.5).unwrap();
        let tr = trains(&model, &PastSpec::FixedPoints(vec![-1.0]), 2.0, 2000, 8);
        for s in [0.0, 0.5, 1.0] {
            let e = empirical_conditional_intensity(&tr, &model, 2.0, s).unwrap();
            assert_eq!(e.value, 1.5);
            assert_eq!(e.se, 0.0);
        }
        let step = IntensityModel::renewal(RateFn::step(1.0, 1.0));
        let tr = trains(&step, &PastSpec::FixedPoints(vec![-0.5]), 3.0, 2000, 9);
        let e = empirical_conditional_intensity(&tr, &step, 3.0, 1.0).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn too_few_conditioned_trains() {
        let model = IntensityModel::homogeneous_poisson(1.0).unwrap();
        let tr = trains(&model, &PastSpec::FixedPoints(vec![-1.0]), 1.0, 50, 1);
        assert!(matches!(
            empirical_conditional_intensity(&tr, &model, 1.0, 0.0),
            Err(Error::InsufficientConditioningMass { count: 50, needed: 100 })
        ));
    }

    #[test]
    fn phi_minus_estimate_vanishes_without_past() {
        let h = Kernel::exponential(0.5, 1.0).unwrap();
        let e = phi_minus_monte_carlo(&h, &PastSpec::Empty, 1.0, 0.5, 200, 4).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
