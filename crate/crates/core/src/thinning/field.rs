use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::rng::rng_from_seed;

/// Points of a unit-rate Poisson process on `[0, t_max] x [0, x_max]`,
/// sorted by abscissa then ordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonField {
    pub t_max: f64,
    pub x_max: f64,
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
}

impl PoissonField {
    /// Number of points in `[t0, t1) x [x0, x1)`.
    pub fn count_in(&self, t0: f64, t1: f64, x0: f64, x1: f64) -> usize {
        self.points.iter().filter(|(t, x)| *t >= t0 && *t < t1 && *x >= x0 && *x < x1).count()
    }
}

pub fn sample_poisson_field(t_max: f64, x_max: f64, seed: u64) -> PoissonField {
    let mut rng = rng_from_seed(seed);
    let mut f = draw_field(t_max, x_max, &mut rng);
    f.seed = seed;
    f
}

pub(crate) fn draw_field<R: Rng + ?Sized>(t_max: f64, x_max: f64, rng: &mut R) -> PoissonField {
    let area = t_max.max(0.0) * x_max.max(0.0);
    let n = if area > 0.0 { Poisson::new(area).unwrap().sample(rng) as usize } else { 0 };
    let mut points: Vec<(f64, f64)> =
        (0..n).map(|_| (t_max * rng.random::<f64>(), x_max * rng.random::<f64>())).collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    PoissonField { t_max, x_max, points, seed: 0 }
}
