//! Exact simulation by thinning a unit-rate Poisson field on
//! `[0, T] x [0, inf)`, and the cluster construction of linear Hawkes
//! processes used as an independent oracle.
//!
//! Accepted points are the abscissas of field points lying under the graph
//! of the running intensity, scanned in increasing time. The adaptive policy
//! reveals the field lazily in strips `(t, t_end] x [0, B]` where `B` bounds
//! the intensity on the strip; a strip whose bound turns out too small is
//! re-drawn with a doubled bound and fresh randomness. Re-draws only fire
//! where a candidate lands, so exactness needs a valid envelope; rates with
//! an unknown envelope are bounded by sampling 17 points per strip.

mod cluster;
mod field;

use rand::Rng;

pub use cluster::{cluster_family, simulate_cluster_hawkes, simulate_hawkes_with_past};
pub use field::{sample_poisson_field, PoissonField};

use crate::processes::{IntensityModel, PastSpec, SpikeTrain};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CeilingPolicy {
    /// Materialise the whole field `[0, T] x [0, c]`; an intensity above `c`
    /// at a field point is an error.
    StaticCeiling(f64),
    AdaptiveStrips,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    /// Explosion guard on the number of future points.
    pub max_events: usize,
    pub ceiling: CeilingPolicy,
    pub seed: u64,
    /// Strip length when the model bound is only local in time.
    pub strip_width: f64,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            max_events: DEFAULT_MAX_EVENTS,
            ceiling: CeilingPolicy::AdaptiveStrips,
            seed,
            strip_width: 0.5,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {} must be > 0", self.horizon)));
        }
        if self.max_events < 1 {
            return Err(Error::InvalidParameter("max_events must be >= 1".into()));
        }
        if !(self.strip_width > 0.0) {
            return Err(Error::InvalidParameter("strip_width must be > 0".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one adaptive thinning run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThinningStats {
    pub candidates: usize,
    pub redraws: usize,
}

impl From<&SpikeTrain> for PastSpec {
    fn from(train: &SpikeTrain) -> Self {
        PastSpec::FixedPoints(train.past().to_vec())
    }
}

pub(crate) fn sample_past<R: Rng + ?Sized>(model: &IntensityModel, past: &PastSpec, rng: &mut R) -> Result<Vec<f64>> {
    let depth = match past {
        PastSpec::PoissonPast(alpha) if *alpha > 0.0 => PastSpec::poisson_depth(model, *alpha),
        _ => 0.0,
    };
    past.sample(rng, depth)
}

/// Simulates `model` on `(0, horizon]` by thinning.
pub fn simulate_thinning(model: &IntensityModel, past: &PastSpec, cfg: &SimConfig) -> Result<SpikeTrain> {
    simulate_thinning_with_stats(model, past, cfg).map(|(t, _)| t)
}

pub fn simulate_thinning_with_stats(
    model: &IntensityModel,
    past: &PastSpec,
    cfg: &SimConfig,
) -> Result<(SpikeTrain, ThinningStats)> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let past_points = sample_past(model, past, &mut rng)?;
    match cfg.ceiling {
        CeilingPolicy::StaticCeiling(c) => {
            let field = field::draw_field(cfg.horizon, c, &mut rng);
            let train = thin_with_field(model, &past_points, &field, cfg.horizon, cfg.max_events)?;
            let stats = ThinningStats { candidates: field.points.len(), redraws: 0 };
            Ok((train, stats))
        }
        CeilingPolicy::AdaptiveStrips => adaptive(model, past_points, cfg, &mut rng),
    }
}

/// Deterministic projection of a materialised field: the future points are
/// the abscissas `t <= horizon` of field points `(t, x)` with `x <= lambda(t)`.
pub fn thin_with_field(
    model: &IntensityModel,
    past: &[f64],
    field: &PoissonField,
    horizon: f64,
    max_events: usize,
) -> Result<SpikeTrain> {
    let mut pts = past.to_vec();
    let n_past = pts.len();
    for &(t, x) in &field.points {
        if t > horizon {
            break;
        }
        if t <= 0.0 {
            continue;
        }
        let lam = model.intensity(t, &pts)?;
        if lam > field.x_max {
            return Err(Error::CeilingExceeded { t, ceiling: field.x_max, rate: lam });
        }
        if lam > 0.0 && x <= lam {
            if pts.len() - n_past >= max_events {
                return Err(Error::ExplosionGuard { max_events, t });
            }
            pts.push(t);
        }
    }
    let future = pts.split_off(n_past);
    SpikeTrain::new(pts, future, horizon)
}

fn adaptive<R: Rng + ?Sized>(
    model: &IntensityModel,
    mut pts: Vec<f64>,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<(SpikeTrain, ThinningStats)> {
    let horizon = cfg.horizon;
    let n_past = pts.len();
    let mut stats = ThinningStats::default();
    let global = model.ceiling_holds_until_next_point();
    let mut t = 0.0;
    while t < horizon {
        // strips sit on a fixed grid so sampled bounds do not drift with t
        let strip_end = if global {
            horizon
        } else {
            (((t / cfg.strip_width).floor() + 1.0) * cfg.strip_width).min(horizon)
        };
        let mut bound = match model.ceiling(t, strip_end, &pts) {
            Some(b) => b,
            None => sampled_bound(model, t, strip_end, &pts)?,
        };
        if !bound.is_finite() {
            return Err(Error::ModelPreconditionViolated(format!("no finite intensity bound at t = {t}")));
        }
        if bound <= 0.0 {
            t = strip_end;
            continue;
        }
        // candidates on (t, strip_end] until one is accepted
        loop {
            let u: f64 = rng.random();
            let tau = t - (1.0 - u).ln() / bound;
            if tau > strip_end {
                t = strip_end;
                break;
            }
            let x = bound * rng.random::<f64>();
            stats.candidates += 1;
            let lam = model.intensity(tau, &pts)?;
            if lam > bound {
                // bound was wrong on this strip: re-draw it from t
                stats.redraws += 1;
                bound = (2.0 * bound).max(lam);
                continue;
            }
            t = tau;
            if lam > 0.0 && x <= lam {
                if pts.len() - n_past >= cfg.max_events {
                    return Err(Error::ExplosionGuard { max_events: cfg.max_events, t });
                }
                pts.push(tau);
                break;
            }
        }
    }
    let future = pts.split_off(n_past);
    Ok((SpikeTrain::new(pts, future, horizon)?, stats))
}

// Bound from samples on the strip, inflated; violations are caught by re-draws.
fn sampled_bound(model: &IntensityModel, t: f64, t_end: f64, pts: &[f64]) -> Result<f64> {
    const SAMPLES: usize = 16;
    let mut best: f64 = 0.0;
    for i in 0..=SAMPLES {
        let s = t + (t_end - t) * i as f64 / SAMPLES as f64;
        best = best.max(model.intensity(s, pts)?);
    }
    Ok(1.5 * best + 1e-9)
}
