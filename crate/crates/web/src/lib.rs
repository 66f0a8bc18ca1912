//! Browser bindings: a Hawkes raster with its intensity, the renewal age
//! density from the age PDE, and the limit survival curve.

use wasm_bindgen::prelude::*;

use spike_age::grid::SurfaceGrid;
use spike_age::pde::{bin_point_mass, solve_pps, solve_v_limit, RateSurface};
use spike_age::processes::{IntensityModel, Kernel, PastSpec, RateFn};
use spike_age::rng::replicate;
use spike_age::thinning::{simulate_thinning, SimConfig};
use spike_age::Result;

fn js(e: spike_age::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `rows` Hawkes trains on `[0, horizon]` as `(row, time)` pairs, followed by
/// the intensity of row 0 sampled at `samples` equally spaced times; the
/// first entry is the number of pairs.
pub fn raster(mu: f64, amplitude: f64, decay: f64, horizon: f64, rows: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let model = IntensityModel::linear_hawkes(mu, Kernel::exponential(amplitude, decay)?)?;
    let cfg = SimConfig::new(horizon, seed);
    let trains = replicate(seed, rows, |_, s| simulate_thinning(&model, &PastSpec::Empty, &cfg.with_seed(s)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for (r, t) in trains.iter().enumerate() {
        for &x in t.future() {
            pairs.push(r as f64);
            pairs.push(x);
        }
    }
    let mut out = vec![(pairs.len() / 2) as f64];
    out.extend(pairs);
    if let Some(first) = trains.first() {
        for k in 0..samples {
            let t = horizon * (k as f64 + 0.5) / samples as f64;
            out.push(model.intensity(t, first.before(t))?);
        }
    }
    Ok(out)
}

/// Age density at time `t` of a renewal process with hazard
/// `min(slope s, cap)` started from age `age0`, on cells of width `step`
/// covering `[0, s_max]`.
pub fn age_density(slope: f64, cap: f64, age0: f64, t: f64, step: f64, s_max: f64) -> Result<Vec<f64>> {
    let grid = SurfaceGrid::new(step, t, s_max)?;
    let u0 = bin_point_mass(age0, step, s_max)?;
    let u = solve_pps(&RateSurface::AgeOnly(RateFn::capped_linear(slope, cap)), &u0, &grid, usize::MAX)?;
    Ok(u.last().iter().map(|m| m / step).collect())
}

/// Limit survival curve `s -> v(t_max, s)` for baseline `mu` and kernel
/// `amplitude e^{-decay x}`, at nodes `k step` up to `s_max`.
pub fn survival_curve(mu: f64, amplitude: f64, decay: f64, t_max: f64, s_max: f64, step: f64) -> Result<Vec<f64>> {
    let h = Kernel::exponential(amplitude, decay)?;
    IntensityModel::linear_hawkes(mu, h.clone())?;
    let grid = SurfaceGrid::new(step, t_max, s_max)?;
    let v = solve_v_limit(mu, &h, &grid)?;
    Ok(v.values().row(grid.nt()).to_vec())
}

#[wasm_bindgen(js_name = hawkesRaster)]
pub fn hawkes_raster(
    mu: f64,
    amplitude: f64,
    decay: f64,
    horizon: f64,
    rows: usize,
    samples: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    raster(mu, amplitude, decay, horizon, rows, samples, seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = renewalAgeDensity)]
pub fn renewal_age_density(
    slope: f64,
    cap: f64,
    age0: f64,
    t: f64,
    step: f64,
    s_max: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    age_density(slope, cap, age0, t, step, s_max).map_err(js)
}

#[wasm_bindgen(js_name = limitSurvival)]
pub fn limit_survival(
    mu: f64,
    amplitude: f64,
    decay: f64,
    t_max: f64,
    s_max: f64,
    step: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    survival_curve(mu, amplitude, decay, t_max, s_max, step).map_err(js)
}
