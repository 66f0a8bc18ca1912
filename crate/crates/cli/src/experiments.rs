use std::fmt::Write as _;

use spike_age::analytics::{
    expected_intensity_volterra, phi_minus_a1, phi_minus_a1_at, phi_minus_a2, phi_minus_a2_at, phi_plus, phi_plus_at,
    solve_g, solve_l, PhiSurface,
};
use spike_age::csv::{fmt_f64, grid_2d};
use spike_age::grid::{GridFunction2D, SurfaceGrid};
use spike_age::montecarlo::{empirical_conditional_intensity, ks_samples, Estimate};
use spike_age::pde::{
    conservation_check, solve_pps, solve_v_characteristics, solve_v_limit, solve_v_upwind, solve_wold_k1,
    weak_residual_micro, PolyBump, RateSurface, MASS_TOLERANCE,
};
use spike_age::processes::{age_at, successive_ages, IntensityModel, PastDensity, PastSpec, RateFn, SpikeTrain};
use spike_age::rng::{replicate, replication_seed, rng_from_seed};
use spike_age::thinning::{simulate_cluster_hawkes, simulate_thinning, SimConfig};

use crate::config::{Family, Kind, PastSection, Scheme, Setup, ValidateSection};
use crate::error::{CliResult, Context};
use crate::output::{seed_set, summary, Manifest, OutDir, Stat};

/// Runs the experiment, writes `manifest.csv`, its data files and
/// `summary.csv`, and returns the summary rows.
pub fn run(setup: &Setup, out: &OutDir) -> CliResult<Vec<Stat>> {
    let mut manifest = Manifest::default();
    let stats = match setup.kind {
        Kind::Simulate => simulate(setup, out, &mut manifest)?,
        Kind::SolvePde => solve_pde(setup, out)?,
        Kind::PhiSurface => phi_surface(setup, out)?,
        Kind::Validate => validate(setup, out, &mut manifest)?,
        Kind::LimitStudy => limit_study(setup, out)?,
    };
    out.write("manifest.csv", &manifest.render())?;
    out.write("summary.csv", &summary(&stats))?;
    Ok(stats)
}

fn trains(setup: &Setup, model: &IntensityModel, past: &PastSpec, horizon: f64, master: u64) -> CliResult<Vec<SpikeTrain>> {
    let cfg = SimConfig { horizon, ..setup.sim_config() };
    replicate(master, setup.reps, |_, seed| simulate_thinning(model, past, &cfg.with_seed(seed)))
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.context(|| format!("simulation, replication {i} of master seed {master}")))
        .collect()
}

fn counts(trains: &[SpikeTrain]) -> Vec<usize> {
    trains.iter().map(|t| t.future().len()).collect()
}

fn record_every(setup: &Setup) -> usize {
    match setup.grid.record_every {
        0 => usize::MAX,
        k => k,
    }
}

fn simulate(setup: &Setup, out: &OutDir, manifest: &mut Manifest) -> CliResult<Vec<Stat>> {
    let m = setup.model();
    let trains = trains(setup, &m.model, &setup.past.spec, setup.horizon, setup.seed)?;
    for (i, t) in trains.iter().enumerate() {
        out.write(&format!("trains/rep_{i:06}.txt"), &t.to_text())?;
    }
    let c = counts(&trains);
    manifest.push_stream(0, setup.seed, &c);
    let mut stats = Vec::new();
    if !c.is_empty() {
        let xs: Vec<f64> = c.iter().map(|&k| k as f64).collect();
        let e = Estimate::from_samples(&xs);
        stats.push(Stat::new("mean_count", e.value).se(e.se).n(e.n).seeds(seed_set(setup.seed, setup.reps)));
    }
    Ok(stats)
}

fn pps_rate(family: &Family) -> RateSurface {
    match family {
        Family::Poisson(r) => RateSurface::Constant(*r),
        Family::InhomogeneousPoisson(f) => {
            let f = f.clone();
            RateSurface::function(move |t, _| f.eval(t))
        }
        Family::Renewal(f) => RateSurface::AgeOnly(f.clone()),
        _ => unreachable!("checked at load"),
    }
}

fn solve_pde(setup: &Setup, out: &OutDir) -> CliResult<Vec<Stat>> {
    let m = setup.model();
    let grid = &setup.grid.grid;
    let step = grid.step;
    match &m.family {
        Family::Wold { .. } => {
            let f = m.wold_k1().expect("checked at load");
            let u0 = setup.past.initial_wold(step, grid.s_max)?;
            let w = solve_wold_k1(&f, &u0, grid).context(|| "solve-pde: Wold system".into())?;
            let (s, a) = (w.s_marginal(), w.a_marginal());
            let mut text = String::from("x,age_mass,interval_mass\n");
            for j in 0..s.len().max(a.len()) {
                let get = |v: &[f64]| v.get(j).map(|&x| fmt_f64(x)).unwrap_or_default();
                let _ = writeln!(text, "{},{},{}", fmt_f64(j as f64 * step), get(&s), get(&a));
            }
            out.write("wold_marginals.csv", &text)?;
            Ok(vec![
                Stat::new("mass_error", (w.total() - 1.0).abs()).at_most(MASS_TOLERANCE),
                Stat::new("clamped_mass", w.clamped_mass),
                Stat::new("clamped_resets", w.clamped_resets as f64),
            ])
        }
        Family::Hawkes { mu, kernel } => {
            let surface = phi(*mu, kernel, &setup.past.spec, grid).context(|| "solve-pde: Phi surface".into())?;
            let phi = surface.total();
            let v_in = setup.past.age_survival()?;
            let v = match setup.grid.scheme {
                Scheme::Characteristics => solve_v_characteristics(&phi, &*v_in),
                Scheme::Upwind => solve_v_upwind(&phi, &*v_in),
            }
            .context(|| "solve-pde: survival system".into())?;
            out.write("phi.csv", &grid_2d(&phi))?;
            out.write("survival.csv", &grid_2d(v.values()))?;
            let vals = v.values().values();
            Ok(vec![
                Stat::new("v_min", vals.iter().copied().fold(f64::INFINITY, f64::min)).at_least(0.0),
                Stat::new("v_max", vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)).at_most(1.0),
                Stat::new("v_max_increase_in_s", v.max_increase()),
            ])
        }
        family => {
            let u0 = setup.past.initial_age(step, grid.s_max)?;
            let u = solve_pps(&pps_rate(family), &u0, grid, record_every(setup))
                .context(|| "solve-pde: age system".into())?;
            let mut mass = String::from("t,s,mass\n");
            let mut surv = String::from("t,s,value\n");
            for (i, &t) in u.times().iter().enumerate() {
                let t = fmt_f64(t);
                for (j, x) in u.row(i).iter().enumerate() {
                    let _ = writeln!(mass, "{t},{},{}", fmt_f64(j as f64 * step), fmt_f64(*x));
                }
                for (j, x) in u.survival(i).iter().enumerate() {
                    let _ = writeln!(surv, "{t},{},{}", fmt_f64(j as f64 * step), fmt_f64(*x));
                }
            }
            out.write("age_measure.csv", &mass)?;
            out.write("survival.csv", &surv)?;
            let last = u.last();
            let mean_age: f64 = last.iter().enumerate().map(|(j, x)| (j as f64 + 0.5) * step * x).sum();
            let min_mass = u.rows().iter().flatten().copied().fold(f64::INFINITY, f64::min);
            Ok(vec![
                Stat::new("conservation_error", conservation_check(&u)).at_most(MASS_TOLERANCE),
                Stat::new("min_cell_mass", min_mass).at_least(0.0),
                Stat::new("mean_age_final", mean_age),
            ])
        }
    }
}

fn phi(mu: f64, h: &spike_age::processes::Kernel, past: &PastSpec, grid: &SurfaceGrid) -> spike_age::Result<PhiSurface> {
    let plus = phi_plus(mu, h, grid)?;
    let minus = match past {
        PastSpec::PoissonPast(alpha) => phi_minus_a2(h, *alpha, grid)?,
        PastSpec::SinglePointWithDensity(f0) => phi_minus_a1(h, f0, grid)?,
        _ => GridFunction2D::zeros(grid.step, grid.nt(), grid.ns()),
    };
    PhiSurface::new(plus, minus)
}

fn phi_surface(setup: &Setup, out: &OutDir) -> CliResult<Vec<Stat>> {
    let (mu, h) = setup.model().linear_hawkes().expect("checked at load");
    let surface = phi(mu, h, &setup.past.spec, &setup.grid.grid).context(|| "phi-surface".into())?;
    let total = surface.total();
    out.write("phi_plus.csv", &grid_2d(surface.plus()))?;
    out.write("phi_minus.csv", &grid_2d(surface.minus()))?;
    out.write("phi.csv", &grid_2d(&total))?;
    let vals = total.values();
    Ok(vec![
        Stat::new("phi_min", vals.iter().copied().fold(f64::INFINITY, f64::min)).at_least(0.0),
        Stat::new("phi_max", vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        Stat::new("kernel_l1_norm", h.l1_norm()).at_most(1.0),
    ])
}

fn validate(setup: &Setup, out: &OutDir, manifest: &mut Manifest) -> CliResult<Vec<Stat>> {
    let (scenario, _) = setup.validate.as_ref().expect("checked at load");
    let m = setup.model();
    let step = setup.grid.grid.step;
    let seeds = seed_set(setup.seed, setup.reps);
    match scenario {
        ValidateSection::RenewalAges { t, ks_tolerance } => {
            let trains = trains(setup, &m.model, &setup.past.spec, *t, setup.seed)?;
            manifest.push_stream(0, setup.seed, &counts(&trains));
            let ages: Vec<f64> = trains
                .iter()
                .enumerate()
                .map(|(i, tr)| age_at(tr, *t).context(|| format!("age of replication {i}")))
                .collect::<CliResult<_>>()?;
            let grid = SurfaceGrid::new(step, *t, setup.grid.grid.s_max).map_err(|e| setup.grid.loc.core(e))?;
            let u0 = setup.past.initial_age(step, grid.s_max)?;
            let u = solve_pps(&pps_rate(&m.family), &u0, &grid, usize::MAX)
                .context(|| "renewal-ages: age system".into())?;
            let last = u.times().len() - 1;
            let ks = ks_samples(&ages, &|s| u.cdf(last, s));
            let mut sorted = ages.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut text = String::from("s,pde_cdf,empirical_cdf\n");
            for j in 0..=u.cells() {
                let s = j as f64 * step;
                let emp = sorted.partition_point(|&a| a <= s) as f64 / sorted.len().max(1) as f64;
                let _ = writeln!(text, "{},{},{}", fmt_f64(s), fmt_f64(u.cdf(last, s)), fmt_f64(emp));
            }
            out.write("age_cdf.csv", &text)?;
            Ok(vec![
                Stat::new("ks_age", ks).n(ages.len()).seeds(seeds).at_most(*ks_tolerance),
                Stat::new("conservation_error", conservation_check(&u)).at_most(MASS_TOLERANCE),
            ])
        }
        ValidateSection::HawkesCounts { sigma } => {
            let (mu, h) = m.linear_hawkes().expect("checked at load");
            let thin = trains(setup, &m.model, &PastSpec::Empty, setup.horizon, setup.seed)?;
            let cluster_master = setup.seed.wrapping_add(1);
            let cfg = setup.sim_config();
            let g = RateFn::constant(mu);
            let clus: Vec<SpikeTrain> =
                replicate(cluster_master, setup.reps, |_, seed| simulate_cluster_hawkes(&g, h, &cfg.with_seed(seed)))
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| r.context(|| format!("cluster simulation, replication {i}")))
                    .collect::<CliResult<_>>()?;
            let (ct, cc) = (counts(&thin), counts(&clus));
            manifest.push_stream(0, setup.seed, &ct);
            manifest.push_stream(setup.reps, cluster_master, &cc);
            let est = |c: &[usize]| Estimate::from_samples(&c.iter().map(|&k| k as f64).collect::<Vec<_>>());
            let (a, b) = (est(&ct), est(&cc));
            let volterra = expected_intensity_volterra(mu, h, setup.horizon, step)
                .context(|| "hawkes-counts: mean intensity".into())?
                .integral();
            let pooled = (a.se * a.se + b.se * b.se).sqrt();
            let cseeds = seed_set(cluster_master, setup.reps);
            Ok(vec![
                Stat::new("thinning_mean_count", a.value).se(a.se).n(a.n).seeds(seeds.clone()),
                Stat::new("cluster_mean_count", b.value).se(b.se).n(b.n).seeds(cseeds.clone()),
                Stat::new("volterra_mean_count", volterra),
                Stat::new("z_thinning_vs_cluster", (a.value - b.value).abs() / pooled)
                    .n(a.n + b.n)
                    .seeds(format!("{seeds} {cseeds}"))
                    .at_most(*sigma),
                Stat::new("z_thinning_vs_volterra", (a.value - volterra).abs() / a.se).n(a.n).seeds(seeds).at_most(*sigma),
                Stat::new("z_cluster_vs_volterra", (b.value - volterra).abs() / b.se).n(b.n).seeds(cseeds).at_most(*sigma),
            ])
        }
        ValidateSection::HawkesPhi { times, ages, sigma } => {
            let (mu, h) = m.linear_hawkes().expect("checked at load");
            let horizon = times.iter().copied().fold(0.0, f64::max).max(1e-9);
            let trains = trains(setup, &m.model, &setup.past.spec, horizon, setup.seed)?;
            manifest.push_stream(0, setup.seed, &counts(&trains));
            let minus = |t: f64, s: f64| match (&setup.past.section, setup.past.density()) {
                (PastSection::Poisson { alpha }, _) => phi_minus_a2_at(h, *alpha, t, s, step),
                (_, Some(f0)) => phi_minus_a1_at(h, &f0, t, s, step),
                _ => Ok(0.0),
            };
            let mut text = String::from("t,s,estimate,se,n,phi,z\n");
            let mut stats = Vec::new();
            for &t in times {
                for &s in ages {
                    let e = empirical_conditional_intensity(&trains, &m.model, t, s)
                        .context(|| format!("hawkes-phi at (t, s) = ({t}, {s})"))?;
                    let want = phi_plus_at(mu, h, t, s, step)
                        .and_then(|p| Ok(p + minus(t, s)?))
                        .context(|| format!("Phi at (t, s) = ({t}, {s})"))?;
                    let z = (e.value - want).abs() / e.se;
                    let _ = writeln!(
                        text,
                        "{},{},{},{},{},{},{}",
                        fmt_f64(t),
                        fmt_f64(s),
                        fmt_f64(e.value),
                        fmt_f64(e.se),
                        e.n,
                        fmt_f64(want),
                        fmt_f64(z)
                    );
                    stats.push(
                        Stat::new(format!("z_phi[t={};s={}]", fmt_f64(t), fmt_f64(s)), z)
                            .n(e.n)
                            .seeds(seeds.clone())
                            .at_most(*sigma),
                    );
                }
            }
            out.write("phi_points.csv", &text)?;
            Ok(stats)
        }
        ValidateSection::WoldJoint { t, ks_tolerance } => {
            let trains = trains(setup, &m.model, &setup.past.spec, *t, setup.seed)?;
            manifest.push_stream(0, setup.seed, &counts(&trains));
            let states: Vec<(f64, f64)> = trains
                .iter()
                .enumerate()
                .map(|(i, tr)| {
                    let st = successive_ages(tr, *t, 1).context(|| format!("ages of replication {i}"))?;
                    Ok((st.age, st.delays[0]))
                })
                .collect::<CliResult<_>>()?;
            let grid = SurfaceGrid::new(step, *t, setup.grid.grid.s_max).map_err(|e| setup.grid.loc.core(e))?;
            let f = m.wold_k1().expect("checked at load");
            let u0 = setup.past.initial_wold(step, grid.s_max)?;
            let w = solve_wold_k1(&f, &u0, &grid).context(|| "wold-joint: Wold system".into())?;
            let s: Vec<f64> = states.iter().map(|p| p.0).collect();
            let a: Vec<f64> = states.iter().map(|p| p.1).collect();
            let ks_s = ks_samples(&s, &|x| w.s_cdf(x));
            let ks_a = ks_samples(&a, &|x| w.a_cdf(x));
            let mut text = String::from("x,age_cdf,interval_cdf\n");
            for j in 0..=grid.ns() {
                let x = j as f64 * step;
                let _ = writeln!(text, "{},{},{}", fmt_f64(x), fmt_f64(w.s_cdf(x)), fmt_f64(w.a_cdf(x)));
            }
            out.write("wold_cdf.csv", &text)?;
            Ok(vec![
                Stat::new("ks_age", ks_s).n(s.len()).seeds(seeds.clone()).at_most(*ks_tolerance),
                Stat::new("ks_interval", ks_a).n(a.len()).seeds(seeds).at_most(*ks_tolerance),
                Stat::new("mass_error", (w.total() - 1.0).abs()).at_most(MASS_TOLERANCE),
                Stat::new("clamped_mass", w.clamped_mass),
            ])
        }
        ValidateSection::WeakResidual { bumps, tolerance } => {
            let trains = trains(setup, &m.model, &setup.past.spec, setup.horizon, setup.seed)?;
            manifest.push_stream(0, setup.seed, &counts(&trains));
            let bump_master = setup.seed.wrapping_add(1);
            let mut worst: f64 = 0.0;
            for (i, tr) in trains.iter().enumerate() {
                let mut rng = rng_from_seed(replication_seed(bump_master, i as u64));
                for _ in 0..*bumps {
                    let phi = PolyBump::random(&mut rng, setup.horizon);
                    let r = weak_residual_micro(tr, &m.model, &phi).context(|| format!("weak residual of replication {i}"))?;
                    worst = worst.max(r.abs());
                }
            }
            let n = trains.len() * bumps;
            Ok(vec![Stat::new("max_abs_weak_residual", worst)
                .n(n)
                .seeds(format!("{seeds} {}", seed_set(bump_master, setup.reps)))
                .at_most(*tolerance)])
        }
    }
}

fn limit_study(setup: &Setup, out: &OutDir) -> CliResult<Vec<Stat>> {
    let (mu, h) = setup.model().linear_hawkes().expect("checked at load");
    let grid = &setup.grid.grid;
    let limit = solve_v_limit(mu, h, grid).context(|| "limit-study: limit system".into())?;
    let plus = phi_plus(mu, h, grid).context(|| "limit-study: Phi_+".into())?;
    let x_max = h.support().max(40.0);
    let mut l_norm: f64 = 0.0;
    for j in 0..=grid.ns() {
        let s = j as f64 * grid.step;
        let g = solve_g(h, s, grid.step, x_max).context(|| format!("limit-study: G_s at s = {s}"))?;
        let l = solve_l(h, s, &g.function).context(|| format!("limit-study: L_s at s = {s}"))?;
        l_norm = l_norm.max(l.function.integral());
    }
    let norm = h.l1_norm();
    let c = (norm + l_norm) * (2.0 * norm).exp() * grid.t_max;
    let mut text = String::from("m,sup_diff,bound\n");
    let mut stats = vec![Stat::new("l1_norm_h", norm), Stat::new("max_l1_norm_l", l_norm), Stat::new("constant_c", c)];
    let mut dists = Vec::new();
    for &m in &setup.limit_m {
        let f0 = PastDensity::uniform(-m - 1.0, -m).map_err(|e| setup.limit_loc.core(e))?;
        let minus = phi_minus_a1(h, &f0, grid).context(|| format!("limit-study: Phi_- at M = {m}"))?;
        let phi = plus.zip_with(&minus, |a, b| a + b).context(|| "limit-study: Phi".into())?;
        let v = solve_v_characteristics(&phi, &|s| if s <= m { 1.0 } else { (m + 1.0 - s).max(0.0) })
            .context(|| format!("limit-study: survival at M = {m}"))?;
        let d = sup_interior(v.values(), limit.values());
        let bound = c * h.integral(m, h.support().max(m));
        let _ = writeln!(text, "{},{},{}", fmt_f64(m), fmt_f64(d), fmt_f64(bound));
        stats.push(Stat::new(format!("sup_diff[M={}]", fmt_f64(m)), d).at_most(bound));
        dists.push(d);
    }
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    stats.push(Stat::new("strictly_decreasing", if decreasing { 1.0 } else { 0.0 }).at_least(1.0));
    out.write("limit.csv", &text)?;
    out.write("v_limit.csv", &grid_2d(limit.values()))?;
    Ok(stats)
}

/// Sup of `|a - b|` over interior nodes.
fn sup_interior(a: &GridFunction2D, b: &GridFunction2D) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..a.nt() {
        for j in 1..a.ns() {
            worst = worst.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    worst
}
