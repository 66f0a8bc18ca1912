//! Monte Carlo oracles for the analytic and PDE sides.

use spike_age::analytics::{
    phi_minus_a1_at, phi_minus_a2, phi_plus, solve_g, solve_l, wold_transition, PhiSurface,
};
use spike_age::grid::{cell_integrals, GridFunction2D, SurfaceGrid};
use spike_age::montecarlo::{
    empirical_age_measure, empirical_survival, isi_pairs, ks_distance, ks_samples, phi_minus_monte_carlo, AgeBins,
    Estimate,
};
use spike_age::pde::{
    bin_point_mass, solve_pps, solve_v_characteristics, solve_v_upwind, RateSurface,
};
use spike_age::processes::{Envelope, IntensityModel, Kernel, PastDensity, PastSpec, RateFn, SpikeTrain, WoldRate};
use spike_age::rng::{replicate, rng_from_seed};
use spike_age::thinning::{cluster_family, simulate_cluster_hawkes, simulate_thinning, SimConfig};

fn kernel() -> Kernel {
    Kernel::exponential(0.5, 1.0).unwrap()
}

#[test]
fn cluster_functions_match_conditioned_simulation() {
    let h = kernel();
    let step = 1.0 / 1024.0;
    let (x, n) = (2.0, 200_000);
    for s in [0.5, 1.0] {
        let g = solve_g(&h, s, step, 4.0).unwrap();
        let l = solve_l(&h, s, &g.function).unwrap();
        let runs: Vec<Option<f64>> = replicate(71, n, |_, seed| {
            let mut rng = rng_from_seed(seed);
            let fam = cluster_family(&h, 0.0, x, 10_000, &mut rng).unwrap();
            let hit = fam.iter().any(|&v| v >= x - s && v < x);
            (!hit).then(|| fam.iter().filter(|&&v| v < x).map(|&v| h.eval(x - v)).sum())
        });
        let avoid: Vec<f64> = runs.iter().map(|r| if r.is_some() { 1.0 } else { 0.0 }).collect();
        let given: Vec<f64> = runs.iter().flatten().copied().collect();
        let pg = Estimate::from_samples(&avoid);
        let el = Estimate::from_samples(&given);
        assert!(pg.within(g.function.eval(x), 3.0), "s={s} G {pg:?} vs {}", g.function.eval(x));
        assert!(el.within(l.function.eval(x), 3.0), "s={s} L {el:?} vs {}", l.function.eval(x));
    }
}

#[test]
fn thinning_and_cluster_agree_for_piecewise_kernel() {
    let h = Kernel::piecewise_constant(vec![0.0, 0.5, 1.5], vec![0.8, 0.2]).unwrap();
    let (mu, t, n) = (0.7, 8.0, 4000);
    let model = IntensityModel::linear_hawkes(mu, h.clone()).unwrap();
    let cfg = SimConfig::new(t, 0);
    let a: Vec<f64> = replicate(12, n, |_, seed| {
        simulate_thinning(&model, &PastSpec::Empty, &cfg.with_seed(seed)).unwrap().count_in(4.0, 8.0) as f64
    });
    let g = RateFn::constant(mu);
    let b: Vec<f64> =
        replicate(13, n, |_, seed| simulate_cluster_hawkes(&g, &h, &cfg.with_seed(seed)).unwrap().count_in(4.0, 8.0) as f64);
    let (a, b) = (Estimate::from_samples(&a), Estimate::from_samples(&b));
    assert!((a.value - b.value).abs() <= 3.0 * (a.se * a.se + b.se * b.se).sqrt(), "{a:?} {b:?}");
}

#[test]
fn general_past_estimator_matches_one_point_closed_form() {
    let h = kernel();
    let f0 = PastDensity::exponential(1.0).unwrap();
    let past = PastSpec::SinglePointWithDensity(f0.clone());
    for (t, s) in [(0.5, 0.25), (1.0, 1.5)] {
        let e = phi_minus_monte_carlo(&h, &past, t, s, 100_000, 17).unwrap();
        let exact = phi_minus_a1_at(&h, &f0, t, s, 1.0 / 1024.0).unwrap();
        assert!(e.within(exact, 3.0), "({t}, {s}): {e:?} vs {exact}");
    }
}

#[test]
fn hawkes_survival_matches_characteristics() {
    let (mu, alpha, n) = (1.0, 1.0, 40_000);
    let h = kernel();
    let step = 1.0 / 128.0;
    let grid = SurfaceGrid::new(step, 2.0, 2.0).unwrap();
    let surface = PhiSurface::new(phi_plus(mu, &h, &grid).unwrap(), phi_minus_a2(&h, alpha, &grid).unwrap()).unwrap();
    let v = solve_v_characteristics(&surface.total(), &|s| (-alpha * s).exp()).unwrap();
    let model = IntensityModel::linear_hawkes(mu, h).unwrap();
    let cfg = SimConfig::new(2.0, 0);
    let trains: Vec<SpikeTrain> =
        replicate(23, n, |_, seed| simulate_thinning(&model, &PastSpec::PoissonPast(alpha), &cfg.with_seed(seed)).unwrap());
    for t in [1.0, 2.0] {
        for s in [0.25, 0.5, 1.0, 1.5] {
            let e = empirical_survival(&trains, t, s);
            let want = v.eval(t, s);
            assert!((e.value - want).abs() <= 3.0 * e.se + 2.0 * step, "({t}, {s}): {e:?} vs {want}");
        }
    }
}

#[test]
fn poisson_ages_are_exponential() {
    let (lam, n) = (2.0, 10_000);
    let model = IntensityModel::homogeneous_poisson(lam).unwrap();
    let cfg = SimConfig::new(10.0, 0);
    let trains: Vec<SpikeTrain> =
        replicate(31, n, |_, seed| simulate_thinning(&model, &PastSpec::FixedPoints(vec![-1.0]), &cfg.with_seed(seed)).unwrap());
    let bins = AgeBins::new(1e-3, 20_000).unwrap();
    let hist = empirical_age_measure(&trains, 10.0, bins).unwrap();
    let ks = ks_distance(&hist, &|x| 1.0 - (-lam * x).exp());
    assert!(ks <= 1.36 / (n as f64).sqrt() + bins.width, "{ks}");
}

#[test]
fn renewal_ages_match_pps() {
    let step = 1.0 / 256.0;
    let hazard = RateFn::new(|s| 0.2 + 1.5 * (s - 0.3).max(0.0).min(1.0), Envelope::Bounded(1.7));
    let model = IntensityModel::renewal(hazard.clone());
    let cfg = SimConfig::new(5.0, 0);
    let past = PastSpec::FixedPoints(vec![-0.75]);
    let trains: Vec<SpikeTrain> = replicate(41, 10_000, |_, seed| simulate_thinning(&model, &past, &cfg.with_seed(seed)).unwrap());
    let grid = SurfaceGrid::new(step, 5.0, 12.0).unwrap();
    let u = solve_pps(&RateSurface::AgeOnly(hazard), &bin_point_mass(0.75, step, 12.0).unwrap(), &grid, usize::MAX).unwrap();
    let last = u.times().len() - 1;
    let hist = empirical_age_measure(&trains, 5.0, AgeBins::new(step, 12 * 256).unwrap()).unwrap();
    let ks = ks_distance(&hist, &|s| u.cdf(last, s));
    assert!(ks <= 0.02, "{ks}");
}

#[test]
fn wold_interval_chain_matches_transition_law() {
    let rate = |s: f64, a: f64| 0.3 + 0.5 * s.min(2.0) * a.min(1.5);
    let f = WoldRate::new(move |s, d: &[f64]| rate(s, d[0]), Envelope::Bounded(1.8));
    let model = IntensityModel::generalized_wold(f.clone(), 1);
    let cfg = SimConfig::new(120.0, 0);
    let past = PastSpec::FixedPoints(vec![-2.0, -1.0]);
    let trains: Vec<SpikeTrain> = replicate(51, 1500, |_, seed| simulate_thinning(&model, &past, &cfg.with_seed(seed)).unwrap());
    let pairs = isi_pairs(&trains, 20.0);
    let step = 1.0 / 256.0;
    for (lo, hi) in [(0.9, 1.0), (1.5, 1.6), (2.5, 2.7)] {
        let next: Vec<f64> = pairs.iter().filter(|p| p.0 >= lo && p.0 < hi).map(|p| p.1).collect();
        assert!(next.len() >= 2000, "bin [{lo}, {hi}): {} pairs", next.len());
        let nu = wold_transition(&f, &[0.5 * (lo + hi)], step, 20 * 256).unwrap();
        let cells = cell_integrals(nu.values(), step);
        let mut cdf = vec![0.0];
        for c in cells {
            cdf.push(cdf.last().unwrap() + c);
        }
        let ks = ks_samples(&next, &|x| {
            let k = ((x / step) as usize).min(cdf.len() - 2);
            let fr = x / step - k as f64;
            cdf[k] + fr * (cdf[k + 1] - cdf[k])
        });
        assert!(ks <= 0.05, "bin [{lo}, {hi}): KS {ks}");
    }
}

#[test]
fn pps_tail_matches_survival_solver_for_time_only_rate() {
    let step = 1.0 / 256.0;
    let rate = |t: f64| 0.5 + 0.4 * (2.0 * t).sin();
    let grid = SurfaceGrid::new(step, 3.0, 6.0).unwrap();
    let u0 = bin_point_mass(0.5, step, grid.s_max).unwrap();
    let u = solve_pps(&RateSurface::function(move |t, _| rate(t)), &u0, &grid, 1).unwrap();
    let (nt, ns) = (grid.nt(), grid.ns());
    let phi = GridFunction2D::from_fn(step, nt, ns, |t, _| rate(t));
    let v_in = |s: f64| if s <= 0.5 { 1.0 } else { 0.0 };
    let v = solve_v_upwind(&phi, &v_in).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=nt {
        let tail = u.survival(i);
        for j in 0..=ns {
            worst = worst.max((tail[j] - v.get(i, j)).abs());
        }
    }
    assert!(worst <= 2.0 * step, "{worst}");
}
