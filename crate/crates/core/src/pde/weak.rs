use rand::Rng;

use crate::grid::gauss_legendre;
use crate::processes::{IntensityModel, SpikeTrain};
use crate::{Error, Result};

/// Smooth `phi(t, s)` with compact support in `t`.
pub trait TestFunction {
    fn value(&self, t: f64, s: f64) -> f64;
    fn dt(&self, t: f64, s: f64) -> f64;
    fn ds(&self, t: f64, s: f64) -> f64;
    /// `phi(t, .) = 0` outside this interval.
    fn t_support(&self) -> (f64, f64);
    /// Times where `phi` is only finitely smooth.
    fn t_breaks(&self) -> Vec<f64> {
        let (a, b) = self.t_support();
        vec![a, b]
    }
}

/// `phi(t, s) = eta(t) p(s)` with the polynomial bump
/// `eta(t) = (4 (t - a)(b - t) / (b - a)^2)^k` on `[a, b]` (peak 1) and
/// `p(s) = sum c_i s^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBump {
    pub a: f64,
    pub b: f64,
    pub power: i32,
    pub coef: Vec<f64>,
}

impl PolyBump {
    pub fn new(a: f64, b: f64, power: i32, coef: Vec<f64>) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) || power < 2 {
            return Err(Error::InvalidParameter(format!("bump on [{a}, {b}] with power {power}")));
        }
        Ok(Self { a, b, power, coef })
    }

    /// Random bump inside `[0, horizon]` with a cubic `p`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, horizon: f64) -> Self {
        let a = rng.random_range(0.0..0.6 * horizon);
        let b = rng.random_range(a + 0.1 * horizon..=horizon);
        let coef = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { a, b, power: rng.random_range(2..=4), coef }
    }

    fn eta(&self, t: f64) -> (f64, f64) {
        if t <= self.a || t >= self.b {
            return (0.0, 0.0);
        }
        let w = 4.0 / ((self.b - self.a) * (self.b - self.a));
        let q = w * (t - self.a) * (self.b - t);
        let dq = w * (self.a + self.b - 2.0 * t);
        let k = self.power;
        (q.powi(k), k as f64 * q.powi(k - 1) * dq)
    }

    fn poly(&self, s: f64) -> (f64, f64) {
        let (mut p, mut dp) = (0.0, 0.0);
        for &c in self.coef.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }
}

impl TestFunction for PolyBump {
    fn value(&self, t: f64, s: f64) -> f64 {
        self.eta(t).0 * self.poly(s).0
    }

    fn dt(&self, t: f64, s: f64) -> f64 {
        self.eta(t).1 * self.poly(s).0
    }

    fn ds(&self, t: f64, s: f64) -> f64 {
        self.eta(t).0 * self.poly(s).1
    }

    fn t_support(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// How the transport term is integrated along each inter-spike segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportRule {
    /// `phi(end) - phi(start)`, exact.
    Telescoping,
    /// Gauss-Legendre on the directional derivative, split at the breaks of `phi`.
    Quadrature,
}

/// The three terms of the weak form satisfied by the age measure
/// `U(dt, ds) = delta_{S_{t-}}(ds) dt` of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakTerms {
    /// `int (d_t + d_s) phi dU`.
    pub transport: f64,
    /// `int [phi(t, 0) - phi(t, s)] lambda-thinned Pi(dt) U(t, ds)`.
    pub jump: f64,
    /// `phi(0, -T_0)`.
    pub initial: f64,
}

impl WeakTerms {
    pub fn total(&self) -> f64 {
        self.transport + self.jump + self.initial
    }
}

/// Evaluates the weak-form terms for `train`. The jump term charges each
/// future point where the model intensity is positive, which for a train
/// produced by thinning are exactly the retained field points.
pub fn weak_terms(
    train: &SpikeTrain,
    model: &IntensityModel,
    phi: &dyn TestFunction,
    rule: TransportRule,
) -> Result<WeakTerms> {
    let t0 = match train.past().last() {
        Some(&t0) if t0 < 0.0 => t0,
        _ => return Err(Error::InvalidTrain("the weak form needs a last past point T_0 < 0".into())),
    };
    let horizon = train.horizon();
    if phi.t_support().0 < 0.0 || phi.t_support().1 > horizon {
        return Err(Error::InvalidParameter(format!(
            "test function support {:?} must lie in [0, {horizon}]",
            phi.t_support()
        )));
    }
    let breaks = phi.t_breaks();
    let segment = |start: f64, end: f64, origin: f64| match rule {
        TransportRule::Telescoping => phi.value(end, end - origin) - phi.value(start, start - origin),
        TransportRule::Quadrature => along(phi, start, end, origin, &breaks),
    };

    let mut transport = 0.0;
    let mut jump = 0.0;
    let mut last = t0;
    let mut start = 0.0;
    for &t in train.future() {
        transport += segment(start, t, last);
        if model.intensity(t, train.before(t))? > 0.0 {
            jump += phi.value(t, 0.0) - phi.value(t, t - last);
        }
        last = t;
        start = t;
    }
    transport += segment(start, horizon, last);
    Ok(WeakTerms { transport, jump, initial: phi.value(0.0, -t0) })
}

/// Sum of the weak-form terms, transport integrated exactly.
pub fn weak_residual_micro(train: &SpikeTrain, model: &IntensityModel, phi: &dyn TestFunction) -> Result<f64> {
    weak_terms(train, model, phi, TransportRule::Telescoping).map(|w| w.total())
}

fn along(phi: &dyn TestFunction, start: f64, end: f64, origin: f64, breaks: &[f64]) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let mut cuts = vec![start];
    cuts.extend(breaks.iter().copied().filter(|&b| b > start && b < end));
    cuts.push(end);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (c, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (&x, &wt) in gx.iter().zip(&gw) {
            let t = c + half * x;
            acc += wt * half * (phi.dt(t, t - origin) + phi.ds(t, t - origin));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::RateFn;
    use crate::rng::rng_from_seed;

    struct Zero;
    impl TestFunction for Zero {
        fn value(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn dt(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn ds(&self, _: f64, _: f64) -> f64 {
            0.0
        }
        fn t_support(&self) -> (f64, f64) {
            (0.0, 0.0)
        }
    }

    fn renewal() -> IntensityModel {
        IntensityModel::renewal(RateFn::constant(1.0))
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let train = SpikeTrain::from_points(vec![-1.0, 2.0, 3.0], 4.0).unwrap();
        assert_eq!(weak_residual_micro(&train, &renewal(), &Zero).unwrap(), 0.0);
    }

    #[test]
    fn hand_telescoping() {
        let train = SpikeTrain::from_points(vec![-1.0, 2.0, 3.0], 4.0).unwrap();
        let phi = PolyBump::new(0.0, 4.0, 3, vec![0.0, 1.0]).unwrap();
        let eta = |t: f64| phi.eta(t).0;
        for rule in [TransportRule::Telescoping, TransportRule::Quadrature] {
            let w = weak_terms(&train, &renewal(), &phi, rule).unwrap();
            assert!((w.transport - (3.0 * eta(2.0) + eta(3.0))).abs() < 1e-14, "{rule:?}");
            assert!((w.jump + 3.0 * eta(2.0) + eta(3.0)).abs() < 1e-15);
            assert_eq!(w.initial, 0.0);
            assert!(w.total().abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_matches_telescoping() {
        let mut rng = rng_from_seed(5);
        let train = SpikeTrain::from_points(vec![-2.5, -0.4, 0.3, 1.1, 1.15, 2.9, 4.4], 6.0).unwrap();
        for _ in 0..20 {
            let phi = PolyBump::random(&mut rng, 6.0);
            let a = weak_terms(&train, &renewal(), &phi, TransportRule::Telescoping).unwrap();
            let b = weak_terms(&train, &renewal(), &phi, TransportRule::Quadrature).unwrap();
            assert!((a.transport - b.transport).abs() < 1e-12, "{phi:?}");
            assert!(a.total().abs() < 1e-13);
        }
    }

    #[test]
    fn points_the_model_cannot_produce_break_the_identity() {
        let silent = IntensityModel::renewal(RateFn::step(10.0, 1.0));
        let train = SpikeTrain::from_points(vec![-1.0, 2.0, 3.0], 4.0).unwrap();
        let phi = PolyBump::new(0.0, 4.0, 3, vec![0.0, 1.0]).unwrap();
        assert!(weak_residual_micro(&train, &silent, &phi).unwrap().abs() > 0.1);
    }

    #[test]
    fn needs_negative_last_past_point() {
        let phi = PolyBump::new(0.0, 1.0, 2, vec![1.0]).unwrap();
        let train = SpikeTrain::from_points(vec![0.0, 0.5], 1.0).unwrap();
        assert!(weak_residual_micro(&train, &renewal(), &phi).is_err());
        let late = PolyBump::new(0.0, 5.0, 2, vec![1.0]).unwrap();
        let train = SpikeTrain::from_points(vec![-1.0, 0.5], 1.0).unwrap();
        assert!(weak_residual_micro(&train, &renewal(), &late).is_err());
    }
}
