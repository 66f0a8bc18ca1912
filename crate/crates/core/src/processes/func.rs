use std::fmt;
use std::sync::Arc;

/// Shape information the simulator uses to bound a rate over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `0 <= f <= c` everywhere.
    Bounded(f64),
    Nondecreasing,
    Nonincreasing,
    /// Nothing known; the simulator samples the function and relies on
    /// ceiling re-draws.
    Unknown,
}

/// A nonnegative scalar function (rate in time, hazard in age, density).
#[derive(Clone)]
pub struct RateFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    envelope: Envelope,
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateFn").field("envelope", &self.envelope).finish_non_exhaustive()
    }
}

impl RateFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, envelope: Envelope) -> Self {
        Self { f: Arc::new(f), envelope }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, Envelope::Bounded(c))
    }

    /// `min(slope * x, cap)` for `x >= 0`.
    pub fn capped_linear(slope: f64, cap: f64) -> Self {
        Self::new(move |x| (slope * x.max(0.0)).min(cap), Envelope::Bounded(cap))
    }

    /// `rate` on `[threshold, inf)`, zero below.
    pub fn step(threshold: f64, rate: f64) -> Self {
        Self::new(move |x| if x >= threshold { rate } else { 0.0 }, Envelope::Bounded(rate))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    /// Upper bound of `f` on `[a, b]`, if the envelope provides one.
    pub fn sup_on(&self, a: f64, b: f64) -> Option<f64> {
        match self.envelope {
            Envelope::Bounded(c) => Some(c),
            Envelope::Nondecreasing => Some(self.eval(b)),
            Envelope::Nonincreasing => Some(self.eval(a)),
            Envelope::Unknown => None,
        }
    }
}

/// Rate of a generalized Wold process: `f(age, delays)`.
#[derive(Clone)]
pub struct WoldRate {
    f: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
    /// Envelope in the age argument, delays held fixed.
    envelope: Envelope,
}

impl fmt::Debug for WoldRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WoldRate").field("envelope", &self.envelope).finish_non_exhaustive()
    }
}

impl WoldRate {
    pub fn new(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static, envelope: Envelope) -> Self {
        Self { f: Arc::new(f), envelope }
    }

    #[inline]
    pub fn eval(&self, age: f64, delays: &[f64]) -> f64 {
        (self.f)(age, delays)
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn sup_on(&self, a: f64, b: f64, delays: &[f64]) -> Option<f64> {
        match self.envelope {
            Envelope::Bounded(c) => Some(c),
            Envelope::Nondecreasing => Some(self.eval(b, delays)),
            Envelope::Nonincreasing => Some(self.eval(a, delays)),
            Envelope::Unknown => None,
        }
    }
}
