use super::func::{RateFn, WoldRate};
use super::kernel::Kernel;
use super::train::{ages_from_history, SpikeTrain};
use crate::{Error, Result};

/// Conditional intensity families.
#[derive(Debug, Clone)]
pub enum ModelKind {
    HomogeneousPoisson { rate: f64 },
    InhomogeneousPoisson { rate: RateFn },
    /// Intensity `f(S_{t-})`.
    Renewal { hazard: RateFn },
    /// Intensity `f(S_{t-}, A^1_t, ..., A^k_t)`.
    GeneralizedWold { rate: WoldRate, order: usize },
    /// `mu + sum h(t - T)`.
    LinearHawkes { mu: f64, kernel: Kernel },
    /// `(mu + sum h(t - T))_+` with a possibly signed kernel.
    ClippedHawkes { mu: f64, kernel: Kernel },
    /// `exp(mu + sum h(t - T))` with a possibly signed kernel.
    ExpHawkes { mu: f64, kernel: Kernel },
}

/// A validated intensity model `lambda(t, F_{t-})`.
#[derive(Debug, Clone)]
pub struct IntensityModel {
    kind: ModelKind,
}

impl IntensityModel {
    pub fn homogeneous_poisson(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("Poisson rate {rate} must be finite and >= 0")));
        }
        Ok(Self { kind: ModelKind::HomogeneousPoisson { rate } })
    }

    pub fn inhomogeneous_poisson(rate: RateFn) -> Self {
        Self { kind: ModelKind::InhomogeneousPoisson { rate } }
    }

    pub fn renewal(hazard: RateFn) -> Self {
        Self { kind: ModelKind::Renewal { hazard } }
    }

    pub fn generalized_wold(rate: WoldRate, order: usize) -> Self {
        Self { kind: ModelKind::GeneralizedWold { rate, order } }
    }

    /// Linear Hawkes model; the kernel must be nonnegative with `int h < 1`.
    pub fn linear_hawkes(mu: f64, kernel: Kernel) -> Result<Self> {
        check_mu(mu)?;
        if !kernel.is_nonnegative() {
            return Err(Error::InvalidKernel("linear Hawkes needs a nonnegative kernel".into()));
        }
        let norm = kernel.l1_norm();
        if norm >= 1.0 {
            return Err(Error::SupercriticalKernel { norm });
        }
        Ok(Self { kind: ModelKind::LinearHawkes { mu, kernel } })
    }

    pub fn clipped_hawkes(mu: f64, kernel: Kernel) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("baseline {mu} must be finite")));
        }
        Ok(Self { kind: ModelKind::ClippedHawkes { mu, kernel } })
    }

    pub fn exp_hawkes(mu: f64, kernel: Kernel) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("baseline {mu} must be finite")));
        }
        Ok(Self { kind: ModelKind::ExpHawkes { mu, kernel } })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.kind {
            ModelKind::LinearHawkes { kernel, .. }
            | ModelKind::ClippedHawkes { kernel, .. }
            | ModelKind::ExpHawkes { kernel, .. } => Some(kernel),
            _ => None,
        }
    }

    /// Number of past points the model needs before it can be evaluated.
    pub fn required_history(&self) -> usize {
        match &self.kind {
            ModelKind::Renewal { .. } => 1,
            ModelKind::GeneralizedWold { order, .. } => order + 1,
            _ => 0,
        }
    }

    /// Intensity at `t` given the points strictly before `t`, in increasing order.
    pub fn intensity(&self, t: f64, before: &[f64]) -> Result<f64> {
        let rate = match &self.kind {
            ModelKind::HomogeneousPoisson { rate } => *rate,
            ModelKind::InhomogeneousPoisson { rate } => rate.eval(t),
            ModelKind::Renewal { hazard } => {
                let last = before.last().ok_or(Error::NoPastPoint { t })?;
                hazard.eval(t - last)
            }
            ModelKind::GeneralizedWold { rate, order } => {
                let st = ages_from_history(before, t, *order).map_err(|e| {
                    Error::ModelPreconditionViolated(format!("Wold order {order}: {e}"))
                })?;
                rate.eval(st.age, &st.delays)
            }
            ModelKind::LinearHawkes { mu, kernel } => mu + excitation(kernel, t, before),
            ModelKind::ClippedHawkes { mu, kernel } => (mu + excitation(kernel, t, before)).max(0.0),
            ModelKind::ExpHawkes { mu, kernel } => (mu + excitation(kernel, t, before)).exp(),
        };
        if rate.is_nan() || rate < 0.0 {
            return Err(Error::ModelPreconditionViolated(format!("intensity {rate} at t = {t}")));
        }
        Ok(rate)
    }

    /// Upper bound of the intensity on `(t, t_end]` assuming no point is
    /// added in between. `None` when the model gives no usable bound.
    pub fn ceiling(&self, t: f64, t_end: f64, before: &[f64]) -> Option<f64> {
        match &self.kind {
            ModelKind::HomogeneousPoisson { rate } => Some(*rate),
            ModelKind::InhomogeneousPoisson { rate } => rate.sup_on(t, t_end),
            ModelKind::Renewal { hazard } => {
                let last = *before.last()?;
                hazard.sup_on(t - last, t_end - last)
            }
            ModelKind::GeneralizedWold { rate, order } => {
                let st = ages_from_history(before, t, *order).ok()?;
                rate.sup_on(st.age, st.age + (t_end - t), &st.delays)
            }
            ModelKind::LinearHawkes { mu, kernel } => Some(mu + excitation_sup(kernel, t, t_end, before)),
            ModelKind::ClippedHawkes { mu, kernel } => {
                Some((mu + excitation_sup(kernel, t, t_end, before)).max(0.0))
            }
            ModelKind::ExpHawkes { mu, kernel } => Some((mu + excitation_sup(kernel, t, t_end, before)).exp()),
        }
    }

    /// Whether the ceiling at `t` stays valid until the next accepted point,
    /// whatever the strip length.
    pub fn ceiling_holds_until_next_point(&self) -> bool {
        match &self.kind {
            ModelKind::HomogeneousPoisson { .. } => true,
            ModelKind::LinearHawkes { kernel, .. }
            | ModelKind::ClippedHawkes { kernel, .. }
            | ModelKind::ExpHawkes { kernel, .. } => {
                matches!(kernel.as_exponential(), Some((a, _)) if a >= 0.0)
            }
            _ => false,
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("baseline {mu} must be finite and >= 0")));
    }
    Ok(())
}

/// `sum_{T < t, t - T <= support} h(t - T)`.
pub(crate) fn excitation(kernel: &Kernel, t: f64, before: &[f64]) -> f64 {
    let start = before.partition_point(|&p| p < t - kernel.support());
    before[start..].iter().filter(|&&p| p < t).map(|&p| kernel.eval(t - p)).sum()
}

fn excitation_sup(kernel: &Kernel, t: f64, t_end: f64, before: &[f64]) -> f64 {
    let start = before.partition_point(|&p| p < t - kernel.support());
    before[start..].iter().map(|&p| kernel.sup_on(t - p, t_end - p)).sum()
}

/// `lambda(t, F_{t-})` for a recorded train; points at or after `t` are ignored.
pub fn evaluate_intensity(model: &IntensityModel, t: f64, train: &SpikeTrain) -> Result<f64> {
    model.intensity(t, train.before(t))
}
