use crate::{Error, Result};

/// Relative tail mass dropped when an exponential kernel is truncated.
pub const EXP_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// `amplitude * exp(-decay * x)`.
    Exponential { amplitude: f64, decay: f64 },
    /// `values[i]` on `[breaks[i], breaks[i + 1])`, with `breaks[0] == 0`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Samples at `k * step`, linearly interpolated.
    Table { step: f64, values: Vec<f64> },
}

/// Interaction function `h` of a Hawkes-type model, supported on `[0, support]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    form: KernelForm,
    support: f64,
}

impl Kernel {
    /// Nonnegative exponential kernel, truncated where the tail mass falls
    /// below [`EXP_TAIL_TOLERANCE`] of the total mass.
    pub fn exponential(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidKernel(format!("amplitude {amplitude} must be >= 0")));
        }
        Self::signed(KernelForm::Exponential { amplitude, decay })
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let k = Self::signed(KernelForm::PiecewiseConstant { breaks, values })?;
        k.require_nonnegative()?;
        Ok(k)
    }

    pub fn table(step: f64, values: Vec<f64>) -> Result<Self> {
        let k = Self::signed(KernelForm::Table { step, values })?;
        k.require_nonnegative()?;
        Ok(k)
    }

    /// The zero kernel.
    pub fn zero() -> Self {
        Self { form: KernelForm::PiecewiseConstant { breaks: vec![0.0, 1.0], values: vec![0.0] }, support: 1.0 }
    }

    /// Kernel that may take negative values; only valid for the clipped and
    /// exponential Hawkes variants.
    pub fn signed(form: KernelForm) -> Result<Self> {
        let support = match &form {
            KernelForm::Exponential { amplitude, decay } => {
                if !(decay.is_finite() && *decay > 0.0) || !amplitude.is_finite() {
                    return Err(Error::InvalidKernel(format!(
                        "exponential kernel needs finite amplitude and decay > 0, got ({amplitude}, {decay})"
                    )));
                }
                (1.0 / EXP_TAIL_TOLERANCE).ln() / decay
            }
            KernelForm::PiecewiseConstant { breaks, values } => {
                if breaks.len() != values.len() + 1 || values.is_empty() {
                    return Err(Error::InvalidKernel("need one more break than values".into()));
                }
                if breaks[0] != 0.0 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidKernel("breaks must start at 0 and increase".into()));
                }
                if values.iter().chain(breaks.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidKernel("non-finite break or value".into()));
                }
                *breaks.last().unwrap()
            }
            KernelForm::Table { step, values } => {
                if !(*step > 0.0) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidKernel("table needs step > 0 and >= 2 finite values".into()));
                }
                step * (values.len() - 1) as f64
            }
        };
        Ok(Self { form, support })
    }

    fn require_nonnegative(&self) -> Result<()> {
        if self.is_nonnegative() {
            Ok(())
        } else {
            Err(Error::InvalidKernel("kernel must be nonnegative".into()))
        }
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn is_nonnegative(&self) -> bool {
        match &self.form {
            KernelForm::Exponential { amplitude, .. } => *amplitude >= 0.0,
            KernelForm::PiecewiseConstant { values, .. } | KernelForm::Table { values, .. } => {
                values.iter().all(|&v| v >= 0.0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Exponential { amplitude, .. } => *amplitude == 0.0,
            KernelForm::PiecewiseConstant { values, .. } | KernelForm::Table { values, .. } => {
                values.iter().all(|&v| v == 0.0)
            }
        }
    }

    /// `Some((amplitude, decay))` for exponential kernels.
    pub fn as_exponential(&self) -> Option<(f64, f64)> {
        match self.form {
            KernelForm::Exponential { amplitude, decay } => Some((amplitude, decay)),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= 0.0) || x > self.support {
            return 0.0;
        }
        match &self.form {
            KernelForm::Exponential { amplitude, decay } => amplitude * (-decay * x).exp(),
            KernelForm::PiecewiseConstant { breaks, values } => {
                let i = breaks.partition_point(|&b| b <= x);
                values[(i - 1).min(values.len() - 1)]
            }
            KernelForm::Table { step, values } => {
                let pos = x / step;
                let i = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// `int_0^x h`.
    pub fn cumulative(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let x = x.min(self.support);
        match &self.form {
            KernelForm::Exponential { amplitude, decay } => amplitude / decay * (-(-decay * x).exp_m1()),
            KernelForm::PiecewiseConstant { breaks, values } => {
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let (lo, hi) = (breaks[i], breaks[i + 1]);
                    if x <= lo {
                        break;
                    }
                    acc += v * (hi.min(x) - lo);
                }
                acc
            }
            KernelForm::Table { step, values } => {
                let mut acc = 0.0;
                let full = ((x / step).floor() as usize).min(values.len() - 1);
                for i in 0..full {
                    acc += 0.5 * step * (values[i] + values[i + 1]);
                }
                let rem = x - full as f64 * step;
                if rem > 0.0 && full < values.len() - 1 {
                    acc += 0.5 * rem * (values[full] + self.eval(x));
                }
                acc
            }
        }
    }

    /// `int_a^b h` over `[a, b]` (zero outside the support).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.cumulative(b) - self.cumulative(a)
    }

    /// `int h`, the branching ratio of a linear Hawkes model (`int |h|` for
    /// signed kernels).
    pub fn l1_norm(&self) -> f64 {
        match &self.form {
            KernelForm::Exponential { .. } => self.cumulative(self.support).abs(),
            KernelForm::PiecewiseConstant { breaks, values } => {
                values.iter().enumerate().map(|(i, v)| v.abs() * (breaks[i + 1] - breaks[i])).sum()
            }
            KernelForm::Table { step, values } => values
                .windows(2)
                .map(|w| abs_linear_integral(w[0], w[1]) * step)
                .sum(),
        }
    }

    /// `sup h` over `[a, b]`, counting the zero extension outside the support.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(0.0);
        let hi = b.min(self.support);
        let outside = a < 0.0 || b > self.support;
        let mut best = if outside { 0.0 } else { f64::NEG_INFINITY };
        if lo > hi {
            return 0.0;
        }
        match &self.form {
            KernelForm::Exponential { amplitude, .. } => {
                let v = if *amplitude >= 0.0 { self.eval(lo) } else { self.eval(hi) };
                best = best.max(v);
            }
            KernelForm::PiecewiseConstant { breaks, values } => {
                for (i, v) in values.iter().enumerate() {
                    if breaks[i + 1] > lo && breaks[i] <= hi {
                        best = best.max(*v);
                    }
                }
            }
            KernelForm::Table { step, values } => {
                best = best.max(self.eval(lo)).max(self.eval(hi));
                let first = (lo / step).ceil() as usize;
                let last = ((hi / step).floor() as usize).min(values.len() - 1);
                for v in values.iter().take(last + 1).skip(first) {
                    best = best.max(*v);
                }
            }
        }
        best
    }

    /// Largest value of `h`.
    pub fn sup(&self) -> f64 {
        self.sup_on(0.0, self.support)
    }

    /// Smallest depth `D` with `scale * int_D^inf h < eps`, capped at the support.
    pub fn tail_depth(&self, scale: f64, eps: f64) -> f64 {
        let total = self.cumulative(self.support);
        if scale * total.abs() < eps {
            return 0.0;
        }
        if let KernelForm::Exponential { amplitude, decay } = self.form {
            let d = (scale * amplitude.abs() / (decay * eps)).ln() / decay;
            return d.clamp(0.0, self.support);
        }
        let (mut lo, mut hi) = (0.0, self.support);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if scale * (total - self.cumulative(mid)).abs() < eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Inverse of [`Kernel::cumulative`] for nonnegative kernels: the `x` with
    /// `int_0^x h = y`, for `0 <= y <= int h`.
    pub fn inverse_cumulative(&self, y: f64) -> f64 {
        match &self.form {
            KernelForm::Exponential { amplitude, decay } => {
                let r = (y * decay / amplitude).min(1.0);
                (-(-r).ln_1p() / decay).min(self.support)
            }
            KernelForm::PiecewiseConstant { breaks, values } => {
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let w = v * (breaks[i + 1] - breaks[i]);
                    if acc + w >= y && *v > 0.0 {
                        return breaks[i] + (y - acc) / v;
                    }
                    acc += w;
                }
                self.support
            }
            KernelForm::Table { .. } => {
                let (mut lo, mut hi) = (0.0, self.support);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if self.cumulative(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Samples `h(k * step)` for `k = 0..n`.
    pub fn sample(&self, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 * step)).collect()
    }
}

// int_0^1 |a (1 - u) + b u| du
fn abs_linear_integral(a: f64, b: f64) -> f64 {
    if a * b >= 0.0 {
        0.5 * (a + b).abs()
    } else {
        0.5 * (a * a + b * b) / (a - b).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_truncation_and_norm() {
        let k = Kernel::exponential(0.5, 2.0).unwrap();
        let tail = 0.25 * (-2.0 * k.support()).exp();
        assert!((tail / 0.25 - EXP_TAIL_TOLERANCE).abs() < 1e-15);
        assert!((k.l1_norm() - 0.25).abs() < 1e-10);
        assert_eq!(k.eval(-0.1), 0.0);
        assert_eq!(k.eval(k.support() + 1e-9), 0.0);
        assert!((k.eval(1.0) - 0.5 * (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn piecewise_constant_eval_and_integrals() {
        let k = Kernel::piecewise_constant(vec![0.0, 1.0, 3.0], vec![0.2, 0.1]).unwrap();
        assert_eq!(k.eval(0.5), 0.2);
        assert_eq!(k.eval(1.0), 0.1);
        assert_eq!(k.eval(3.5), 0.0);
        assert!((k.l1_norm() - 0.4).abs() < 1e-15);
        assert!((k.cumulative(2.0) - 0.3).abs() < 1e-15);
        assert_eq!(k.sup_on(1.5, 5.0), 0.1);
        assert_eq!(k.sup_on(0.5, 1.5), 0.2);
        assert!((k.inverse_cumulative(0.25) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn table_interpolates_linearly() {
        let k = Kernel::table(0.5, vec![0.0, 0.4, 0.2, 0.0]).unwrap();
        assert!((k.eval(0.25) - 0.2).abs() < 1e-15);
        assert!((k.eval(0.75) - 0.3).abs() < 1e-15);
        assert!((k.l1_norm() - 0.3).abs() < 1e-15);
        assert!((k.cumulative(0.75) - (0.1 + 0.5 * 0.25 * 0.7)).abs() < 1e-15);
        assert_eq!(k.sup_on(0.0, 2.0), 0.4);
        assert!((k.sup_on(0.6, 0.9) - k.eval(0.6)).abs() < 1e-15);
        let x = k.inverse_cumulative(0.2);
        assert!((k.cumulative(x) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn nonnegativity_enforced() {
        assert!(Kernel::exponential(-1.0, 1.0).is_err());
        assert!(Kernel::piecewise_constant(vec![0.0, 1.0], vec![-0.1]).is_err());
        let s = Kernel::signed(KernelForm::PiecewiseConstant { breaks: vec![0.0, 1.0, 2.0], values: vec![0.3, -0.5] })
            .unwrap();
        assert!(!s.is_nonnegative());
        assert!((s.l1_norm() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn signed_table_norm_counts_crossings() {
        let s = Kernel::signed(KernelForm::Table { step: 1.0, values: vec![1.0, -1.0] }).unwrap();
        assert!((s.l1_norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_depth_exponential() {
        let k = Kernel::exponential(0.5, 1.0).unwrap();
        let d = k.tail_depth(1.0, 1e-10);
        assert!((0.5 * (-d).exp() - 1e-10).abs() < 1e-20);
        let pc = Kernel::piecewise_constant(vec![0.0, 2.0], vec![0.25]).unwrap();
        assert!((pc.tail_depth(1.0, 1e-10) - 2.0).abs() < 1e-8);
    }
}
