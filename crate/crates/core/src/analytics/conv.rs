//! Product integration of `c_k = int_{x_m}^{x_k} f(u) h(x_k - u) du` on a
//! uniform grid: `f` is linear between nodes and the kernel moments over each
//! cell are exact, so `f = 1` reproduces `int_0^{x_k - x_m} h` to rounding.
//!
//! With lag weights `a_j = int_0^D h(jD - r)(1 - r/D) dr` and
//! `b_j = int_0^D h(jD - r)(r/D) dr`,
//! `c_k = sum_{j=1}^{k-m} a_j f_{k-j} + b_j f_{k-j+1}`; the `b_1 f_k` term is
//! the implicit part when marching.

use crate::grid::gauss_legendre;
use crate::processes::{Kernel, KernelForm};

#[derive(Debug, Clone)]
enum Lags {
    /// `a_j = a1 r^(j-1)`, `b_j = b1 r^(j-1)`.
    Exp { amplitude: f64, decay: f64, a1: f64, b1: f64, r: f64 },
    General { kernel: Kernel, a: Vec<f64>, b: Vec<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct Weights {
    step: f64,
    lags: Lags,
}

impl Weights {
    pub fn new(h: &Kernel, step: f64) -> Self {
        if let Some((amplitude, decay)) = h.as_exponential() {
            let x = decay * step;
            // int_0^D e^{-d r} dr and int_0^D r e^{-d r} dr
            let e0 = -(-x).exp_m1() / decay;
            let e1 = if x < 1e-2 {
                let mut term = 1.0;
                let mut acc = 0.0;
                for n in 0..12 {
                    acc += term / (n as f64 + 2.0);
                    term *= -x / (n as f64 + 1.0);
                }
                step * step * acc
            } else {
                (-(-x).exp_m1() - x * (-x).exp()) / (decay * decay)
            };
            let a1 = amplitude * e1 / step;
            let b1 = amplitude * e0 - a1;
            return Self { step, lags: Lags::Exp { amplitude, decay, a1, b1, r: (-x).exp() } };
        }
        let lags = (h.support() / step).ceil() as usize + 1;
        let breaks = breakpoints(h);
        let (gx, gw) = gauss_legendre(4);
        let mut a = Vec::with_capacity(lags);
        let mut b = Vec::with_capacity(lags);
        for j in 1..=lags {
            let (lo, hi) = ((j - 1) as f64 * step, j as f64 * step);
            let mut cuts = vec![lo];
            cuts.extend(breaks.iter().copied().filter(|&p| p > lo && p < hi));
            cuts.push(hi);
            let mut first = 0.0;
            for w in cuts.windows(2) {
                let (c, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (&xi, &wi) in gx.iter().zip(&gw) {
                    let x = c + half * xi;
                    first += wi * half * (hi - x) * h.eval(x);
                }
            }
            let bj = first / step;
            b.push(bj);
            a.push(h.integral(lo, hi) - bj);
        }
        Self { step, lags: Lags::General { kernel: h.clone(), a, b } }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Weight of `f_k` in `c_k`.
    pub fn implicit(&self) -> f64 {
        match &self.lags {
            Lags::Exp { b1, .. } => *b1,
            Lags::General { b, .. } => b[0],
        }
    }

    /// `int_0^{k step} h`, consistent with the lag weights.
    pub fn cumulative(&self, k: usize) -> f64 {
        match &self.lags {
            Lags::Exp { amplitude, decay, .. } => amplitude / decay * -(-decay * k as f64 * self.step).exp_m1(),
            Lags::General { kernel, .. } => kernel.cumulative(k as f64 * self.step),
        }
    }

    /// `h(k step)` of the kernel the weights were built from.
    pub fn node(&self, k: usize) -> f64 {
        match &self.lags {
            Lags::Exp { amplitude, decay, .. } => amplitude * (-decay * k as f64 * self.step).exp(),
            Lags::General { kernel, .. } => kernel.eval(k as f64 * self.step),
        }
    }

    /// Full convolution `c_k` for `k > m`, zero for `k <= m`.
    pub fn convolve(&self, m: usize, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        let mut march = March::new(self, m);
        for k in m + 1..f.len() {
            out[k] = march.explicit(k, f) + self.implicit() * f[k];
        }
        out
    }
}

fn breakpoints(h: &Kernel) -> Vec<f64> {
    match h.form() {
        KernelForm::PiecewiseConstant { breaks, .. } => breaks.clone(),
        KernelForm::Table { step, values } => (0..values.len()).map(|i| i as f64 * step).collect(),
        KernelForm::Exponential { .. } => vec![h.support()],
    }
}

/// Forward sweep over `k = m+1, m+2, ...` returning the part of `c_k` that
/// only involves `f_m .. f_{k-1}`.
pub(crate) struct March<'w> {
    w: &'w Weights,
    m: usize,
    next: usize,
    acc_a: f64,
    acc_b: f64,
}

impl<'w> March<'w> {
    pub fn new(w: &'w Weights, m: usize) -> Self {
        Self { w, m, next: m + 1, acc_a: 0.0, acc_b: 0.0 }
    }

    pub fn explicit(&mut self, k: usize, f: &[f64]) -> f64 {
        debug_assert_eq!(k, self.next, "march must visit nodes in order");
        self.next = k + 1;
        let m = self.m;
        match &self.w.lags {
            Lags::Exp { a1, b1, r, .. } => {
                // acc_a = sum_{i=m}^{k-1} r^{k-1-i} f_i, acc_b = sum_{i=m+1}^{k-1} r^{k-i} f_i
                if k == m + 1 {
                    self.acc_a = f[m];
                    self.acc_b = 0.0;
                } else {
                    self.acc_a = f[k - 1] + r * self.acc_a;
                    self.acc_b = r * (self.acc_b + f[k - 1]);
                }
                a1 * self.acc_a + b1 * self.acc_b
            }
            Lags::General { a, b, .. } => {
                let top = (k - m).min(a.len());
                let mut acc = 0.0;
                for j in 1..=top {
                    acc += a[j - 1] * f[k - j];
                }
                for j in 2..=top {
                    acc += b[j - 1] * f[k - j + 1];
                }
                acc
            }
        }
    }
}
