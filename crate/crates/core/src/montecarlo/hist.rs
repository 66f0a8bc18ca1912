use crate::processes::{age_at, successive_ages, SpikeTrain};
use crate::{Error, Result};

/// Uniform bins `[k width, (k + 1) width)` from 0; the last bin is open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeBins {
    pub width: f64,
    pub count: usize,
}

impl AgeBins {
    pub fn new(width: f64, count: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || count == 0 {
            return Err(Error::InvalidParameter(format!("bins of width {width}, count {count}")));
        }
        Ok(Self { width, count })
    }

    fn index(&self, x: f64) -> usize {
        ((x / self.width).floor() as usize).min(self.count - 1)
    }
}

/// Histogram of the ages `S_{t-}` of `n` trains.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalAgeHistogram {
    pub t: f64,
    pub bins: AgeBins,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl EmpiricalAgeHistogram {
    /// Fraction of ages below edge `k width`.
    pub fn cdf_at_edge(&self, k: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.counts[..k.min(self.counts.len())].iter().sum::<u64>() as f64 / self.n as f64
    }

    /// Merges a histogram over the same bins and time.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.bins != other.bins || self.t != other.t {
            return Err(Error::InvalidParameter("histograms differ in bins or time".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }
}

pub fn empirical_age_measure(trains: &[SpikeTrain], t: f64, bins: AgeBins) -> Result<EmpiricalAgeHistogram> {
    let mut counts = vec![0u64; bins.count];
    for train in trains {
        counts[bins.index(age_at(train, t)?)] += 1;
    }
    Ok(EmpiricalAgeHistogram { t, bins, counts, n: trains.len() as u64 })
}

/// `sup_k |F_n(k width) - cdf(k width)|` over the interior bin edges.
pub fn ks_distance(hist: &EmpiricalAgeHistogram, cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..hist.bins.count {
        let x = k as f64 * hist.bins.width;
        worst = worst.max((acc / hist.n.max(1) as f64 - cdf(x)).abs());
        acc += hist.counts[k] as f64;
    }
    worst
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous `cdf`.
pub fn ks_samples(samples: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Joint histogram of `(S_{t-}, A^1_t)`: `counts[j * bins.count + k]` for age
/// bin `j` and interval bin `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAgeHistogram {
    pub t: f64,
    pub bins: AgeBins,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl JointAgeHistogram {
    pub fn marginal_s(&self) -> EmpiricalAgeHistogram {
        let counts = self.counts.chunks(self.bins.count).map(|r| r.iter().sum()).collect();
        EmpiricalAgeHistogram { t: self.t, bins: self.bins, counts, n: self.n }
    }

    pub fn marginal_a(&self) -> EmpiricalAgeHistogram {
        let mut counts = vec![0u64; self.bins.count];
        for row in self.counts.chunks(self.bins.count) {
            for (c, r) in counts.iter_mut().zip(row) {
                *c += r;
            }
        }
        EmpiricalAgeHistogram { t: self.t, bins: self.bins, counts, n: self.n }
    }
}

pub fn joint_age_measure(trains: &[SpikeTrain], t: f64, bins: AgeBins) -> Result<JointAgeHistogram> {
    let mut counts = vec![0u64; bins.count * bins.count];
    for train in trains {
        let st = successive_ages(train, t, 1)?;
        counts[bins.index(st.age) * bins.count + bins.index(st.delays[0])] += 1;
    }
    Ok(JointAgeHistogram { t, bins, counts, n: trains.len() as u64 })
}

/// Consecutive complete inter-spike intervals `(A_i, A_{i+1})` whose second
/// interval was generated after time 0 and starts before `horizon - guard`,
/// so that censoring at the horizon is negligible when intervals longer
/// than `guard` are.
pub fn isi_pairs(trains: &[SpikeTrain], guard: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for train in trains {
        let p = train.points();
        for i in 1..p.len().saturating_sub(1) {
            if p[i + 1] > 0.0 && p[i] <= train.horizon() - guard {
                out.push((p[i] - p[i - 1], p[i + 1] - p[i]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn single_train_gives_unit_spike() {
        let train = SpikeTrain::from_points(vec![-0.3, 1.2], 2.0).unwrap();
        let h = empirical_age_measure(&[train], 2.0, AgeBins::new(0.5, 4).unwrap()).unwrap();
        assert_eq!(h.counts, vec![0, 1, 0, 0]);
        assert_eq!(h.n, 1);
    }

    #[test]
    fn missing_past_point_propagates() {
        let train = SpikeTrain::from_points(vec![1.2], 2.0).unwrap();
        let bins = AgeBins::new(0.5, 4).unwrap();
        assert!(matches!(empirical_age_measure(&[train], 1.0, bins), Err(Error::NoPastPoint { .. })));
    }

    #[test]
    fn ks_of_exponential_sample() {
        let mut rng = rng_from_seed(11);
        let xs: Vec<f64> = Exp::new(1.0).unwrap().sample_iter(&mut rng).take(10_000).collect();
        let trains: Vec<SpikeTrain> = xs.iter().map(|&x| SpikeTrain::new(vec![-x], vec![], 0.0).unwrap()).collect();
        let h = empirical_age_measure(&trains, 0.0, AgeBins::new(1e-3, 20_000).unwrap()).unwrap();
        let exp1 = |x: f64| 1.0 - (-x).exp();
        let exp2 = |x: f64| 1.0 - (-2.0 * x).exp();
        assert!(ks_distance(&h, &exp1) <= 0.0136 * 1.5);
        assert!(ks_samples(&xs, &exp1) <= 0.0136 * 1.5);
        assert!(ks_distance(&h, &exp2) >= 0.2);
        assert!(ks_samples(&xs, &exp2) >= 0.2);
    }

    #[test]
    fn empirical_cdf_is_monotone() {
        let trains: Vec<SpikeTrain> =
            (1..50).map(|i| SpikeTrain::new(vec![-(i as f64) * 0.07], vec![], 0.0).unwrap()).collect();
        let h = empirical_age_measure(&trains, 0.0, AgeBins::new(0.1, 50).unwrap()).unwrap();
        let cdf: Vec<f64> = (0..=50).map(|k| h.cdf_at_edge(k)).collect();
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(cdf[0], 0.0);
        assert_eq!(cdf[50], 1.0);
    }

    #[test]
    fn joint_marginals_and_merge() {
        let a = SpikeTrain::from_points(vec![-1.0, -0.25, 0.5], 1.0).unwrap();
        let b = SpikeTrain::from_points(vec![-2.0, 0.2], 1.0).unwrap();
        let bins = AgeBins::new(0.5, 6).unwrap();
        let j = joint_age_measure(&[a.clone(), b.clone()], 1.0, bins).unwrap();
        assert_eq!(j.marginal_s().counts, vec![0, 2, 0, 0, 0, 0]);
        assert_eq!(j.marginal_a().counts, vec![0, 1, 0, 0, 1, 0]);
        let mut h = empirical_age_measure(&[a], 1.0, bins).unwrap();
        h.merge(&empirical_age_measure(&[b], 1.0, bins).unwrap()).unwrap();
        assert_eq!(h, j.marginal_s());
    }

    #[test]
    fn isi_pairs_skip_censored_tail() {
        let t = SpikeTrain::from_points(vec![-1.0, -0.5, 0.5, 1.0, 9.5], 10.0).unwrap();
        assert_eq!(isi_pairs(&[t.clone()], 2.0), vec![(0.5, 1.0), (1.0, 0.5), (0.5, 8.5)]);
        assert_eq!(isi_pairs(&[t], 9.5), vec![(0.5, 1.0), (1.0, 0.5)]);
    }
}
