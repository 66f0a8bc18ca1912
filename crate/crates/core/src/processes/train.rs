use std::fmt::Write as _;

use crate::{Error, Result};

/// A finite realisation of a simple point process, split at time 0 into
/// past points (`<= 0`) and future points (`(0, horizon]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    points: Vec<f64>,
    n_past: usize,
    horizon: f64,
}

impl SpikeTrain {
    pub fn new(past: Vec<f64>, future: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidTrain(format!("horizon {horizon} must be finite and >= 0")));
        }
        if let Some(&p) = past.iter().find(|&&p| !(p <= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidTrain(format!("past point {p} is not a finite time <= 0")));
        }
        if let Some(&p) = future.iter().find(|&&p| !(p > 0.0 && p <= horizon)) {
            return Err(Error::InvalidTrain(format!("future point {p} outside (0, {horizon}]")));
        }
        let n_past = past.len();
        let mut points = past;
        points.extend(future);
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTrain(format!(
                "points must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { points, n_past, horizon })
    }

    /// Builds a train from one sorted list, splitting it at 0.
    pub fn from_points(points: Vec<f64>, horizon: f64) -> Result<Self> {
        let split = points.partition_point(|&p| p <= 0.0);
        let mut past = points;
        let future = past.split_off(split);
        Self::new(past, future, horizon)
    }

    pub fn empty(horizon: f64) -> Self {
        Self { points: Vec::new(), n_past: 0, horizon }
    }

    pub fn past(&self) -> &[f64] {
        &self.points[..self.n_past]
    }

    pub fn future(&self) -> &[f64] {
        &self.points[self.n_past..]
    }

    /// All points, past first, in increasing order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Points strictly before `t`.
    pub fn before(&self, t: f64) -> &[f64] {
        &self.points[..self.points.partition_point(|&p| p < t)]
    }

    /// Last point strictly before `t`.
    pub fn last_before(&self, t: f64) -> Option<f64> {
        self.before(t).last().copied()
    }

    /// Number of points in the half-open window `[a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.points.partition_point(|&p| p < a);
        let hi = self.points.partition_point(|&p| p < b);
        hi.saturating_sub(lo)
    }

    /// Plain-text form: a `# horizon=<T>` header, then one time per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# horizon={}\n", self.horizon);
        for p in &self.points {
            let _ = writeln!(out, "{p}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut horizon = None;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("horizon=") {
                    horizon = Some(v.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("bad horizon `{v}`: {e}"),
                    })?);
                }
                continue;
            }
            points.push(line.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("bad event time `{line}`: {e}"),
            })?);
        }
        let horizon = horizon.ok_or(Error::Parse { line: 1, message: "missing `# horizon=` header".into() })?;
        Self::from_points(points, horizon)
    }
}

/// Predictable age and the `k` preceding inter-spike intervals at some time.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeState {
    pub age: f64,
    /// `delays[0]` is the most recent ISI.
    pub delays: Vec<f64>,
}

impl AgeState {
    /// State right after a spike: the age restarts at 0 and becomes the first delay.
    pub fn after_jump(&self) -> AgeState {
        let mut delays = Vec::with_capacity(self.delays.len());
        if !self.delays.is_empty() {
            delays.push(self.age);
            delays.extend_from_slice(&self.delays[..self.delays.len() - 1]);
        }
        AgeState { age: 0.0, delays }
    }
}

/// `t` minus the last point strictly before `t`.
pub fn age_at(train: &SpikeTrain, t: f64) -> Result<f64> {
    train.last_before(t).map(|p| t - p).ok_or(Error::NoPastPoint { t })
}

/// Age at `t` together with the `k` inter-spike intervals preceding the
/// last point before `t`.
pub fn successive_ages(train: &SpikeTrain, t: f64, k: usize) -> Result<AgeState> {
    ages_from_history(train.before(t), t, k)
}

pub(crate) fn ages_from_history(before: &[f64], t: f64, k: usize) -> Result<AgeState> {
    let n = before.len();
    if n < k + 1 {
        return Err(if n == 0 && k == 0 {
            Error::NoPastPoint { t }
        } else {
            Error::InsufficientHistory { t, needed: k + 1, found: n }
        });
    }
    let age = t - before[n - 1];
    let delays = (1..=k).map(|i| before[n - i] - before[n - i - 1]).collect();
    Ok(AgeState { age, delays })
}
