use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use spike_age::csv::fmt_f64;
use spike_age::rng::replication_seed;

use crate::error::{CliError, CliResult};

/// Output directory; every file is written whole so reruns overwrite cleanly.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn write(&self, name: &str, content: &str) -> CliResult<()> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, content).map_err(|e| CliError::io(&path, e))
    }
}

/// `rep,seed,count` rows of one replication stream, reps numbered from `first`.
#[derive(Default)]
pub struct Manifest {
    text: String,
}

impl Manifest {
    pub fn push_stream(&mut self, first: usize, master: u64, counts: &[usize]) {
        for (i, c) in counts.iter().enumerate() {
            let _ = writeln!(self.text, "{},{},{}", first + i, replication_seed(master, i as u64), c);
        }
    }

    pub fn render(&self) -> String {
        format!("rep,seed,count\n{}", self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    fn holds(self, x: f64) -> bool {
        match self {
            Bound::AtMost(b) => x <= b,
            Bound::AtLeast(b) => x >= b,
        }
    }

    fn render(self) -> String {
        match self {
            Bound::AtMost(b) => format!("<= {}", fmt_f64(b)),
            Bound::AtLeast(b) => format!(">= {}", fmt_f64(b)),
        }
    }
}

/// A summary row; rows with a bound are acceptance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Stat {
    pub statistic: String,
    pub value: f64,
    pub se: Option<f64>,
    pub n: usize,
    pub seed_set: String,
    pub bound: Option<Bound>,
}

impl Stat {
    pub fn new(statistic: impl Into<String>, value: f64) -> Self {
        Self { statistic: statistic.into(), value, se: None, n: 0, seed_set: String::new(), bound: None }
    }

    pub fn se(mut self, se: f64) -> Self {
        self.se = Some(se);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn seeds(mut self, seed_set: impl Into<String>) -> Self {
        self.seed_set = seed_set.into();
        self
    }

    pub fn at_most(mut self, b: f64) -> Self {
        self.bound = Some(Bound::AtMost(b));
        self
    }

    pub fn at_least(mut self, b: f64) -> Self {
        self.bound = Some(Bound::AtLeast(b));
        self
    }

    pub fn passes(&self) -> bool {
        self.bound.is_none_or(|b| b.holds(self.value))
    }
}

/// Seed set label of `reps` replications drawn from `master`.
pub fn seed_set(master: u64, reps: usize) -> String {
    format!("{master}:0..{reps}")
}

/// `statistic,value,se,n,seed_set,tolerance,status` rows; status is PASS or
/// FAIL for checks and empty otherwise.
pub fn summary(stats: &[Stat]) -> String {
    let mut out = String::from("statistic,value,se,n,seed_set,tolerance,status\n");
    for s in stats {
        let se = s.se.map(fmt_f64).unwrap_or_default();
        let (tol, status) = match s.bound {
            Some(b) => (b.render(), if s.passes() { "PASS" } else { "FAIL" }),
            None => (String::new(), ""),
        };
        let _ = writeln!(out, "{},{},{},{},{},{},{}", s.statistic, fmt_f64(s.value), se, s.n, s.seed_set, tol, status);
    }
    out
}
