//! Experiment configuration: TOML, one table per concern, unknown keys
//! rejected. Built objects keep the line of the table they came from so that
//! precondition failures point back into the file.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use spike_age::grid::{GridFunction1D, SurfaceGrid};
use spike_age::pde::{bin_density, bin_point_mass, bin_wold_point_mass};
use spike_age::processes::{Envelope, IntensityModel, Kernel, KernelForm, PastDensity, PastSpec, RateFn, WoldRate};
use spike_age::thinning::SimConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Simulate,
    SolvePde,
    PhiSurface,
    Validate,
    LimitStudy,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::SolvePde => "solve-pde",
            Kind::PhiSurface => "phi-surface",
            Kind::Validate => "validate",
            Kind::LimitStudy => "limit-study",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Kind::Simulate,
            "solve" | "solve-pde" => Kind::SolvePde,
            "phi-surface" => Kind::PhiSurface,
            "validate" => Kind::Validate,
            "limit-study" => Kind::LimitStudy,
            _ => return None,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<Spanned<String>>,
    run: Option<Spanned<RunSection>>,
    model: Option<Spanned<ModelSection>>,
    kernel: Option<Spanned<KernelSection>>,
    rate: Option<Spanned<FunctionSection>>,
    past: Option<Spanned<PastSection>>,
    grid: Option<Spanned<GridSection>>,
    validate: Option<Spanned<ValidateSection>>,
    limit: Option<Spanned<LimitSection>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_max_events")]
    max_events: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0, reps: default_reps(), horizon: default_horizon(), max_events: default_max_events() }
    }
}

fn default_reps() -> usize {
    1000
}

fn default_horizon() -> f64 {
    10.0
}

fn default_max_events() -> usize {
    spike_age::thinning::DEFAULT_MAX_EVENTS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum ModelSection {
    Poisson {
        rate: f64,
    },
    /// Rate of time from `[rate]`.
    InhomogeneousPoisson {},
    /// Hazard of the age from `[rate]`.
    Renewal {},
    /// `base + weight * min(a_1, cap)`, with `a_1` the last interval.
    Wold {
        #[serde(default = "default_order")]
        order: usize,
        base: f64,
        weight: f64,
        cap: f64,
    },
    /// Kernel from `[kernel]`.
    Hawkes {
        mu: f64,
    },
    ClippedHawkes {
        mu: f64,
    },
    ExpHawkes {
        mu: f64,
    },
}

fn default_order() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum KernelSection {
    Exponential { amplitude: f64, decay: f64 },
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// CSV `x,value` on a uniform grid from 0.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum FunctionSection {
    Constant { value: f64 },
    /// `min(slope * x, cap)`.
    CappedLinear { slope: f64, cap: f64 },
    /// `value` from `threshold` on, zero before.
    Step { threshold: f64, value: f64 },
    /// CSV `x,value` on a uniform grid, held constant beyond its ends.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PastSection {
    Empty {},
    Points { points: Vec<f64> },
    /// Homogeneous Poisson past of rate `alpha`.
    Poisson { alpha: f64 },
    /// Single past point with density `alpha e^{alpha t}` on `t <= 0`.
    Exponential { alpha: f64 },
    /// Single past point uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Characteristics,
    Upwind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    #[serde(default = "default_step")]
    step: f64,
    #[serde(default = "default_t_max")]
    t_max: f64,
    #[serde(default = "default_s_max")]
    s_max: f64,
    #[serde(default = "default_scheme")]
    scheme: Scheme,
    /// Time steps between recorded rows; 0 keeps the last row only.
    #[serde(default)]
    record_every: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            step: default_step(),
            t_max: default_t_max(),
            s_max: default_s_max(),
            scheme: default_scheme(),
            record_every: 0,
        }
    }
}

fn default_step() -> f64 {
    1.0 / 1024.0
}

fn default_t_max() -> f64 {
    5.0
}

fn default_s_max() -> f64 {
    8.0
}

fn default_scheme() -> Scheme {
    Scheme::Characteristics
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ValidateSection {
    /// Simulated ages at `t` against the age PDE.
    RenewalAges {
        t: f64,
        #[serde(default = "default_ks_ages")]
        ks_tolerance: f64,
    },
    /// Thinning against cluster counts on `[0, horizon]`, and both against
    /// the mean-intensity integral.
    HawkesCounts {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Conditioned mean intensity against `Phi` at every `(t, s)` pair.
    HawkesPhi {
        times: Vec<f64>,
        ages: Vec<f64>,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Age and last-interval marginals at `t` against the k = 1 Wold PDE.
    WoldJoint {
        t: f64,
        #[serde(default = "default_ks_joint")]
        ks_tolerance: f64,
    },
    /// Weak-form residual of simulated trains against random bumps.
    WeakResidual {
        #[serde(default = "default_bumps")]
        bumps: usize,
        #[serde(default = "default_weak_tolerance")]
        tolerance: f64,
    },
}

fn default_ks_ages() -> f64 {
    0.02
}

fn default_ks_joint() -> f64 {
    0.05
}

fn default_sigma() -> f64 {
    3.0
}

fn default_bumps() -> usize {
    10
}

fn default_weak_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitSection {
    #[serde(default = "default_m")]
    m: Vec<f64>,
}

fn default_m() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}

/// Where a value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loc {
    pub path: String,
    pub line: usize,
    pub table: &'static str,
}

impl Loc {
    pub fn fail(&self, message: impl Into<String>) -> CliError {
        CliError::Config { path: self.path.clone(), line: self.line, message: format!("[{}] {}", self.table, message.into()) }
    }

    pub fn core(&self, e: spike_age::Error) -> CliError {
        self.fail(e.to_string())
    }
}

struct Source {
    path: PathBuf,
    text: String,
}

impl Source {
    fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Ok(Self { path: path.to_path_buf(), text })
    }

    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn loc(&self, span: Range<usize>, table: &'static str) -> Loc {
        Loc { path: self.path.display().to_string(), line: self.line(span), table }
    }

    fn parse(&self) -> CliResult<RawConfig> {
        toml::from_str(&self.text).map_err(|e| match e.span() {
            Some(span) => CliError::Config {
                path: self.path.display().to_string(),
                line: self.line(span),
                message: e.message().trim().to_string(),
            },
            None => CliError::ConfigFile { path: self.path.display().to_string(), message: e.message().trim().to_string() },
        })
    }

    fn dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub model: Option<PathBuf>,
    pub past: Option<PathBuf>,
    pub horizon: Option<f64>,
    pub reps: Option<usize>,
}

#[derive(Clone)]
pub enum Family {
    Poisson(f64),
    InhomogeneousPoisson(RateFn),
    Renewal(RateFn),
    Wold { order: usize, base: f64, weight: f64, cap: f64 },
    Hawkes { mu: f64, kernel: Kernel },
    ClippedHawkes,
    ExpHawkes,
}

#[derive(Clone)]
pub struct ModelSetup {
    pub family: Family,
    pub model: IntensityModel,
    pub loc: Loc,
}

impl ModelSetup {
    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Poisson(_) => "poisson",
            Family::InhomogeneousPoisson(_) => "inhomogeneous-poisson",
            Family::Renewal(_) => "renewal",
            Family::Wold { .. } => "wold",
            Family::Hawkes { .. } => "hawkes",
            Family::ClippedHawkes => "clipped-hawkes",
            Family::ExpHawkes => "exp-hawkes",
        }
    }

    /// `(mu, h)` of a linear Hawkes model.
    pub fn linear_hawkes(&self) -> Option<(f64, &Kernel)> {
        match &self.family {
            Family::Hawkes { mu, kernel } => Some((*mu, kernel)),
            _ => None,
        }
    }

    /// The `(age, last interval)` rate of a k = 1 Wold model.
    pub fn wold_k1(&self) -> Option<impl Fn(f64, f64) -> f64 + Sync> {
        match self.family {
            Family::Wold { order: 1, base, weight, cap } => Some(move |_: f64, a: f64| base + weight * a.min(cap)),
            _ => None,
        }
    }

    fn require(&self, ok: bool, what: &str) -> CliResult<()> {
        if ok {
            Ok(())
        } else {
            Err(self.loc.fail(format!("{what}, got type = \"{}\"", self.name())))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PastSetup {
    pub section: PastSection,
    pub spec: PastSpec,
    pub loc: Loc,
}

impl PastSetup {
    /// Law of the single past point, when the past has one.
    pub fn density(&self) -> Option<PastDensity> {
        match &self.spec {
            PastSpec::SinglePointWithDensity(d) => Some(d.clone()),
            _ => None,
        }
    }

    /// Cell masses of the initial age `-T_0` on `[0, s_max]`.
    pub fn initial_age(&self, step: f64, s_max: f64) -> CliResult<Vec<f64>> {
        let out = match &self.section {
            PastSection::Empty {} => return Err(self.loc.fail("the age PDE needs a past point")),
            PastSection::Points { points } => bin_point_mass(-points[points.len() - 1], step, s_max),
            PastSection::Poisson { alpha } | PastSection::Exponential { alpha } => {
                let a = *alpha;
                bin_density(move |s| a * (-a * s).exp(), step, s_max, s_max + 40.0 / a)
            }
            PastSection::Uniform { lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                bin_density(move |s| if (-hi..=-lo).contains(&s) { 1.0 / (hi - lo) } else { 0.0 }, step, s_max, -lo)
            }
        };
        out.map_err(|e| self.loc.core(e))
    }

    /// Initial joint mass of `(age, last interval)` for a k = 1 Wold model.
    pub fn initial_wold(&self, step: f64, s_max: f64) -> CliResult<Vec<f64>> {
        match &self.section {
            PastSection::Points { points } if points.len() >= 2 => {
                let n = points.len();
                bin_wold_point_mass(-points[n - 1], points[n - 1] - points[n - 2], step, s_max)
                    .map_err(|e| self.loc.core(e))
            }
            _ => Err(self.loc.fail("the Wold PDE needs type = \"points\" with at least two points")),
        }
    }

    /// `P(-T_0 >= s)`.
    pub fn age_survival(&self) -> CliResult<Box<dyn Fn(f64) -> f64>> {
        match &self.section {
            PastSection::Poisson { alpha } | PastSection::Exponential { alpha } => {
                let a = *alpha;
                Ok(Box::new(move |s: f64| (-a * s.max(0.0)).exp()))
            }
            PastSection::Uniform { lo, hi } => {
                let (lo, hi) = (*lo, *hi);
                Ok(Box::new(move |s: f64| ((-s - lo) / (hi - lo)).clamp(0.0, 1.0)))
            }
            PastSection::Points { points } if points.len() == 1 => {
                let x = -points[0];
                Ok(Box::new(move |s: f64| if s <= x { 1.0 } else { 0.0 }))
            }
            _ => Err(self.loc.fail("needs a single past point: type = \"poisson\", \"exponential\", \"uniform\" or one point")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSetup {
    pub grid: SurfaceGrid,
    pub scheme: Scheme,
    pub record_every: usize,
    pub loc: Loc,
}

/// A validated experiment.
pub struct Setup {
    pub kind: Kind,
    pub seed: u64,
    pub reps: usize,
    pub horizon: f64,
    pub max_events: usize,
    pub model: Option<ModelSetup>,
    pub past: PastSetup,
    pub grid: GridSetup,
    pub validate: Option<(ValidateSection, Loc)>,
    pub limit_m: Vec<f64>,
    pub limit_loc: Loc,
}

impl Setup {
    pub fn load(kind: Kind, config: Option<&Path>, over: &Overrides) -> CliResult<Self> {
        let main = match config {
            Some(p) => Some(Source::read(p)?),
            None => None,
        };
        let defaults = Source { path: PathBuf::from("<defaults>"), text: String::new() };
        let src = main.as_ref().unwrap_or(&defaults);
        let raw = src.parse()?;

        if let Some(k) = &raw.kind {
            match Kind::parse(k.get_ref()) {
                Some(found) if found == kind => {}
                Some(found) => {
                    return Err(src.loc(k.span(), "kind").fail(format!(
                        "config is for `{}` but the `{}` subcommand was run",
                        found.name(),
                        kind.name()
                    )))
                }
                None => return Err(src.loc(k.span(), "kind").fail(format!("unknown kind `{}`", k.get_ref()))),
            }
        }

        let run = raw.run.as_ref().map(|r| (r.get_ref().clone(), src.loc(r.span(), "run")));
        let (run, run_loc) = run.unwrap_or_else(|| (RunSection::default(), src.loc(0..0, "run")));
        let seed = over.seed.unwrap_or(run.seed);
        let reps = over.reps.unwrap_or(run.reps);
        let horizon = over.horizon.unwrap_or(run.horizon);
        let cfg = SimConfig { max_events: run.max_events, ..SimConfig::new(horizon, seed) };
        cfg.validate().map_err(|e| run_loc.core(e))?;

        let model_src = match &over.model {
            Some(p) => Some(Source::read(p)?),
            None => None,
        };
        let model = match &model_src {
            Some(ms) => {
                let mr = ms.parse()?;
                only_tables(ms, &mr, &["model", "kernel", "rate"])?;
                build_model(ms, &mr)?
            }
            None => build_model(src, &raw)?,
        };

        let past_src = match &over.past {
            Some(p) => Some(Source::read(p)?),
            None => None,
        };
        let past = match &past_src {
            Some(ps) => {
                let pr = ps.parse()?;
                only_tables(ps, &pr, &["past"])?;
                build_past(ps, &pr)?
            }
            None => build_past(src, &raw)?,
        };

        let grid = build_grid(src, &raw)?;
        let validate = raw.validate.as_ref().map(|v| (v.get_ref().clone(), src.loc(v.span(), "validate")));
        let (limit_m, limit_loc) = match &raw.limit {
            Some(l) => (l.get_ref().m.clone(), src.loc(l.span(), "limit")),
            None => (default_m(), src.loc(0..0, "limit")),
        };

        let setup = Setup {
            kind,
            seed,
            reps,
            horizon,
            max_events: run.max_events,
            model,
            past,
            grid,
            validate,
            limit_m,
            limit_loc,
        };
        setup.check(src)?;
        Ok(setup)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { max_events: self.max_events, ..SimConfig::new(self.horizon, self.seed) }
    }

    /// The model, which every experiment needs.
    pub fn model(&self) -> &ModelSetup {
        self.model.as_ref().expect("checked at load")
    }

    fn check(&self, src: &Source) -> CliResult<()> {
        let Some(m) = &self.model else {
            return Err(src.loc(0..0, "model").fail("missing [model] table"));
        };
        let single_past = matches!(
            self.past.section,
            PastSection::Poisson { .. } | PastSection::Exponential { .. } | PastSection::Uniform { .. }
        );
        match self.kind {
            Kind::Simulate => {}
            Kind::SolvePde => {
                m.require(
                    matches!(
                        m.family,
                        Family::Poisson(_)
                            | Family::InhomogeneousPoisson(_)
                            | Family::Renewal(_)
                            | Family::Wold { order: 1, .. }
                            | Family::Hawkes { .. }
                    ),
                    "solve-pde supports poisson, inhomogeneous-poisson, renewal, wold with order = 1 and hawkes",
                )?;
                let g = &self.grid;
                match &m.family {
                    Family::Wold { .. } => {
                        self.past.initial_wold(g.grid.step, g.grid.s_max)?;
                    }
                    Family::Hawkes { .. } => {
                        if !single_past {
                            return Err(self.past.loc.fail(
                                "the survival system needs type = \"poisson\", \"exponential\" or \"uniform\"",
                            ));
                        }
                    }
                    _ => {
                        self.past.initial_age(g.grid.step, g.grid.s_max)?;
                    }
                }
            }
            Kind::PhiSurface => {
                m.require(m.linear_hawkes().is_some(), "phi-surface needs type = \"hawkes\"")?;
                if !(single_past || matches!(self.past.section, PastSection::Empty {})) {
                    return Err(self
                        .past
                        .loc
                        .fail("phi-surface needs type = \"empty\", \"poisson\", \"exponential\" or \"uniform\""));
                }
            }
            Kind::LimitStudy => {
                m.require(m.linear_hawkes().is_some(), "limit-study needs type = \"hawkes\"")?;
                if self.limit_m.is_empty() || self.limit_m.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(self.limit_loc.fail("m must be a nonempty list of positive depths"));
                }
            }
            Kind::Validate => {
                let Some((v, loc)) = &self.validate else {
                    return Err(src.loc(0..0, "validate").fail("missing [validate] table"));
                };
                self.check_scenario(m, v, loc)?;
            }
        }
        Ok(())
    }

    fn check_scenario(&self, m: &ModelSetup, v: &ValidateSection, loc: &Loc) -> CliResult<()> {
        let g = &self.grid;
        match v {
            ValidateSection::RenewalAges { t, ks_tolerance } => {
                m.require(
                    matches!(m.family, Family::Poisson(_) | Family::InhomogeneousPoisson(_) | Family::Renewal(_)),
                    "renewal-ages needs poisson, inhomogeneous-poisson or renewal",
                )?;
                positive(loc, "t", *t)?;
                positive(loc, "ks_tolerance", *ks_tolerance)?;
                self.past.initial_age(g.grid.step, g.grid.s_max)?;
            }
            ValidateSection::HawkesCounts { sigma } => {
                m.require(m.linear_hawkes().is_some(), "hawkes-counts needs type = \"hawkes\"")?;
                positive(loc, "sigma", *sigma)?;
                if !matches!(self.past.section, PastSection::Empty {}) {
                    return Err(self.past.loc.fail("hawkes-counts needs type = \"empty\""));
                }
            }
            ValidateSection::HawkesPhi { times, ages, sigma } => {
                m.require(m.linear_hawkes().is_some(), "hawkes-phi needs type = \"hawkes\"")?;
                positive(loc, "sigma", *sigma)?;
                if times.is_empty() || ages.is_empty() {
                    return Err(loc.fail("times and ages must be nonempty"));
                }
                if times.iter().chain(ages).any(|&x| !(x >= 0.0 && x.is_finite())) {
                    return Err(loc.fail("times and ages must be finite and >= 0"));
                }
                self.past.age_survival().map(drop)?;
                if matches!(self.past.section, PastSection::Points { .. }) {
                    return Err(self.past.loc.fail("hawkes-phi needs type = \"poisson\", \"exponential\" or \"uniform\""));
                }
            }
            ValidateSection::WoldJoint { t, ks_tolerance } => {
                m.require(m.wold_k1().is_some(), "wold-joint needs type = \"wold\" with order = 1")?;
                positive(loc, "t", *t)?;
                positive(loc, "ks_tolerance", *ks_tolerance)?;
                self.past.initial_wold(g.grid.step, g.grid.s_max)?;
            }
            ValidateSection::WeakResidual { bumps, tolerance } => {
                positive(loc, "tolerance", *tolerance)?;
                if *bumps == 0 {
                    return Err(loc.fail("bumps must be >= 1"));
                }
                if matches!(self.past.section, PastSection::Empty {}) {
                    return Err(self.past.loc.fail("the weak residual needs a past point"));
                }
            }
        }
        Ok(())
    }
}

fn positive(loc: &Loc, name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(loc.fail(format!("{name} must be finite and > 0, got {x}")))
    }
}

fn only_tables(src: &Source, raw: &RawConfig, allowed: &[&str]) -> CliResult<()> {
    let present = [
        ("kind", raw.kind.as_ref().map(|x| x.span())),
        ("run", raw.run.as_ref().map(|x| x.span())),
        ("model", raw.model.as_ref().map(|x| x.span())),
        ("kernel", raw.kernel.as_ref().map(|x| x.span())),
        ("rate", raw.rate.as_ref().map(|x| x.span())),
        ("past", raw.past.as_ref().map(|x| x.span())),
        ("grid", raw.grid.as_ref().map(|x| x.span())),
        ("validate", raw.validate.as_ref().map(|x| x.span())),
        ("limit", raw.limit.as_ref().map(|x| x.span())),
    ];
    for (name, span) in present {
        if let Some(span) = span {
            if !allowed.contains(&name) {
                return Err(CliError::Config {
                    path: src.path.display().to_string(),
                    line: src.line(span),
                    message: format!("[{name}] is not allowed here; expected only {allowed:?}"),
                });
            }
        }
    }
    Ok(())
}

fn build_model(src: &Source, raw: &RawConfig) -> CliResult<Option<ModelSetup>> {
    let Some(m) = &raw.model else { return Ok(None) };
    let loc = src.loc(m.span(), "model");
    let kernel = |signed: bool| -> CliResult<Kernel> {
        let Some(k) = &raw.kernel else {
            return Err(loc.fail("Hawkes models need a [kernel] table"));
        };
        build_kernel(src, k, signed)
    };
    let rate = || -> CliResult<RateFn> {
        let Some(r) = &raw.rate else {
            return Err(loc.fail("this model needs a [rate] table"));
        };
        build_function(src, r)
    };
    let nonneg = |name: &str, x: f64| {
        if x >= 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(loc.fail(format!("{name} must be finite and >= 0, got {x}")))
        }
    };
    let (family, model) = match m.get_ref().clone() {
        ModelSection::Poisson { rate } => {
            let model = IntensityModel::homogeneous_poisson(rate).map_err(|e| loc.core(e))?;
            (Family::Poisson(rate), model)
        }
        ModelSection::InhomogeneousPoisson {} => {
            let f = rate()?;
            (Family::InhomogeneousPoisson(f.clone()), IntensityModel::inhomogeneous_poisson(f))
        }
        ModelSection::Renewal {} => {
            let f = rate()?;
            (Family::Renewal(f.clone()), IntensityModel::renewal(f))
        }
        ModelSection::Wold { order, base, weight, cap } => {
            nonneg("base", base)?;
            nonneg("weight", weight)?;
            nonneg("cap", cap)?;
            if order == 0 {
                return Err(loc.fail("order must be >= 1"));
            }
            let f = WoldRate::new(move |_, d: &[f64]| base + weight * d[0].min(cap), Envelope::Bounded(base + weight * cap));
            (Family::Wold { order, base, weight, cap }, IntensityModel::generalized_wold(f, order))
        }
        ModelSection::Hawkes { mu } => {
            nonneg("mu", mu)?;
            let h = kernel(false)?;
            let kloc = raw.kernel.as_ref().map(|k| src.loc(k.span(), "kernel")).unwrap_or_else(|| loc.clone());
            let model = IntensityModel::linear_hawkes(mu, h.clone()).map_err(|e| kloc.core(e))?;
            (Family::Hawkes { mu, kernel: h }, model)
        }
        ModelSection::ClippedHawkes { mu } => {
            let h = kernel(true)?;
            let model = IntensityModel::clipped_hawkes(mu, h).map_err(|e| loc.core(e))?;
            (Family::ClippedHawkes, model)
        }
        ModelSection::ExpHawkes { mu } => {
            let h = kernel(true)?;
            let model = IntensityModel::exp_hawkes(mu, h).map_err(|e| loc.core(e))?;
            (Family::ExpHawkes, model)
        }
    };
    Ok(Some(ModelSetup { family, model, loc }))
}

fn build_kernel(src: &Source, k: &Spanned<KernelSection>, signed: bool) -> CliResult<Kernel> {
    let loc = src.loc(k.span(), "kernel");
    let built = match k.get_ref().clone() {
        KernelSection::Exponential { amplitude, decay } if signed => {
            Kernel::signed(KernelForm::Exponential { amplitude, decay })
        }
        KernelSection::Exponential { amplitude, decay } => Kernel::exponential(amplitude, decay),
        KernelSection::Piecewise { breaks, values } if signed => {
            Kernel::signed(KernelForm::PiecewiseConstant { breaks, values })
        }
        KernelSection::Piecewise { breaks, values } => Kernel::piecewise_constant(breaks, values),
        KernelSection::Table { path } => {
            let g = read_table(&src.dir().join(&path), &loc)?;
            if g.x0() != 0.0 {
                return Err(loc.fail(format!("kernel table `{}` must start at x = 0", path.display())));
            }
            if signed {
                Kernel::signed(KernelForm::Table { step: g.step(), values: g.values().to_vec() })
            } else {
                Kernel::table(g.step(), g.values().to_vec())
            }
        }
    };
    built.map_err(|e| loc.core(e))
}

fn build_function(src: &Source, f: &Spanned<FunctionSection>) -> CliResult<RateFn> {
    let loc = src.loc(f.span(), "rate");
    let check = |name: &str, x: f64| {
        if x >= 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(loc.fail(format!("{name} must be finite and >= 0, got {x}")))
        }
    };
    Ok(match f.get_ref().clone() {
        FunctionSection::Constant { value } => {
            check("value", value)?;
            RateFn::constant(value)
        }
        FunctionSection::CappedLinear { slope, cap } => {
            check("slope", slope)?;
            check("cap", cap)?;
            RateFn::capped_linear(slope, cap)
        }
        FunctionSection::Step { threshold, value } => {
            check("value", value)?;
            if !threshold.is_finite() {
                return Err(loc.fail("threshold must be finite"));
            }
            RateFn::step(threshold, value)
        }
        FunctionSection::Table { path } => {
            let g = read_table(&src.dir().join(&path), &loc)?;
            if g.values().iter().any(|&v| v < 0.0) {
                return Err(loc.fail(format!("rate table `{}` has negative values", path.display())));
            }
            let sup = g.values().iter().fold(0.0f64, |a, &b| a.max(b));
            RateFn::new(move |x| g.eval(x), Envelope::Bounded(sup))
        }
    })
}

/// Reads a uniform `x,value` CSV with an optional header line.
fn read_table(path: &Path, loc: &Loc) -> CliResult<GridFunction1D> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| loc.fail(format!("cannot read table `{}`: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((x, v)) => {
                xs.push(x);
                vs.push(v);
            }
            None if xs.is_empty() && i == 0 => {}
            None => return Err(loc.fail(format!("`{}` line {}: expected `x,value`", path.display(), i + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(loc.fail(format!("`{}` needs at least two rows", path.display())));
    }
    let step = xs[1] - xs[0];
    let uniform = xs.iter().enumerate().all(|(k, &x)| (x - (xs[0] + k as f64 * step)).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0) || !uniform {
        return Err(loc.fail(format!("`{}` must have increasing, uniformly spaced x", path.display())));
    }
    GridFunction1D::new(xs[0], step, vs).map_err(|e| loc.core(e))
}

fn build_past(src: &Source, raw: &RawConfig) -> CliResult<PastSetup> {
    let (section, loc) = match &raw.past {
        Some(p) => (p.get_ref().clone(), src.loc(p.span(), "past")),
        None => (PastSection::Empty {}, src.loc(0..0, "past")),
    };
    let spec = match &section {
        PastSection::Empty {} => PastSpec::Empty,
        PastSection::Points { points } => {
            if points.iter().any(|&x| !(x <= 0.0)) || points.windows(2).any(|w| w[0] >= w[1]) {
                return Err(loc.fail("points must be <= 0 and strictly increasing"));
            }
            if points.is_empty() {
                PastSpec::Empty
            } else {
                PastSpec::FixedPoints(points.clone())
            }
        }
        PastSection::Poisson { alpha } => {
            if !(*alpha > 0.0 && alpha.is_finite()) {
                return Err(loc.fail(format!("alpha must be finite and > 0, got {alpha}")));
            }
            PastSpec::PoissonPast(*alpha)
        }
        PastSection::Exponential { alpha } => {
            PastSpec::SinglePointWithDensity(PastDensity::exponential(*alpha).map_err(|e| loc.core(e))?)
        }
        PastSection::Uniform { lo, hi } => {
            PastSpec::SinglePointWithDensity(PastDensity::uniform(*lo, *hi).map_err(|e| loc.core(e))?)
        }
    };
    let section = match section {
        PastSection::Points { points } if points.is_empty() => PastSection::Empty {},
        s => s,
    };
    Ok(PastSetup { section, spec, loc })
}

fn build_grid(src: &Source, raw: &RawConfig) -> CliResult<GridSetup> {
    let (g, loc) = match &raw.grid {
        Some(g) => (g.get_ref().clone(), src.loc(g.span(), "grid")),
        None => (GridSection::default(), src.loc(0..0, "grid")),
    };
    let grid = SurfaceGrid::new(g.step, g.t_max, g.s_max).map_err(|e| loc.core(e))?;
    Ok(GridSetup { grid, scheme: g.scheme, record_every: g.record_every, loc })
}
