//! Run configuration in a line-oriented `[section]` / `key = value` format.
//!
//! Keys before the first section header belong to the top level (`mode`,
//! `seed`). `#` starts a comment. Per-species values are comma-separated;
//! a single value is broadcast to every species. Parsing collects every
//! error before returning.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use crate::diagnostics::{RelEntropyMode, Weighting};
use crate::grid::Grid1D;
use crate::hyperbolic::{ConservedState, KappaMode, RelaxConfig, Type1Config};
use crate::parabolic::{FieldSet, ParabolicConfig, Regularization};
use crate::params::{Conductivity, Friction, MixtureParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    RunParabolic,
    RunType1,
    Sweep,
    Check,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::RunParabolic => "run-parabolic",
            Mode::RunType1 => "run-type1",
            Mode::Sweep => "sweep",
            Mode::Check => "check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "run-parabolic" => Some(Mode::RunParabolic),
            "run-type1" => Some(Mode::RunType1),
            "sweep" => Some(Mode::Sweep),
            "check" => Some(Mode::Check),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Uniform,
    Step,
    Sine,
    Gaussian,
}

impl ProfileKind {
    fn name(self) -> &'static str {
        match self {
            ProfileKind::Uniform => "uniform",
            ProfileKind::Step => "step",
            ProfileKind::Sine => "sine",
            ProfileKind::Gaussian => "gaussian",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(ProfileKind::Uniform),
            "step" => Some(ProfileKind::Step),
            "sine" => Some(ProfileKind::Sine),
            "gaussian" => Some(ProfileKind::Gaussian),
            _ => None,
        }
    }
}

/// Initial profile of one field on `[0, L]`, with `s = x / L`:
///
/// * uniform: `mean`
/// * step: `mean + amplitude` for `s < phase`, `mean - amplitude` otherwise
/// * sine: `mean + amplitude * sin(2 pi s + phase)`
/// * gaussian: `mean + amplitude * exp(-((s - phase) / width)^2 / 2)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldProfile {
    pub kind: ProfileKind,
    pub mean: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub width: f64,
}

impl FieldProfile {
    pub fn uniform(mean: f64) -> Self {
        Self {
            kind: ProfileKind::Uniform,
            mean,
            amplitude: 0.0,
            phase: 0.0,
            width: 0.1,
        }
    }

    pub fn sine(mean: f64, amplitude: f64, phase: f64) -> Self {
        Self {
            kind: ProfileKind::Sine,
            mean,
            amplitude,
            phase,
            width: 0.1,
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self.kind {
            ProfileKind::Uniform => self.mean,
            ProfileKind::Step => {
                if x / length < self.phase {
                    self.mean + self.amplitude
                } else {
                    self.mean - self.amplitude
                }
            }
            ProfileKind::Sine => {
                let k = 2.0 * PI / length;
                self.mean + self.amplitude * (k * x + self.phase).sin()
            }
            ProfileKind::Gaussian => {
                let z = (x / length - self.phase) / self.width;
                self.mean + self.amplitude * (-0.5 * z * z).exp()
            }
        }
    }

    /// Lower bound of the profile over the domain.
    pub fn lower_bound(&self) -> f64 {
        match self.kind {
            ProfileKind::Uniform => self.mean,
            ProfileKind::Step | ProfileKind::Sine => self.mean - self.amplitude.abs(),
            ProfileKind::Gaussian => self.mean + self.amplitude.min(0.0),
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.cell_centers().iter().map(|&x| self.eval(x, grid.length())).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSection {
    pub molar_masses: Vec<f64>,
    pub heat_capacity: f64,
    /// Strict upper triangle `b_12, b_13, ..., b_(n-1)n`.
    pub friction: Vec<f64>,
    pub friction_exponent: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub kappa_lower: f64,
    pub kappa_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub cells: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_halvings: usize,
    pub regularization: Regularization,
    pub reg_delta: Option<f64>,
    pub cfl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySection {
    pub lambda: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSection {
    pub rho: Vec<FieldProfile>,
    pub theta: FieldProfile,
    pub velocity: FieldProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    pub kappa_mode: KappaMode,
    pub delta: f64,
    pub big_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub mixture: MixtureSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub boundary: BoundarySection,
    pub initial: InitialSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
}

/// Default density profiles: alternating-sign sine perturbations around 1.
fn default_rho(n: usize) -> Vec<FieldProfile> {
    (0..n)
        .map(|i| FieldProfile::sine(1.0, if i % 2 == 0 { 0.2 } else { -0.2 }, 0.0))
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::RunParabolic,
            seed: 42,
            mixture: MixtureSection {
                molar_masses: vec![1.0, 2.0],
                heat_capacity: 1.5,
                friction: vec![1.0],
                friction_exponent: 0.0,
                epsilon: 1.0,
                kappa: 0.01,
                kappa_lower: 0.01,
                kappa_upper: 1.0,
            },
            grid: GridSection {
                cells: 128,
                length: 1.0,
            },
            time: TimeSection {
                dt: 1e-3,
                t_end: 0.5,
                newton_tol: 1e-10,
                newton_max_iter: 50,
                max_halvings: 5,
                regularization: Regularization::Laplacian,
                reg_delta: None,
                cfl: 0.4,
            },
            boundary: BoundarySection {
                lambda: 0.0,
                theta0: 1.0,
            },
            initial: InitialSection {
                rho: default_rho(2),
                theta: FieldProfile::sine(1.0, 0.1, PI / 2.0),
                velocity: FieldProfile::sine(0.0, 0.1, 0.0),
            },
            output: OutputSection {
                directory: PathBuf::from("out"),
                every: 1,
            },
            sweep: SweepSection {
                epsilons: vec![0.1, 0.05, 0.025, 0.0125],
                kappa_mode: KappaMode::Fixed,
                delta: 1e-3,
                big_m: 1e3,
            },
        }
    }
}

/// One syntax or validation problem. `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, key: &str) -> bool {
        self.0.iter().any(|i| i.key == key)
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Reader {
    entries: BTreeMap<String, Entry>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: Option<usize>, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn parsed<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>, what: &str) -> T {
        match self.take(key) {
            None => default,
            Some((line, raw)) => match parse(&raw) {
                Some(v) => v,
                None => {
                    self.issue(Some(line), key, format!("expected {what}, got `{raw}`"));
                    default
                }
            },
        }
    }

    fn number(&mut self, key: &str, default: f64) -> f64 {
        self.parsed(key, default, parse_f64, "a number")
    }

    fn count(&mut self, key: &str, default: usize) -> usize {
        self.parsed(key, default, |s| s.parse().ok(), "a nonnegative integer")
    }

    /// Comma list of numbers; `None` when the key is absent.
    fn list(&mut self, key: &str) -> Option<(usize, Vec<f64>)> {
        let (line, raw) = self.take(key)?;
        let mut out = Vec::new();
        for item in raw.split(',') {
            match parse_f64(item.trim()) {
                Some(v) => out.push(v),
                None => {
                    self.issue(Some(line), key, format!("expected a comma-separated list of numbers, got `{raw}`"));
                    return None;
                }
            }
        }
        Some((line, out))
    }

    /// Per-species list: absent gives `default`, one value is broadcast.
    fn species_list<T: Clone>(&mut self, key: &str, n: usize, default: Vec<T>, parse: impl Fn(&str) -> Option<T>) -> Vec<T> {
        let Some((line, raw)) = self.take(key) else {
            return default;
        };
        let items: Option<Vec<T>> = raw.split(',').map(|s| parse(s.trim())).collect();
        match items {
            Some(v) if v.len() == n => v,
            Some(v) if v.len() == 1 => vec![v[0].clone(); n],
            Some(v) => {
                self.issue(Some(line), key, format!("expected {n} values (one per species), got {}", v.len()));
                default
            }
            None => {
                self.issue(Some(line), key, format!("could not parse `{raw}`"));
                default
            }
        }
    }
}

/// Shortest round-trip form, switching to scientific notation for very
/// small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_regularization(s: &str) -> Option<Regularization> {
    match s {
        "none" => Some(Regularization::None),
        "laplacian" => Some(Regularization::Laplacian),
        "bilaplacian" => Some(Regularization::Bilaplacian),
        _ => None,
    }
}

fn regularization_name(r: Regularization) -> &'static str {
    match r {
        Regularization::None => "none",
        Regularization::Laplacian => "laplacian",
        Regularization::Bilaplacian => "bilaplacian",
    }
}

fn parse_kappa_mode(s: &str) -> Option<KappaMode> {
    match s {
        "fixed" => Some(KappaMode::Fixed),
        "joint" => Some(KappaMode::Joint),
        _ => None,
    }
}

fn kappa_mode_name(m: KappaMode) -> &'static str {
    match m {
        KappaMode::Fixed => "fixed",
        KappaMode::Joint => "joint",
    }
}

fn tokenize(text: &str) -> Reader {
    let mut reader = Reader {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if !name.trim().is_empty() => section = name.trim().to_string(),
                _ => reader.issue(Some(line), "", format!("malformed section header `{content}`")),
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            reader.issue(Some(line), "", format!("expected `key = value`, got `{content}`"));
            continue;
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            reader.issue(Some(line), "", format!("invalid key `{key}`"));
            continue;
        }
        let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        if let Some(prev) = reader.entries.get(&path) {
            let msg = format!("duplicate key (first set on line {})", prev.line);
            reader.issue(Some(line), &path, msg);
            continue;
        }
        reader.entries.insert(
            path,
            Entry {
                line,
                value: value.trim().to_string(),
                used: false,
            },
        );
    }
    reader
}

/// Parses and validates a configuration, filling defaults for absent keys.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut r = tokenize(text);
    let d = RunConfig::default();

    let mode = r.parsed("mode", d.mode, Mode::parse, "one of run-parabolic, run-type1, sweep, check");
    let seed = r.parsed("seed", d.seed, |s| s.parse().ok(), "an unsigned integer");

    let molar_masses = match r.list("mixture.molar_masses") {
        Some((_, v)) => v,
        None => d.mixture.molar_masses.clone(),
    };
    let n = molar_masses.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let friction = match r.list("mixture.friction") {
        None => vec![1.0; pairs],
        Some((_, v)) if v.len() == pairs => v,
        Some((_, v)) if v.len() == 1 => vec![v[0]; pairs],
        Some((line, v)) => {
            r.issue(
                Some(line),
                "mixture.friction",
                format!("expected {pairs} upper-triangle coefficients (or one), got {}", v.len()),
            );
            vec![1.0; pairs]
        }
    };
    let mixture = MixtureSection {
        molar_masses,
        heat_capacity: r.number("mixture.heat_capacity", d.mixture.heat_capacity),
        friction,
        friction_exponent: r.number("mixture.friction_exponent", d.mixture.friction_exponent),
        epsilon: r.number("mixture.epsilon", d.mixture.epsilon),
        kappa: r.number("mixture.kappa", d.mixture.kappa),
        kappa_lower: r.number("mixture.kappa_lower", d.mixture.kappa_lower),
        kappa_upper: r.number("mixture.kappa_upper", d.mixture.kappa_upper),
    };
    let grid = GridSection {
        cells: r.count("grid.cells", d.grid.cells),
        length: r.number("grid.length", d.grid.length),
    };
    let time = TimeSection {
        dt: r.number("time.dt", d.time.dt),
        t_end: r.number("time.t_end", d.time.t_end),
        newton_tol: r.number("time.newton_tol", d.time.newton_tol),
        newton_max_iter: r.count("time.newton_max_iter", d.time.newton_max_iter),
        max_halvings: r.count("time.max_halvings", d.time.max_halvings),
        regularization: r.parsed(
            "time.regularization",
            d.time.regularization,
            parse_regularization,
            "one of none, laplacian, bilaplacian",
        ),
        reg_delta: r.parsed(
            "time.reg_delta",
            d.time.reg_delta,
            |s| if s == "auto" { Some(None) } else { parse_f64(s).map(Some) },
            "a number or `auto`",
        ),
        cfl: r.number("time.cfl", d.time.cfl),
    };
    let boundary = BoundarySection {
        lambda: r.number("boundary.lambda", d.boundary.lambda),
        theta0: r.number("boundary.theta0", d.boundary.theta0),
    };

    let dr = default_rho(n);
    let kinds = r.species_list("initial.rho_profile", n, dr.iter().map(|p| p.kind).collect(), ProfileKind::parse);
    let means = r.species_list("initial.rho_mean", n, dr.iter().map(|p| p.mean).collect(), parse_f64);
    let amps = r.species_list("initial.rho_amplitude", n, dr.iter().map(|p| p.amplitude).collect(), parse_f64);
    let phases = r.species_list("initial.rho_phase", n, dr.iter().map(|p| p.phase).collect(), parse_f64);
    let widths = r.species_list("initial.rho_width", n, dr.iter().map(|p| p.width).collect(), parse_f64);
    let rho = (0..n)
        .map(|i| FieldProfile {
            kind: kinds[i],
            mean: means[i],
            amplitude: amps[i],
            phase: phases[i],
            width: widths[i],
        })
        .collect();
    let scalar_profile = |r: &mut Reader, name: &str, def: FieldProfile| FieldProfile {
        kind: r.parsed(
            &format!("initial.{name}_profile"),
            def.kind,
            ProfileKind::parse,
            "one of uniform, step, sine, gaussian",
        ),
        mean: r.number(&format!("initial.{name}_mean"), def.mean),
        amplitude: r.number(&format!("initial.{name}_amplitude"), def.amplitude),
        phase: r.number(&format!("initial.{name}_phase"), def.phase),
        width: r.number(&format!("initial.{name}_width"), def.width),
    };
    let theta = scalar_profile(&mut r, "theta", d.initial.theta);
    let velocity = scalar_profile(&mut r, "velocity", d.initial.velocity);
    let initial = InitialSection { rho, theta, velocity };

    let output = OutputSection {
        directory: r.parsed("output.directory", d.output.directory.clone(), |s| Some(PathBuf::from(s)), "a path"),
        every: r.count("output.every", d.output.every),
    };
    let sweep = SweepSection {
        epsilons: r.list("sweep.epsilons").map(|(_, v)| v).unwrap_or(d.sweep.epsilons.clone()),
        kappa_mode: r.parsed("sweep.kappa_mode", d.sweep.kappa_mode, parse_kappa_mode, "fixed or joint"),
        delta: r.number("sweep.delta", d.sweep.delta),
        big_m: r.number("sweep.big_m", d.sweep.big_m),
    };

    let unknown: Vec<(usize, String)> = r
        .entries
        .iter()
        .filter(|(_, e)| !e.used)
        .map(|(k, e)| (e.line, k.clone()))
        .collect();
    for (line, key) in unknown {
        r.issue(Some(line), &key, "unknown key");
    }

    let config = RunConfig {
        mode,
        seed,
        mixture,
        grid,
        time,
        boundary,
        initial,
        output,
        sweep,
    };
    let mut issues = r.issues;
    issues.extend(config.validate());
    issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(issues))
    }
}

impl RunConfig {
    /// Semantic checks with key paths; empty when the configuration is valid.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |key: &str, message: String| {
            issues.push(ConfigIssue {
                line: None,
                key: key.to_string(),
                message,
            })
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let m = &self.mixture;
        if m.molar_masses.is_empty() {
            bad("mixture.molar_masses", "at least one species is required".into());
        }
        if let Some(v) = m.molar_masses.iter().find(|v| !positive(**v)) {
            bad("mixture.molar_masses", format!("molar masses must be positive, got {v}"));
        }
        if !positive(m.heat_capacity) {
            bad("mixture.heat_capacity", format!("must be positive, got {}", m.heat_capacity));
        }
        if let Some(v) = m.friction.iter().find(|v| !positive(**v)) {
            bad("mixture.friction", format!("coefficients must be positive, got {v}"));
        }
        if !positive(m.epsilon) {
            bad("mixture.epsilon", format!("must be positive, got {}", m.epsilon));
        }
        if !positive(m.kappa_lower) {
            bad("mixture.kappa_lower", format!("must be positive, got {}", m.kappa_lower));
        }
        if !(m.kappa_upper >= m.kappa_lower) {
            bad("mixture.kappa_upper", format!("must be at least kappa_lower, got {}", m.kappa_upper));
        }
        if !(m.kappa >= m.kappa_lower && m.kappa <= m.kappa_upper) {
            bad(
                "mixture.kappa",
                format!("must lie in [{}, {}], got {}", m.kappa_lower, m.kappa_upper, m.kappa),
            );
        }
        if self.grid.cells < 2 {
            bad("grid.cells", format!("at least 2 cells are required, got {}", self.grid.cells));
        }
        if !positive(self.grid.length) {
            bad("grid.length", format!("must be positive, got {}", self.grid.length));
        }
        let t = &self.time;
        if !positive(t.dt) {
            bad("time.dt", format!("must be positive, got {}", t.dt));
        }
        if !(t.t_end >= 0.0) {
            bad("time.t_end", format!("must be nonnegative, got {}", t.t_end));
        }
        if !positive(t.newton_tol) {
            bad("time.newton_tol", format!("must be positive, got {}", t.newton_tol));
        }
        if t.newton_max_iter == 0 {
            bad("time.newton_max_iter", "must be at least 1".into());
        }
        if let Some(d) = t.reg_delta {
            if d < 0.0 {
                bad("time.reg_delta", format!("must be nonnegative, got {d}"));
            }
        }
        if !(t.cfl > 0.0 && t.cfl < 1.0) {
            bad("time.cfl", format!("must lie in (0, 1), got {}", t.cfl));
        }
        if !(self.boundary.lambda >= 0.0) {
            bad("boundary.lambda", format!("must be nonnegative, got {}", self.boundary.lambda));
        }
        if !positive(self.boundary.theta0) {
            bad("boundary.theta0", format!("must be positive, got {}", self.boundary.theta0));
        }
        for (i, p) in self.initial.rho.iter().enumerate() {
            if !(p.lower_bound() > 0.0) {
                bad(
                    "initial.rho_mean",
                    format!("density profile of species {} reaches {} (must stay positive)", i + 1, p.lower_bound()),
                );
            }
            if p.kind == ProfileKind::Gaussian && !positive(p.width) {
                bad("initial.rho_width", format!("species {} width must be positive", i + 1));
            }
        }
        if !(self.initial.theta.lower_bound() > 0.0) {
            bad(
                "initial.theta_mean",
                format!("temperature profile reaches {} (must stay positive)", self.initial.theta.lower_bound()),
            );
        }
        for (name, p) in [("theta", &self.initial.theta), ("velocity", &self.initial.velocity)] {
            if p.kind == ProfileKind::Gaussian && !positive(p.width) {
                bad(&format!("initial.{name}_width"), "width must be positive".into());
            }
        }
        if self.output.every == 0 {
            bad("output.every", "must be at least 1".into());
        }
        let s = &self.sweep;
        if s.epsilons.is_empty() || s.epsilons.iter().any(|e| !positive(*e)) {
            bad("sweep.epsilons", "values must be positive".into());
        } else if s.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            bad("sweep.epsilons", "values must be strictly decreasing".into());
        }
        if !(positive(s.delta) && s.big_m > s.delta) {
            bad("sweep.delta", format!("bounds must satisfy 0 < delta < big_m, got {} and {}", s.delta, s.big_m));
        }
        issues
    }

    pub fn species(&self) -> usize {
        self.mixture.molar_masses.len()
    }

    pub fn params(&self) -> crate::Result<MixtureParams> {
        let m = &self.mixture;
        MixtureParams::new(
            m.molar_masses.clone(),
            m.heat_capacity,
            Friction::from_upper(self.species(), &m.friction, m.friction_exponent)?,
            m.epsilon,
            Conductivity::new(m.kappa, m.kappa_lower, m.kappa_upper)?,
        )
    }

    pub fn grid(&self) -> crate::Result<Grid1D> {
        Grid1D::new(self.grid.cells, self.grid.length)
    }

    pub fn parabolic_config(&self) -> ParabolicConfig {
        ParabolicConfig {
            dt: self.time.dt,
            t_end: self.time.t_end,
            newton_tol: self.time.newton_tol,
            newton_max_iter: self.time.newton_max_iter,
            regularization: self.time.regularization,
            reg_delta: self.time.reg_delta,
            lambda: self.boundary.lambda,
            theta0: self.boundary.theta0,
            output_every: self.output.every,
            max_halvings: self.time.max_halvings,
        }
    }

    pub fn type1_config(&self) -> crate::Result<Type1Config> {
        Ok(Type1Config {
            grid: self.grid()?,
            t_end: self.time.t_end,
            cfl: self.time.cfl,
            dt: None,
            output_every: self.output.every,
        })
    }

    pub fn relax_config(&self) -> crate::Result<RelaxConfig> {
        let mut c = RelaxConfig::new(self.grid()?, self.time.t_end);
        c.epsilon_list = self.sweep.epsilons.clone();
        c.kappa_mode = self.sweep.kappa_mode;
        c.cfl = self.time.cfl;
        c.delta = self.sweep.delta;
        c.big_m = self.sweep.big_m;
        c.mode = RelEntropyMode::Bregman;
        c.weighting = Weighting::ThetaBar;
        Ok(c)
    }

    pub fn initial_fields(&self) -> crate::Result<FieldSet> {
        let grid = self.grid()?;
        FieldSet::new(
            self.initial.rho.iter().map(|p| p.sample(&grid)).collect(),
            self.initial.theta.sample(&grid),
        )
    }

    pub fn initial_conserved(&self) -> crate::Result<ConservedState> {
        let grid = self.grid()?;
        ConservedState::from_primal(&self.initial_fields()?, &self.initial.velocity.sample(&grid), &self.params()?)
    }

    /// Serializes every key, so the output reparses to an equal configuration.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
        let m = &self.mixture;
        let t = &self.time;
        let i = &self.initial;
        let mut s = String::new();
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[mixture]");
        let _ = writeln!(s, "molar_masses = {}", list(&m.molar_masses));
        let _ = writeln!(s, "heat_capacity = {}", num(m.heat_capacity));
        let _ = writeln!(s, "friction = {}", list(&m.friction));
        let _ = writeln!(s, "friction_exponent = {}", num(m.friction_exponent));
        let _ = writeln!(s, "epsilon = {}", num(m.epsilon));
        let _ = writeln!(s, "kappa = {}", num(m.kappa));
        let _ = writeln!(s, "kappa_lower = {}", num(m.kappa_lower));
        let _ = writeln!(s, "kappa_upper = {}", num(m.kappa_upper));
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "cells = {}", self.grid.cells);
        let _ = writeln!(s, "length = {}", num(self.grid.length));
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "dt = {}", num(t.dt));
        let _ = writeln!(s, "t_end = {}", num(t.t_end));
        let _ = writeln!(s, "newton_tol = {}", num(t.newton_tol));
        let _ = writeln!(s, "newton_max_iter = {}", t.newton_max_iter);
        let _ = writeln!(s, "max_halvings = {}", t.max_halvings);
        let _ = writeln!(s, "regularization = {}", regularization_name(t.regularization));
        match t.reg_delta {
            Some(d) => {
                let _ = writeln!(s, "reg_delta = {}", num(d));
            }
            None => {
                let _ = writeln!(s, "reg_delta = auto");
            }
        }
        let _ = writeln!(s, "cfl = {}", num(t.cfl));
        let _ = writeln!(s, "\n[boundary]");
        let _ = writeln!(s, "lambda = {}", num(self.boundary.lambda));
        let _ = writeln!(s, "theta0 = {}", num(self.boundary.theta0));
        let _ = writeln!(s, "\n[initial]");
        let kinds: Vec<&str> = i.rho.iter().map(|p| p.kind.name()).collect();
        let _ = writeln!(s, "rho_profile = {}", kinds.join(", "));
        let _ = writeln!(s, "rho_mean = {}", list(&i.rho.iter().map(|p| p.mean).collect::<Vec<_>>()));
        let _ = writeln!(s, "rho_amplitude = {}", list(&i.rho.iter().map(|p| p.amplitude).collect::<Vec<_>>()));
        let _ = writeln!(s, "rho_phase = {}", list(&i.rho.iter().map(|p| p.phase).collect::<Vec<_>>()));
        let _ = writeln!(s, "rho_width = {}", list(&i.rho.iter().map(|p| p.width).collect::<Vec<_>>()));
        for (name, p) in [("theta", &i.theta), ("velocity", &i.velocity)] {
            let _ = writeln!(s, "{name}_profile = {}", p.kind.name());
            let _ = writeln!(s, "{name}_mean = {}", num(p.mean));
            let _ = writeln!(s, "{name}_amplitude = {}", num(p.amplitude));
            let _ = writeln!(s, "{name}_phase = {}", num(p.phase));
            let _ = writeln!(s, "{name}_width = {}", num(p.width));
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "directory = {}", self.output.directory.display());
        let _ = writeln!(s, "every = {}", self.output.every);
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(s, "epsilons = {}", list(&self.sweep.epsilons));
        let _ = writeln!(s, "kappa_mode = {}", kappa_mode_name(self.sweep.kappa_mode));
        let _ = writeln!(s, "delta = {}", num(self.sweep.delta));
        let _ = writeln!(s, "big_m = {}", num(self.sweep.big_m));
        s
    }
}
