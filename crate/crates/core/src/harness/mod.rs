//! Statistical validation: Monte Carlo checks against the closed-form laws,
//! quadrature oracles and convergence studies, collected into JSON reports.
//!
//! An experiment is a TOML document naming registered checks, each with a
//! threshold and optional arguments:
//!
//! ```toml
//! name = "smoke"
//! seed = 7
//!
//! [[tests]]
//! name = "marginal"
//! check = "ks_marginal"
//! tolerance = 0.012
//! args = { alpha = 0.6666666666666666, n_paths = 20000 }
//! ```
//!
//! A test passes when its statistic is below the threshold (or above it, for
//! p-values) and every side condition the check reports holds. The threshold
//! is `tolerance * dt^tolerance_dt_power`.

mod checks;
pub mod stats;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::params::{derive, CollisionParams};
use crate::planar::{build_planar, PlanarPath};
use crate::rng::{NoiseStream, DEFAULT_SEED};
use crate::sbbbm::{simulate, SbbbmParams, Scheme};

pub use checks::{check_names, convergence_study, ConvergenceRow, ConvergenceTable};

const ACCEPTANCE: &str = include_str!("acceptance.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Pass when `statistic < threshold`.
    #[default]
    Below,
    /// Pass when `statistic > threshold`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub name: String,
    pub check: String,
    pub tolerance: f64,
    #[serde(default)]
    pub tolerance_dt_power: f64,
    #[serde(default)]
    pub direction: Direction,
    /// Acceptance-criterion number this test belongs to, if any.
    #[serde(default)]
    pub criterion: Option<u32>,
    #[serde(default)]
    pub args: toml::Table,
    /// Write the check's table, if it produces one, to this CSV file.
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-4
}

fn default_horizon() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_budget() -> f64 {
    4096.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: Option<CollisionParams>,
    /// Parameter file, relative to the experiment file when loaded from disk.
    #[serde(default)]
    pub params_file: Option<PathBuf>,
    /// `euler`, `exact` or `reflected`; the default follows `alpha`.
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub n_paths: usize,
    /// Directory for per-path CSV files of the planar system.
    #[serde(default)]
    pub emit_paths: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: f64,
    #[serde(default)]
    pub tests: Vec<TestSpec>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let mut spec = Self::from_toml_str(&text)?;
        if let (Some(rel), Some(dir)) = (&spec.params_file, path.parent()) {
            if rel.is_relative() {
                spec.params_file = Some(dir.join(rel));
            }
        }
        Ok(spec)
    }

    /// The acceptance suite shipped with the crate.
    pub fn acceptance() -> Self {
        Self::from_toml_str(ACCEPTANCE).expect("bundled acceptance suite parses")
    }

    /// A built-in suite by name.
    pub fn suite(name: &str) -> Result<Self> {
        match name {
            "acceptance" => Ok(Self::acceptance()),
            other => Err(Error::Config(format!("unknown suite '{other}'"))),
        }
    }

    pub fn resolved_params(&self) -> Result<Option<CollisionParams>> {
        match (&self.params, &self.params_file) {
            (Some(_), Some(_)) => Err(Error::Config("give either params or params_file, not both".into())),
            (Some(p), None) => Ok(Some(*p)),
            (None, Some(f)) => CollisionParams::from_config_file(f).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("dt and horizon must be positive, got {} and {}", self.dt, self.horizon)));
        }
        if let Some(s) = &self.scheme {
            s.parse::<Scheme>().map_err(|e| Error::Config(e.to_string()))?;
        }
        let known = check_names();
        for t in &self.tests {
            if !known.contains(&t.check.as_str()) {
                return Err(Error::Config(format!("test '{}': unknown check '{}'", t.name, t.check)));
            }
            if !(t.tolerance > 0.0) {
                return Err(Error::Config(format!("test '{}': tolerance must be positive", t.name)));
            }
        }
        if self.emit_paths.is_some() && self.resolved_params()?.is_none() {
            return Err(Error::Config("emit_paths needs params".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub check: String,
    pub criterion: Option<u32>,
    pub statistic: f64,
    pub threshold: f64,
    pub direction: Direction,
    pub passed: bool,
    pub samples: usize,
    pub wall_time_s: f64,
    pub conditions: Vec<Condition>,
    pub detail: serde_json::Value,
    pub csv: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub version: String,
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub passed: bool,
    pub wall_time_s: f64,
    pub emitted: Vec<PathBuf>,
    pub tests: Vec<TestResult>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    /// One line per test: name, verdict, statistic and threshold.
    pub fn summary_lines(&self) -> Vec<String> {
        self.tests
            .iter()
            .map(|t| {
                let op = match t.direction {
                    Direction::Below => "<",
                    Direction::Above => ">",
                };
                let mut line = format!(
                    "{:<28} {}  {} {op} {}",
                    t.name,
                    if t.passed { "PASS" } else { "FAIL" },
                    fmt_short(t.statistic),
                    fmt_short(t.threshold)
                );
                for c in t.conditions.iter().filter(|c| !c.passed) {
                    line.push_str(&format!("  [failed: {}]", c.name));
                }
                if let Some(e) = &t.error {
                    line.push_str(&format!("  [error: {e}]"));
                }
                line
            })
            .collect()
    }
}

fn fmt_short(x: f64) -> String {
    if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

/// What a check hands back to the runner.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub statistic: f64,
    pub samples: usize,
    pub conditions: Vec<Condition>,
    pub detail: serde_json::Value,
    /// CSV rendering of the check's table, if it has one.
    pub table: Option<String>,
}

impl Outcome {
    pub fn new(statistic: f64, samples: usize, detail: serde_json::Value) -> Self {
        Self { statistic, samples, conditions: Vec::new(), detail, table: None }
    }

    pub fn require(mut self, name: &str, passed: bool) -> Self {
        self.conditions.push(Condition { name: name.into(), passed });
        self
    }

    pub fn with_table(mut self, csv: String) -> Self {
        self.table = Some(csv);
        self
    }
}

/// Arguments of one test with fallbacks to the experiment-level values.
pub struct CheckContext<'a> {
    pub spec: &'a ExperimentSpec,
    pub test: &'a TestSpec,
    pub params: Option<CollisionParams>,
    /// Master seed mixed with the test name.
    pub seed: u64,
}

impl CheckContext<'_> {
    fn value(&self, key: &str) -> Option<&toml::Value> {
        self.test.args.get(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.value(key) {
            None => Ok(default),
            Some(toml::Value::Float(x)) => Ok(*x),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(v) => Err(self.bad(key, v)),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.value(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(toml::Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
            Some(v) => Err(self.bad(key, v)),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.value(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    other => Err(self.bad(key, other)),
                })
                .collect(),
            Some(v) => Err(self.bad(key, v)),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> Result<String> {
        match self.value(key) {
            None => Ok(default.into()),
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(self.bad(key, v)),
        }
    }

    /// `args.params` if present, else the experiment's parameters, else `default`.
    pub fn params_or(&self, default: CollisionParams) -> Result<CollisionParams> {
        match self.value("params") {
            Some(v) => v.clone().try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string())),
            None => Ok(self.params.unwrap_or(default)),
        }
    }

    /// Refuse `n_paths` paths of `steps` steps beyond the memory budget.
    pub fn budget(&self, n_paths: usize, steps: usize) -> Result<()> {
        check_memory(self.spec, n_paths, steps)
    }

    pub fn value_is_true(&self, key: &str) -> bool {
        matches!(self.value(key), Some(toml::Value::Boolean(true)))
    }

    pub fn dt(&self) -> Result<f64> {
        self.f64_or("dt", self.spec.dt)
    }

    pub fn horizon(&self) -> Result<f64> {
        self.f64_or("horizon", self.spec.horizon)
    }

    /// Path count; zero is a configuration error for simulation checks.
    pub fn n_paths(&self) -> Result<usize> {
        let n = self.usize_or("n_paths", self.spec.n_paths)?;
        if n == 0 {
            return Err(Error::Config(format!("test '{}' needs n_paths > 0", self.test.name)));
        }
        Ok(n)
    }

    pub fn scheme_or(&self, alpha: f64) -> Result<Scheme> {
        match self.value("scheme") {
            Some(_) => self.str_or("scheme", "")?.parse(),
            None => match &self.spec.scheme {
                Some(s) => s.parse(),
                None => Ok(Scheme::preferred(alpha)),
            },
        }
    }

    fn bad(&self, key: &str, v: &toml::Value) -> Error {
        Error::Config(format!("test '{}': argument '{key}' has unexpected value {v}", self.test.name))
    }
}

/// FNV-1a, used to give every test its own stream family.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn check_memory(spec: &ExperimentSpec, n_paths: usize, steps: usize) -> Result<()> {
    let mb = n_paths as f64 * (steps + 1) as f64 * 8.0 / (1024.0 * 1024.0);
    if mb > spec.memory_budget_mb {
        return Err(Error::Resource(format!(
            "{n_paths} paths of {} points need {mb:.0} MB, budget is {} MB",
            steps + 1,
            spec.memory_budget_mb
        )));
    }
    Ok(())
}

/// Simulate one planar path: the gap with the scheme given (or preferred for
/// `alpha`) on stream `(seed, id)`, `Q` on its first substream.
pub fn planar_path(
    raw: &CollisionParams,
    scheme: Option<Scheme>,
    n: usize,
    dt: f64,
    seed: u64,
    id: u64,
) -> Result<PlanarPath> {
    let d = derive(raw)?;
    let sp = SbbbmParams::from_derived(&d, raw.x1 - raw.x2)?;
    let noise = NoiseStream::new(seed, id);
    let sb = simulate(&sp, scheme.unwrap_or(Scheme::preferred(d.alpha)), n, dt, noise)?;
    build_planar(&sb, &d, raw, noise.substream(1))
}

fn emit(spec: &ExperimentSpec, dir: &Path, raw: &CollisionParams) -> Result<Vec<PathBuf>> {
    let scheme = spec.scheme.as_deref().map(str::parse).transpose()?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    let mut out = Vec::with_capacity(spec.n_paths);
    for id in 0..spec.n_paths {
        let pp = planar_path(raw, scheme, spec.steps(), spec.dt, spec.seed, id as u64)?;
        let path = dir.join(format!("{}_path{id}.csv", spec.name));
        pp.write_csv(&path)?;
        out.push(path);
    }
    Ok(out)
}

/// Run every test of `spec`. A failing or erroring check becomes a report
/// entry; only an invalid experiment or an exhausted budget is an `Err`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let params = spec.resolved_params()?;
    check_memory(spec, spec.n_paths, spec.steps())?;
    let start = Instant::now();
    let emitted = match (&spec.emit_paths, &params) {
        (Some(dir), Some(raw)) if spec.n_paths > 0 => emit(spec, dir, raw)?,
        _ => Vec::new(),
    };
    let mut tests = Vec::with_capacity(spec.tests.len());
    for test in &spec.tests {
        let ctx = CheckContext { spec, test, params, seed: spec.seed ^ name_hash(&test.name) };
        let t0 = Instant::now();
        let dt = ctx.dt().unwrap_or(spec.dt);
        let threshold = test.tolerance * dt.powf(test.tolerance_dt_power);
        let outcome = checks::run(&test.check, &ctx);
        let mut r = TestResult {
            name: test.name.clone(),
            check: test.check.clone(),
            criterion: test.criterion,
            statistic: f64::NAN,
            threshold,
            direction: test.direction,
            passed: false,
            samples: 0,
            wall_time_s: 0.0,
            conditions: Vec::new(),
            detail: serde_json::Value::Null,
            csv: None,
            error: None,
        };
        match outcome {
            Ok(o) => {
                let ok = match test.direction {
                    Direction::Below => o.statistic < threshold,
                    Direction::Above => o.statistic > threshold,
                };
                r.passed = ok && o.conditions.iter().all(|c| c.passed);
                r.statistic = o.statistic;
                r.samples = o.samples;
                r.conditions = o.conditions;
                r.detail = o.detail;
                if let (Some(path), Some(table)) = (&test.csv, &o.table) {
                    match write_atomic(path, table.as_bytes()) {
                        Ok(()) => r.csv = Some(path.clone()),
                        Err(e) => {
                            r.passed = false;
                            r.error = Some(e.to_string());
                        }
                    }
                }
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r.wall_time_s = t0.elapsed().as_secs_f64();
        tests.push(r);
    }
    Ok(Report {
        suite: spec.name.clone(),
        seed: spec.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        dt: spec.dt,
        horizon: spec.horizon,
        n_paths: spec.n_paths,
        passed: tests.iter().all(|t| t.passed),
        wall_time_s: start.elapsed().as_secs_f64(),
        emitted,
        tests,
    })
}
