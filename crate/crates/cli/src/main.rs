//! `sbbbm`: simulate collision systems, evaluate their laws, run suites.
//!
//! Exit codes: 0 on success, 1 when a verification suite has failing tests,
//! 2 on bad input or any other error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sbbbm::densities::{planar_density, PlanarCase, PlanarDensityQuery, SkewLaw};
use sbbbm::harness::{planar_path, run_experiment, ExperimentSpec};
use sbbbm::io::{csv_table, write_atomic};
use sbbbm::params::{classify, derive, describe};
use sbbbm::rng::DEFAULT_SEED;
use sbbbm::sbbbm::simulate;
use sbbbm::{CollisionParams, Error, NoiseStream, SbbbmParams, Scheme};

/// Default output directory when `--out` is not given.
const OUT_DIR_ENV: &str = "SBBBM_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "sbbbm", version, about = "Skew Brownian motion with bang-bang drift and skew-elastic collisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Parameter file with keys zeta1, zeta2, eta1, eta2, g, h, rho, sigma, x1, x2.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed [default: 20120611].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file, or directory for multi-file output. Falls back to
    /// $SBBBM_OUT_DIR, then to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn params(&self) -> Result<Option<CollisionParams>, Error> {
        self.config.as_deref().map(CollisionParams::from_config_file).transpose()
    }

    /// Where a single output named `name` goes; `None` means stdout.
    fn target(&self, name: &str) -> Option<PathBuf> {
        match &self.out {
            Some(p) if p.is_dir() => Some(p.join(name)),
            Some(p) => Some(p.clone()),
            None => std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(name)),
        }
    }

    /// Directory for multi-file output.
    fn dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DensityCase {
    Tdf,
    Pstar,
    Stationary,
    Joint,
    Zero,
    Bridge,
    Sigma0,
    Rho0,
    Isotropic,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived parameters and regime of a collision system.
    Params {
        #[command(flatten)]
        common: Common,
        /// Drag coefficients zeta1,zeta2,eta1,eta2 with g = h = 1, rho = 0, sigma = 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "config")]
        drag: Option<Vec<f64>>,
    },
    /// Simulate paths: the particle system with --config, else the gap alone.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y0: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// euler, exact or reflected [default: exact inside (0, 1), reflected at the boundary].
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value_t = 1)]
        n_paths: usize,
    },
    /// Evaluate a density on a grid.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        case: DensityCase,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y0: f64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Local-time level for --case joint.
        #[arg(long)]
        b: Option<f64>,
        /// start:stop:step
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Second coordinate grid for the planar cases; defaults to --grid.
        #[arg(long, allow_hyphen_values = true)]
        grid2: Option<String>,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Built-in suite.
        #[arg(long, default_value = "acceptance", conflicts_with = "spec")]
        suite: String,
        /// Experiment file.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Sample paths of the four figure scenarios as `t,x1,x2` CSV with a JSON sidecar.
    Figures {
        #[command(flatten)]
        common: Common,
        /// 1 to 4; all four when omitted.
        #[arg(long)]
        figure: Option<u32>,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Usage(String),
    TestsFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn emit(common: &Common, name: &str, body: &str) -> Outcome {
    match common.target(name) {
        Some(path) => Ok(write_atomic(&path, body.as_bytes())?),
        None => match std::io::stdout().lock().write_all(body.as_bytes()) {
            // A closed reader (`| head`) is not a failure.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(Error::Io { path: PathBuf::from("<stdout>"), source: e }.into())
            }
            _ => Ok(()),
        },
    }
}

fn table(format: Format, header: &[&str], columns: &[&[f64]]) -> String {
    match format {
        Format::Csv => csv_table(header, columns),
        Format::Json => {
            let obj: serde_json::Map<String, Value> =
                header.iter().zip(columns).map(|(h, c)| (h.to_string(), json!(c))).collect();
            format!("{}\n", Value::Object(obj))
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("grid '{spec}' is not start:stop:step"));
    let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, h] = parts[..] else { return Err(bad()) };
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(Failure::Usage(format!("grid '{spec}' has too many points")));
    }
    Ok((0..=n).map(|k| a + k as f64 * h).collect())
}

fn figure_params(fig: u32) -> Result<CollisionParams, Error> {
    let (z1, z2, e1, e2) = match fig {
        1 => (1.0, 1.0, 1.0, 1.0),
        2 => (0.0, 1.0, 1.0, 1.0),
        3 => (1.0, 2.0, 1.0, 1.0),
        4 => (0.0, 2.0, 1.0, 1.0),
        other => return Err(Error::UnknownFigure(other)),
    };
    Ok(CollisionParams::with_drag(z1, z2, e1, e2))
}

fn cmd_params(common: &Common, drag: Option<&[f64]>) -> Outcome {
    let raw = match (drag, common.params()?) {
        (Some(&[z1, z2, e1, e2]), _) => CollisionParams::with_drag(z1, z2, e1, e2),
        (Some(_), _) => return Err(Failure::Usage("--drag takes four comma-separated values".into())),
        (None, Some(p)) => p,
        (None, None) => return Err(Failure::Usage("params needs --config or --drag".into())),
    };
    let doc = describe(&raw)?;
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&doc).expect("JSON value serializes")),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            for section in ["input", "derived"] {
                if let Some(obj) = doc[section].as_object() {
                    for (k, v) in obj {
                        s.push_str(&format!("{k},{v}\n"));
                    }
                }
            }
            s.push_str(&format!("regime,{}\n", doc["regime"]["tag"].as_str().unwrap_or("")));
            s
        }
    };
    emit(common, "params.json", &body)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    common: &Common,
    alpha: Option<f64>,
    lambda: Option<f64>,
    y0: f64,
    dt: f64,
    horizon: f64,
    scheme: Option<&str>,
    n_paths: usize,
) -> Outcome {
    let n = (horizon / dt).round();
    if !(n >= 1.0) || (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Failure::Usage(format!("horizon {horizon} is not a positive multiple of dt {dt}")));
    }
    let n = n as usize;
    if n_paths == 0 {
        return Err(Failure::Usage("--n-paths must be positive".into()));
    }
    let scheme: Option<Scheme> = scheme.map(str::parse).transpose()?;
    let format = common.format.unwrap_or(Format::Csv);
    let ext = if format == Format::Csv { "csv" } else { "json" };
    let raw = common.params()?;
    let render = |id: u64| -> Result<String, Failure> {
        Ok(match &raw {
            Some(raw) => {
                let pp = planar_path(raw, scheme, n, dt, common.seed(), id)?;
                let t = pp.times();
                table(format, &["t", "x1", "x2", "r1", "r2", "lcol"], &[&t, &pp.x1, &pp.x2, &pp.r1, &pp.r2, &pp.lcol])
            }
            None => {
                let (Some(a), Some(l)) = (alpha, lambda) else {
                    return Err(Failure::Usage("simulate needs --config, or --alpha and --lambda".into()));
                };
                let p = SbbbmParams::new(l, a, y0)?;
                let sb = simulate(&p, scheme.unwrap_or(Scheme::preferred(a)), n, dt, NoiseStream::new(common.seed(), id))?;
                table(format, &["t", "y", "lhat"], &[&sb.times(), &sb.y, &sb.lhat])
            }
        })
    };
    if n_paths == 1 {
        return emit(common, &format!("path0.{ext}"), &render(0)?);
    }
    let dir = common.dir();
    for id in 0..n_paths as u64 {
        write_atomic(&dir.join(format!("path{id}.{ext}")), render(id)?.as_bytes())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_density(
    common: &Common,
    case: DensityCase,
    t: f64,
    y0: f64,
    alpha: Option<f64>,
    lambda: Option<f64>,
    b: Option<f64>,
    grid: &str,
    grid2: Option<&str>,
) -> Outcome {
    if !(t > 0.0) {
        return Err(Failure::Usage(format!("--t must be positive, got {t}")));
    }
    let xs = parse_grid(grid)?;
    let format = common.format.unwrap_or(Format::Csv);
    let planar = match case {
        DensityCase::Sigma0 => Some(PlanarCase::SigmaZero),
        DensityCase::Rho0 => Some(PlanarCase::RhoZero),
        DensityCase::Isotropic => Some(PlanarCase::Isotropic),
        _ => None,
    };
    let body = if let Some(pc) = planar {
        let params = common.params()?.ok_or_else(|| Failure::Usage("planar densities need --config".into()))?;
        let ys = match grid2 {
            Some(g) => parse_grid(g)?,
            None => xs.clone(),
        };
        let (mut c1, mut c2, mut v) = (Vec::new(), Vec::new(), Vec::new());
        for &xi1 in &xs {
            for &xi2 in &ys {
                let value = match planar_density(&PlanarDensityQuery { t, params, xi1, xi2, case: pc }) {
                    Ok(d) => d.value(),
                    // outside the support
                    Err(Error::Region(_)) => 0.0,
                    Err(e) => return Err(e.into()),
                };
                c1.push(xi1);
                c2.push(xi2);
                v.push(value);
            }
        }
        table(format, &["xi", "xi2", "value"], &[&c1, &c2, &v])
    } else {
        let (Some(a), Some(l)) = (alpha, lambda) else {
            return Err(Failure::Usage("--alpha and --lambda are required".into()));
        };
        let law = SkewLaw::new(a, l)?;
        if case == DensityCase::Joint && !b.is_some_and(|b| b > 0.0) {
            return Err(Failure::Usage("--case joint needs --b > 0".into()));
        }
        let v: Vec<f64> = xs
            .iter()
            .map(|&x| match case {
                DensityCase::Tdf => law.tdf(t, y0, x),
                DensityCase::Pstar => law.pstar(t, y0, x),
                DensityCase::Stationary => law.stationary(x),
                DensityCase::Joint => law.joint(t, y0, x, b.unwrap_or(0.0)),
                DensityCase::Zero => law.zero_localtime(t, y0, x),
                _ => law.bridge_log_derivative(t, x),
            })
            .collect();
        table(format, &["xi", "value"], &[&xs, &v])
    };
    emit(common, &format!("density.{}", if format == Format::Csv { "csv" } else { "json" }), &body)
}

fn cmd_verify(common: &Common, suite: &str, spec: Option<&Path>) -> Outcome {
    let mut exp = match spec {
        Some(p) => ExperimentSpec::from_file(p)?,
        None => ExperimentSpec::suite(suite)?,
    };
    if let Some(s) = common.seed {
        exp.seed = s;
    }
    if exp.params.is_none() && exp.params_file.is_none() {
        exp.params = common.params()?;
    }
    let report = run_experiment(&exp)?;
    for line in report.summary_lines() {
        eprintln!("{line}");
    }
    let body = match common.format.unwrap_or(Format::Json) {
        Format::Json => format!("{}\n", report.to_json()),
        Format::Csv => {
            let mut s = String::from("name,check,criterion,statistic,threshold,passed\n");
            for t in &report.tests {
                s.push_str(&format!(
                    "\"{}\",{},{},{:e},{:e},{}\n",
                    t.name.replace('"', "\"\""),
                    t.check,
                    t.criterion.map(|c| c.to_string()).unwrap_or_default(),
                    t.statistic,
                    t.threshold,
                    t.passed
                ));
            }
            s
        }
    };
    emit(common, "report.json", &body)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::TestsFailed)
    }
}

fn cmd_figures(common: &Common, figure: Option<u32>, dt: f64) -> Outcome {
    let figs = match figure {
        Some(f) => vec![f],
        None => vec![1, 2, 3, 4],
    };
    let n = (1.0 / dt).round();
    if !(n >= 1.0) || (n * dt - 1.0).abs() > 1e-9 {
        return Err(Failure::Usage(format!("dt {dt} does not divide the unit horizon")));
    }
    let dir = common.dir();
    for fig in figs {
        let raw = figure_params(fig)?;
        let d = derive(&raw)?;
        let scheme = Scheme::preferred(d.alpha);
        let pp = planar_path(&raw, Some(scheme), n as usize, dt, common.seed(), fig as u64)?;
        let csv = csv_table(&["t", "x1", "x2"], &[&pp.times(), &pp.x1, &pp.x2]);
        write_atomic(&dir.join(format!("figure{fig}.csv")), csv.as_bytes())?;
        let meta = json!({
            "figure": fig,
            "params": raw,
            "alpha": d.alpha,
            "beta": d.beta,
            "derived": d,
            "regime": classify(&d, &raw).tag,
            "scheme": scheme,
            "dt": dt,
            "horizon": 1.0,
            "seed": common.seed(),
            "stream": fig,
            "initial_positions": { "x1": raw.x1, "x2": raw.x2, "note": "not stated for the figures; both particles start at the origin" },
        });
        let body = serde_json::to_string_pretty(&meta).expect("JSON value serializes");
        write_atomic(&dir.join(format!("figure{fig}.json")), body.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Params { common, drag } => cmd_params(common, drag.as_deref()),
        Command::Simulate { common, alpha, lambda, y0, dt, horizon, scheme, n_paths } => {
            cmd_simulate(common, *alpha, *lambda, *y0, *dt, *horizon, scheme.as_deref(), *n_paths)
        }
        Command::Density { common, case, t, y0, alpha, lambda, b, grid, grid2 } => {
            cmd_density(common, *case, *t, *y0, *alpha, *lambda, *b, grid, grid2.as_deref())
        }
        Command::Verify { common, suite, spec } => cmd_verify(common, suite, spec.as_deref()),
        Command::Figures { common, figure, dt } => cmd_figures(common, *figure, *dt),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::TestsFailed) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("-4:4:0.01").unwrap();
        assert_eq!(g.len(), 801);
        assert_eq!(g[0], -4.0);
        assert!((g[800] - 4.0).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn figure_ids() {
        assert!(matches!(figure_params(5), Err(Error::UnknownFigure(5))));
        assert_eq!(figure_params(3).unwrap().zeta2, 2.0);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
