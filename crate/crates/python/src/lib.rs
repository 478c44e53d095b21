//! Python bindings: parameters, transition laws, path simulation and the
//! verification harness.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sbbbm::densities::{planar_density as planar_density_rs, PlanarCase, PlanarDensity, PlanarDensityQuery, SkewLaw};
use sbbbm::harness::{planar_path, run_experiment, ExperimentSpec};
use sbbbm::params::{classify, derive, describe};
use sbbbm::rng::DEFAULT_SEED;
use sbbbm::sbbbm::simulate;
use sbbbm::{CollisionParams, Error, NoiseStream, SbbbmParams, Scheme};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn scheme(name: Option<&str>, alpha: f64) -> PyResult<Scheme> {
    match name {
        Some(s) => s.parse().map_err(err),
        None => Ok(Scheme::preferred(alpha)),
    }
}

/// Raw inputs of a two-particle collision system.
#[pyclass(name = "CollisionParams", module = "sbbbm", frozen, from_py_object)]
#[derive(Clone)]
struct PyCollisionParams {
    inner: CollisionParams,
}

#[pymethods]
impl PyCollisionParams {
    #[new]
    #[pyo3(signature = (zeta1, zeta2, eta1, eta2, g = 1.0, h = 1.0, rho = 0.0, sigma = 1.0, x1 = 0.0, x2 = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(zeta1: f64, zeta2: f64, eta1: f64, eta2: f64, g: f64, h: f64, rho: f64, sigma: f64, x1: f64, x2: f64) -> Self {
        Self { inner: CollisionParams { zeta1, zeta2, eta1, eta2, g, h, rho, sigma, x1, x2 } }
    }

    /// Read a `key = value` parameter file.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        CollisionParams::from_config_file(&path).map(|inner| Self { inner }).map_err(err)
    }

    /// Derived quantities: alpha, beta, lambda, kappa1, kappa2, ...
    fn derive(&self) -> PyResult<BTreeMap<&'static str, f64>> {
        let d = derive(&self.inner).map_err(err)?;
        Ok(BTreeMap::from([
            ("alpha", d.alpha),
            ("beta", d.beta),
            ("zeta", d.zeta),
            ("eta", d.eta),
            ("lambda", d.lambda),
            ("nu", d.nu),
            ("gamma", d.gamma),
            ("delta", d.delta),
            ("mu", d.mu),
            ("kappa1", d.kappa1),
            ("kappa2", d.kappa2),
        ]))
    }

    /// Name of the regime tag, e.g. `"PerfectReflectionFirst"`.
    fn regime(&self) -> PyResult<String> {
        let d = derive(&self.inner).map_err(err)?;
        Ok(format!("{:?}", classify(&d, &self.inner).tag))
    }

    /// The JSON document printed by `sbbbm params`.
    fn describe(&self) -> PyResult<String> {
        describe(&self.inner).map(|v| v.to_string()).map_err(err)
    }

    #[getter]
    fn zeta1(&self) -> f64 {
        self.inner.zeta1
    }
    #[getter]
    fn zeta2(&self) -> f64 {
        self.inner.zeta2
    }
    #[getter]
    fn eta1(&self) -> f64 {
        self.inner.eta1
    }
    #[getter]
    fn eta2(&self) -> f64 {
        self.inner.eta2
    }
    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }
    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn x1(&self) -> f64 {
        self.inner.x1
    }
    #[getter]
    fn x2(&self) -> f64 {
        self.inner.x2
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "CollisionParams(zeta1={}, zeta2={}, eta1={}, eta2={}, g={}, h={}, rho={}, sigma={}, x1={}, x2={})",
            p.zeta1, p.zeta2, p.eta1, p.eta2, p.g, p.h, p.rho, p.sigma, p.x1, p.x2
        )
    }
}

/// Transition laws of the gap with skewness `alpha` and drift `lam`.
#[pyclass(name = "SkewLaw", module = "sbbbm", frozen)]
struct PySkewLaw {
    inner: SkewLaw,
}

#[pymethods]
impl PySkewLaw {
    #[new]
    fn new(alpha: f64, lam: f64) -> PyResult<Self> {
        SkewLaw::new(alpha, lam).map(|inner| Self { inner }).map_err(err)
    }

    fn tdf(&self, t: f64, y0: f64, xi: f64) -> f64 {
        self.inner.tdf(t, y0, xi)
    }

    fn pstar(&self, t: f64, y0: f64, xi: f64) -> f64 {
        self.inner.pstar(t, y0, xi)
    }

    fn joint(&self, t: f64, y0: f64, xi: f64, b: f64) -> f64 {
        self.inner.joint(t, y0, xi, b)
    }

    fn zero_localtime(&self, t: f64, y0: f64, xi: f64) -> f64 {
        self.inner.zero_localtime(t, y0, xi)
    }

    fn stationary(&self, xi: f64) -> f64 {
        self.inner.stationary(xi)
    }

    fn stationary_cdf(&self, x: f64) -> f64 {
        self.inner.stationary_cdf(x)
    }

    fn bridge_log_derivative(&self, t: f64, xi: f64) -> f64 {
        self.inner.bridge_log_derivative(t, xi)
    }

    /// `(value, error)` of the mass of `tdf(t, y0, .)` over its window.
    #[pyo3(signature = (t, y0, tol = 1e-10))]
    fn tdf_mass(&self, t: f64, y0: f64, tol: f64) -> PyResult<(f64, f64)> {
        let (lo, hi) = self.inner.window(t, y0);
        let m = self.inner.tdf_mass(t, y0, lo, hi, tol).map_err(err)?;
        Ok((m.value, m.error))
    }

    fn __repr__(&self) -> String {
        format!("SkewLaw(alpha={}, lam={})", self.inner.alpha, self.inner.lambda)
    }
}

/// One path of the gap on `n` steps of size `dt`: columns `t, y, lhat, w`.
#[pyfunction]
#[pyo3(signature = (alpha, lam, n, dt, y0 = 0.0, seed = DEFAULT_SEED, stream = 0, scheme_name = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_gap(
    alpha: f64,
    lam: f64,
    n: usize,
    dt: f64,
    y0: f64,
    seed: u64,
    stream: u64,
    scheme_name: Option<&str>,
) -> PyResult<BTreeMap<&'static str, Vec<f64>>> {
    let p = SbbbmParams::new(lam, alpha, y0).map_err(err)?;
    let sb = simulate(&p, scheme(scheme_name, alpha)?, n, dt, NoiseStream::new(seed, stream)).map_err(err)?;
    Ok(BTreeMap::from([("t", sb.times()), ("y", sb.y), ("lhat", sb.lhat), ("w", sb.w)]))
}

/// One path of the particle system: columns `t, x1, x2, r1, r2, lcol`.
#[pyfunction]
#[pyo3(signature = (params, n, dt, seed = DEFAULT_SEED, stream = 0, scheme_name = None))]
fn simulate_planar(
    params: &PyCollisionParams,
    n: usize,
    dt: f64,
    seed: u64,
    stream: u64,
    scheme_name: Option<&str>,
) -> PyResult<BTreeMap<&'static str, Vec<f64>>> {
    let s = scheme_name.map(str::parse::<Scheme>).transpose().map_err(err)?;
    let pp = planar_path(&params.inner, s, n, dt, seed, stream).map_err(err)?;
    Ok(BTreeMap::from([
        ("t", pp.times()),
        ("x1", pp.x1),
        ("x2", pp.x2),
        ("r1", pp.r1),
        ("r2", pp.r2),
        ("lcol", pp.lcol),
    ]))
}

/// `(kind, value)` of the planar law at `(xi1, xi2)`; kind is `"continuous"`
/// or `"line"`. `case` is `sigma0`, `rho0` or `isotropic`.
#[pyfunction]
fn planar_density(params: &PyCollisionParams, case: &str, t: f64, xi1: f64, xi2: f64) -> PyResult<(&'static str, f64)> {
    let case: PlanarCase = case.parse().map_err(err)?;
    match planar_density_rs(&PlanarDensityQuery { t, params: params.inner, xi1, xi2, case }).map_err(err)? {
        PlanarDensity::Continuous2D(v) => Ok(("continuous", v)),
        PlanarDensity::LineMass1D(v) => Ok(("line", v)),
    }
}

/// Run a built-in suite (`"acceptance"`) or an experiment given as TOML text;
/// returns the JSON report.
#[pyfunction]
#[pyo3(signature = (suite = None, spec_toml = None))]
fn run_suite(py: Python<'_>, suite: Option<&str>, spec_toml: Option<&str>) -> PyResult<String> {
    let spec = match (suite, spec_toml) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give either suite or spec_toml")),
        (_, Some(text)) => ExperimentSpec::from_toml_str(text).map_err(err)?,
        (name, None) => ExperimentSpec::suite(name.unwrap_or("acceptance")).map_err(err)?,
    };
    let report = py.detach(|| run_experiment(&spec)).map_err(err)?;
    Ok(report.to_json())
}

#[pymodule]
#[pyo3(name = "sbbbm")]
fn sbbbm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    m.add_class::<PyCollisionParams>()?;
    m.add_class::<PySkewLaw>()?;
    m.add_function(wrap_pyfunction!(simulate_gap, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_planar, m)?)?;
    m.add_function(wrap_pyfunction!(planar_density, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
