//! Transition densities of `(X1(t), X2(t))` in the degenerate cases
//! `sigma = 0` and `rho = 0`, and in the isotropic case `rho = sigma`.
//!
//! In the degenerate cases one particle moves deterministically until the
//! first collision, so part of the mass sits on a line and is returned as a
//! one-dimensional density along it.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::SkewLaw;
use crate::error::{Error, Result};
use crate::params::{derive, CollisionParams};
use crate::quadrature::{integrate, Estimate};
use crate::special::heat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanarCase {
    SigmaZero,
    RhoZero,
    Isotropic,
}

impl std::str::FromStr for PlanarCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma0" | "sigma-zero" | "SigmaZero" => Ok(PlanarCase::SigmaZero),
            "rho0" | "rho-zero" | "RhoZero" => Ok(PlanarCase::RhoZero),
            "isotropic" | "Isotropic" => Ok(PlanarCase::Isotropic),
            other => Err(Error::Config(format!("unknown planar case '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarDensityQuery {
    pub t: f64,
    pub params: CollisionParams,
    pub xi1: f64,
    pub xi2: f64,
    pub case: PlanarCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlanarDensity {
    /// Density with respect to `d xi1 d xi2`.
    Continuous2D(f64),
    /// Density with respect to length along the singular line: `d xi1` on
    /// `xi2 = x2 + g t` when `sigma = 0`, `d xi2` on `xi1 = x1 - h t` when
    /// `rho = 0`.
    LineMass1D(f64),
}

impl PlanarDensity {
    pub fn value(&self) -> f64 {
        match *self {
            PlanarDensity::Continuous2D(v) | PlanarDensity::LineMass1D(v) => v,
        }
    }
}

const LINE_TOL: f64 = 1e-12;

fn on_line(x: f64, line: f64) -> bool {
    (x - line).abs() <= LINE_TOL * (1.0 + line.abs())
}

/// `c / sqrt(2 pi t^3) exp(-(c - lambda t)^2 / 2t)`: first-passage shape.
fn hitting_kernel(c: f64, lambda: f64, t: f64) -> f64 {
    let d = c - lambda * t;
    c / (2.0 * std::f64::consts::PI * t * t * t).sqrt() * (-d * d / (2.0 * t)).exp()
}

pub fn planar_density(q: &PlanarDensityQuery) -> Result<PlanarDensity> {
    let raw = &q.params;
    let d = derive(raw)?;
    if !(q.t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {}", q.t)));
    }
    let law = SkewLaw::new(d.alpha, d.lambda)?;
    let (t, xi1, xi2) = (q.t, q.xi1, q.xi2);
    let (x1, x2, g, h, beta, lambda) = (raw.x1, raw.x2, raw.g, raw.h, d.beta, d.lambda);
    let y0 = x1 - x2;
    let ordered = || {
        if x1 < x2 {
            Err(Error::CaseMismatch(format!("needs x1 >= x2, got x1 = {x1}, x2 = {x2}")))
        } else {
            Ok(())
        }
    };
    match q.case {
        PlanarCase::SigmaZero => {
            if raw.sigma != 0.0 {
                return Err(Error::CaseMismatch(format!("sigma = {} is not zero", raw.sigma)));
            }
            if !(beta > 0.0) {
                return Err(Error::CaseMismatch(format!("needs beta > 0, got {beta}")));
            }
            ordered()?;
            let line = x2 + g * t;
            let k = 2.0 / beta;
            let shift = x1 + (2.0 - beta) / beta * x2 + k * g * t;
            if on_line(xi2, line) && xi1 > xi2 {
                Ok(PlanarDensity::LineMass1D(law.zero_localtime(t, y0, xi1 - line)))
            } else if xi1 >= xi2 && xi2 < line {
                let c1 = xi1 - (2.0 + beta) / beta * xi2 + shift;
                let e = (-2.0 * lambda * (xi1 - xi2)).exp();
                Ok(PlanarDensity::Continuous2D(2.0 * d.alpha * k * e * hitting_kernel(c1, lambda, t)))
            } else if xi2 >= xi1 && xi1 < line {
                let c2 = xi2 - (2.0 + beta) / beta * xi1 + shift;
                let e = (-2.0 * lambda * (xi2 - xi1)).exp();
                Ok(PlanarDensity::Continuous2D(2.0 * (1.0 - d.alpha) * k * e * hitting_kernel(c2, lambda, t)))
            } else {
                Err(Error::Region(format!(
                    "({xi1}, {xi2}) is unreachable: the laggard cannot pass x2 + g t = {line}"
                )))
            }
        }
        PlanarCase::RhoZero => {
            if raw.rho != 0.0 {
                return Err(Error::CaseMismatch(format!("rho = {} is not zero", raw.rho)));
            }
            if !(beta < 2.0) {
                return Err(Error::CaseMismatch(format!("needs beta < 2, got {beta}")));
            }
            ordered()?;
            let line = x1 - h * t;
            let k = 2.0 / (2.0 - beta);
            let lead = (4.0 - beta) / (2.0 - beta);
            let shift = -beta / (2.0 - beta) * x1 - x2 + k * h * t;
            if on_line(xi1, line) && xi2 < xi1 {
                Ok(PlanarDensity::LineMass1D(law.zero_localtime(t, y0, line - xi2)))
            } else if xi1 >= xi2 && xi1 > line {
                let c3 = lead * xi1 - xi2 + shift;
                let e = (-2.0 * lambda * (xi1 - xi2)).exp();
                Ok(PlanarDensity::Continuous2D(2.0 * d.alpha * k * e * hitting_kernel(c3, lambda, t)))
            } else if xi2 >= xi1 && xi2 > line {
                let c4 = lead * xi2 - xi1 + shift;
                let e = (-2.0 * lambda * (xi2 - xi1)).exp();
                Ok(PlanarDensity::Continuous2D(2.0 * (1.0 - d.alpha) * k * e * hitting_kernel(c4, lambda, t)))
            } else {
                Err(Error::Region(format!(
                    "({xi1}, {xi2}) is unreachable: the leader cannot fall below x1 - h t = {line}"
                )))
            }
        }
        PlanarCase::Isotropic => {
            let iso = std::f64::consts::FRAC_1_SQRT_2;
            if (raw.rho - iso).abs() > LINE_TOL || (raw.sigma - iso).abs() > LINE_TOL {
                return Err(Error::CaseMismatch(format!(
                    "isotropic case needs rho = sigma = 1/sqrt 2, got rho = {}, sigma = {}",
                    raw.rho, raw.sigma
                )));
            }
            // Y = xi1 - xi2 and the sum xi1 + xi2 is Gaussian around
            // x1 + x2 + nu t + (1 - beta) b given 2 Lhat = b; the map
            // (xi1, xi2) -> (Y, sum) has Jacobian 2.
            let y = xi1 - xi2;
            let m = xi1 + xi2 - (x1 + x2) - d.nu * t;
            let drag = 1.0 - beta;
            let hi = (lambda * t - y.abs() - y0.abs()).max(0.0) + 14.0 * t.sqrt();
            let lt = integrate(|b| law.joint(t, y0, y, b) * heat(t, m - drag * b), 0.0, hi, 1e-13)?;
            let free = law.zero_localtime(t, y0, y) * heat(t, m);
            Ok(PlanarDensity::Continuous2D(2.0 * (lt.value + free)))
        }
    }
}

/// Mass of the two parts of a degenerate planar law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarMass {
    pub continuous: Estimate,
    pub line: Estimate,
}

impl PlanarMass {
    pub fn total(&self) -> f64 {
        self.continuous.value + self.line.value
    }

    pub fn error(&self) -> f64 {
        self.continuous.error + self.line.error
    }
}

/// Total mass of the `sigma = 0` or `rho = 0` planar law at time `t`: the
/// two-dimensional part over both orderings of the particles plus the mass on
/// the singular line, by nested quadrature.
pub fn planar_mass(params: &CollisionParams, case: PlanarCase, t: f64, tol: f64) -> Result<PlanarMass> {
    if case == PlanarCase::Isotropic {
        return Err(Error::CaseMismatch("the isotropic law has no singular part".into()));
    }
    let d = derive(params)?;
    let y0 = params.x1 - params.x2;
    let reach = y0.abs() + d.lambda * t + 40.0 * t.sqrt();
    let failure = RefCell::new(None);
    let dens = |xi1: f64, xi2: f64| match planar_density(&PlanarDensityQuery { t, params: *params, xi1, xi2, case }) {
        Ok(v) => v.value(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let inner = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| match integrate(f, a, b, tol / 100.0) {
        Ok(e) => e.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let (continuous, line) = match case {
        PlanarCase::SigmaZero => {
            // The laggard stays below x2 + g t; the leader is free above it.
            let line = params.x2 + params.g * t;
            let first_leads = integrate(|v| inner(&|u| dens(u, v), v, v + reach), line - reach, line, tol)?;
            let second_leads = integrate(|u| inner(&|v| dens(u, v), u, u + reach), line - reach, line, tol)?;
            let on_line = integrate(|u| dens(u, line), line, line + reach, tol)?;
            (sum(first_leads, second_leads), on_line)
        }
        _ => {
            // The leader stays above x1 - h t; the laggard is free below it.
            let line = params.x1 - params.h * t;
            let first_leads = integrate(|u| inner(&|v| dens(u, v), u - reach, u), line, line + reach, tol)?;
            let second_leads = integrate(|v| inner(&|u| dens(u, v), v - reach, v), line, line + reach, tol)?;
            let on_line = integrate(|v| dens(line, v), line - reach, line, tol)?;
            (sum(first_leads, second_leads), on_line)
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(PlanarMass { continuous, line })
}

fn sum(a: Estimate, b: Estimate) -> Estimate {
    Estimate { value: a.value + b.value, error: a.error + b.error }
}
