//! Simulation of the skew Brownian motion with bang-bang drift
//!
//! ```text
//! dY = -lambda sgn(Y) dt + dW + 2(2 alpha - 1) dLhat,   Y(0) = y0.
//! ```
//!
//! Three schemes are available. [`Scheme::EulerTransformed`] works in the
//! natural scale, where the process is a driftless diffusion with piecewise
//! linear dispersion. [`Scheme::ExactConditional`] steps `(|Y|, L)` from the
//! exact law of reflected Brownian motion with drift and draws the sign of
//! each new excursion. [`Scheme::SkorokhodReflection`] is the explicit
//! running-maximum solution for `alpha` in `{0, 1}`.

mod euler;
mod exact;
mod local_time;
mod reflected;
mod scale;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DerivedParams;
use crate::rng::NoiseStream;

pub use euler::{simulate_euler_from_increments, simulate_euler_transformed};
pub use exact::{exact_step, simulate_exact, ExactStep};
pub use local_time::{
    default_bandwidth, estimate_local_time, estimate_right_local_time, running_max_local_time,
    tanaka_right_local_time,
};
pub use reflected::{simulate_reflected, simulate_reflected_from_increments};
pub use scale::{make_scale, ScaleTriple};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbbbmParams {
    pub lambda: f64,
    pub alpha: f64,
    pub y0: f64,
}

impl SbbbmParams {
    pub fn new(lambda: f64, alpha: f64, y0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive and finite, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !y0.is_finite() {
            return Err(Error::Domain("y0 must be finite".into()));
        }
        Ok(Self { lambda, alpha, y0 })
    }

    pub fn from_derived(d: &DerivedParams, y0: f64) -> Result<Self> {
        Self::new(d.lambda, d.alpha, y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    EulerTransformed,
    ExactConditional,
    SkorokhodReflection,
}

impl Scheme {
    /// Exact stepping inside `(0, 1)`, the Skorokhod map at the boundary.
    pub fn preferred(alpha: f64) -> Scheme {
        if alpha == 0.0 || alpha == 1.0 {
            Scheme::SkorokhodReflection
        } else {
            Scheme::ExactConditional
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "euler-transformed" | "EulerTransformed" => Ok(Scheme::EulerTransformed),
            "exact" | "exact-conditional" | "ExactConditional" => Ok(Scheme::ExactConditional),
            "reflected" | "skorokhod" | "SkorokhodReflection" => Ok(Scheme::SkorokhodReflection),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A simulated trajectory on the uniform grid `t_k = k dt`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SbbbmPath {
    pub dt: f64,
    pub y: Vec<f64>,
    /// Symmetric local time of `Y` at the origin; half the collision local time.
    pub lhat: Vec<f64>,
    /// Cumulated driving Brownian motion `W`.
    pub w: Vec<f64>,
    /// `V_flat = int sgn(Y) dW`, the martingale part of `|Y|`.
    pub vflat: Vec<f64>,
    /// Right local time of the natural-scale process `Z` (Euler scheme only).
    pub lz: Option<Vec<f64>>,
    pub scheme: Scheme,
}

impl SbbbmPath {
    pub fn steps(&self) -> usize {
        self.y.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.y.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// Collision local time `L^{|Y|} = 2 Lhat`.
    pub fn collision_local_time(&self) -> Vec<f64> {
        self.lhat.iter().map(|l| 2.0 * l).collect()
    }

    pub fn to_csv(&self) -> String {
        crate::io::csv_table(&["t", "y", "lhat"], &[&self.times(), &self.y, &self.lhat])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

pub(crate) fn check_grid(n: usize, dt: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::GridMismatch("need at least one step".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::GridMismatch(format!("step must be positive, got {dt}")));
    }
    Ok(())
}

/// Left-continuous sign: `sgn(0) = -1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Symmetric sign: `sgn(0) = 0`.
#[inline]
pub fn sgn_sym(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `V_flat = int sgn(Y) dW` by the left-endpoint rule with `sgn(0) = 0`.
pub fn reconstruct_vflat(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..w.len().saturating_sub(1) {
        acc += sgn_sym(y[k]) * (w[k + 1] - w[k]);
        out.push(acc);
    }
    out
}

/// Simulate one path with the chosen scheme.
pub fn simulate(
    p: &SbbbmParams,
    scheme: Scheme,
    n: usize,
    dt: f64,
    noise: NoiseStream,
) -> Result<SbbbmPath> {
    match scheme {
        Scheme::EulerTransformed => simulate_euler_transformed(p, n, dt, noise),
        Scheme::ExactConditional => simulate_exact(p, n, dt, noise),
        Scheme::SkorokhodReflection => simulate_reflected(p, n, dt, noise),
    }
}

/// Simulate `n_paths` independent paths on streams `0..n_paths` of `seed`
/// and reduce each with `f`. The output is ordered by stream id, so it does
/// not depend on how rayon schedules the work.
pub fn simulate_batch<T, F>(
    p: &SbbbmParams,
    scheme: Scheme,
    n: usize,
    dt: f64,
    seed: u64,
    n_paths: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, SbbbmPath) -> T + Sync + Send,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|id| simulate(p, scheme, n, dt, NoiseStream::new(seed, id)).map(|path| f(id, path)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_is_order_independent() {
        let p = SbbbmParams::new(1.0, 0.3, 0.2).unwrap();
        let a = simulate_batch(&p, Scheme::ExactConditional, 50, 0.01, 9, 64, |_, s| s.y[50]).unwrap();
        let b: Vec<f64> = (0..64)
            .map(|id| simulate_exact(&p, 50, 0.01, NoiseStream::new(9, id)).unwrap().y[50])
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SbbbmParams::new(0.0, 0.5, 0.0).is_err());
        assert!(SbbbmParams::new(1.0, 1.5, 0.0).is_err());
        assert!(SbbbmParams::new(1.0, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = SbbbmParams::new(1.0, 0.5, 0.0).unwrap();
        let path = simulate_exact(&p, 4, 0.25, NoiseStream::new(1, 0)).unwrap();
        let csv = path.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,y,lhat"));
        assert_eq!(lines.count(), 5);
    }

    #[test]
    fn sign_conventions() {
        assert_eq!(sgn(0.0), -1.0);
        assert_eq!(sgn_sym(0.0), 0.0);
        assert_eq!(sgn(2.0), 1.0);
        assert_eq!(sgn_sym(-2.0), -1.0);
    }
}
