//! The two-particle system rebuilt from an SBBBM path.
//!
//! Given the gap `Y = X1 - X2` with its symmetric local time and an
//! independent Brownian motion `Q`, the skew representations
//!
//! ```text
//! X1 = x1 + mu t + rho^2 (Y+ - y+) - sigma^2 (Y- - y-) + (1 - beta - gamma) Lhat + rho sigma Q
//! X2 = x2 + mu t - sigma^2 (Y+ - y+) + rho^2 (Y- - y-) + (1 - beta - gamma) Lhat + rho sigma Q
//! ```
//!
//! give both particles. The name Brownian motions `B1, B2` and the rank
//! Brownian motions `V1, V2` are recovered from `W` and `Q` so the particle
//! and rank equations can be checked step by step.

mod reversibility;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{CollisionParams, DerivedParams};
use crate::rng::NoiseStream;
use crate::sbbbm::{running_max_local_time, sgn, SbbbmPath};

pub use reversibility::{reversibility_check, ReversibilityReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPath {
    pub dt: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Leader `max(X1, X2)`.
    pub r1: Vec<f64>,
    /// Laggard `min(X1, X2)`.
    pub r2: Vec<f64>,
    /// Collision local time `L^{|X1 - X2|} = 2 Lhat`.
    pub lcol: Vec<f64>,
    /// The independent Brownian motion `Q`.
    pub q: Vec<f64>,
    /// Driving Brownian motion `W` of the gap, copied from the SBBBM path.
    pub w: Vec<f64>,
    /// `V_flat` of the gap, copied from the SBBBM path.
    pub vflat: Vec<f64>,
    pub params: CollisionParams,
    pub derived: DerivedParams,
}

/// Brownian motions recovered from `(W, Q)` with left-endpoint indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedNoise {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

fn gaussian_path(noise: NoiseStream, n: usize, dt: f64) -> Vec<f64> {
    let mut rng = noise.rng();
    let sd = dt.sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for _ in 0..n {
        acc += sd * rng.normal();
        out.push(acc);
    }
    out
}

/// Build `(X1, X2)` from `sb` and a fresh `Q` drawn from `noise_q`.
pub fn build_planar(
    sb: &SbbbmPath,
    d: &DerivedParams,
    raw: &CollisionParams,
    noise_q: NoiseStream,
) -> Result<PlanarPath> {
    let q = gaussian_path(noise_q, sb.steps(), sb.dt);
    build_planar_with_q(sb, d, raw, q)
}

/// Build `(X1, X2)` from `sb` and a given path of `Q` on the same grid.
pub fn build_planar_with_q(
    sb: &SbbbmPath,
    d: &DerivedParams,
    raw: &CollisionParams,
    q: Vec<f64>,
) -> Result<PlanarPath> {
    if q.len() != sb.y.len() {
        return Err(Error::GridMismatch(format!(
            "Q has {} points, the gap path {}",
            q.len(),
            sb.y.len()
        )));
    }
    let y0 = raw.x1 - raw.x2;
    if (sb.y[0] - y0).abs() > 1e-12 * (1.0 + y0.abs()) {
        return Err(Error::CaseMismatch(format!(
            "gap path starts at {} but x1 - x2 = {y0}",
            sb.y[0]
        )));
    }
    let (rho2, sig2) = (raw.rho * raw.rho, raw.sigma * raw.sigma);
    let rs = raw.rho * raw.sigma;
    let drag = 1.0 - d.beta - d.gamma;
    let (yp0, ym0) = (y0.max(0.0), (-y0).max(0.0));
    let n = sb.y.len();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * sb.dt;
        let dp = sb.y[k].max(0.0) - yp0;
        let dm = (-sb.y[k]).max(0.0) - ym0;
        let common = d.mu * t + drag * sb.lhat[k] + rs * q[k];
        x1.push(raw.x1 + common + rho2 * dp - sig2 * dm);
        x2.push(raw.x2 + common - sig2 * dp + rho2 * dm);
    }
    let r1 = x1.iter().zip(&x2).map(|(a, b)| a.max(*b)).collect();
    let r2 = x1.iter().zip(&x2).map(|(a, b)| a.min(*b)).collect();
    Ok(PlanarPath {
        dt: sb.dt,
        x1,
        x2,
        r1,
        r2,
        lcol: sb.collision_local_time(),
        q,
        w: sb.w.clone(),
        vflat: sb.vflat.clone(),
        params: *raw,
        derived: *d,
    })
}

impl PlanarPath {
    pub fn steps(&self) -> usize {
        self.x1.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.x1.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn to_csv(&self) -> String {
        crate::io::csv_table(
            &["t", "x1", "x2", "r1", "r2", "lcol"],
            &[&self.times(), &self.x1, &self.x2, &self.r1, &self.r2, &self.lcol],
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }

    /// Particle 1 strictly ahead at grid point `k`.
    #[inline]
    fn first_leads(&self, k: usize) -> bool {
        self.x1[k] > self.x2[k]
    }

    pub fn reconstruct_noise(&self) -> ReconstructedNoise {
        let (rho, sigma) = (self.params.rho, self.params.sigma);
        let n = self.x1.len();
        let mut out = ReconstructedNoise {
            b1: Vec::with_capacity(n),
            b2: Vec::with_capacity(n),
            v1: Vec::with_capacity(n),
            v2: Vec::with_capacity(n),
        };
        let (mut b1, mut b2, mut v1, mut v2) = (0.0, 0.0, 0.0, 0.0);
        out.b1.push(b1);
        out.b2.push(b2);
        out.v1.push(v1);
        out.v2.push(v2);
        for k in 0..n - 1 {
            let dw = self.w[k + 1] - self.w[k];
            let lead = self.first_leads(k);
            let du = sgn(self.x1[k] - self.x2[k]) * (self.q[k + 1] - self.q[k]);
            let dw1 = rho * dw + sigma * du;
            let dw2 = sigma * dw - rho * du;
            let (db1, db2) = if lead { (dw1, -dw2) } else { (dw2, -dw1) };
            let (dv1, dv2) = if lead { (db1, db2) } else { (db2, db1) };
            b1 += db1;
            b2 += db2;
            v1 += dv1;
            v2 += dv2;
            out.b1.push(b1);
            out.b2.push(b2);
            out.v1.push(v1);
            out.v2.push(v2);
        }
        out
    }
}

/// Residuals of the rank equations
/// `R1 = r1 - h t + rho V1 + (1 - beta/2) L` and
/// `R2 = r2 + g t + sigma V2 - (beta/2) L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResiduals {
    pub leader: Vec<f64>,
    pub laggard: Vec<f64>,
    pub leader_max: f64,
    pub laggard_max: f64,
    /// Local-time coefficients `(1 - beta/2, beta/2)` of leader and laggard.
    pub leader_lt_coef: f64,
    pub laggard_lt_coef: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn rank_paths(pp: &PlanarPath, noise: &ReconstructedNoise) -> RankResiduals {
    let (raw, d) = (&pp.params, &pp.derived);
    let (c1, c2) = (1.0 - d.beta / 2.0, d.beta / 2.0);
    let (r10, r20) = (pp.r1[0], pp.r2[0]);
    let mut leader = Vec::with_capacity(pp.r1.len());
    let mut laggard = Vec::with_capacity(pp.r1.len());
    for k in 0..pp.r1.len() {
        let t = k as f64 * pp.dt;
        leader.push(pp.r1[k] - (r10 - raw.h * t + raw.rho * noise.v1[k] + c1 * pp.lcol[k]));
        laggard.push(pp.r2[k] - (r20 + raw.g * t + raw.sigma * noise.v2[k] - c2 * pp.lcol[k]));
    }
    RankResiduals {
        leader_max: max_abs(&leader),
        laggard_max: max_abs(&laggard),
        leader,
        laggard,
        leader_lt_coef: c1,
        laggard_lt_coef: c2,
    }
}

/// Max-norm distance between the collision local time and its Skorokhod
/// representation `max_{s <= t} (-|y| + lambda s - V_flat(s))^+`.
pub fn collision_local_time_check(pp: &PlanarPath, vflat: &[f64]) -> f64 {
    let y0 = (pp.x1[0] - pp.x2[0]).abs();
    let sk = running_max_local_time(y0, pp.derived.lambda, vflat, pp.dt);
    pp.lcol.iter().zip(&sk).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Residuals of the particle equations in the single-local-time form
/// `dX_j = (rank drift) dt + (rank dispersion) dB_j + kappa_j dL^{|X1 - X2|}`
/// and the realized covariations of the reconstructed `(B1, B2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeReport {
    pub residual1_max: f64,
    pub residual2_max: f64,
    pub qv_b1: f64,
    pub qv_b2: f64,
    pub cov_b1_b2: f64,
    pub horizon: f64,
    /// Right and left local times of `X1 - X2` at the horizon,
    /// `alpha L` and `(1 - alpha) L`.
    pub right_local_time: f64,
    pub left_local_time: f64,
}

pub fn verify_sde_residuals(pp: &PlanarPath, noise: &ReconstructedNoise) -> SdeReport {
    let (raw, d) = (&pp.params, &pp.derived);
    let (g, h, rho, sigma) = (raw.g, raw.h, raw.rho, raw.sigma);
    let dt = pp.dt;
    let (mut e1, mut e2, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut qv1, mut qv2, mut cov) = (0.0, 0.0, 0.0);
    for k in 0..pp.steps() {
        let db1 = noise.b1[k + 1] - noise.b1[k];
        let db2 = noise.b2[k + 1] - noise.b2[k];
        let dl = pp.lcol[k + 1] - pp.lcol[k];
        let (f1, f2) = if pp.first_leads(k) {
            (-h * dt + rho * db1, g * dt + sigma * db2)
        } else {
            (g * dt + sigma * db1, -h * dt + rho * db2)
        };
        e1 += pp.x1[k + 1] - pp.x1[k] - f1 - d.kappa1 * dl;
        e2 += pp.x2[k + 1] - pp.x2[k] - f2 - d.kappa2 * dl;
        m1 = m1.max(e1.abs());
        m2 = m2.max(e2.abs());
        qv1 += db1 * db1;
        qv2 += db2 * db2;
        cov += db1 * db2;
    }
    let l = *pp.lcol.last().expect("path is nonempty");
    SdeReport {
        residual1_max: m1,
        residual2_max: m2,
        qv_b1: qv1,
        qv_b2: qv2,
        cov_b1_b2: cov,
        horizon: pp.steps() as f64 * dt,
        right_local_time: d.alpha * l,
        left_local_time: (1.0 - d.alpha) * l,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive;
    use crate::sbbbm::{simulate_exact, simulate_reflected, SbbbmParams};

    fn setup(raw: CollisionParams, n: usize, dt: f64, id: u64) -> PlanarPath {
        let d = derive(&raw).unwrap();
        let sp = SbbbmParams::from_derived(&d, raw.x1 - raw.x2).unwrap();
        let sb = if d.alpha == 0.0 || d.alpha == 1.0 {
            simulate_reflected(&sp, n, dt, NoiseStream::new(1, id)).unwrap()
        } else {
            simulate_exact(&sp, n, dt, NoiseStream::new(1, id)).unwrap()
        };
        build_planar(&sb, &d, &raw, NoiseStream::new(1, id).substream(1)).unwrap()
    }

    #[test]
    fn difference_is_the_gap() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let raw = CollisionParams { rho: s, sigma: s, x1: 0.3, x2: -0.2, ..CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0) };
        let d = derive(&raw).unwrap();
        let sp = SbbbmParams::from_derived(&d, 0.5).unwrap();
        let sb = simulate_exact(&sp, 1000, 1e-3, NoiseStream::new(3, 0)).unwrap();
        let pp = build_planar(&sb, &d, &raw, NoiseStream::new(3, 0).substream(1)).unwrap();
        for k in 0..=1000 {
            let diff = pp.x1[k] - pp.x2[k];
            assert!((diff - sb.y[k]).abs() <= 1e-12 * (1.0 + pp.x1[k].abs() + pp.x2[k].abs()));
            assert_eq!(pp.r1[k], pp.x1[k].max(pp.x2[k]));
            assert_eq!(pp.lcol[k], 2.0 * sb.lhat[k]);
        }
    }

    #[test]
    fn rho_zero_display() {
        let raw = CollisionParams { x1: 0.2, x2: 0.0, ..CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0) };
        let d = derive(&raw).unwrap();
        let sp = SbbbmParams::from_derived(&d, 0.2).unwrap();
        let sb = simulate_exact(&sp, 500, 1e-3, NoiseStream::new(4, 0)).unwrap();
        let pp = build_planar(&sb, &d, &raw, NoiseStream::new(4, 0).substream(1)).unwrap();
        for k in 0..=500 {
            let t = k as f64 * 1e-3;
            let expect = raw.x1 - raw.h * t - (-sb.y[k]).max(0.0) + (2.0 - d.beta) * sb.lhat[k];
            assert!((pp.x1[k] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn perfect_reflection_keeps_order() {
        let raw = CollisionParams { x1: 0.1, x2: 0.0, ..CollisionParams::with_drag(0.0, 2.0, 1.0, 1.0) };
        for id in 0..10 {
            let pp = setup(raw, 2000, 1e-4, id);
            assert!(pp.x1.iter().zip(&pp.x2).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn exact_scheme_skorokhod_gap_is_one_sided() {
        // The sampler sees maxima inside each step, the grid map does not.
        let raw = CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0);
        let pp = setup(raw, 1000, 1e-3, 5);
        let sk = running_max_local_time(0.0, pp.derived.lambda, &pp.vflat, pp.dt);
        assert!(pp.lcol.iter().zip(&sk).all(|(l, s)| l + 1e-12 >= *s));
        let err = collision_local_time_check(&pp, &pp.vflat);
        assert!(err < 5.0 * 1e-3f64.powf(0.4), "{err}");
    }

    #[test]
    fn pure_drift_skorokhod() {
        let raw = CollisionParams { x1: 0.5, x2: 0.0, ..CollisionParams::with_drag(0.0, 2.0, 1.0, 1.0) };
        let d = derive(&raw).unwrap();
        let sp = SbbbmParams::from_derived(&d, 0.5).unwrap();
        let sb = crate::sbbbm::simulate_reflected_from_increments(&sp, 0.01, &[0.0; 100]).unwrap();
        let pp = build_planar_with_q(&sb, &d, &raw, vec![0.0; 101]).unwrap();
        assert!(collision_local_time_check(&pp, &sb.vflat) < 1e-12);
        for k in 0..=100 {
            let t = k as f64 * 0.01;
            assert!((pp.lcol[k] - (d.lambda * t - 0.5).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn frictionless_has_no_local_time_terms() {
        let raw = CollisionParams::with_drag(1.0, 1.0, 1.0, 1.0);
        let d = derive(&raw).unwrap();
        assert_eq!(d.kappa1, 0.0);
        assert_eq!(d.kappa2, 0.0);
        let pp = setup(raw, 10_000, 1e-4, 2);
        let noise = pp.reconstruct_noise();
        let rep = verify_sde_residuals(&pp, &noise);
        assert!(rep.residual1_max < 0.2, "{rep:?}");
    }

    #[test]
    fn grid_mismatch_rejected() {
        let raw = CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0);
        let d = derive(&raw).unwrap();
        let sp = SbbbmParams::from_derived(&d, 0.0).unwrap();
        let sb = simulate_exact(&sp, 10, 0.1, NoiseStream::new(0, 0)).unwrap();
        assert!(matches!(build_planar_with_q(&sb, &d, &raw, vec![0.0; 5]), Err(Error::GridMismatch(_))));
    }
}
