//! Euler–Maruyama in the natural scale.
//!
//! `Z = p(Y)` has no drift and no local-time term, so it is stepped as
//! `Z' = Z + s(Z) dW` and mapped back with `q`. The right local time of `Z`
//! at the origin comes from the discrete Tanaka formula
//! `dL^Z = (Z')^+ - Z^+ - 1{Z > 0} dZ`, and the local times of `Y` follow
//! from the slope of `p` on the right of the origin: `L^Z = (1 - alpha) L^Y`
//! and `L^Y = 2 alpha Lhat`.

use super::{check_grid, make_scale, sgn_sym, SbbbmParams, SbbbmPath, Scheme};
use crate::error::Result;
use crate::rng::NoiseStream;

pub fn simulate_euler_transformed(
    p: &SbbbmParams,
    n: usize,
    dt: f64,
    noise: NoiseStream,
) -> Result<SbbbmPath> {
    check_grid(n, dt)?;
    let mut rng = noise.rng();
    let sd = dt.sqrt();
    let dw: Vec<f64> = (0..n).map(|_| sd * rng.normal()).collect();
    simulate_euler_from_increments(p, dt, &dw)
}

/// The Euler scheme driven by explicit Brownian increments.
pub fn simulate_euler_from_increments(p: &SbbbmParams, dt: f64, dw: &[f64]) -> Result<SbbbmPath> {
    let scale = make_scale(p)?;
    check_grid(dw.len(), dt)?;
    let n = dw.len();
    let lhat_factor = 1.0 / (2.0 * p.alpha * (1.0 - p.alpha));
    let mut y = Vec::with_capacity(n + 1);
    let mut lhat = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    let mut vflat = Vec::with_capacity(n + 1);
    let mut lz = Vec::with_capacity(n + 1);
    let mut z = scale.p(p.y0);
    let (mut yk, mut wk, mut vk, mut lk) = (p.y0, 0.0, 0.0, 0.0);
    y.push(yk);
    w.push(wk);
    vflat.push(vk);
    lz.push(lk);
    lhat.push(0.0);
    for &d in dw {
        let z_next = z + scale.s(z) * d;
        let dl = z_next.max(0.0) - z.max(0.0) - if z > 0.0 { z_next - z } else { 0.0 };
        lk += dl.max(0.0);
        vk += sgn_sym(yk) * d;
        wk += d;
        z = z_next;
        yk = scale.q(z);
        y.push(yk);
        w.push(wk);
        vflat.push(vk);
        lz.push(lk);
        lhat.push(lk * lhat_factor);
    }
    Ok(SbbbmPath { dt, y, lhat, w, vflat, lz: Some(lz), scheme: Scheme::EulerTransformed })
}
