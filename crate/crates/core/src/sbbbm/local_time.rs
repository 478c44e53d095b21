//! Occupation-time estimators of local time at the origin.
//!
//! Local time is normalized as `L = lim (1/2eps) int 1{0 <= X < eps} d<X>`,
//! so the symmetric local time `Lhat = (L + L_-)/2` is approximated by
//! `(1/4eps) int 1{|X| < eps} d<X>`. Every process here has `d<Y> = dt`.

use crate::error::{Error, Result};

/// `dt^0.4`.
pub fn default_bandwidth(dt: f64) -> f64 {
    dt.powf(0.4)
}

fn check_bandwidth(eps: f64, dt: f64) -> Result<()> {
    if !(eps > dt.sqrt() / 100.0) {
        return Err(Error::Bandwidth { bandwidth: eps, dt });
    }
    Ok(())
}

fn occupation(y: &[f64], dt: f64, scale: f64, hit: impl Fn(f64) -> bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for &v in &y[..y.len().saturating_sub(1)] {
        if hit(v) {
            acc += dt;
        }
        out.push(acc * scale);
    }
    out
}

/// Symmetric local time at 0 from the band `|y| < eps`.
pub fn estimate_local_time(y: &[f64], dt: f64, eps: f64) -> Result<Vec<f64>> {
    check_bandwidth(eps, dt)?;
    Ok(occupation(y, dt, 1.0 / (4.0 * eps), |v| v.abs() < eps))
}

/// Right local time at 0 from the band `0 <= y < eps`.
pub fn estimate_right_local_time(y: &[f64], dt: f64, eps: f64) -> Result<Vec<f64>> {
    check_bandwidth(eps, dt)?;
    Ok(occupation(y, dt, 1.0 / (2.0 * eps), |v| (0.0..eps).contains(&v)))
}

/// Right local time at 0 from the Tanaka formula
/// `Y+(t) = Y+(0) + int 1{Y > 0} (-lambda dt + dW) + L^Y(t)`, with the
/// integral taken at left endpoints. Uses only `Y` and `W`, so on Euler
/// paths it is independent of the natural-scale local time. Unlike the
/// occupation estimators it is not pushed off by the boundary layer that the
/// Euler scheme leaves within a few `sqrt(dt)` of the origin. Not monotone on
/// a grid.
pub fn tanaka_right_local_time(y: &[f64], w: &[f64], lambda: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut drift = 0.0;
    out.push(0.0);
    for k in 0..y.len().saturating_sub(1) {
        if y[k] > 0.0 {
            drift += -lambda * dt + w[k + 1] - w[k];
        }
        out.push(y[k + 1].max(0.0) - y[0].max(0.0) - drift);
    }
    out
}

/// `max_{s <= t_k} (-a0 + lambda s - v(s))^+` on the grid: the Skorokhod
/// representation of the collision local time `L^{|Y|}` given the
/// martingale part `v = V_flat` of `|Y|`.
pub fn running_max_local_time(a0: f64, lambda: f64, v: &[f64], dt: f64) -> Vec<f64> {
    let mut m = 0.0f64;
    v.iter()
        .enumerate()
        .map(|(k, &vk)| {
            m = m.max(-a0 + lambda * k as f64 * dt - vk);
            m
        })
        .collect()
}
