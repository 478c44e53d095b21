//! Perfect reflection (`alpha` in `{0, 1}`) via the Skorokhod map.
//!
//! For `alpha = 1` the process lives on `[0, inf)`:
//! `L(t) = max_{s <= t} (-y0 + lambda s - W(s))^+` and
//! `Y = y0 - lambda t + W + L`. For `alpha = 0` everything is mirrored.
//! All local time sits on one side, so `Lhat = L / 2`.

use super::{check_grid, SbbbmParams, SbbbmPath, Scheme};
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

pub fn simulate_reflected(p: &SbbbmParams, n: usize, dt: f64, noise: NoiseStream) -> Result<SbbbmPath> {
    check_grid(n, dt)?;
    let mut rng = noise.rng();
    let sd = dt.sqrt();
    let dw: Vec<f64> = (0..n).map(|_| sd * rng.normal()).collect();
    simulate_reflected_from_increments(p, dt, &dw)
}

/// The reflected scheme driven by explicit Brownian increments.
pub fn simulate_reflected_from_increments(p: &SbbbmParams, dt: f64, dw: &[f64]) -> Result<SbbbmPath> {
    check_grid(dw.len(), dt)?;
    let side = if p.alpha == 1.0 {
        1.0
    } else if p.alpha == 0.0 {
        -1.0
    } else {
        return Err(Error::Domain(format!("reflected scheme needs alpha in {{0, 1}}, got {}", p.alpha)));
    };
    if side * p.y0 < 0.0 {
        return Err(Error::Domain(format!(
            "y0 = {} lies on the side excluded by alpha = {}",
            p.y0, p.alpha
        )));
    }
    // Work with the nonnegative process a = side * Y, driven by side * W.
    let a0 = side * p.y0;
    let n = dw.len();
    let mut y = Vec::with_capacity(n + 1);
    let mut lhat = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    let mut vflat = Vec::with_capacity(n + 1);
    let (mut wk, mut run_max) = (0.0f64, 0.0f64);
    y.push(p.y0);
    lhat.push(0.0);
    w.push(0.0);
    vflat.push(0.0);
    for (k, &d) in dw.iter().enumerate() {
        wk += d;
        let t = (k + 1) as f64 * dt;
        let free = a0 - p.lambda * t + side * wk;
        run_max = run_max.max(-free);
        let a = (free + run_max).max(0.0);
        y.push(side * a);
        lhat.push(0.5 * run_max);
        w.push(wk);
        vflat.push(side * wk);
    }
    Ok(SbbbmPath { dt, y, lhat, w, vflat, lz: None, scheme: Scheme::SkorokhodReflection })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_noise_closed_form() {
        let p = SbbbmParams::new(1.0, 1.0, 1.0).unwrap();
        let dt = 0.01;
        let path = simulate_reflected_from_increments(&p, dt, &[0.0; 300]).unwrap();
        for k in 0..=300 {
            let t = k as f64 * dt;
            assert!((2.0 * path.lhat[k] - (t - 1.0).max(0.0)).abs() < 1e-12);
            assert!((path.y[k] - (1.0 - t).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn nonnegative_from_origin() {
        let p = SbbbmParams::new(1.0, 1.0, 0.0).unwrap();
        for id in 0..20 {
            let path = simulate_reflected(&p, 1000, 1e-3, NoiseStream::new(1, id)).unwrap();
            assert!(path.y.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn mirror_symmetry() {
        let mut rng = NoiseStream::new(11, 0).rng();
        let dw: Vec<f64> = (0..500).map(|_| 0.03 * rng.normal()).collect();
        let neg: Vec<f64> = dw.iter().map(|d| -d).collect();
        let up = simulate_reflected_from_increments(&SbbbmParams::new(1.0, 1.0, 1.0).unwrap(), 1e-3, &dw).unwrap();
        let down =
            simulate_reflected_from_increments(&SbbbmParams::new(1.0, 0.0, -1.0).unwrap(), 1e-3, &neg).unwrap();
        for k in 0..=500 {
            assert_eq!(down.y[k], -up.y[k]);
            assert_eq!(down.lhat[k], up.lhat[k]);
        }
    }

    #[test]
    fn interior_alpha_rejected() {
        let p = SbbbmParams::new(1.0, 0.5, 0.0).unwrap();
        assert!(simulate_reflected(&p, 10, 0.1, NoiseStream::new(0, 0)).is_err());
    }
}
