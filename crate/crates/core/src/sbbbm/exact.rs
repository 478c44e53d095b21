//! Exact conditional stepping.
//!
//! `|Y|` is Brownian motion with drift `-lambda` reflected at the origin:
//! `|Y| = |y0| - lambda t + V_flat + L`, with `L = L^{|Y|} = 2 Lhat` given by
//! the Skorokhod map. Over one step from `|Y| = a`, write
//! `B(s) = lambda s - dV_flat(s)`, a Brownian motion with drift `+lambda`.
//! Then `dL = (max B - a)^+` and `|Y'| = a - B(dt) + dL`. The pair
//! `(B(dt), max B)` is sampled exactly: the endpoint is Gaussian and, given
//! the endpoint, the maximum of the Brownian bridge has the closed-form
//! inverse CDF `M = (G + sqrt(G^2 - 2 dt ln U)) / 2`.
//!
//! Excursions of `Y` away from the origin are positive with probability
//! `alpha` independently of `|Y|`, so after any step that reaches the origin
//! the sign of `Y'` is a fresh Bernoulli(`alpha`) draw; otherwise the sign
//! is kept.
//!
//! The driving noise is recovered as `W = int sgn(Y) dV_flat` with the sign
//! frozen at the left endpoint.

use super::{check_grid, sgn, SbbbmParams, SbbbmPath, Scheme};
use crate::error::Result;
use crate::rng::{NoiseStream, PathRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactStep {
    pub y: f64,
    /// Increment of the symmetric local time `Lhat`.
    pub dlhat: f64,
    /// Increment of `V_flat = int sgn(Y) dW` over the step.
    pub dvflat: f64,
}

/// One exact step of length `dt` from `y`.
#[inline]
pub fn exact_step(y: f64, lambda: f64, alpha: f64, dt: f64, rng: &mut PathRng) -> ExactStep {
    let a = y.abs();
    let g = lambda * dt + dt.sqrt() * rng.normal();
    let m = 0.5 * (g + (g * g - 2.0 * dt * rng.open_uniform().ln()).sqrt());
    let dl = (m - a).max(0.0);
    let mag = (a - g + dl).max(0.0);
    let positive = if dl > 0.0 || a == 0.0 { rng.bernoulli(alpha) } else { y > 0.0 };
    ExactStep {
        y: if positive { mag } else { -mag },
        dlhat: 0.5 * dl,
        dvflat: lambda * dt - g,
    }
}

pub fn simulate_exact(p: &SbbbmParams, n: usize, dt: f64, noise: NoiseStream) -> Result<SbbbmPath> {
    check_grid(n, dt)?;
    let mut rng = noise.rng();
    let mut y = Vec::with_capacity(n + 1);
    let mut lhat = Vec::with_capacity(n + 1);
    let mut w = Vec::with_capacity(n + 1);
    let mut vflat = Vec::with_capacity(n + 1);
    let (mut yk, mut lk, mut wk, mut vk) = (p.y0, 0.0, 0.0, 0.0);
    y.push(yk);
    lhat.push(lk);
    w.push(wk);
    vflat.push(vk);
    for _ in 0..n {
        let st = exact_step(yk, p.lambda, p.alpha, dt, &mut rng);
        // dW = sgn(Y) dV_flat. The V_flat increment is an exact N(0, dt)
        // draw independent of the past, so W is an exact Brownian motion
        // on the grid.
        wk += sgn(yk) * st.dvflat;
        vk += st.dvflat;
        lk += st.dlhat;
        yk = st.y;
        y.push(yk);
        lhat.push(lk);
        w.push(wk);
        vflat.push(vk);
    }
    Ok(SbbbmPath { dt, y, lhat, w, vflat, lz: None, scheme: Scheme::ExactConditional })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_one_never_negative() {
        let p = SbbbmParams::new(1.0, 1.0, 0.0).unwrap();
        for id in 0..50 {
            let path = simulate_exact(&p, 500, 1e-3, NoiseStream::new(4, id)).unwrap();
            assert!(path.y.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn gap_identity_holds_pathwise() {
        // |Y| = |y0| - lambda t + V_flat + 2 Lhat exactly on the grid.
        let p = SbbbmParams::new(1.3, 0.35, -0.4).unwrap();
        let path = simulate_exact(&p, 2000, 1e-3, NoiseStream::new(8, 0)).unwrap();
        for k in 0..=path.steps() {
            let t = k as f64 * path.dt;
            let rhs = p.y0.abs() - p.lambda * t + path.vflat[k] + 2.0 * path.lhat[k];
            assert!((path.y[k].abs() - rhs).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn local_time_only_on_steps_reaching_zero() {
        let p = SbbbmParams::new(1.0, 0.5, 3.0).unwrap();
        let path = simulate_exact(&p, 100, 1e-3, NoiseStream::new(2, 0)).unwrap();
        assert!(path.lhat.iter().all(|&l| l == 0.0));
        assert!(path.y.iter().all(|&v| v > 0.0));
    }
}
