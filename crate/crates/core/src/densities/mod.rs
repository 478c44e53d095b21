//! Closed-form laws of the SBBBM and of the planar system.
//!
//! Notation: `t` is elapsed time, `y0` the start, `xi` the endpoint and `b`
//! the level of the collision local time `L^{|Y|} = 2 Lhat` at time `t`.
//! All Gaussian tail integrals `int_x^inf exp(-(u - lambda t)^2 / 2t) du`
//! are evaluated through `erfc`, never by quadrature.

mod duality;
mod planar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, Estimate};
use crate::special::{erfcx, exp_erfc, exp_heat, heat, norm_cdf};

pub use duality::duality_residual;
pub use planar::{planar_density, planar_mass, PlanarCase, PlanarDensity, PlanarDensityQuery, PlanarMass};

/// Transition laws of the SBBBM with skewness `alpha` and drift `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewLaw {
    pub alpha: f64,
    pub lambda: f64,
}

/// A point-evaluation request. With `b` set the joint density of
/// `(Y(t), 2 Lhat(t))` is evaluated, otherwise the marginal of `Y(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityQuery {
    pub t: f64,
    pub y0: f64,
    pub xi: f64,
    pub b: Option<f64>,
}

/// Weight of the side of `xi`: `2 alpha` above the origin, `2(1 - alpha)`
/// at or below it.
#[inline]
fn side_weight(alpha: f64, xi: f64) -> f64 {
    if xi > 0.0 {
        2.0 * alpha
    } else {
        2.0 * (1.0 - alpha)
    }
}

impl SkewLaw {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(Self { alpha, lambda })
    }

    pub fn eval(&self, q: &DensityQuery) -> Result<f64> {
        if !(q.t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {}", q.t)));
        }
        Ok(match q.b {
            Some(b) => self.joint(q.t, q.y0, q.xi, b),
            None => self.tdf(q.t, q.y0, q.xi),
        })
    }

    /// Density of driftless skew Brownian motion.
    pub fn pstar(&self, t: f64, y0: f64, xi: f64) -> f64 {
        let sgn = if xi > 0.0 { 1.0 } else { -1.0 };
        heat(t, y0 - xi) + (2.0 * self.alpha - 1.0) * sgn * heat(t, y0.abs() + xi.abs())
    }

    /// Joint density of `(Y(t), 2 Lhat(t))` for driftless skew Brownian
    /// motion, `b > 0`.
    pub fn pstar_joint(&self, t: f64, y0: f64, xi: f64, b: f64) -> f64 {
        let s = xi.abs() + b + y0.abs();
        side_weight(self.alpha, xi) * s / (2.0 * std::f64::consts::PI * t * t * t).sqrt()
            * (-s * s / (2.0 * t)).exp()
    }

    /// Girsanov weight turning `pstar_joint` into `joint`.
    pub fn radon_nikodym(&self, t: f64, y0: f64, xi: f64, b: f64) -> f64 {
        let l = self.lambda;
        (l * (y0.abs() - xi.abs() + b) - 0.5 * l * l * t).exp()
    }

    /// Joint density of `(Y(t), 2 Lhat(t))` at `b > 0`.
    pub fn joint(&self, t: f64, y0: f64, xi: f64, b: f64) -> f64 {
        if !(b > 0.0) {
            return 0.0;
        }
        let s = xi.abs() + b + y0.abs();
        let d = s - self.lambda * t;
        side_weight(self.alpha, xi) * s / (2.0 * std::f64::consts::PI * t * t * t).sqrt()
            * (-2.0 * self.lambda * xi.abs() - d * d / (2.0 * t)).exp()
    }

    /// Density of `Y(t)` on the event that no local time accrued; nonzero
    /// only when `xi` and `y0` lie strictly on the same side.
    pub fn zero_localtime(&self, t: f64, y0: f64, xi: f64) -> f64 {
        if !(xi * y0 > 0.0) {
            return 0.0;
        }
        let (x, a, l) = (xi.abs(), y0.abs(), self.lambda);
        let v = heat(t, x - a + l * t) - exp_heat(-2.0 * l * x, t, x + a - l * t);
        v.max(0.0)
    }

    /// Probability that no local time accrues by `t` from `y0`.
    pub fn no_hit_probability(&self, t: f64, y0: f64) -> f64 {
        let (a, l, st) = (y0.abs(), self.lambda, t.sqrt());
        if a == 0.0 {
            return 0.0;
        }
        // e^{2 l a} Phi(-(a + l t)/sqrt t), written through erfcx to avoid overflow.
        let x = (a + l * t) / (st * std::f64::consts::SQRT_2);
        let image = 0.5 * erfcx(x) * (2.0 * l * a - x * x).exp();
        norm_cdf((a - l * t) / st) - image
    }

    /// Marginal transition density of `Y(t)`.
    pub fn tdf(&self, t: f64, y0: f64, xi: f64) -> f64 {
        let (a, l) = (self.alpha, self.lambda);
        let r2t = (2.0 * t).sqrt();
        if xi > 0.0 && y0 > 0.0 {
            let u = xi + y0 - l * t;
            (2.0 * a - 1.0) * exp_heat(-2.0 * l * xi, t, u)
                + heat(t, xi - y0 + l * t)
                + a * l * exp_erfc(-2.0 * l * xi, u / r2t)
        } else if xi < 0.0 && y0 < 0.0 {
            let u = -xi - y0 - l * t;
            (1.0 - 2.0 * a) * exp_heat(2.0 * l * xi, t, u)
                + heat(t, -xi + y0 + l * t)
                + (1.0 - a) * l * exp_erfc(2.0 * l * xi, u / r2t)
        } else {
            let x = xi.abs();
            let u = x + y0.abs() - l * t;
            side_weight(a, xi)
                * (exp_heat(-2.0 * l * x, t, u) + 0.5 * l * exp_erfc(-2.0 * l * x, u / r2t))
        }
    }

    /// The invariant double-exponential density.
    pub fn stationary(&self, xi: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if xi > 0.0 {
            self.alpha * l2 * (-l2 * xi).exp()
        } else {
            (1.0 - self.alpha) * l2 * (l2 * xi).exp()
        }
    }

    /// Stationary CDF.
    pub fn stationary_cdf(&self, x: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if x > 0.0 {
            1.0 - self.alpha * (-l2 * x).exp()
        } else {
            (1.0 - self.alpha) * (l2 * x).exp()
        }
    }

    /// Inverse of [`Self::stationary_cdf`] for `u` in `(0, 1)`.
    pub fn stationary_quantile(&self, u: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if u <= 1.0 - self.alpha {
            (u / (1.0 - self.alpha)).ln() / l2
        } else {
            -((1.0 - u) / self.alpha).ln() / l2
        }
    }

    /// `d/dxi log tdf(t; 0, xi)`: the drift of the time-reversed process.
    pub fn bridge_log_derivative(&self, t: f64, xi: f64) -> f64 {
        let sgn = if xi > 0.0 { 1.0 } else { -1.0 };
        -2.0 * self.lambda * sgn - xi / t * self.bridge_ratio(t, xi)
    }

    /// `C1 / (C1 + C2)` with `C1 = exp(-(|xi| + lambda t)^2 / 2t)` and
    /// `C2 = lambda e^{-2 lambda |xi|} int_{|xi|}^inf exp(-(u - lambda t)^2 / 2t) du`.
    pub fn bridge_ratio(&self, t: f64, xi: f64) -> f64 {
        let l = self.lambda;
        let x = (xi.abs() - l * t) / (2.0 * t).sqrt();
        // C2 / C1 = lambda sqrt(pi t / 2) erfcx(x)
        1.0 / (1.0 + l * (std::f64::consts::PI * t / 2.0).sqrt() * erfcx(x))
    }

    /// Window outside which `tdf(t, y0, .)` carries less than ~1e-13 mass.
    pub fn window(&self, t: f64, y0: f64) -> (f64, f64) {
        // The image terms decay like both e^{-2 lambda xi} and a Gaussian
        // centred at lambda t; either bound suffices.
        let gauss = 9.0 * t.sqrt();
        let image = if self.lambda > 0.0 { 16.0 / self.lambda } else { f64::INFINITY };
        let reach = y0.abs() + gauss.max(image.min(self.lambda * t + gauss));
        (-reach, reach)
    }

    /// `int_lo^hi tdf(t, y0, xi) dxi`, split at the discontinuities.
    pub fn tdf_mass(&self, t: f64, y0: f64, lo: f64, hi: f64, tol: f64) -> Result<Estimate> {
        integrate_with_breaks(|x| self.tdf(t, y0, x), lo, hi, &[0.0, y0], tol)
    }

    /// `int_0^inf joint(t, y0, xi, b) db`: the part of the marginal that
    /// carries local time.
    pub fn localtime_part(&self, t: f64, y0: f64, xi: f64) -> f64 {
        let l = self.lambda;
        let s0 = xi.abs() + y0.abs();
        let u = s0 - l * t;
        side_weight(self.alpha, xi)
            * (exp_heat(-2.0 * l * xi.abs(), t, u)
                + 0.5 * l * exp_erfc(-2.0 * l * xi.abs(), u / (2.0 * t).sqrt()))
    }

    /// CDF of `Y(t)` at each point of the ascending slice `points`,
    /// integrating `tdf` piecewise from the left edge of [`Self::window`].
    pub fn tdf_cdf_sorted(&self, t: f64, y0: f64, points: &[f64], tol: f64) -> Result<Vec<f64>> {
        let (lo, _) = self.window(t, y0);
        let mut out = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        let mut prev = lo.min(points.first().copied().unwrap_or(lo));
        let piece_tol = tol / (points.len().max(1) as f64);
        for &x in points {
            if x < prev {
                return Err(Error::Domain("points must be sorted ascending".into()));
            }
            acc += integrate_with_breaks(|u| self.tdf(t, y0, u), prev, x, &[0.0, y0], piece_tol.max(1e-15))?
                .value;
            out.push(acc);
            prev = x;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use std::f64::consts::PI;

    fn law(alpha: f64, lambda: f64) -> SkewLaw {
        SkewLaw::new(alpha, lambda).unwrap()
    }

    #[test]
    fn pstar_reduces_to_heat_kernel() {
        let l = law(0.5, 1.0);
        assert!((l.pstar(1.0, 0.0, 0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((l.pstar(1.0, 0.0, 0.0) - 0.398_942_3).abs() < 1e-7);
        let r = law(1.0, 1.0);
        for &x in &[-2.0, -0.5, -1e-9] {
            assert!(r.pstar(0.7, 0.0, x).abs() < 1e-15);
        }
    }

    #[test]
    fn pstar_normalized() {
        let l = law(0.8, 1.0);
        for &(t, y0) in &[(0.5, 0.0), (1.0, 1.0), (2.0, -1.0)] {
            let m = integrate_with_breaks(|x| l.pstar(t, y0, x), -30.0, 30.0, &[0.0, y0], 1e-11).unwrap();
            assert!((m.value - 1.0).abs() < 1e-8, "{t} {y0} {m:?}");
        }
    }

    #[test]
    fn joint_branch_ratio() {
        let l = law(0.3, 1.2);
        for &(a, b) in &[(0.1, 0.2), (1.0, 3.0), (2.5, 0.01)] {
            let r = l.joint(1.3, 0.4, a, b) / l.joint(1.3, 0.4, -a, b);
            assert!((r - 0.3 / 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_is_girsanov_weighted_pstar_joint() {
        let l = law(2.0 / 3.0, 1e-6);
        for &(xi, b) in &[(0.3, 0.2), (-1.0, 0.5), (2.0, 1.5)] {
            let direct = l.joint(1.0, 1.0, xi, b);
            let via = l.pstar_joint(1.0, 1.0, xi, b) * l.radon_nikodym(1.0, 1.0, xi, b);
            assert!(((direct - via) / via).abs() < 1e-4);
            assert!(((direct - l.pstar_joint(1.0, 1.0, xi, b)) / direct).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_localtime_vanishes_at_origin() {
        let l = law(0.6, 1.0);
        assert!(l.zero_localtime(1.0, 0.7, 1e-8) < 1e-6);
        assert_eq!(l.zero_localtime(1.0, 0.7, -0.5), 0.0);
        assert_eq!(l.zero_localtime(1.0, 0.0, 0.5), 0.0);
    }

    #[test]
    fn zero_localtime_nonnegative_grid() {
        let l = law(0.6, 1.0);
        for &t in &[0.1, 1.0, 10.0] {
            for i in 1..=50 {
                for j in 1..=50 {
                    let (xi, y0) = (i as f64 * 0.1, j as f64 * 0.1);
                    assert!(l.zero_localtime(t, y0, xi) >= 0.0);
                    assert!(l.zero_localtime(t, -y0, -xi) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn no_hit_probability_matches_quadrature() {
        let l = law(0.4, 1.0);
        for &(t, y0) in &[(0.01f64, 2.0f64), (1.0, 0.5), (3.0, -1.5)] {
            let sign = if y0 > 0.0 { 1.0 } else { -1.0 };
            let q = integrate(|x| l.zero_localtime(t, y0, sign * x), 0.0, y0.abs() + 12.0 * t.sqrt() + 2.0, 1e-13)
                .unwrap();
            assert!((q.value - l.no_hit_probability(t, y0)).abs() < 1e-10, "{t} {y0}");
        }
    }

    #[test]
    fn decomposition_pointwise() {
        let l = law(2.0 / 3.0, 1.0);
        for &y0 in &[-1.0, -0.2, 0.0, 0.5, 1.0] {
            for i in -30..=30 {
                let xi = i as f64 * 0.1 + 0.013;
                let lt = integrate(|b| l.joint(1.0, y0, xi, b), 0.0, 30.0, 1e-13).unwrap().value;
                let lhs = l.tdf(1.0, y0, xi);
                assert!((lhs - lt - l.zero_localtime(1.0, y0, xi)).abs() < 1e-8, "{y0} {xi}");
                assert!((lt - l.localtime_part(1.0, y0, xi)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tdf_normalized() {
        for &(t, y0, lambda, alpha) in &[(1.0, 0.5, 1.0, 2.0 / 3.0), (2.0, -1.0, 0.7, 0.3), (0.01, 0.0, 1.0, 0.9)] {
            let l = law(alpha, lambda);
            let (lo, hi) = l.window(t, y0);
            let m = l.tdf_mass(t, y0, lo, hi, 1e-11).unwrap();
            assert!((m.value - 1.0).abs() < 1e-8, "{m:?}");
        }
    }

    #[test]
    fn fold_is_alpha_free() {
        let (a, b, c) = (law(0.2, 1.0), law(0.5, 1.0), law(0.8, 1.0));
        for &y0 in &[0.7, -0.7] {
            for i in 1..80 {
                let xi = i as f64 * 0.05;
                let fa = a.tdf(1.0, y0, xi) + a.tdf(1.0, y0, -xi);
                let fb = b.tdf(1.0, y0, xi) + b.tdf(1.0, y0, -xi);
                let fc = c.tdf(1.0, -y0, xi) + c.tdf(1.0, -y0, -xi);
                assert!((fa - fb).abs() < 1e-12 && (fb - fc).abs() < 1e-12, "{xi}");
            }
        }
    }

    #[test]
    fn long_time_limit_is_stationary() {
        let l = law(2.0 / 3.0, 1.0);
        for i in -30..=30 {
            let xi = i as f64 * 0.1;
            let (p, s) = (l.tdf(50.0, 0.0, xi), l.stationary(xi));
            assert!(((p - s) / s).abs() < 1e-3, "{xi}");
        }
    }

    #[test]
    fn stationary_properties() {
        let l = law(0.3, 2.0);
        let m = integrate_with_breaks(|x| l.stationary(x), -20.0, 20.0, &[0.0], 1e-13).unwrap();
        assert!((m.value - 1.0).abs() < 1e-10);
        let up = integrate(|x| l.stationary(x), 0.0, 20.0, 1e-13).unwrap();
        assert!((up.value - 0.3).abs() < 1e-12);
        assert!((l.stationary(0.0) - 4.0 * 0.7).abs() < 1e-15);
        assert!((l.stationary(1e-300) - 4.0 * 0.3).abs() < 1e-15);
        for &u in &[0.01, 0.5, 0.69, 0.71, 0.99] {
            assert!((l.stationary_cdf(l.stationary_quantile(u)) - u).abs() < 1e-13);
        }
    }

    #[test]
    fn small_lambda_tends_to_pstar() {
        let l = law(0.7, 1e-6);
        for &y0 in &[0.0, 0.5, -1.0] {
            for i in -20..=20 {
                let xi = i as f64 * 0.2 + 0.01;
                let (a, b) = (l.tdf(1.0, y0, xi), l.pstar(1.0, y0, xi));
                assert!(((a - b) / b).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn bridge_derivative() {
        let l = law(0.4, 1.0);
        for &x in &[0.5, 2.0, 7.0] {
            assert!((l.bridge_log_derivative(1.0, x) + l.bridge_log_derivative(1.0, -x)).abs() < 1e-14);
        }
        let h = 1e-5;
        for &x in &[-2.0, -0.5, 0.5, 2.0] {
            let fd = ((l.tdf(1.0, 0.0, x + h)).ln() - (l.tdf(1.0, 0.0, x - h)).ln()) / (2.0 * h);
            assert!((fd - l.bridge_log_derivative(1.0, x)).abs() < 1e-6, "{x}");
        }
        let v = l.bridge_log_derivative(1.0, 10.0) + 2.0 + 10.0 * l.bridge_ratio(1.0, 10.0);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn cdf_sorted_reaches_one() {
        let l = law(2.0 / 3.0, 1.0);
        let pts: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.2).collect();
        let c = l.tdf_cdf_sorted(1.0, 0.0, &pts, 1e-10).unwrap();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
        assert!((c.last().unwrap() - 1.0).abs() < 1e-9);
        // mass below zero is 1 - P(Y > 0)
        let below = c[40];
        let above = l.tdf_mass(1.0, 0.0, 0.0, 20.0, 1e-12).unwrap().value;
        assert!((below + above - 1.0).abs() < 1e-9);
    }
}
