//! Natural scale of the SBBBM.
//!
//! `p` is continuous, strictly increasing, with slope `1 - alpha` just right
//! of the origin and `alpha` just left of it. It removes both the bang-bang
//! drift and the local-time push, so `Z = p(Y)` solves `dZ = s(Z) dW` with a
//! dispersion bounded below by `min(alpha, 1 - alpha)`.

use super::SbbbmParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTriple {
    pub alpha: f64,
    pub lambda: f64,
}

pub fn make_scale(p: &SbbbmParams) -> Result<ScaleTriple> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(Error::Domain(format!(
            "scale transform needs alpha in (0, 1), got {}; use the reflected scheme",
            p.alpha
        )));
    }
    Ok(ScaleTriple { alpha: p.alpha, lambda: p.lambda })
}

impl ScaleTriple {
    pub fn p(&self, y: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if y > 0.0 {
            (1.0 - self.alpha) * (l2 * y).exp_m1() / l2
        } else if y < 0.0 {
            -self.alpha * (-l2 * y).exp_m1() / l2
        } else {
            0.0
        }
    }

    pub fn q(&self, z: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if z > 0.0 {
            (l2 * z / (1.0 - self.alpha)).ln_1p() / l2
        } else if z < 0.0 {
            -(-l2 * z / self.alpha).ln_1p() / l2
        } else {
            0.0
        }
    }

    /// Dispersion of `Z`; equals `1 / q'(z)`.
    pub fn s(&self, z: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if z > 0.0 {
            1.0 - self.alpha + l2 * z
        } else {
            self.alpha - l2 * z
        }
    }

    /// Derivative of `q`, differentiated branch by branch.
    pub fn dq(&self, z: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if z > 0.0 {
            1.0 / (1.0 - self.alpha) / (1.0 + l2 * z / (1.0 - self.alpha))
        } else {
            1.0 / self.alpha / (1.0 - l2 * z / self.alpha)
        }
    }

    /// Derivative of `p`; left-continuous, so `dp(0) = alpha`.
    pub fn dp(&self, y: f64) -> f64 {
        let l2 = 2.0 * self.lambda;
        if y > 0.0 {
            (1.0 - self.alpha) * (l2 * y).exp()
        } else {
            self.alpha * (-l2 * y).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scale(alpha: f64, lambda: f64) -> ScaleTriple {
        make_scale(&SbbbmParams::new(lambda, alpha, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn p_at_one_symmetric_case() {
        let s = scale(0.5, 1.0);
        let e2 = 1f64.exp().powi(2);
        assert!((s.p(1.0) - (e2 - 1.0) / 4.0).abs() < 1e-14);
        assert!((s.p(1.0) - 1.597_264_0).abs() < 1e-7);
        assert_eq!(s.p(0.0), 0.0);
        assert_eq!(s.q(0.0), 0.0);
    }

    #[test]
    fn boundary_alpha_rejected() {
        assert!(make_scale(&SbbbmParams::new(1.0, 1.0, 0.0).unwrap()).is_err());
        assert!(make_scale(&SbbbmParams::new(1.0, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn one_sided_slopes_from_difference_quotients() {
        let s = scale(0.3, 1.7);
        let h = 1e-7;
        assert!(((s.p(h) / h) - 0.7).abs() < 1e-6);
        assert!(((s.p(-h) / -h) - 0.3).abs() < 1e-6);
        assert_eq!(s.dp(0.0), 0.3);
    }

    proptest! {
        #[test]
        fn round_trip(alpha in 0.01f64..0.99, lambda in 0.05f64..3.0, y in -10.0f64..10.0) {
            let s = scale(alpha, lambda);
            prop_assert!((s.q(s.p(y)) - y).abs() < 1e-12 * (1.0 + y.abs()));
        }

        #[test]
        fn p_monotone(alpha in 0.01f64..0.99, lambda in 0.05f64..3.0, a in -5.0f64..5.0, d in 1e-6f64..1.0) {
            let s = scale(alpha, lambda);
            prop_assert!(s.p(a + d) > s.p(a));
        }

        #[test]
        fn dispersion_bounded_below(alpha in 0.01f64..0.99, lambda in 0.05f64..3.0, z in -50.0f64..50.0) {
            let s = scale(alpha, lambda);
            prop_assert!(s.s(z) >= alpha.min(1.0 - alpha) - 1e-15);
            prop_assert!((s.s(z) * s.dq(z) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn chain_rule(alpha in 0.01f64..0.99, lambda in 0.05f64..3.0, y in -10.0f64..10.0) {
            let s = scale(alpha, lambda);
            prop_assert!((s.dp(y) * s.dq(s.p(y)) - 1.0).abs() < 1e-12);
        }
    }
}
