//! Error-function helpers for Gaussian tail integrals.
//!
//! Every density in this crate is a Gaussian, possibly multiplied by an
//! exponential, or a Gaussian tail integral multiplied by an exponential.
//! Evaluating `exp(c) * erfc(x)` naively overflows or cancels once `|x|`
//! grows, so the helpers here go through the scaled function
//! `erfcx(x) = exp(x^2) erfc(x)`.

use std::f64::consts::{PI, SQRT_2};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        if x < -26.5 {
            return f64::INFINITY;
        }
        (x * x).exp() * libm::erfc(x)
    } else {
        // Asymptotic series; the terms shrink by (2n-1)/(2x^2) <= 0.04 here.
        let inv2x2 = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..12 {
            term *= -((2 * n - 1) as f64) * inv2x2;
            sum += term;
        }
        FRAC_1_SQRT_PI / x * sum
    }
}

/// `exp(c) * erfc(x)` without intermediate overflow or underflow.
pub fn exp_erfc(c: f64, x: f64) -> f64 {
    if x > 0.0 {
        erfcx(x) * (c - x * x).exp()
    } else {
        c.exp() * libm::erfc(x)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Heat kernel `exp(-u^2 / 2t) / sqrt(2 pi t)`.
pub fn heat(t: f64, u: f64) -> f64 {
    (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// `exp(c) * heat(t, u)` evaluated in one exponent.
pub fn exp_heat(c: f64, t: f64, u: f64) -> f64 {
    (c - u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// `∫_a^∞ exp(-(u - m)^2 / 2t) du`.
pub fn gauss_tail(a: f64, m: f64, t: f64) -> f64 {
    (PI * t / 2.0).sqrt() * libm::erfc((a - m) / (2.0 * t).sqrt())
}
