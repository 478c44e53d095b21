//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below the tolerance. Used as the oracle for every
//! normalization and decomposition check in the crate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Subdivision cap; hitting it is reported as non-convergence.
pub const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    // Floor the estimate at a few ulps of the contribution.
    let floor = 50.0 * f64::EPSILON * value.abs();
    (value, error.max(floor))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature window must be finite".into()));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a: lo, b: hi, value: v, error: e });
    let mut total_v = v;
    let mut total_e = e;
    while !(total_e <= tol) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { value: sign * total_v, error: total_e, tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature { value: sign * total_v, error: total_e, tol });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total_v += v1 + v2 - worst.value;
        total_e += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        if !total_e.is_finite() {
            total_v = heap.iter().map(|p| p.value).sum();
            total_e = heap.iter().map(|p| p.error).sum();
        }
    }
    // Re-sum to shed drift accumulated by the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature { value, error, tol });
    }
    Ok(Estimate { value: sign * value, error })
}

/// Integrate over `[a, b]` with the window split at `breaks` (points outside
/// the window are ignored). The tolerance is shared between the pieces.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Estimate> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let pieces = (pts.len() - 1).max(1) as f64;
    let mut out = Estimate { value: 0.0, error: 0.0 };
    for w in pts.windows(2) {
        let e = integrate(&f, w[0], w[1], tol / pieces)?;
        out.value += e.value;
        out.error += e.error;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_pdf;

    #[test]
    fn standard_normal_over_wide_window() {
        let e = integrate(norm_pdf, -10.0, 10.0, 1e-13).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn reversed_window_flips_sign() {
        let e = integrate(|x| x * x, 1.0, 0.0, 1e-12).unwrap();
        assert!((e.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn kink_needs_refinement() {
        let e = integrate(|x: f64| (x - 0.3).abs().sqrt(), 0.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((e.value - exact).abs() < 1e-9);
    }

    #[test]
    fn breaks_handle_jumps() {
        let step = |x: f64| if x > 0.25 { 2.0 } else { 1.0 };
        let e = integrate_with_breaks(step, 0.0, 1.0, &[0.25, 7.0], 1e-13).unwrap();
        assert!((e.value - 1.75).abs() < 1e-13);
    }

    #[test]
    fn singular_integrand_reports_non_convergence() {
        let r = integrate(|x: f64| 1.0 / x.abs(), -1.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
