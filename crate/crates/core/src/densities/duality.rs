//! Stationary duality of the transition semigroup.

use std::cell::RefCell;

use super::SkewLaw;
use crate::error::Result;
use crate::quadrature::integrate_with_breaks;

/// `|int g(y) E_y[f(Y_t)] m(dy) - int f(x) E_x[g(Y_t)] m(dx)|` for the
/// stationary law `m`, by nested quadrature. `f_breaks` and `g_breaks` list
/// the discontinuities of `f` and `g`.
pub fn duality_residual<F, G>(
    law: &SkewLaw,
    t: f64,
    f: F,
    f_breaks: &[f64],
    g: G,
    g_breaks: &[f64],
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let lhs = side(law, t, &g, g_breaks, &f, f_breaks)?;
    let rhs = side(law, t, &f, f_breaks, &g, g_breaks)?;
    Ok((lhs - rhs).abs())
}

/// `int outer(y) E_y[inner(Y_t)] m(dy)`.
fn side(
    law: &SkewLaw,
    t: f64,
    outer: &dyn Fn(f64) -> f64,
    outer_breaks: &[f64],
    inner: &dyn Fn(f64) -> f64,
    inner_breaks: &[f64],
) -> Result<f64> {
    // Stationary mass beyond `reach` is below 1e-11.
    let reach = 26.0 / (2.0 * law.lambda);
    let spread = 10.0 * t.sqrt() + law.lambda * t;
    let failure = RefCell::new(None);
    let expect = |y: f64| -> f64 {
        let mut breaks = vec![0.0, y];
        breaks.extend_from_slice(inner_breaks);
        let lo = y.min(0.0) - spread - reach;
        let hi = y.max(0.0) + spread + reach;
        match integrate_with_breaks(|x| inner(x) * law.tdf(t, y, x), lo, hi, &breaks, 1e-12) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let mut breaks = vec![0.0];
    breaks.extend_from_slice(outer_breaks);
    let v = integrate_with_breaks(
        |y| {
            let o = outer(y);
            if o == 0.0 {
                0.0
            } else {
                o * expect(y) * law.stationary(y)
            }
        },
        -reach,
        reach,
        &breaks,
        1e-10,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v?.value)
}
