//! Reversibility of the gap under its stationary law.
//!
//! Started from the double-exponential law, `Y` is stationary and reversible,
//! so `(Y(t1), Y(t2))` and `(Y(T - t1), Y(T - t2))` have the same joint law.
//! Forward pairs are taken from one half of the paths and reversed pairs from
//! the other half, so the two samples are independent.

use serde::{Deserialize, Serialize};

use crate::densities::SkewLaw;
use crate::error::{Error, Result};
use crate::harness::stats::{energy_test, ks_two_sample, EnergyTest};
use crate::rng::NoiseStream;
use crate::sbbbm::{exact_step, SbbbmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    pub n_paths: usize,
    pub horizon: f64,
    pub t1: f64,
    pub t2: f64,
    pub energy: EnergyTest,
    /// Two-sample KS distance between `Y(0.2 T)` and `Y(0.8 T)`.
    pub marginal_ks: f64,
    /// `P(Y(t2) > Y(t1)) - P(Y(t2) < Y(t1))`, zero under reversibility.
    pub sign_asymmetry: f64,
    /// Its standard error.
    pub sign_asymmetry_se: f64,
}

const ENERGY_BLOCK: usize = 500;

/// The initial point of `p` is ignored: every path starts from the
/// stationary law.
pub fn reversibility_check(
    p: &SbbbmParams,
    horizon: f64,
    n_paths: usize,
    t1: f64,
    t2: f64,
    seed: u64,
) -> Result<ReversibilityReport> {
    if !(0.0 < t1 && t1 < t2 && t2 < horizon) {
        return Err(Error::Domain(format!("need 0 < t1 < t2 < T, got {t1}, {t2}, {horizon}")));
    }
    if n_paths < 4 * ENERGY_BLOCK {
        return Err(Error::Domain(format!("need at least {} paths", 4 * ENERGY_BLOCK)));
    }
    let law = SkewLaw::new(p.alpha, p.lambda)?;
    let mut obs = vec![0.2 * horizon, 0.8 * horizon, t1, t2, horizon - t1, horizon - t2];
    obs.sort_by(|a, b| a.total_cmp(b));
    obs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let at = |t: f64| obs.iter().position(|s| (s - t).abs() < 1e-14).expect("observation time");
    let (ia, ib, i1, i2, r1, r2) =
        (at(0.2 * horizon), at(0.8 * horizon), at(t1), at(t2), at(horizon - t1), at(horizon - t2));

    let mut early = Vec::with_capacity(n_paths);
    let mut late = Vec::with_capacity(n_paths);
    let mut forward = Vec::with_capacity(n_paths / 2);
    let mut reversed = Vec::with_capacity(n_paths / 2);
    let (mut up, mut down) = (0usize, 0usize);
    let mut vals = vec![0.0; obs.len()];
    for path in 0..n_paths {
        let mut rng = NoiseStream::new(seed, path as u64).rng();
        let mut y = law.stationary_quantile(rng.open_uniform());
        let mut t = 0.0;
        for (k, &s) in obs.iter().enumerate() {
            y = exact_step(y, p.lambda, p.alpha, s - t, &mut rng).y;
            t = s;
            vals[k] = y;
        }
        early.push(vals[ia]);
        late.push(vals[ib]);
        if vals[i2] > vals[i1] {
            up += 1;
        } else if vals[i2] < vals[i1] {
            down += 1;
        }
        if path % 2 == 0 {
            forward.push([vals[i1], vals[i2]]);
        } else {
            reversed.push([vals[r1], vals[r2]]);
        }
    }
    let n = n_paths as f64;
    let asym = (up as f64 - down as f64) / n;
    let moved = (up + down) as f64 / n;
    Ok(ReversibilityReport {
        n_paths,
        horizon,
        t1,
        t2,
        energy: energy_test(&forward, &reversed, ENERGY_BLOCK)?,
        marginal_ks: ks_two_sample(&early, &late)?,
        sign_asymmetry: asym,
        sign_asymmetry_se: ((moved - asym * asym) / n).sqrt(),
    })
}
