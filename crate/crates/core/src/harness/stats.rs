//! Goodness-of-fit statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::special::norm_cdf;

/// Sorted copy, NaNs rejected.
pub fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov distance `sup |F_n - F|` for an ascending
/// sample and the model CDF evaluated at the same points.
pub fn ks_statistic_sorted(cdf_at_sample: &[f64]) -> f64 {
    let n = cdf_at_sample.len() as f64;
    cdf_at_sample.iter().enumerate().fold(0.0f64, |d, (i, &f)| {
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// One-sample KS distance of `sample` against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let s = sorted(sample)?;
    let f: Vec<f64> = s.iter().map(|&x| cdf(x)).collect();
    Ok(ks_statistic_sorted(&f))
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov tail `P(sqrt(n) D > x)` for effective size `n`.
pub fn kolmogorov_p_value(d: f64, n: f64) -> f64 {
    let x = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Pearson chi-square of observed counts against expected counts; returns
/// the statistic and its p-value with `bins - 1 - fitted` degrees of freedom.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.len() < fitted + 2 {
        return Err(Error::Domain("chi-square needs matching bins and positive degrees of freedom".into()));
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Domain("chi-square expected counts must be positive".into()));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (observed.len() - 1 - fitted) as f64;
    let dist = ChiSquared::new(df).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Unbiased energy distance between two equal-size point sets.
fn energy_u(x: &[[f64; 2]], y: &[[f64; 2]]) -> f64 {
    let m = x.len() as f64;
    let mut cross = 0.0;
    for p in x {
        for q in y {
            cross += dist2(*p, *q);
        }
    }
    let within = |s: &[[f64; 2]]| {
        let mut acc = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                acc += dist2(s[i], s[j]);
            }
        }
        2.0 * acc / (m * (m - 1.0))
    };
    2.0 * cross / (m * m) - within(x) - within(y)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyTest {
    /// Mean of the per-block unbiased energy distances.
    pub statistic: f64,
    pub z: f64,
    /// One-sided p-value: the energy distance is positive under the alternative.
    pub p_value: f64,
    pub blocks: usize,
}

/// Two-sample energy test in the plane. The samples are cut into blocks of
/// `block` points each; every block pair gives an unbiased energy distance
/// with mean zero under the null, and the block means are combined with a
/// normal approximation.
pub fn energy_test(x: &[[f64; 2]], y: &[[f64; 2]], block: usize) -> Result<EnergyTest> {
    let nb = x.len().min(y.len()) / block.max(1);
    if block < 2 || nb < 2 {
        return Err(Error::Domain("energy test needs at least two blocks of two points".into()));
    }
    let stats: Vec<f64> = (0..nb)
        .map(|b| energy_u(&x[b * block..(b + 1) * block], &y[b * block..(b + 1) * block]))
        .collect();
    let m = mean(&stats);
    let se = (variance(&stats) / nb as f64).sqrt();
    let z = if se > 0.0 { m / se } else { 0.0 };
    Ok(EnergyTest { statistic: m, z, p_value: 1.0 - norm_cdf(z), blocks: nb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn ks_uniform_grid() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_one_sample(&s, |x| x).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_shifted() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..10).map(|i| i as f64 + 5.5).collect();
        assert!((ks_two_sample(&a, &b).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ks_two_sample_ties() {
        let a = [0.0, 0.0, 1.0, 1.0];
        let b = [0.0, 1.0, 1.0, 1.0];
        assert!((ks_two_sample(&a, &b).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_known_value() {
        // P(K > 1.358) ~ 0.05
        let p = kolmogorov_p_value(1.358 / 1e6f64.sqrt(), 1e6);
        assert!((p - 0.05).abs() < 1e-3, "{p}");
    }

    #[test]
    fn chi_square_exact_fit() {
        let (s, p) = chi_square(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0], 0).unwrap();
        assert_eq!(s, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        // df = 1, statistic 3.841 is the 95% point
        let (_, p) = chi_square(&[50.0 + 9.8, 50.0 - 9.8], &[50.0, 50.0], 0).unwrap();
        assert!((p - 0.05).abs() < 2e-3, "{p}");
    }

    #[test]
    fn energy_detects_shift_and_accepts_null() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut draw = |shift: f64| -> Vec<[f64; 2]> {
            (0..4000)
                .map(|_| [rng.sample::<f64, _>(StandardNormal) + shift, rng.sample::<f64, _>(StandardNormal)])
                .collect()
        };
        let (a, b, c) = (draw(0.0), draw(0.0), draw(0.3));
        let null = energy_test(&a, &b, 200).unwrap();
        assert!(null.p_value > 0.001, "{null:?}");
        let alt = energy_test(&a, &c, 200).unwrap();
        assert!(alt.p_value < 1e-6, "{alt:?}");
    }

    #[test]
    fn correlation_of_linear_data() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        assert!((correlation(&a, &b) - 1.0).abs() < 1e-15);
    }
}
