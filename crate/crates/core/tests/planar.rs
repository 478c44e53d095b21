use sbbbm::harness::{convergence_study, planar_path, stats};
use sbbbm::params::derive;
use sbbbm::planar::{build_planar, collision_local_time_check, rank_paths, reversibility_check};
use sbbbm::sbbbm::{reconstruct_vflat, simulate};
use sbbbm::special::norm_cdf;
use sbbbm::{CollisionParams, NoiseStream, SbbbmParams, Scheme};

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[test]
fn laggard_unfelt_moments() {
    // alpha = 4/7, beta = 0
    let raw = CollisionParams::with_drag(0.75, 2.25, -4.0 / 3.0, -8.0 / 3.0);
    assert!(derive(&raw).unwrap().beta.abs() < 1e-15);
    let n_paths = 10_000;
    let moves: Vec<f64> = (0..n_paths)
        .map(|id| {
            let pp = planar_path(&raw, None, 200, 5e-3, 31, id).unwrap();
            pp.r2[200] - pp.r2[0]
        })
        .collect();
    let (m, v) = (stats::mean(&moves), stats::variance(&moves));
    let n = n_paths as f64;
    assert!((m - raw.g).abs() < 3.0 * (v / n).sqrt(), "mean {m}");
    // the sample variance of n normals has standard error sigma^2 sqrt(2/(n-1))
    assert!((v - raw.sigma.powi(2)).abs() < 3.0 * (2.0 / (n - 1.0)).sqrt(), "variance {v}");
}

#[test]
fn sum_minus_drift_has_unit_variation_rate() {
    let raw = CollisionParams { rho: H, sigma: H, ..CollisionParams::with_drag(1.0, 2.0, 1.0, 1.0) };
    let d = derive(&raw).unwrap();
    let mut qv = 0.0;
    let paths = 20;
    for id in 0..paths {
        let pp = planar_path(&raw, None, 10_000, 1e-4, 8, id).unwrap();
        let s = |k: usize| {
            let t = k as f64 * pp.dt;
            let lhat = pp.lcol[k] / 2.0;
            pp.x1[k] + pp.x2[k] - (raw.x1 + raw.x2 + d.nu * t + 2.0 * (1.0 - d.beta) * lhat)
        };
        qv += (0..pp.steps()).map(|k| (s(k + 1) - s(k)).powi(2)).sum::<f64>();
    }
    let rate = qv / paths as f64;
    assert!((rate - 1.0).abs() < 0.02, "{rate}");
}

/// Given `Lhat`, the sum `X1 + X2` is Gaussian around `x1 + x2 + nu t + 2(1 - beta) Lhat`
/// with variance `t` in the isotropic case.
fn isotropic_sum_ks(coefficient: impl Fn(f64, f64) -> f64) -> f64 {
    // alpha = 2/3, beta = 4/3
    let raw = CollisionParams { rho: H, sigma: H, x1: 0.2, x2: -0.1, ..CollisionParams::with_drag(1.0, 2.0, 1.0, 1.0) };
    let d = derive(&raw).unwrap();
    let c = coefficient(d.alpha, d.beta);
    let z: Vec<f64> = (0..100_000)
        .map(|id| {
            let pp = planar_path(&raw, Some(Scheme::ExactConditional), 10, 0.1, 17, id).unwrap();
            let mean = raw.x1 + raw.x2 + d.nu + c * pp.lcol[10] / 2.0;
            pp.x1[10] + pp.x2[10] - mean
        })
        .collect();
    stats::ks_one_sample(&z, norm_cdf).unwrap()
}

#[test]
fn isotropic_conditional_sum_is_gaussian() {
    let d = isotropic_sum_ks(|_, beta| 2.0 * (1.0 - beta));
    assert!(d < 0.015, "{d}");
}

#[test]
fn isotropic_sum_rejects_the_skewness_coefficient() {
    // 2(2 alpha - 1) differs from 2(1 - beta) here, and the data see it
    let d = isotropic_sum_ks(|alpha, _| 2.0 * (2.0 * alpha - 1.0));
    assert!(d > 0.05, "{d}");
}

#[test]
fn residuals_decay_on_the_euler_scheme() {
    let raw = CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0);
    for stat in ["rank_residual", "sde_residual"] {
        let t = convergence_study(stat, &[1e-3, 1e-4, 1e-5], 50, &raw, Some(Scheme::EulerTransformed), 1.0, 3)
            .unwrap();
        assert!(t.strictly_decreasing(), "{stat}: {:?}", t.rows);
        for r in &t.rows[..2] {
            assert!(r.mean < 5.0 * r.dt.powf(0.4), "{stat}: {r:?}");
        }
    }
}

#[test]
fn rank_equations_hold_for_the_exact_scheme() {
    let raw = CollisionParams { rho: 0.6, sigma: 0.8, ..CollisionParams::with_drag(1.0, 2.0, 1.0, 1.0) };
    for id in 0..5 {
        let pp = planar_path(&raw, None, 5000, 2e-4, 12, id).unwrap();
        let r = rank_paths(&pp, &pp.reconstruct_noise());
        assert!(r.leader_max < 1e-11 && r.laggard_max < 1e-11, "{r:?}");
    }
}

#[test]
fn perfect_reflection_keeps_the_order() {
    let raw = CollisionParams { x1: 0.3, ..CollisionParams::with_drag(0.0, 2.0, 1.0, 1.0) };
    for scheme in [Scheme::SkorokhodReflection, Scheme::ExactConditional] {
        for id in 0..20 {
            let pp = planar_path(&raw, Some(scheme), 2000, 5e-4, 2, id).unwrap();
            assert!(pp.x1.iter().zip(&pp.x2).all(|(a, b)| a >= b));
        }
    }
}

#[test]
fn collision_local_time_is_nondecreasing() {
    let raw = CollisionParams::with_drag(1.0, 2.0, 1.0, 1.0);
    for scheme in [Scheme::ExactConditional, Scheme::EulerTransformed] {
        let pp = planar_path(&raw, Some(scheme), 5000, 2e-4, 6, 0).unwrap();
        assert!(pp.lcol.windows(2).all(|w| w[1] >= w[0]));
        assert!(*pp.lcol.last().unwrap() > 0.0);
    }
}

#[test]
fn distant_start_accumulates_no_local_time() {
    // lambda T = 0.2 and the noise would need to cover 4.8
    let raw = CollisionParams { g: 0.1, h: 0.1, x1: 5.0, ..CollisionParams::with_drag(0.0, 1.0, 1.0, 1.0) };
    let d = derive(&raw).unwrap();
    let sp = SbbbmParams::from_derived(&d, 5.0).unwrap();
    let sb = simulate(&sp, Scheme::ExactConditional, 1000, 1e-3, NoiseStream::new(4, 0)).unwrap();
    let pp = build_planar(&sb, &d, &raw, NoiseStream::new(4, 0).substream(1)).unwrap();
    assert!(pp.lcol.iter().all(|&l| l == 0.0));
    assert_eq!(collision_local_time_check(&pp, &reconstruct_vflat(&sb.y, &sb.w)), 0.0);
}

#[test]
fn stationary_start_marginals_agree() {
    let p = SbbbmParams::new(1.0, 2.0 / 3.0, 0.0).unwrap();
    let r = reversibility_check(&p, 1.0, 50_000, 0.3, 0.7, 5).unwrap();
    assert!(r.marginal_ks < 0.015, "{r:?}");
    assert!(r.energy.p_value > 0.001, "{r:?}");
}

#[test]
fn symmetric_case_has_no_sign_drift() {
    let p = SbbbmParams::new(1.0, 0.5, 0.0).unwrap();
    let r = reversibility_check(&p, 1.0, 20_000, 0.3, 0.7, 9).unwrap();
    assert!(r.sign_asymmetry.abs() < 3.5 * r.sign_asymmetry_se, "{r:?}");
}
