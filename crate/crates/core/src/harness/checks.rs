//! The registered checks. Each is a pure function of its arguments and a
//! seed; simulation checks draw path `i` from stream `i` of that seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::stats::{kolmogorov_p_value, ks_statistic_sorted, ks_two_sample, mean, sorted, variance};
use super::{planar_path, CheckContext, Outcome};
use crate::densities::{duality_residual, planar_mass, PlanarCase, SkewLaw};
use crate::error::{Error, Result};
use crate::io::csv_table;
use crate::params::{classify, derive, CollisionParams, RegimeTag};
use crate::planar::{rank_paths, reversibility_check, verify_sde_residuals};
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::sbbbm::{
    make_scale, reconstruct_vflat, running_max_local_time, simulate_batch, tanaka_right_local_time,
    SbbbmParams, SbbbmPath, Scheme,
};

type CheckFn = fn(&CheckContext) -> Result<Outcome>;

const REGISTRY: &[(&str, CheckFn)] = &[
    ("parameter_oracle", parameter_oracle),
    ("scale_identities", scale_identities),
    ("density_normalization", density_normalization),
    ("joint_decomposition_mass", joint_decomposition_mass),
    ("planar_mass", planar_mass_check),
    ("ks_marginal", ks_marginal),
    ("fold_identity", fold_identity),
    ("abs_law_across_alpha", abs_law_across_alpha),
    ("skorokhod_identity", skorokhod_identity),
    ("local_time_ratio", local_time_ratio),
    ("sde_residual", sde_residual),
    ("noise_variation", noise_variation),
    ("reflection_nonnegative", reflection_nonnegative),
    ("laggard_correlation", laggard_correlation),
    ("rank_coefficients", rank_coefficients),
    ("duality", duality),
    ("reversibility", reversibility),
    ("chapman_kolmogorov", chapman_kolmogorov),
    ("convergence", convergence),
];

pub fn check_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub(super) fn run(name: &str, ctx: &CheckContext) -> Result<Outcome> {
    let f = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| Error::Config(format!("unknown check '{name}'")))?;
    f(ctx)
}

const FIG1: (f64, f64, f64, f64) = (1.0, 1.0, 1.0, 1.0);
const FIG2: (f64, f64, f64, f64) = (0.0, 1.0, 1.0, 1.0);
const FIG3: (f64, f64, f64, f64) = (1.0, 2.0, 1.0, 1.0);
const FIG4: (f64, f64, f64, f64) = (0.0, 2.0, 1.0, 1.0);
const BETA_ZERO: (f64, f64, f64, f64) = (0.75, 2.25, -4.0 / 3.0, -8.0 / 3.0);
const BETA_TWO: (f64, f64, f64, f64) = (1.5, 3.0, 7.0 / 3.0, 1.0);

fn drag(c: (f64, f64, f64, f64)) -> CollisionParams {
    CollisionParams::with_drag(c.0, c.1, c.2, c.3)
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    let n = (horizon / dt).round();
    if !(n >= 1.0) || ((n * dt - horizon).abs() > 1e-9 * horizon) {
        return Err(Error::GridMismatch(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    Ok(n as usize)
}

fn sbbbm_params(ctx: &CheckContext, alpha: f64, lambda: f64, y0: f64) -> Result<SbbbmParams> {
    SbbbmParams::new(ctx.f64_or("lambda", lambda)?, ctx.f64_or("alpha", alpha)?, ctx.f64_or("y0", y0)?)
}

fn parameter_oracle(_ctx: &CheckContext) -> Result<Outcome> {
    let cases = [
        (FIG1, 0.5, 1.0, RegimeTag::FrictionlessBoth),
        (FIG2, 2.0 / 3.0, 2.0 / 3.0, RegimeTag::FrictionlessSecondOnly),
        (FIG3, 2.0 / 3.0, 4.0 / 3.0, RegimeTag::FrictionlessFirstOnly),
        (FIG4, 1.0, 1.0, RegimeTag::PerfectReflectionFirst),
        (BETA_ZERO, 4.0 / 7.0, 0.0, RegimeTag::LaggardUnfelt),
        (BETA_TWO, 4.0 / 7.0, 2.0, RegimeTag::LeaderUnfelt),
    ];
    let mut worst = 0.0f64;
    let mut tags_ok = true;
    let mut rows = Vec::new();
    for (c, alpha, beta, tag) in cases {
        let raw = drag(c);
        let d = derive(&raw)?;
        let got = classify(&d, &raw).tag;
        worst = worst.max((d.alpha - alpha).abs()).max((d.beta - beta).abs());
        tags_ok &= got == tag;
        rows.push(json!({ "drag": [c.0, c.1, c.2, c.3], "alpha": d.alpha, "beta": d.beta, "regime": got }));
    }
    Ok(Outcome::new(worst, cases.len(), json!({ "cases": rows })).require("regime tags", tags_ok))
}

fn scale_identities(ctx: &CheckContext) -> Result<Outcome> {
    let lambda = ctx.f64_or("lambda", 1.0)?;
    let alphas = ctx.f64_list_or("alphas", &[0.2, 0.5, 2.0 / 3.0])?;
    let points = ctx.usize_or("points", 2001)?;
    let half = ctx.f64_or("half_width", 10.0)?;
    let (mut round, mut slope, mut product) = (0.0f64, 0.0f64, 0.0f64);
    for &a in &alphas {
        let s = make_scale(&SbbbmParams::new(lambda, a, 0.0)?)?;
        slope = slope.max((s.dp(0.0) - a).abs());
        for i in 0..points {
            let y = -half + 2.0 * half * i as f64 / (points - 1) as f64;
            round = round.max((s.q(s.p(y)) - y).abs());
            let z = s.p(y);
            product = product.max((s.s(z) * s.dq(z) - 1.0).abs());
        }
    }
    Ok(Outcome::new(
        max_of([round, slope, product]),
        points * alphas.len(),
        json!({ "q_of_p": round, "slope_at_origin": slope, "s_times_dq": product }),
    ))
}

fn density_normalization(ctx: &CheckContext) -> Result<Outcome> {
    let tol = ctx.f64_or("quad_tol", 1e-10)?;
    // (t, y0, lambda, alpha)
    let points = [(1.0, 0.5, 1.0, 2.0 / 3.0), (2.0, -1.0, 0.7, 0.3)];
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (t, y0, lambda, alpha) in points {
        let law = SkewLaw::new(alpha, lambda)?;
        let (lo, hi) = law.window(t, y0);
        let m = law.tdf_mass(t, y0, lo, hi, tol)?;
        worst = worst.max((m.value - 1.0).abs());
        rows.push(json!({ "density": "tdf", "t": t, "y0": y0, "lambda": lambda, "alpha": alpha, "mass": m.value, "error": m.error }));
    }
    for (alpha, lambda) in [(0.3, 2.0), (2.0 / 3.0, 1.0)] {
        let law = SkewLaw::new(alpha, lambda)?;
        let reach = 40.0 / lambda;
        let m = integrate_with_breaks(|x| law.stationary(x), -reach, reach, &[0.0], tol)?;
        worst = worst.max((m.value - 1.0).abs());
        rows.push(json!({ "density": "stationary", "lambda": lambda, "alpha": alpha, "mass": m.value, "error": m.error }));
    }
    Ok(Outcome::new(worst, rows.len(), json!({ "masses": rows })))
}

/// `int int joint db dxi + int zero_localtime dxi` by nested quadrature.
fn joint_decomposition_mass(ctx: &CheckContext) -> Result<Outcome> {
    let t = ctx.f64_or("t", 1.0)?;
    let y0 = ctx.f64_or("y0", 1.0)?;
    let law = SkewLaw::new(ctx.f64_or("alpha", 2.0 / 3.0)?, ctx.f64_or("lambda", 1.0)?)?;
    let tol = ctx.f64_or("quad_tol", 1e-9)?;
    let (lo, hi) = law.window(t, y0);
    let b_reach = hi - lo;
    let failure = std::cell::RefCell::new(None);
    let lt = integrate_with_breaks(
        |xi| match integrate(|b| law.joint(t, y0, xi, b), 0.0, b_reach, tol / 100.0) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        &[0.0, y0],
        tol,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let zero = integrate_with_breaks(|xi| law.zero_localtime(t, y0, xi), lo, hi, &[0.0, y0], tol)?;
    let total = lt.value + zero.value;
    Ok(Outcome::new(
        (total - 1.0).abs(),
        1,
        json!({ "local_time_part": lt.value, "zero_local_time_part": zero.value, "no_hit_probability": law.no_hit_probability(t, y0) }),
    ))
}

fn planar_mass_check(ctx: &CheckContext) -> Result<Outcome> {
    let beta_one = CollisionParams { rho: 1.0, sigma: 0.0, x1: 1.0, x2: 0.0, ..drag(FIG1) };
    let raw = ctx.params_or(beta_one)?;
    let case: PlanarCase = ctx.str_or("case", "sigma0")?.parse()?;
    let t = ctx.f64_or("t", 1.0)?;
    let m = planar_mass(&raw, case, t, ctx.f64_or("quad_tol", 1e-7)?)?;
    Ok(Outcome::new(
        (m.total() - 1.0).abs(),
        1,
        json!({ "continuous": m.continuous, "line": m.line, "error": m.error() }),
    ))
}

fn terminal_values(p: &SbbbmParams, scheme: Scheme, n: usize, dt: f64, seed: u64, n_paths: usize) -> Result<Vec<f64>> {
    simulate_batch(p, scheme, n, dt, seed, n_paths, |_, path| *path.y.last().expect("nonempty"))
}

/// KS distance of simulated `Y(T)` against the quadrature CDF of the
/// marginal law.
fn ks_marginal(ctx: &CheckContext) -> Result<Outcome> {
    let p = sbbbm_params(ctx, 2.0 / 3.0, 1.0, 0.0)?;
    let horizon = ctx.horizon()?;
    let n = ctx.usize_or("steps", 10)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let scheme = ctx.scheme_or(p.alpha)?;
    let (d, _) = marginal_ks(&p, scheme, n, horizon / n as f64, ctx.seed, n_paths)?;
    Ok(Outcome::new(
        d,
        n_paths,
        json!({ "p_value": kolmogorov_p_value(d, n_paths as f64), "steps": n, "scheme": scheme }),
    ))
}

fn marginal_ks(p: &SbbbmParams, scheme: Scheme, n: usize, dt: f64, seed: u64, n_paths: usize) -> Result<(f64, Vec<f64>)> {
    let ys = sorted(&terminal_values(p, scheme, n, dt, seed, n_paths)?)?;
    let law = SkewLaw::new(p.alpha, p.lambda)?;
    let cdf = law.tdf_cdf_sorted(n as f64 * dt, p.y0, &ys, 1e-8)?;
    Ok((ks_statistic_sorted(&cdf), ys))
}

fn fold_identity(ctx: &CheckContext) -> Result<Outcome> {
    let lambda = ctx.f64_or("lambda", 1.0)?;
    let alphas = ctx.f64_list_or("alphas", &[0.2, 0.5, 0.8])?;
    let laws: Vec<SkewLaw> = alphas.iter().map(|&a| SkewLaw::new(a, lambda)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for &t in &[0.1, 1.0, 3.0] {
        for &y0 in &[0.0, 0.4, 1.5] {
            for i in 1..=200 {
                let xi = i as f64 * 0.03;
                let folded = |l: &SkewLaw, y: f64| l.tdf(t, y, xi) + l.tdf(t, y, -xi);
                let base = folded(&laws[0], y0);
                for l in &laws {
                    // |Y| from y0 and from -y0 have the same law.
                    worst = worst.max((folded(l, y0) - base).abs()).max((folded(l, -y0) - base).abs());
                }
                count += 1;
            }
        }
    }
    Ok(Outcome::new(worst, count, json!({ "alphas": alphas })))
}

/// Two-sample KS between `|Y(T)|` at two skewness values.
fn abs_law_across_alpha(ctx: &CheckContext) -> Result<Outcome> {
    let alphas = ctx.f64_list_or("alphas", &[0.25, 0.75])?;
    if alphas.len() != 2 {
        return Err(Error::Config("abs_law_across_alpha takes exactly two alphas".into()));
    }
    let lambda = ctx.f64_or("lambda", 1.0)?;
    let y0 = ctx.f64_or("y0", 0.0)?;
    let n = ctx.usize_or("steps", 10)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(2 * n_paths, n)?;
    let dt = ctx.horizon()? / n as f64;
    let mut samples = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        let p = SbbbmParams::new(lambda, a, y0)?;
        let seed = ctx.seed.wrapping_add(i as u64 + 1);
        let ys = terminal_values(&p, ctx.scheme_or(a)?, n, dt, seed, n_paths)?;
        samples.push(ys.iter().map(|y| y.abs()).collect::<Vec<_>>());
    }
    let d = ks_two_sample(&samples[0], &samples[1])?;
    Ok(Outcome::new(d, 2 * n_paths, json!({ "alphas": alphas, "p_value": kolmogorov_p_value(d, n_paths as f64 / 2.0) })))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let se = if xs.len() > 1 { (variance(xs) / xs.len() as f64).sqrt() } else { f64::NAN };
    (mean(xs), se)
}

/// Per-path statistics shared by the simulation checks and
/// [`convergence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatistic {
    /// `max |2 Lhat - Skorokhod(V_flat)|` with `V_flat` rebuilt from `(Y, W)`.
    SkorokhodIdentity,
    /// Max-norm residual of the rank equations.
    RankResidual,
    /// Max-norm residual of the single-local-time particle equations.
    SdeResidual,
}

impl std::str::FromStr for PathStatistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skorokhod_identity" => Ok(Self::SkorokhodIdentity),
            "rank_residual" => Ok(Self::RankResidual),
            "sde_residual" => Ok(Self::SdeResidual),
            other => Err(Error::Config(format!("no per-path statistic '{other}'"))),
        }
    }
}

fn skorokhod_error(sb: &SbbbmPath, lambda: f64) -> f64 {
    let vflat = reconstruct_vflat(&sb.y, &sb.w);
    let sk = running_max_local_time(sb.y[0].abs(), lambda, &vflat, sb.dt);
    sb.lhat.iter().zip(&sk).fold(0.0f64, |m, (l, s)| m.max((2.0 * l - s).abs()))
}

fn path_statistics(
    stat: PathStatistic,
    raw: &CollisionParams,
    scheme: Option<Scheme>,
    n: usize,
    dt: f64,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<f64>> {
    let d = derive(raw)?;
    let scheme = scheme.unwrap_or(Scheme::preferred(d.alpha));
    match stat {
        PathStatistic::SkorokhodIdentity => {
            let p = SbbbmParams::from_derived(&d, raw.x1 - raw.x2)?;
            simulate_batch(&p, scheme, n, dt, seed, n_paths, |_, sb| skorokhod_error(&sb, d.lambda))
        }
        PathStatistic::RankResidual | PathStatistic::SdeResidual => (0..n_paths as u64)
            .into_par_iter()
            .map(|id| {
                let pp = planar_path(raw, Some(scheme), n, dt, seed, id)?;
                let noise = pp.reconstruct_noise();
                Ok(if stat == PathStatistic::RankResidual {
                    let r = rank_paths(&pp, &noise);
                    r.leader_max.max(r.laggard_max)
                } else {
                    let r = verify_sde_residuals(&pp, &noise);
                    r.residual1_max.max(r.residual2_max)
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub check: String,
    pub n_paths: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Means strictly decreasing as `dt` decreases, for `dt` listed in
    /// decreasing order.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].mean < w[0].mean)
    }

    pub fn to_csv(&self) -> String {
        let col = |f: fn(&ConvergenceRow) -> f64| self.rows.iter().map(f).collect::<Vec<_>>();
        csv_table(&["dt", "mean", "std_error"], &[&col(|r| r.dt), &col(|r| r.mean), &col(|r| r.std_error)])
    }
}

/// Mean of a per-path statistic across grid resolutions. `check` is one of
/// `skorokhod_identity`, `rank_residual`, `sde_residual` (simulated from
/// `raw`) or `ks_marginal` (the terminal law of the gap against its CDF, one
/// KS distance per resolution). The same streams are used at every
/// resolution.
pub fn convergence_study(
    check: &str,
    dts: &[f64],
    n_paths: usize,
    raw: &CollisionParams,
    scheme: Option<Scheme>,
    horizon: f64,
    seed: u64,
) -> Result<ConvergenceTable> {
    if n_paths == 0 {
        return Err(Error::Config("convergence study needs n_paths > 0".into()));
    }
    if dts.len() < 3 {
        return Err(Error::Config(format!("convergence study needs at least 3 grids, got {}", dts.len())));
    }
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let n = steps_for(horizon, dt)?;
        let (m, se) = if check == "ks_marginal" {
            let d = derive(raw)?;
            let p = SbbbmParams::from_derived(&d, raw.x1 - raw.x2)?;
            let scheme = scheme.unwrap_or(Scheme::preferred(d.alpha));
            (marginal_ks(&p, scheme, n, dt, seed, n_paths)?.0, 0.0)
        } else {
            mean_and_se(&path_statistics(check.parse()?, raw, scheme, n, dt, seed, n_paths)?)
        };
        rows.push(ConvergenceRow { dt, mean: m, std_error: se });
    }
    Ok(ConvergenceTable { check: check.into(), n_paths, rows })
}

fn table_detail(t: &ConvergenceTable) -> serde_json::Value {
    json!(t.rows)
}

/// The Skorokhod representation of the collision local time, at the test's
/// `dt` and across a list of grids.
fn skorokhod_identity(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG2))?;
    let dt = ctx.dt()?;
    let mut dts = ctx.f64_list_or("dts", &[1e-3, 1e-4, 1e-5])?;
    if !dts.iter().any(|&x| x == dt) {
        dts.push(dt);
    }
    dts.sort_by(|a, b| b.total_cmp(a));
    let n_paths = ctx.n_paths()?;
    let finest = dts.last().copied().unwrap_or(dt);
    ctx.budget(n_paths, steps_for(ctx.horizon()?, finest)?)?;
    let scheme = Some(ctx.scheme_or(derive(&raw)?.alpha)?);
    let table = convergence_study("skorokhod_identity", &dts, n_paths, &raw, scheme, ctx.horizon()?, ctx.seed)?;
    let at = table.rows.iter().find(|r| r.dt == dt).expect("dt is in the list").mean;
    Ok(Outcome::new(at, n_paths * dts.len(), table_detail(&table))
        .require("strictly decreasing in dt", table.strictly_decreasing())
        .with_table(table.to_csv()))
}

/// `L^Z(T) / L^Y(T)` against `1 - alpha` on Euler paths: `L^Z` from the
/// natural-scale Tanaka formula, `L^Y` from the Tanaka formula of `Y`.
fn local_time_ratio(ctx: &CheckContext) -> Result<Outcome> {
    let alphas = ctx.f64_list_or("alphas", &[1.0 / 3.0, 0.5, 2.0 / 3.0])?;
    let lambda = ctx.f64_or("lambda", 1.0)?;
    let dt = ctx.dt()?;
    let n = steps_for(ctx.horizon()?, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        let p = SbbbmParams::new(lambda, a, ctx.f64_or("y0", 0.0)?)?;
        let seed = ctx.seed.wrapping_add(i as u64 + 1);
        let pairs = simulate_batch(&p, Scheme::EulerTransformed, n, dt, seed, n_paths, |_, sb| {
            let lz = sb.lz.as_ref().and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
            let ly = *tanaka_right_local_time(&sb.y, &sb.w, lambda, dt).last().expect("nonempty");
            (lz, ly)
        })?;
        let lz: f64 = pairs.iter().map(|p| p.0).sum();
        let ly: f64 = pairs.iter().map(|p| p.1).sum();
        let ratio = lz / ly;
        let rel = (ratio / (1.0 - a) - 1.0).abs();
        worst = max_of([worst, rel]);
        rows.push(json!({ "alpha": a, "ratio": ratio, "target": 1.0 - a, "relative_error": rel,
            "mean_lz": lz / n_paths as f64, "mean_ly": ly / n_paths as f64 }));
    }
    Ok(Outcome::new(worst, n_paths * alphas.len(), json!(rows)))
}

fn sde_residual(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG2))?;
    let dt = ctx.dt()?;
    let n = steps_for(ctx.horizon()?, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let scheme = Some(ctx.scheme_or(derive(&raw)?.alpha)?);
    let res = path_statistics(PathStatistic::SdeResidual, &raw, scheme, n, dt, ctx.seed, n_paths)?;
    let (m, se) = mean_and_se(&res);
    Ok(Outcome::new(m, n_paths, json!({ "std_error": se, "max": max_of(res.iter().copied()) })))
}

/// Realized covariations of the recovered name Brownian motions at the
/// horizon, averaged over paths.
fn noise_variation(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG2))?;
    let dt = ctx.dt()?;
    let horizon = ctx.horizon()?;
    let n = steps_for(horizon, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let scheme = Some(ctx.scheme_or(derive(&raw)?.alpha)?);
    let reps: Vec<(f64, f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|id| {
            let pp = planar_path(&raw, scheme, n, dt, ctx.seed, id)?;
            let r = verify_sde_residuals(&pp, &pp.reconstruct_noise());
            Ok((r.qv_b1, r.qv_b2, r.cov_b1_b2))
        })
        .collect::<Result<_>>()?;
    let qv1 = mean(&reps.iter().map(|r| r.0).collect::<Vec<_>>()) / horizon;
    let qv2 = mean(&reps.iter().map(|r| r.1).collect::<Vec<_>>()) / horizon;
    let cov = mean(&reps.iter().map(|r| r.2).collect::<Vec<_>>()) / horizon;
    Ok(Outcome::new(
        max_of([(qv1 - 1.0).abs(), (qv2 - 1.0).abs(), cov.abs()]),
        n_paths,
        json!({ "qv_b1": qv1, "qv_b2": qv2, "cov_b1_b2": cov }),
    ))
}

/// Number of grid points with `Y < 0` for `alpha = 1`, over every listed
/// scheme.
fn reflection_nonnegative(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG4))?;
    let d = derive(&raw)?;
    let p = SbbbmParams::from_derived(&d, raw.x1 - raw.x2)?;
    let dt = ctx.dt()?;
    let n = steps_for(ctx.horizon()?, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let mut negative = 0usize;
    let mut rows = Vec::new();
    for name in ["reflected", "exact"] {
        let scheme: Scheme = name.parse()?;
        let counts = simulate_batch(&p, scheme, n, dt, ctx.seed, n_paths, |_, sb| {
            sb.y.iter().filter(|&&y| y < 0.0).count()
        })?;
        let c: usize = counts.iter().sum();
        negative += c;
        rows.push(json!({ "scheme": scheme, "negative_points": c }));
    }
    Ok(Outcome::new(negative as f64, 2 * n_paths, json!({ "alpha": d.alpha, "schemes": rows })))
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
        self
    }

    fn correlation(&self) -> f64 {
        let cxy = self.sxy - self.sx * self.sy / self.n;
        let cxx = self.sxx - self.sx * self.sx / self.n;
        let cyy = self.syy - self.sy * self.sy / self.n;
        cxy / (cxx * cyy).sqrt()
    }
}

/// Pooled correlation of the per-step increments of the laggard and of the
/// collision local time, and of their values at the horizon.
fn laggard_correlation(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(BETA_ZERO))?;
    let d = derive(&raw)?;
    let dt = ctx.dt()?;
    let n = steps_for(ctx.horizon()?, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let scheme = Some(ctx.scheme_or(d.alpha)?);
    let parts: Vec<(Moments, f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|id| {
            let pp = planar_path(&raw, scheme, n, dt, ctx.seed, id)?;
            let mut m = Moments::default();
            for k in 0..pp.steps() {
                m.add(pp.r2[k + 1] - pp.r2[k], pp.lcol[k + 1] - pp.lcol[k]);
            }
            Ok((m, pp.r2[n] - pp.r2[0], pp.lcol[n]))
        })
        .collect::<Result<_>>()?;
    let pooled = parts.iter().fold(Moments::default(), |a, p| a.merge(p.0));
    let terminal = parts.iter().fold(Moments::default(), |mut a, p| {
        a.add(p.1, p.2);
        a
    });
    let r = pooled.correlation();
    Ok(Outcome::new(
        r.abs(),
        n_paths,
        json!({ "beta": d.beta, "increment_correlation": r, "terminal_correlation": terminal.correlation() }),
    ))
}

/// For `beta = 1` both rank local-time coefficients equal one half, and the
/// rank equations hold with them on simulated paths.
fn rank_coefficients(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG1))?;
    let d = derive(&raw)?;
    let dt = ctx.dt()?;
    let n = steps_for(ctx.horizon()?, dt)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, n)?;
    let pp = planar_path(&raw, None, n, dt, ctx.seed, 0)?;
    let r = rank_paths(&pp, &pp.reconstruct_noise());
    let res = path_statistics(PathStatistic::RankResidual, &raw, None, n, dt, ctx.seed, n_paths)?;
    let worst_residual = max_of(res);
    let coef = (r.leader_lt_coef - 0.5).abs().max((r.laggard_lt_coef - 0.5).abs());
    Ok(Outcome::new(
        coef,
        n_paths,
        json!({ "beta": d.beta, "leader": r.leader_lt_coef, "laggard": r.laggard_lt_coef, "max_rank_residual": worst_residual }),
    )
    .require("rank equations hold on the paths", worst_residual < 1e-9))
}

fn duality(ctx: &CheckContext) -> Result<Outcome> {
    let law = SkewLaw::new(ctx.f64_or("alpha", 2.0 / 3.0)?, ctx.f64_or("lambda", 1.0)?)?;
    let t = ctx.f64_or("t", 1.0)?;
    let pos = |x: f64| if x > 0.0 { 1.0 } else { 0.0 };
    let neg = |x: f64| if x < 0.0 { 1.0 } else { 0.0 };
    let one = |_: f64| 1.0;
    let smooth = |x: f64| (-x * x).exp();
    let cases = [
        ("f = g = 1{x > 0}", duality_residual(&law, t, pos, &[], pos, &[])?),
        ("f = 1{x > 0}, g = 1{x < 0}", duality_residual(&law, t, pos, &[], neg, &[])?),
        ("f = 1, g = exp(-x^2)", duality_residual(&law, t, one, &[], smooth, &[])?),
    ];
    let worst = max_of(cases.iter().map(|c| c.1));
    let detail: Vec<_> = cases.iter().map(|(n, r)| json!({ "functions": n, "residual": r })).collect();
    Ok(Outcome::new(worst, cases.len(), json!(detail)))
}

fn reversibility(ctx: &CheckContext) -> Result<Outcome> {
    let p = sbbbm_params(ctx, 2.0 / 3.0, 1.0, 0.0)?;
    let horizon = ctx.horizon()?;
    let t1 = ctx.f64_or("t1", 0.3 * horizon)?;
    let t2 = ctx.f64_or("t2", 0.6 * horizon)?;
    let n_paths = ctx.n_paths()?;
    ctx.budget(n_paths, 6)?;
    let r = reversibility_check(&p, horizon, n_paths, t1, t2, ctx.seed)?;
    Ok(Outcome::new(r.energy.p_value, r.n_paths, serde_json::to_value(&r).expect("report serializes")))
}

fn chapman_kolmogorov(ctx: &CheckContext) -> Result<Outcome> {
    let law = SkewLaw::new(ctx.f64_or("alpha", 2.0 / 3.0)?, ctx.f64_or("lambda", 1.0)?)?;
    let s = ctx.f64_or("s", 0.5)?;
    let t = ctx.f64_or("t", 0.5)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for &y0 in &[0.0, 0.7, -0.4] {
        let (lo, hi) = law.window(s, y0);
        for i in -12..=12 {
            let xi = 0.25 * i as f64 + 0.013;
            let lhs = integrate_with_breaks(|u| law.tdf(s, y0, u) * law.tdf(t, u, xi), lo, hi, &[0.0, y0, xi], 1e-10)?;
            worst = max_of([worst, (lhs.value - law.tdf(s + t, y0, xi)).abs()]);
            count += 1;
        }
    }
    Ok(Outcome::new(worst, count, json!({ "s": s, "t": t })))
}

/// A convergence study as a test: passes when the last mean is below the
/// threshold and, with `decreasing = true`, the means strictly decrease.
fn convergence(ctx: &CheckContext) -> Result<Outcome> {
    let raw = ctx.params_or(drag(FIG2))?;
    let what = ctx.str_or("statistic", "rank_residual")?;
    let dts = ctx.f64_list_or("dts", &[1e-3, 1e-4, 1e-5])?;
    let scheme = match ctx.str_or("scheme", "")?.as_str() {
        "" => ctx.spec.scheme.as_deref().map(str::parse).transpose()?,
        s => Some(s.parse()?),
    };
    let n_paths = ctx.n_paths()?;
    let finest = dts.iter().copied().fold(f64::INFINITY, f64::min);
    ctx.budget(n_paths, steps_for(ctx.horizon()?, finest)?)?;
    let table = convergence_study(&what, &dts, n_paths, &raw, scheme, ctx.horizon()?, ctx.seed)?;
    let last = table.rows.last().expect("at least three rows").mean;
    let mut out = Outcome::new(last, n_paths * dts.len(), table_detail(&table)).with_table(table.to_csv());
    if ctx.value_is_true("decreasing") {
        out = out.require("strictly decreasing in dt", table.strictly_decreasing());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NoiseStream;
    use crate::sbbbm::simulate;

    #[test]
    fn registry_names_are_unique() {
        let mut names = check_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
    }

    #[test]
    fn convergence_rejects_degenerate_input() {
        let raw = drag(FIG2);
        assert!(matches!(
            convergence_study("sde_residual", &[1e-2, 1e-3, 1e-4], 0, &raw, None, 1.0, 1),
            Err(Error::Config(_))
        ));
        assert!(matches!(convergence_study("sde_residual", &[1e-2, 1e-3], 4, &raw, None, 1.0, 1), Err(Error::Config(_))));
        assert!(convergence_study("nope", &[1e-1, 1e-2, 1e-3], 4, &raw, None, 1.0, 1).is_err());
    }

    #[test]
    fn convergence_csv_layout() {
        let t = convergence_study("skorokhod_identity", &[0.1, 0.01, 0.001], 8, &drag(FIG2), None, 1.0, 5).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("dt,mean,std_error\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn moments_correlation() {
        let mut m = Moments::default();
        for i in 0..10 {
            m.add(i as f64, 3.0 * i as f64 - 1.0);
        }
        assert!((m.correlation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_stream_of_planar_paths_is_fixed() {
        let a = planar_path(&drag(FIG2), None, 20, 0.05, 4, 3).unwrap();
        let b = planar_path(&drag(FIG2), None, 20, 0.05, 4, 3).unwrap();
        assert_eq!(a, b);
        let sb = simulate(
            &SbbbmParams::new(2.0, 2.0 / 3.0, 0.0).unwrap(),
            Scheme::ExactConditional,
            20,
            0.05,
            NoiseStream::new(4, 3),
        )
        .unwrap();
        assert_eq!(a.w, sb.w);
    }
}
