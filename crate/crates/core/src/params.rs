//! Collision parameters, their derived quantities and regime classification.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, WellPosedness};

/// Tolerance for the dispersion normalization `rho^2 + sigma^2 = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerance for the regime identities.
pub const REGIME_TOL: f64 = 1e-10;

/// Raw inputs of the two-particle system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionParams {
    pub zeta1: f64,
    pub zeta2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub g: f64,
    pub h: f64,
    pub rho: f64,
    pub sigma: f64,
    #[serde(default)]
    pub x1: f64,
    #[serde(default)]
    pub x2: f64,
}

impl CollisionParams {
    /// Drag coefficients `(zeta1, zeta2, eta1, eta2)` with `g = h = 1`,
    /// `rho = 0`, `sigma = 1` and both particles started at the origin.
    pub fn with_drag(zeta1: f64, zeta2: f64, eta1: f64, eta2: f64) -> Self {
        Self { zeta1, zeta2, eta1, eta2, g: 1.0, h: 1.0, rho: 0.0, sigma: 1.0, x1: 0.0, x2: 0.0 }
    }

    /// Parse a `key = value` config file. Keys are the field names; `x1` and
    /// `x2` default to zero.
    pub fn from_config_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_config_str(&text)
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("plain struct of floats always serializes")
    }

    fn check(&self) -> std::result::Result<(), WellPosedness> {
        let all = [
            self.zeta1, self.zeta2, self.eta1, self.eta2, self.g, self.h, self.rho, self.sigma,
            self.x1, self.x2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(WellPosedness::NonFinite);
        }
        if self.g < 0.0 || self.h < 0.0 || self.rho < 0.0 || self.sigma < 0.0 {
            return Err(WellPosedness::NegativeCoefficient);
        }
        if self.g + self.h <= 0.0 {
            return Err(WellPosedness::NonPositiveLambda);
        }
        if (self.rho * self.rho + self.sigma * self.sigma - 1.0).abs() > NORMALIZATION_TOL {
            return Err(WellPosedness::DispersionNotNormalized);
        }
        Ok(())
    }
}

/// Quantities derived once from [`CollisionParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub zeta_bar: f64,
    pub eta_bar: f64,
    pub lambda: f64,
    pub nu: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Validate `raw` and compute the derived parameters.
pub fn derive(raw: &CollisionParams) -> Result<DerivedParams> {
    raw.check()?;
    let zeta = 1.0 + (raw.zeta1 - raw.zeta2) / 2.0;
    let eta = 1.0 - (raw.eta1 - raw.eta2) / 2.0;
    let zeta_bar = (raw.zeta1 + raw.zeta2) / 2.0;
    let eta_bar = (raw.eta1 + raw.eta2) / 2.0;
    let sum = eta + zeta;
    if sum.abs() < NORMALIZATION_TOL {
        return Err(WellPosedness::EtaPlusZetaZero.into());
    }
    let mut alpha = eta / sum;
    if !(-NORMALIZATION_TOL..=1.0 + NORMALIZATION_TOL).contains(&alpha) {
        return Err(WellPosedness::AlphaOutOfRange.into());
    }
    alpha = alpha.clamp(0.0, 1.0);
    let beta = (eta * zeta_bar + zeta * eta_bar) / sum;
    let (rho, sigma) = (raw.rho, raw.sigma);
    Ok(DerivedParams {
        alpha,
        beta,
        zeta,
        eta,
        zeta_bar,
        eta_bar,
        lambda: raw.g + raw.h,
        nu: raw.g - raw.h,
        gamma: rho * rho - sigma * sigma,
        delta: 2.0 * rho * sigma,
        mu: raw.g * rho * rho - raw.h * sigma * sigma,
        kappa1: alpha - beta / 2.0,
        kappa2: 1.0 - alpha - beta / 2.0,
    })
}

impl DerivedParams {
    /// `kappa_j` from the drag coefficients of particle `j` directly:
    /// `2 kappa_j = alpha (1 - zeta_j) + (1 - alpha)(1 - eta_j)`.
    pub fn kappa_from_drag(&self, zeta_j: f64, eta_j: f64) -> f64 {
        0.5 * (self.alpha * (1.0 - zeta_j) + (1.0 - self.alpha) * (1.0 - eta_j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    PerfectReflectionFirst,
    PerfectReflectionSecond,
    FrictionlessBoth,
    FrictionlessFirstOnly,
    FrictionlessSecondOnly,
    LaggardUnfelt,
    LeaderUnfelt,
    SymmetricSkew,
    Generic,
}

/// Order used to pick [`Regime::tag`] when several conditions hold.
pub const TAG_PRIORITY: &str =
    "reflection > frictionless > laggard/leader unfelt > symmetric skew > generic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Every condition that holds, in priority order.
    pub matched: Vec<RegimeTag>,
    pub notes: Vec<String>,
    pub priority: String,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= REGIME_TOL
}

pub fn classify(d: &DerivedParams, raw: &CollisionParams) -> Regime {
    let both = near(raw.eta1 + raw.zeta1, 2.0) && near(raw.eta2 + raw.zeta2, 2.0);
    let first = near((1.0 - raw.zeta1) * d.eta + (1.0 - raw.eta1) * d.zeta, 0.0);
    let second = near((1.0 - raw.zeta2) * d.eta + (1.0 - raw.eta2) * d.zeta, 0.0);
    let checks = [
        (near(d.alpha, 1.0), RegimeTag::PerfectReflectionFirst, "alpha = 1: particle 1 reflects perfectly, Y >= 0"),
        (near(d.alpha, 0.0), RegimeTag::PerfectReflectionSecond, "alpha = 0: particle 2 reflects perfectly, Y <= 0"),
        (both, RegimeTag::FrictionlessBoth, "eta_j + zeta_j = 2 for both particles: no local-time drag"),
        (first && !both, RegimeTag::FrictionlessFirstOnly, "particle 1 feels no local-time drag"),
        (second && !both, RegimeTag::FrictionlessSecondOnly, "particle 2 feels no local-time drag"),
        (near(d.beta, 0.0), RegimeTag::LaggardUnfelt, "beta = 0: the laggard feels no local-time drag"),
        (near(d.beta, 2.0), RegimeTag::LeaderUnfelt, "beta = 2: the leader feels no local-time drag"),
        (near(d.alpha, 0.5), RegimeTag::SymmetricSkew, "alpha = 1/2: symmetric crossings"),
    ];
    let mut matched = Vec::new();
    let mut notes = Vec::new();
    for (hit, tag, note) in checks {
        if hit {
            matched.push(tag);
            notes.push(note.to_string());
        }
    }
    let tag = matched.first().copied().unwrap_or(RegimeTag::Generic);
    if matched.is_empty() {
        notes.push("no special-case identity holds".into());
    }
    Regime { tag, matched, notes, priority: TAG_PRIORITY.into() }
}

/// JSON document printed by the `params` subcommand.
pub fn describe(raw: &CollisionParams) -> Result<serde_json::Value> {
    let d = derive(raw)?;
    let r = classify(&d, raw);
    Ok(serde_json::json!({ "input": raw, "derived": d, "regime": r }))
}
