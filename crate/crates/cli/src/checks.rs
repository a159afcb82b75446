//! Registry of checks, their suites and the identities they test.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Basic,
    Angles,
    Palmer,
    Curvature,
    GaussCodazzi,
    Parallel,
    Gauge,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Basic,
        Suite::Angles,
        Suite::Palmer,
        Suite::Curvature,
        Suite::GaussCodazzi,
        Suite::Parallel,
        Suite::Gauge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Basic => "basic",
            Suite::Angles => "angles",
            Suite::Palmer => "palmer",
            Suite::Curvature => "curvature",
            Suite::GaussCodazzi => "gauss_codazzi",
            Suite::Parallel => "parallel",
            Suite::Gauge => "gauge",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| CliError::UnknownSuite(s.to_string()))
    }
}

/// When a check applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Always,
    /// Needs closed-form principal curvatures.
    Catalog,
    /// Umbilic and product examples, whose Gauss maps are totally geodesic.
    TotallyGeodesic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckInfo {
    pub id: &'static str,
    pub suite: Suite,
    pub anchor: &'static str,
    pub tolerance: f64,
    pub scope: Scope,
}

const fn check(
    id: &'static str,
    suite: Suite,
    anchor: &'static str,
    tolerance: f64,
    scope: Scope,
) -> CheckInfo {
    CheckInfo {
        id,
        suite,
        anchor,
        tolerance,
        scope,
    }
}

pub const CHECKS: &[CheckInfo] = &[
    check("lagrangian", Suite::Basic, "G is a Lagrangian immersion: g(dG X, J dG Y) = 0", 1e-6, Scope::Always),
    check("horizontality", Suite::Basic, "the canonical lift is horizontal: h(dG̃, G̃) = 0", 1e-7, Scope::Always),
    check("product_structure", Suite::Basic, "A is symmetric, involutive and anti-commutes with J", 1e-6, Scope::Always),
    check("bc_algebra", Suite::Basic, "B and C commute and B² + C² = I", 1e-6, Scope::Always),
    check("golden_lambda", Suite::Basic, "principal curvatures equal the closed forms of the example", 1e-5, Scope::Catalog),
    check("theta_lambda", Suite::Angles, "λ_j = cot θ_j", 1e-5, Scope::Always),
    check(
        "theta_lambda_gauge_free",
        Suite::Angles,
        "cot(θ_j − θ_k) = ±(λ_jλ_k + 1)/(λ_j − λ_k) where λ_j ≠ λ_k",
        1e-4,
        Scope::Always,
    ),
    check("golden_angle", Suite::Angles, "θ_j = arccot of the closed-form λ_j mod π", 1e-5, Scope::Catalog),
    check(
        "theta_derivatives",
        Suite::Angles,
        "e_i(θ_j − θ_k) = h_jj^i − h_kk^i and sin(θ_j − θ_k) ω_j^k(e_i) = cos(θ_j − θ_k) h_ij^k",
        1e-4,
        Scope::Always,
    ),
    check("palmer", Suite::Palmer, "g(JH, ·) = (1/n) d(Σ arctan λ_j)", 1e-5, Scope::Always),
    check("minimal", Suite::Palmer, "H = 0 and d(Σ arctan λ_j) = 0 for isoparametric examples", 1e-6, Scope::TotallyGeodesic),
    check(
        "sectional_curvature",
        Suite::Curvature,
        "K(e_i, e_j) = −2cos²(θ_i − θ_j) + Σ_m (h_ii^m h_jj^m − (h_ij^m)²)",
        1e-4,
        Scope::Always,
    ),
    check("constant_curvature", Suite::Curvature, "c = −2 for the umbilic example and c = 0 for the product", 1e-5, Scope::TotallyGeodesic),
    check("totally_geodesic", Suite::Curvature, "h = 0", 1e-6, Scope::TotallyGeodesic),
    check("gauss_equation", Suite::GaussCodazzi, "R_ijkl = δ_ikδ_jl − δ_jkδ_il + B_ikB_jl − B_jkB_il + C_ikC_jl − C_jkC_il + Σ_m (h_jk^m h_il^m − h_ik^m h_jl^m)", 1e-4, Scope::Always),
    check("codazzi_equation", Suite::GaussCodazzi, "(∇_i h)_jkl − (∇_j h)_ikl = B_jkC_il − B_ikC_jl − C_jkB_il + C_ikB_jl", 1e-4, Scope::Always),
    check("parallel_invariance", Suite::Parallel, "parallel hypersurfaces cos t·a + sin t·b have the same Gauss map", 1e-6, Scope::Always),
    check("gauge_shift", Suite::Gauge, "θ_j = θ⁰_j − φ/2 under A ↦ cos φ·A + sin φ·JA", 1e-6, Scope::Always),
    check("gauge_normalize", Suite::Gauge, "θ_1 + ⋯ + θ_n = 0 mod π", 1e-7, Scope::Always),
];

pub fn check_by_id(id: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.id == id)
}

pub fn checks_in(suite: Suite) -> impl Iterator<Item = &'static CheckInfo> {
    CHECKS.iter().filter(move |c| c.suite == suite)
}

/// One line per check, `id: anchor`.
pub fn list_checks(suite: Option<&str>) -> Result<Vec<String>, CliError> {
    let filter = suite.map(Suite::from_str).transpose()?;
    Ok(CHECKS
        .iter()
        .filter(|c| filter.is_none_or(|s| c.suite == s))
        .map(|c| format!("{}: {}", c.id, c.anchor))
        .collect())
}
