//! Society parameters and the steady-state mean-quality fixed point.
//!
//! In steady state every good-quality agent drifts at `R₁ = (1-w) + w·Q̄`
//! and every bad-quality agent at `R₋₁ = -(1-w) + w·Q̄`. The stationary
//! welfare density is exponential on each side of zero and the mean quality
//! must reproduce itself:
//!
//! ```text
//! Q̄ = g(Q̄),   g(z) = e^{-u} / (2 - e^{-u}),   u = λ_d r / (1 - w - w z)
//! ```
//!
//! `g` is strictly decreasing wherever `1 - w - w z > 0`, so `g(z) - z` has a
//! single sign change and bisection on `[0, min(1, (1-w)/w))` always brackets it.

use serde::{Deserialize, Serialize};

use crate::error::{CoevoError, Result};

/// Threshold on `λ_d·r` separating monotone from U-shaped lifetime curves.
pub const THETA_STAR: f64 = 0.534_799_996_739_570_3; // ln(1 + √2/2)

/// Mean quality at which the average lifetime is stationary.
pub const LIFETIME_TURNING_QUALITY: f64 = std::f64::consts::SQRT_2 - 1.0;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_BISECTION_ITERS: usize = 200;

/// Exponents above this are treated as `e^{-u} = 0`.
const EXP_CUTOFF: f64 = 700.0;

/// Upper brackets below this are indistinguishable from the w = 1 point mass.
const NEAR_DEGENERATE_BRACKET: f64 = 1e-8;

/// The four exogenous parameters characterizing a society.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocietyParams {
    /// Birth mass per unit time.
    pub lambda_b: f64,
    /// Natural death hazard.
    pub lambda_d: f64,
    /// Magnitude of the death boundary; agents die when welfare reaches `-r`.
    pub r: f64,
    /// Collectivism weight in `[0, 1]`.
    pub w: f64,
}

impl SocietyParams {
    /// Validates and builds a parameter set.
    pub fn new(lambda_b: f64, lambda_d: f64, r: f64, w: f64) -> Result<Self> {
        positive("lambda_b", lambda_b)?;
        positive("lambda_d", lambda_d)?;
        positive("r", r)?;
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(CoevoError::domain("w", format!("must lie in [0, 1], got {w}")));
        }
        Ok(Self {
            lambda_b,
            lambda_d,
            r,
            w,
        })
    }

    /// Re-checks the invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<Self> {
        Self::new(self.lambda_b, self.lambda_d, self.r, self.w)
    }

    /// Returns a copy with one named parameter replaced and re-validated.
    pub fn with(&self, name: ParamName, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            ParamName::LambdaB => p.lambda_b = value,
            ParamName::LambdaD => p.lambda_d = value,
            ParamName::R => p.r = value,
            ParamName::W => p.w = value,
        }
        p.validate()
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::LambdaB => self.lambda_b,
            ParamName::LambdaD => self.lambda_d,
            ParamName::R => self.r,
            ParamName::W => self.w,
        }
    }

    /// Supremum of admissible arguments of `g`: `(1-w)/w`, infinite at w = 0.
    pub fn quality_ceiling(&self) -> f64 {
        if self.w == 0.0 {
            f64::INFINITY
        } else {
            (1.0 - self.w) / self.w
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(CoevoError::domain(field, format!("must be finite, got {v}")));
    }
    if v <= 0.0 {
        return Err(CoevoError::domain(field, format!("must be > 0, got {v}")));
    }
    Ok(())
}

/// Names of the sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    LambdaB,
    LambdaD,
    R,
    W,
}

impl ParamName {
    pub const ALL: [ParamName; 4] = [
        ParamName::LambdaB,
        ParamName::LambdaD,
        ParamName::R,
        ParamName::W,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ParamName::LambdaB => "lambda_b",
            ParamName::LambdaD => "lambda_d",
            ParamName::R => "r",
            ParamName::W => "w",
        }
    }
}

impl std::str::FromStr for ParamName {
    type Err = CoevoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda_b" | "lambda-b" => Ok(ParamName::LambdaB),
            "lambda_d" | "lambda-d" => Ok(ParamName::LambdaD),
            "r" => Ok(ParamName::R),
            "w" => Ok(ParamName::W),
            other => Err(CoevoError::domain(
                "param",
                format!("unknown parameter {other:?} (expected lambda_b, lambda_d, r or w)"),
            )),
        }
    }
}

impl std::fmt::Display for ParamName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Intrinsic quality of an individual, fixed at birth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Good,
    Bad,
}

impl Quality {
    /// `+1` or `-1`.
    pub fn sign(self) -> f64 {
        match self {
            Quality::Good => 1.0,
            Quality::Bad => -1.0,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Quality::Good => 0,
            Quality::Bad => 1,
        }
    }
}

/// `e^{-u} / (2 - e^{-u})` with the overflow guard applied.
fn quality_from_exponent(u: f64) -> f64 {
    if u > EXP_CUTOFF {
        return 0.0;
    }
    let e = (-u).exp();
    e / (2.0 - e)
}

/// Self-consistency map `g(z)`: the mean quality implied by assuming mean quality `z`.
pub fn quality_map(params: &SocietyParams, z: f64) -> Result<f64> {
    if params.w >= 1.0 {
        return Err(CoevoError::Degenerate("g(z)"));
    }
    let decay = 1.0 - params.w - params.w * z;
    if !z.is_finite() || decay <= 0.0 {
        return Err(CoevoError::domain(
            "z",
            format!(
                "must be below (1-w)/w = {}, got {z}",
                params.quality_ceiling()
            ),
        ));
    }
    Ok(quality_from_exponent(params.lambda_d * params.r / decay))
}

/// `g(z) - z`; strictly decreasing in `z`.
pub fn fixed_point_residual(params: &SocietyParams, z: f64) -> Result<f64> {
    Ok(quality_map(params, z)? - z)
}

/// Upper end of the bisection bracket, or `None` when the society is
/// (numerically) purely collectivistic.
fn upper_bracket(params: &SocietyParams) -> Option<f64> {
    if params.w >= 1.0 {
        return None;
    }
    let ceiling = params.quality_ceiling();
    let upper = if ceiling > 1.0 {
        // g(1) is finite and below 1, so the bracket can include 1 itself.
        1.0
    } else {
        ceiling - 1e-9 * ceiling.max(1.0)
    };
    if upper < NEAR_DEGENERATE_BRACKET {
        None
    } else {
        Some(upper)
    }
}

/// Below this a bisection root carries mostly absolute error, so it is refined.
const SMALL_ROOT: f64 = 1e-6;

/// Refines a tiny root to full relative precision by iterating `z ← g(z)`,
/// which contracts strongly there since `g` is nearly flat. The iterate is
/// kept only while it stays inside the bisection bracket.
fn polish_small_root(params: &SocietyParams, z: f64, lo: f64, hi: f64) -> f64 {
    if z >= SMALL_ROOT {
        return z;
    }
    let mut z = z;
    for _ in 0..16 {
        let Ok(next) = quality_map(params, z) else {
            break;
        };
        if !(lo..=hi).contains(&next) || next == z {
            break;
        }
        z = next;
    }
    z
}

/// Solves `Q̄ = g(Q̄)` by bisection.
///
/// Returns exactly 0 for a purely collectivistic society. Stops once both the
/// bracket width and `|g(q) - q|` are within `tol`.
pub fn solve_mean_quality(params: &SocietyParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(CoevoError::domain("tol", format!("must be > 0, got {tol}")));
    }
    let Some(upper) = upper_bracket(params) else {
        if params.w < 1.0 {
            log::warn!(
                "w = {} is within numerical noise of 1; treating the society as degenerate",
                params.w
            );
        }
        return Ok(0.0);
    };

    let mut lo = 0.0;
    let mut hi = upper;
    let res_lo = fixed_point_residual(params, lo)?;
    if res_lo <= 0.0 {
        // Only reachable through the exponent cutoff: g(0) == 0.
        return Ok(0.0);
    }
    let res_hi = fixed_point_residual(params, hi)?;
    if res_hi >= 0.0 {
        // Root squeezed against the singular point (λ_d r vanishingly small).
        return Ok(hi);
    }

    let mut res = res_lo;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        res = fixed_point_residual(params, mid)?;
        if res == 0.0 {
            return Ok(mid);
        }
        if res > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol && res.abs() <= tol {
            return Ok(polish_small_root(params, mid, lo, hi));
        }
        let next = 0.5 * (lo + hi);
        if next == lo || next == hi {
            // Bracket exhausted at floating-point resolution.
            break;
        }
    }
    Err(CoevoError::Convergence {
        iterations: MAX_BISECTION_ITERS,
        residual: res,
    })
}

/// Solved steady state and the rates derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub q_bar: f64,
    /// Welfare drift of good-quality agents, `R₁`.
    pub rate_good: f64,
    /// Welfare drift of bad-quality agents, `R₋₁`.
    pub rate_bad: f64,
    /// Decay constant of the positive-side density, `λ_d / R₁`. Absent when degenerate.
    pub lambda1: Option<f64>,
    /// Decay constant of the negative-side density, `λ_d / |R₋₁|`. Absent when degenerate.
    pub lambda2: Option<f64>,
    pub mass_good: f64,
    pub mass_bad: f64,
    pub degenerate: bool,
}

impl SteadyState {
    /// `(λ₁, λ₂)`, or a degenerate-state error naming `what`.
    pub fn decay_constants(&self, what: &'static str) -> Result<(f64, f64)> {
        match (self.lambda1, self.lambda2) {
            (Some(l1), Some(l2)) if !self.degenerate => Ok((l1, l2)),
            _ => Err(CoevoError::Degenerate(what)),
        }
    }
}

/// Solves the steady state with the default tolerance.
pub fn steady_state(params: &SocietyParams) -> Result<SteadyState> {
    steady_state_with_tol(params, DEFAULT_TOL)
}

pub fn steady_state_with_tol(params: &SocietyParams, tol: f64) -> Result<SteadyState> {
    let params = params.validate()?;
    let q_bar = solve_mean_quality(&params, tol)?;
    if upper_bracket(&params).is_none() {
        return Ok(SteadyState {
            q_bar: 0.0,
            rate_good: 0.0,
            rate_bad: 0.0,
            lambda1: None,
            lambda2: None,
            mass_good: 0.5,
            mass_bad: 0.5,
            degenerate: true,
        });
    }
    let w = params.w;
    let rate_good = (1.0 - w) + w * q_bar;
    let rate_bad = -(1.0 - w) + w * q_bar;
    Ok(SteadyState {
        q_bar,
        rate_good,
        rate_bad,
        lambda1: Some(params.lambda_d / rate_good),
        lambda2: Some(params.lambda_d / -rate_bad),
        mass_good: 0.5 * (1.0 + q_bar),
        mass_bad: 0.5 * (1.0 - q_bar),
        degenerate: false,
    })
}
