//! Comparative-statics sweeps and numerical checks of the model's monotonicity claims.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoevoError, Result};
use crate::metrics::{evaluate, SocietyMetrics};
use crate::steady_state::{
    fixed_point_residual, steady_state, ParamName, SocietyParams, LIFETIME_TURNING_QUALITY, THETA_STAR,
};

/// Absolute tolerance on successive differences.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Default `ε` of the cumulative-welfare-vs-boundary guard.
pub const DEFAULT_EPSILON: f64 = 0.2;

/// `λ_d · r` used as a stand-in for `r → ∞`.
pub const LARGE_R: f64 = 200.0;

/// Allowed gap between the quality at the lifetime minimum and `√2 − 1`.
pub const TURNING_QUALITY_TOL: f64 = 1e-6;

/// Default uniqueness scan step.
pub const DEFAULT_SCAN_STEP: f64 = 1e-4;

const BOUNDARY_CASE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    QBar,
    Pop,
    XBar,
    TBar,
    VarX,
    Cf,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::QBar,
        Metric::Pop,
        Metric::XBar,
        Metric::TBar,
        Metric::VarX,
        Metric::Cf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::QBar => "q_bar",
            Metric::Pop => "pop",
            Metric::XBar => "x_bar",
            Metric::TBar => "t_bar",
            Metric::VarX => "var_x",
            Metric::Cf => "cf",
        }
    }

    pub fn of(&self, m: &SocietyMetrics) -> f64 {
        match self {
            Metric::QBar => m.q_bar,
            Metric::Pop => m.pop,
            Metric::XBar => m.x_bar,
            Metric::TBar => m.t_bar,
            Metric::VarX => m.var_x,
            Metric::Cf => m.cf,
        }
    }

    pub fn evaluate(&self, params: &SocietyParams) -> Result<f64> {
        Ok(self.of(&evaluate(params)?.1))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = CoevoError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| CoevoError::domain("metric", format!("unknown metric {s:?}")))
    }
}

/// One comparative-statics experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SocietyParams,
    pub param: ParamName,
    pub grid: Vec<f64>,
    pub metric: Metric,
    /// Human-readable region in which a claim is asserted, e.g. `"w < 1/2"`.
    pub guard: Option<String>,
}

impl SweepSpec {
    pub fn new(base: SocietyParams, param: ParamName, grid: Vec<f64>, metric: Metric) -> Self {
        SweepSpec {
            base,
            param,
            grid,
            metric,
            guard: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < 3 {
            return Err(CoevoError::domain("grid", format!("needs at least 3 points, got {}", self.grid.len())));
        }
        if self.grid.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(CoevoError::domain("grid", "must be strictly increasing"));
        }
        for &v in &self.grid {
            self.base.with(self.param, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MonotoneIncreasing,
    MonotoneDecreasing,
    DecreasesThenIncreases,
    NonMonotoneOther,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::MonotoneIncreasing => "monotone-increasing",
            Verdict::MonotoneDecreasing => "monotone-decreasing",
            Verdict::DecreasesThenIncreases => "decreases-then-increases",
            Verdict::NonMonotoneOther => "non-monotone-other",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub metric_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: ParamName,
    pub metric: Metric,
    pub base: SocietyParams,
    pub guard: Option<String>,
    /// Name of the claim this sweep certifies, if any.
    pub tag: Option<String>,
    pub points: Vec<SweepPoint>,
    /// A constant series is reported as `MonotoneIncreasing` with `flat = true`.
    pub verdict: Verdict,
    pub flat: bool,
    /// Grid point of the minimum when the verdict is `DecreasesThenIncreases`.
    pub turning_point: Option<f64>,
}

impl SweepReport {
    pub fn non_decreasing(&self) -> bool {
        self.verdict == Verdict::MonotoneIncreasing
    }

    pub fn non_increasing(&self) -> bool {
        self.verdict == Verdict::MonotoneDecreasing || self.flat
    }

    pub fn errors(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Successfully evaluated `(value, metric)` pairs.
    pub fn table(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.metric_value.map(|m| (p.value, m)))
            .collect()
    }
}

/// Shape classification of a series under the difference tolerance.
///
/// Returns the verdict, the flat flag and the index of the minimum for
/// decreases-then-increases series.
pub fn classify(values: &[f64], tol: f64) -> (Verdict, bool, Option<usize>) {
    let signs: Vec<i8> = values
        .windows(2)
        .map(|p| {
            let d = p[1] - p[0];
            if d > tol {
                1
            } else if d < -tol {
                -1
            } else {
                0
            }
        })
        .filter(|&s| s != 0)
        .collect();
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return (Verdict::NonMonotoneOther, false, None);
    }
    if signs.is_empty() {
        return (Verdict::MonotoneIncreasing, true, None);
    }
    if signs.iter().all(|&s| s > 0) {
        return (Verdict::MonotoneIncreasing, false, None);
    }
    if signs.iter().all(|&s| s < 0) {
        return (Verdict::MonotoneDecreasing, false, None);
    }
    let first_up = signs.iter().position(|&s| s > 0).unwrap_or(signs.len());
    if signs[0] < 0 && signs[first_up..].iter().all(|&s| s > 0) {
        let argmin = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i);
        return (Verdict::DecreasesThenIncreases, false, argmin);
    }
    (Verdict::NonMonotoneOther, false, None)
}

/// Evaluates `spec.metric` at every grid point in parallel; per-point failures
/// are recorded and excluded from the verdict.
pub fn sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let points: Vec<SweepPoint> = spec
        .grid
        .par_iter()
        .map(|&v| {
            match spec.base.with(spec.param, v).and_then(|p| spec.metric.evaluate(&p)) {
                Ok(m) => SweepPoint {
                    value: v,
                    metric_value: Some(m),
                    error: None,
                },
                Err(e) => SweepPoint {
                    value: v,
                    metric_value: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.metric_value.map(|m| (p.value, m)))
        .collect();
    let values: Vec<f64> = ok.iter().map(|&(_, m)| m).collect();
    let (verdict, flat, argmin) = classify(&values, MONOTONE_TOL);
    Ok(SweepReport {
        param: spec.param,
        metric: spec.metric,
        base: spec.base,
        guard: spec.guard.clone(),
        tag: None,
        points,
        verdict,
        flat,
        turning_point: argmin.map(|i| ok[i].0),
    })
}

/// `{0, 0.05, …, 1}`.
pub fn default_w_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// `{0.25, 0.5, 1, 2, 4}`.
pub fn default_log_grid() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}

/// Inserts the midpoint of every interval.
pub fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for (i, &v) in grid.iter().enumerate() {
        if i > 0 {
            out.push(0.5 * (grid[i - 1] + v));
        }
        out.push(v);
    }
    out
}

/// Expected shape of a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Non-decreasing and not constant.
    Increasing,
    /// Non-increasing and not constant.
    Decreasing,
    NonIncreasing,
    NonDecreasing,
    DecreasesThenIncreases,
    /// First grid value strictly above the last, and the last equal to zero.
    FirstAboveZeroLast,
}

impl Expectation {
    fn holds(&self, report: &SweepReport) -> bool {
        if report.errors() > 0 {
            return false;
        }
        match self {
            Expectation::Increasing => report.verdict == Verdict::MonotoneIncreasing && !report.flat,
            Expectation::Decreasing => report.verdict == Verdict::MonotoneDecreasing,
            Expectation::NonIncreasing => report.non_increasing(),
            Expectation::NonDecreasing => report.non_decreasing(),
            Expectation::DecreasesThenIncreases => report.verdict == Verdict::DecreasesThenIncreases,
            Expectation::FirstAboveZeroLast => {
                let t = report.table();
                match (t.first(), t.last()) {
                    (Some(&(_, first)), Some(&(_, last))) => last == 0.0 && first > last,
                    _ => false,
                }
            }
        }
    }
}

/// Every comparative-statics claim checked by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    QualityFallsWithCollectivism,
    QualityFallsWithDeathRate,
    QualityFallsWithBoundary,
    WelfareFallsWithCollectivism,
    WelfareFallsWithDeathRate,
    WelfareFallsWithBoundary,
    PopulationRisesWithBirthRate,
    PopulationRisesWithCollectivism,
    PopulationRisesWithBoundary,
    /// Guarded by `w < 1/2`.
    PopulationFallsWithDeathRate,
    CumulativeRisesWithBirthRate,
    CumulativeFallsWithDeathRate,
    /// Guarded by `λ_d·r ≤ ε < 1/2` and `w < 1/2 − ε`.
    CumulativeFallsWithBoundary,
    CumulativeFallsWithCollectivism,
    LifetimeFallsWithDeathRate,
    /// Monotone for `λ_d·r > θ*`, U-shaped below.
    LifetimeVsCollectivism,
    /// Non-decreasing in `r` once `λ_d·r > θ*`.
    LifetimeRisesWithBoundaryAboveThreshold,
    /// U-shaped over the full `r` range; guarded by `w < 1/2`.
    LifetimeVsBoundary,
    InequalityIndividualistAboveCollectivist,
    LimitInequalityFallsWithCollectivism,
    LimitInequalityFallsWithDeathRate,
}

impl Claim {
    pub const ALL: [Claim; 21] = [
        Claim::QualityFallsWithCollectivism,
        Claim::QualityFallsWithDeathRate,
        Claim::QualityFallsWithBoundary,
        Claim::WelfareFallsWithCollectivism,
        Claim::WelfareFallsWithDeathRate,
        Claim::WelfareFallsWithBoundary,
        Claim::PopulationRisesWithBirthRate,
        Claim::PopulationRisesWithCollectivism,
        Claim::PopulationRisesWithBoundary,
        Claim::PopulationFallsWithDeathRate,
        Claim::CumulativeRisesWithBirthRate,
        Claim::CumulativeFallsWithDeathRate,
        Claim::CumulativeFallsWithBoundary,
        Claim::CumulativeFallsWithCollectivism,
        Claim::LifetimeFallsWithDeathRate,
        Claim::LifetimeVsCollectivism,
        Claim::LifetimeRisesWithBoundaryAboveThreshold,
        Claim::LifetimeVsBoundary,
        Claim::InequalityIndividualistAboveCollectivist,
        Claim::LimitInequalityFallsWithCollectivism,
        Claim::LimitInequalityFallsWithDeathRate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Claim::QualityFallsWithCollectivism => "quality_falls_with_collectivism",
            Claim::QualityFallsWithDeathRate => "quality_falls_with_death_rate",
            Claim::QualityFallsWithBoundary => "quality_falls_with_boundary",
            Claim::WelfareFallsWithCollectivism => "welfare_falls_with_collectivism",
            Claim::WelfareFallsWithDeathRate => "welfare_falls_with_death_rate",
            Claim::WelfareFallsWithBoundary => "welfare_falls_with_boundary",
            Claim::PopulationRisesWithBirthRate => "population_rises_with_birth_rate",
            Claim::PopulationRisesWithCollectivism => "population_rises_with_collectivism",
            Claim::PopulationRisesWithBoundary => "population_rises_with_boundary",
            Claim::PopulationFallsWithDeathRate => "population_falls_with_death_rate",
            Claim::CumulativeRisesWithBirthRate => "cumulative_rises_with_birth_rate",
            Claim::CumulativeFallsWithDeathRate => "cumulative_falls_with_death_rate",
            Claim::CumulativeFallsWithBoundary => "cumulative_falls_with_boundary",
            Claim::CumulativeFallsWithCollectivism => "cumulative_falls_with_collectivism",
            Claim::LifetimeFallsWithDeathRate => "lifetime_falls_with_death_rate",
            Claim::LifetimeVsCollectivism => "lifetime_vs_collectivism",
            Claim::LifetimeRisesWithBoundaryAboveThreshold => "lifetime_rises_with_boundary_above_threshold",
            Claim::LifetimeVsBoundary => "lifetime_vs_boundary",
            Claim::InequalityIndividualistAboveCollectivist => "inequality_individualist_above_collectivist",
            Claim::LimitInequalityFallsWithCollectivism => "limit_inequality_falls_with_collectivism",
            Claim::LimitInequalityFallsWithDeathRate => "limit_inequality_falls_with_death_rate",
        }
    }

    /// `Err(GuardViolation)` when the claim is not stated at `base`.
    pub fn guard(&self, base: &SocietyParams, epsilon: f64) -> Result<()> {
        let violation = |reason: String| {
            Err(CoevoError::GuardViolation {
                claim: self.as_str(),
                reason,
            })
        };
        match self {
            Claim::PopulationFallsWithDeathRate if base.w >= 0.5 => violation(format!("needs w < 1/2, got {}", base.w)),
            Claim::CumulativeFallsWithBoundary => {
                if !(epsilon > 0.0 && epsilon < 0.5) {
                    return violation(format!("needs 0 < ε < 1/2, got {epsilon}"));
                }
                if base.w >= 0.5 - epsilon {
                    return violation(format!("needs w < 1/2 - ε = {}, got {}", 0.5 - epsilon, base.w));
                }
                Ok(())
            }
            Claim::LifetimeVsBoundary if base.w >= 0.5 => violation(format!("needs w < 1/2, got {}", base.w)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Claim {
    type Err = CoevoError;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| CoevoError::domain("claim", format!("unknown claim {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub claim: Claim,
    pub expected: Expectation,
    pub report: SweepReport,
    pub pass: bool,
    /// `λ_d·r` sits on `θ*` (within round-off).
    pub boundary_case: bool,
    /// Refined minimizer of the swept metric, for U-shaped claims.
    pub turning_point: Option<f64>,
    pub quality_at_turn: Option<f64>,
}

/// Minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn merged(mut grid: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    grid.extend_from_slice(extra);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    grid
}

fn run_claim(
    claim: Claim,
    spec: SweepSpec,
    expected: Expectation,
) -> Result<(SweepReport, bool)> {
    let mut report = sweep(&spec)?;
    report.tag = Some(claim.as_str().to_string());
    let pass = expected.holds(&report);
    Ok((report, pass))
}

fn refined(grid: Vec<f64>, times: u32) -> Vec<f64> {
    (0..times).fold(grid, |g, _| refine(&g))
}

fn simple(
    claim: Claim,
    base: &SocietyParams,
    param: ParamName,
    grid: Vec<f64>,
    metric: Metric,
    expected: Expectation,
    refinements: u32,
) -> Result<TheoremCheck> {
    let spec = SweepSpec::new(*base, param, refined(grid, refinements), metric);
    let (report, pass) = run_claim(claim, spec, expected)?;
    Ok(TheoremCheck {
        claim,
        expected,
        report,
        pass,
        boundary_case: false,
        turning_point: None,
        quality_at_turn: None,
    })
}

fn scaled(grid: Vec<f64>, by: f64) -> Vec<f64> {
    grid.into_iter().map(|v| v * by).collect()
}

fn t_bar_at(base: &SocietyParams, param: ParamName, v: f64) -> f64 {
    base.with(param, v)
        .and_then(|p| Metric::TBar.evaluate(&p))
        .unwrap_or(f64::INFINITY)
}

fn q_bar_at(base: &SocietyParams, param: ParamName, v: f64) -> Result<f64> {
    Ok(steady_state(&base.with(param, v)?)?.q_bar)
}

/// U-shaped lifetime check: locate the minimizer by golden section, add it and
/// its neighbourhood to the grid, then require a decreases-then-increases
/// verdict and `Q̄ = √2 − 1` at the minimizer.
fn u_shaped_lifetime(
    claim: Claim,
    base: &SocietyParams,
    param: ParamName,
    grid: Vec<f64>,
    (lo, hi): (f64, f64),
    refinements: u32,
) -> Result<TheoremCheck> {
    let turn = golden_section_min(|v| t_bar_at(base, param, v), lo, hi, 1e-12 * hi.max(1.0));
    let q_turn = q_bar_at(base, param, turn)?;
    let grid = merged(refined(grid, refinements), &[0.5 * (lo + turn), turn, 0.5 * (turn + hi)]);
    let spec = SweepSpec {
        guard: Some(format!("{} = {:.6} < θ*", "λ_d·r", base.lambda_d * base.r)),
        ..SweepSpec::new(*base, param, grid, Metric::TBar)
    };
    let expected = Expectation::DecreasesThenIncreases;
    let (report, shape_ok) = run_claim(claim, spec, expected)?;
    let pass = shape_ok && (q_turn - LIFETIME_TURNING_QUALITY).abs() <= TURNING_QUALITY_TOL;
    Ok(TheoremCheck {
        claim,
        expected,
        report,
        pass,
        boundary_case: false,
        turning_point: Some(turn),
        quality_at_turn: Some(q_turn),
    })
}

/// Runs a single claim at `base`.
pub fn check_claim(claim: Claim, base: &SocietyParams, epsilon: f64) -> Result<TheoremCheck> {
    check_claim_refined(claim, base, epsilon, 0)
}

/// [`check_claim`] with each sweep grid refined `refinements` times by [`refine`].
pub fn check_claim_refined(claim: Claim, base: &SocietyParams, epsilon: f64, refinements: u32) -> Result<TheoremCheck> {
    use Expectation::*;
    use Metric::*;
    use ParamName::{LambdaB, LambdaD, R, W};
    let base = base.validate()?;
    claim.guard(&base, epsilon)?;
    let wg = default_w_grid;
    let lg = default_log_grid;
    let tau = 1.0 / base.lambda_d;
    match claim {
        Claim::QualityFallsWithCollectivism => simple(claim, &base, W, wg(), QBar, NonIncreasing, refinements),
        Claim::QualityFallsWithDeathRate => simple(claim, &base, LambdaD, lg(), QBar, NonIncreasing, refinements),
        Claim::QualityFallsWithBoundary => simple(claim, &base, R, lg(), QBar, NonIncreasing, refinements),
        Claim::WelfareFallsWithCollectivism => simple(claim, &base, W, wg(), XBar, NonIncreasing, refinements),
        Claim::WelfareFallsWithDeathRate => simple(claim, &base, LambdaD, lg(), XBar, NonIncreasing, refinements),
        Claim::WelfareFallsWithBoundary => simple(claim, &base, R, lg(), XBar, NonIncreasing, refinements),
        Claim::PopulationRisesWithBirthRate => simple(claim, &base, LambdaB, lg(), Pop, Increasing, refinements),
        Claim::PopulationRisesWithCollectivism => simple(claim, &base, W, wg(), Pop, NonDecreasing, refinements),
        Claim::PopulationRisesWithBoundary => simple(claim, &base, R, lg(), Pop, NonDecreasing, refinements),
        Claim::PopulationFallsWithDeathRate => {
            let mut c = simple(claim, &base, LambdaD, lg(), Pop, Decreasing, refinements)?;
            c.report.guard = Some("w < 1/2".into());
            Ok(c)
        }
        // Exactly proportional to λ_b; at large λ_d·r/(1-w) the level itself
        // sits below the difference tolerance.
        Claim::CumulativeRisesWithBirthRate => simple(claim, &base, LambdaB, lg(), Cf, NonDecreasing, refinements),
        Claim::CumulativeFallsWithDeathRate => simple(claim, &base, LambdaD, lg(), Cf, NonIncreasing, refinements),
        Claim::CumulativeFallsWithBoundary => {
            let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0 * epsilon * tau).collect();
            let expected = if base.w >= 1.0 { NonIncreasing } else { Decreasing };
            let mut c = simple(claim, &base, R, grid, Cf, expected, refinements)?;
            c.report.guard = Some(format!("λ_d·r <= ε = {epsilon}, w < 1/2 - ε"));
            Ok(c)
        }
        Claim::CumulativeFallsWithCollectivism => simple(claim, &base, W, wg(), Cf, NonIncreasing, refinements),
        Claim::LifetimeFallsWithDeathRate => simple(claim, &base, LambdaD, lg(), TBar, Decreasing, refinements),
        Claim::LifetimeVsCollectivism => {
            let a = base.lambda_d * base.r;
            let boundary = (a - THETA_STAR).abs() <= BOUNDARY_CASE_RTOL * THETA_STAR;
            if a > THETA_STAR || boundary {
                let mut c = simple(claim, &base, W, wg(), TBar, NonDecreasing, refinements)?;
                c.boundary_case = boundary;
                c.report.guard = Some(format!("λ_d·r = {a:.6} >= θ*"));
                if boundary {
                    c.quality_at_turn = Some(q_bar_at(&base, W, 0.0)?);
                    c.turning_point = Some(0.0);
                }
                Ok(c)
            } else {
                u_shaped_lifetime(claim, &base, W, wg(), (0.0, 1.0), refinements)
            }
        }
        Claim::LifetimeRisesWithBoundaryAboveThreshold => {
            let grid = scaled(vec![1.05, 1.5, 2.0, 4.0, 8.0, 16.0], THETA_STAR * tau);
            let mut c = simple(claim, &base, R, grid, TBar, NonDecreasing, refinements)?;
            c.report.guard = Some("λ_d·r > θ*".into());
            Ok(c)
        }
        Claim::LifetimeVsBoundary => {
            let grid = scaled(vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0], tau);
            u_shaped_lifetime(claim, &base, R, grid, (1e-3 * tau, 10.0 * tau), refinements)
        }
        Claim::InequalityIndividualistAboveCollectivist => simple(claim, &base, W, wg(), VarX, FirstAboveZeroLast, refinements),
        Claim::LimitInequalityFallsWithCollectivism => {
            let far = base.with(R, LARGE_R * tau)?;
            let mut c = simple(claim, &far, W, wg(), VarX, Decreasing, refinements)?;
            c.report.guard = Some(format!("r = {LARGE_R}/λ_d"));
            Ok(c)
        }
        Claim::LimitInequalityFallsWithDeathRate => {
            let grid = scaled(lg(), base.lambda_d);
            let far = base.with(R, LARGE_R / grid[0])?;
            let expected = if base.w >= 1.0 { NonIncreasing } else { Decreasing };
            let mut c = simple(claim, &far, LambdaD, grid, VarX, expected, refinements)?;
            c.report.guard = Some(format!("λ_d·r >= {LARGE_R}"));
            Ok(c)
        }
    }
}

fn check_group(claims: &[Claim], base: &SocietyParams, epsilon: f64) -> Result<Vec<TheoremCheck>> {
    for c in claims {
        c.guard(base, epsilon)?;
    }
    claims.iter().map(|&c| check_claim(c, base, epsilon)).collect()
}

/// Mean quality and average welfare fall with `w`, `λ_d` and `r`.
pub fn check_quality_claims(base: &SocietyParams) -> Result<Vec<TheoremCheck>> {
    check_group(
        &[
            Claim::QualityFallsWithCollectivism,
            Claim::QualityFallsWithDeathRate,
            Claim::QualityFallsWithBoundary,
            Claim::WelfareFallsWithCollectivism,
            Claim::WelfareFallsWithDeathRate,
            Claim::WelfareFallsWithBoundary,
        ],
        base,
        DEFAULT_EPSILON,
    )
}

/// Population claims; the death-rate claim requires `w < 1/2`.
pub fn check_population_claims(base: &SocietyParams) -> Result<Vec<TheoremCheck>> {
    check_group(
        &[
            Claim::PopulationRisesWithBirthRate,
            Claim::PopulationRisesWithCollectivism,
            Claim::PopulationRisesWithBoundary,
            Claim::PopulationFallsWithDeathRate,
        ],
        base,
        DEFAULT_EPSILON,
    )
}

/// Cumulative-welfare claims; the boundary claim requires `w < 1/2 − ε`.
pub fn check_cumulative_claims(base: &SocietyParams, epsilon: f64) -> Result<Vec<TheoremCheck>> {
    check_group(
        &[
            Claim::CumulativeRisesWithBirthRate,
            Claim::CumulativeFallsWithDeathRate,
            Claim::CumulativeFallsWithBoundary,
            Claim::CumulativeFallsWithCollectivism,
        ],
        base,
        epsilon,
    )
}

/// Lifetime claims with the `θ*` regime split.
pub fn check_lifetime_claims(base: &SocietyParams) -> Result<Vec<TheoremCheck>> {
    let mut claims = vec![
        Claim::LifetimeFallsWithDeathRate,
        Claim::LifetimeVsCollectivism,
        Claim::LifetimeRisesWithBoundaryAboveThreshold,
    ];
    if base.w < 0.5 {
        claims.push(Claim::LifetimeVsBoundary);
    }
    check_group(&claims, base, DEFAULT_EPSILON)
}

/// Inequality claims.
pub fn check_inequality_claims(base: &SocietyParams) -> Result<Vec<TheoremCheck>> {
    check_group(
        &[
            Claim::InequalityIndividualistAboveCollectivist,
            Claim::LimitInequalityFallsWithCollectivism,
            Claim::LimitInequalityFallsWithDeathRate,
        ],
        base,
        DEFAULT_EPSILON,
    )
}

/// Sign changes of the fixed-point residual on `[−1 + step, min(1, (1−w)/w) − step]`.
///
/// `None` for the degenerate `w = 1` society.
pub fn check_uniqueness(params: &SocietyParams, step: f64) -> Result<Option<usize>> {
    let params = params.validate()?;
    if !(step > 0.0) {
        return Err(CoevoError::domain("step", "must be > 0"));
    }
    if params.w >= 1.0 {
        return Ok(None);
    }
    let lo = -1.0 + step;
    let hi = params.quality_ceiling().min(1.0) - step;
    let n = ((hi - lo) / step).floor() as usize;
    let mut changes = 0;
    let mut prev = fixed_point_residual(&params, lo)?.signum();
    for i in 1..=n {
        let z = (lo + i as f64 * step).min(hi);
        let s = fixed_point_residual(&params, z)?.signum();
        if s != prev && s != 0.0 {
            changes += 1;
        }
        if s != 0.0 {
            prev = s;
        }
    }
    Ok(Some(changes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCheck {
    pub params: SocietyParams,
    pub sign_changes: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub epsilon: f64,
    pub checks: Vec<TheoremCheck>,
    pub uniqueness: Vec<UniquenessCheck>,
    /// Claims not asserted at a base because it lies outside their guard.
    pub skipped: Vec<(Claim, SocietyParams)>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&TheoremCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.uniqueness.iter().all(|u| u.pass)
    }
}

/// Base societies of the default suite: `λ_b = 1`, `λ_d ∈ {0.5, 1, 2}`,
/// `r ∈ {0.25, 1, 4}`, `w ∈ {0, 0.25, 0.45, 0.7, 0.9}`.
pub fn default_bases() -> Vec<SocietyParams> {
    let mut out = Vec::new();
    for ld in [0.5, 1.0, 2.0] {
        for r in [0.25, 1.0, 4.0] {
            for w in [0.0, 0.25, 0.45, 0.7, 0.9] {
                out.push(SocietyParams::new(1.0, ld, r, w).expect("default bases are valid"));
            }
        }
    }
    out
}

/// Runs every claim on every base inside its guard, plus the uniqueness scan.
pub fn run_suite(bases: &[SocietyParams], epsilon: f64, scan_step: f64) -> Result<SuiteReport> {
    let jobs: Vec<(Claim, SocietyParams)> = bases
        .iter()
        .flat_map(|b| Claim::ALL.into_iter().map(move |c| (c, *b)))
        .collect();
    let outcomes: Vec<Result<Option<TheoremCheck>>> = jobs
        .par_iter()
        .map(|(c, b)| match check_claim(*c, b, epsilon) {
            Ok(check) => Ok(Some(check)),
            Err(CoevoError::GuardViolation { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome? {
            Some(c) => checks.push(c),
            None => skipped.push(*job),
        }
    }
    let uniqueness = bases
        .par_iter()
        .map(|b| {
            let sign_changes = check_uniqueness(b, scan_step)?;
            Ok(UniquenessCheck {
                params: *b,
                sign_changes,
                pass: sign_changes.is_none_or(|n| n == 1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        epsilon,
        checks,
        uniqueness,
        skipped,
    })
}

/// The full suite on [`default_bases`] with default `ε` and scan step.
pub fn run_default_suite() -> Result<SuiteReport> {
    run_suite(&default_bases(), DEFAULT_EPSILON, DEFAULT_SCAN_STEP)
}
