//! Closed-form steady-state metrics and the stationary welfare density.
//!
//! With `D = 2 - e^{-λ₂ r}` the population density is
//!
//! ```text
//! p(x) = Pop · λ₁ e^{-λ₁ x} / D     x ≥ 0
//! p(x) = Pop · λ₂ e^{ λ₂ x} / D     -r ≤ x < 0
//! p(x) = 0                          x < -r
//! ```
//!
//! so the normalized density is a mixture of an exponential (good quality,
//! weight `(1+Q̄)/2`) and an exponential truncated to `(-r, 0)` (bad quality,
//! weight `(1-Q̄)/2`). All moments below are moments of that mixture.

use serde::{Deserialize, Serialize};

use crate::error::{CoevoError, Result};
use crate::steady_state::{steady_state, Quality, SocietyParams, SteadyState};

/// Total population mass, `λ_b / (λ_d (1 + Q̄))`.
pub fn population(params: &SocietyParams, ss: &SteadyState) -> f64 {
    params.lambda_b / (params.lambda_d * (1.0 + ss.q_bar))
}

/// Average welfare, `(r + 1/λ_d) · Q̄`.
pub fn average_welfare(params: &SocietyParams, ss: &SteadyState) -> f64 {
    (params.r + 1.0 / params.lambda_d) * ss.q_bar
}

/// Population density at welfare `x`.
///
/// The jump at zero is resolved to the right: `x = 0` uses the good-quality branch.
pub fn density_at(params: &SocietyParams, ss: &SteadyState, x: f64) -> Result<f64> {
    let (l1, l2) = ss.decay_constants("density")?;
    if x < -params.r {
        return Ok(0.0);
    }
    let scale = population(params, ss) / normalizer(params, l2);
    Ok(if x >= 0.0 {
        scale * l1 * (-l1 * x).exp()
    } else {
        scale * l2 * (l2 * x).exp()
    })
}

fn normalizer(params: &SocietyParams, l2: f64) -> f64 {
    2.0 - (-l2 * params.r).exp()
}

/// Exact population mass with welfare in `[a, b]`.
pub fn density_mass_between(params: &SocietyParams, ss: &SteadyState, a: f64, b: f64) -> Result<f64> {
    let (l1, l2) = ss.decay_constants("density")?;
    if b <= a {
        return Ok(0.0);
    }
    let scale = population(params, ss) / normalizer(params, l2);
    let mut mass = 0.0;
    // negative side, clipped to [-r, 0)
    let (na, nb) = (a.max(-params.r), b.min(0.0));
    if nb > na {
        mass += (l2 * nb).exp() - (l2 * na).exp();
    }
    let (pa, pb) = (a.max(0.0), b);
    if pb > pa {
        mass += (-l1 * pa).exp() - (-l1 * pb).exp();
    }
    Ok(scale * mass)
}

/// Sampled density on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    /// Left edges of `n` equal cells spanning `[-r, x_max)`; starts at exactly `-r`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub x_max: f64,
}

impl DensityProfile {
    pub fn spacing(&self) -> f64 {
        if self.grid.len() < 2 {
            return 0.0;
        }
        self.grid[1] - self.grid[0]
    }

    /// Left Riemann sum of the profile.
    pub fn riemann_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }
}

/// Default positive-side cutoff: `40 / λ₁`.
pub fn default_x_max(ss: &SteadyState) -> Result<f64> {
    let (l1, _) = ss.decay_constants("density")?;
    Ok(40.0 / l1)
}

/// Samples the density at `n` left cell edges over `[-r, x_max)`.
pub fn density_profile(
    params: &SocietyParams,
    ss: &SteadyState,
    x_max: Option<f64>,
    n: usize,
) -> Result<DensityProfile> {
    let x_max = match x_max {
        Some(v) => v,
        None => default_x_max(ss)?,
    };
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(CoevoError::domain("x_max", format!("must be finite and > 0, got {x_max}")));
    }
    if n < 2 {
        return Err(CoevoError::domain("bins", format!("need at least 2, got {n}")));
    }
    let dx = (x_max + params.r) / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| -params.r + i as f64 * dx).collect();
    let values = grid
        .iter()
        .map(|&x| density_at(params, ss, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityProfile { grid, values, x_max })
}

/// Mean welfare conditional on quality.
///
/// Good: `1/λ₁`. Bad: `-1/λ₂ + r e^{-λ₂ r} / (1 - e^{-λ₂ r})`.
pub fn conditional_mean_welfare(params: &SocietyParams, ss: &SteadyState, quality: Quality) -> Result<f64> {
    let (l1, l2) = ss.decay_constants("conditional welfare")?;
    Ok(match quality {
        Quality::Good => 1.0 / l1,
        Quality::Bad => -1.0 / l2 + params.r / (l2 * params.r).exp_m1(),
    })
}

/// Lifetime statistics of the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifetimes {
    /// Population-share weighted mean lifetime, `(1/λ_d)(1 + Q̄²)/(1 + Q̄)`.
    pub t_bar: f64,
    pub t_good: f64,
    /// `(1/λ_d)(1 - e^{-λ₂ r})`.
    pub t_bad: f64,
    /// Time for a bad-quality agent to drift from 0 to `-r`; absent when w = 1.
    pub t2: Option<f64>,
    /// Diagnostic: mean lifetime of a newborn, `(1/λ_d)/(1 + Q̄)`.
    pub t_newborn: f64,
}

pub fn average_lifetime(params: &SocietyParams, ss: &SteadyState) -> Lifetimes {
    let mean_clock = 1.0 / params.lambda_d;
    let q = ss.q_bar;
    if ss.degenerate {
        return Lifetimes {
            t_bar: mean_clock,
            t_good: mean_clock,
            t_bad: mean_clock,
            t2: None,
            t_newborn: mean_clock,
        };
    }
    let t2 = params.r / (1.0 - params.w * (1.0 + q));
    Lifetimes {
        t_bar: mean_clock * (1.0 + q * q) / (1.0 + q),
        t_good: mean_clock,
        t_bad: -mean_clock * (-params.lambda_d * t2).exp_m1(),
        t2: Some(t2),
        t_newborn: mean_clock / (1.0 + q),
    }
}

/// Variance of welfare under the normalized density.
pub fn variance(params: &SocietyParams, ss: &SteadyState) -> f64 {
    let Ok((l1, l2)) = ss.decay_constants("variance") else {
        return 0.0;
    };
    let r = params.r;
    let second_good = 2.0 / (l1 * l1);
    // E[Y²] for Y = -X ~ Exp(λ₂) truncated to (0, r)
    let second_bad = 2.0 / (l2 * l2) - (r * r + 2.0 * r / l2) / (l2 * r).exp_m1();
    let mean = average_welfare(params, ss);
    (ss.mass_good * second_good + ss.mass_bad * second_bad - mean * mean).max(0.0)
}

/// Cumulative welfare, `Pop · X̄`.
pub fn cumulative_welfare(params: &SocietyParams, ss: &SteadyState) -> f64 {
    population(params, ss) * average_welfare(params, ss)
}

/// `(natural, boundary)` death mass-rates; they sum to `λ_b`.
pub fn death_rate_decomposition(params: &SocietyParams, ss: &SteadyState) -> (f64, f64) {
    let pop = population(params, ss);
    (params.lambda_d * pop, params.lambda_d * ss.q_bar * pop)
}

/// Every closed-form steady-state metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocietyMetrics {
    pub q_bar: f64,
    pub pop: f64,
    pub x_bar: f64,
    pub t_bar: f64,
    pub var_x: f64,
    pub cf: f64,
    pub x_bar_good: f64,
    pub x_bar_bad: f64,
    pub t_good: f64,
    pub t_bad: f64,
    pub t2: Option<f64>,
    /// Newborn-weighted mean lifetime (diagnostic, not `t_bar`).
    pub t_newborn: f64,
    pub rate_natural: f64,
    pub rate_boundary: f64,
}

impl SocietyMetrics {
    pub fn from_state(params: &SocietyParams, ss: &SteadyState) -> Self {
        let lifetimes = average_lifetime(params, ss);
        let (rate_natural, rate_boundary) = death_rate_decomposition(params, ss);
        let cond = |q| conditional_mean_welfare(params, ss, q).unwrap_or(0.0);
        SocietyMetrics {
            q_bar: ss.q_bar,
            pop: population(params, ss),
            x_bar: average_welfare(params, ss),
            t_bar: lifetimes.t_bar,
            var_x: variance(params, ss),
            cf: cumulative_welfare(params, ss),
            x_bar_good: cond(Quality::Good),
            x_bar_bad: cond(Quality::Bad),
            t_good: lifetimes.t_good,
            t_bad: lifetimes.t_bad,
            t2: lifetimes.t2,
            t_newborn: lifetimes.t_newborn,
            rate_natural,
            rate_boundary,
        }
    }
}

/// Solves the steady state and evaluates all metrics.
pub fn evaluate(params: &SocietyParams) -> Result<(SteadyState, SocietyMetrics)> {
    let ss = steady_state(params)?;
    Ok((ss, SocietyMetrics::from_state(params, &ss)))
}
