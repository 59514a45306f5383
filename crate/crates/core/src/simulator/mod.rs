//! Finite-agent Monte Carlo oracle for the steady state.
//!
//! A society of `N ≈ n_scale · Pop` agents is simulated exactly: births and
//! natural deaths are drawn from a single population-level exponential clock,
//! boundary deaths are deterministic crossing times of piecewise-linear
//! welfare paths. The empirical mean quality `Q̂(t)` closes the mean-field
//! loop and is recomputed after every event.
//!
//! Replicates are independent sequential runs seeded with `seed + index`;
//! they run in parallel and are merged in index order, so results do not
//! depend on the worker count.

mod engine;
mod estimate;

pub use estimate::{
    compare, compare_density, estimate_steady, ComparisonReport, ComparisonRow, DensityComparison,
    DensityRow, EmpiricalEstimates, Estimate, MIN_EVENTS, Z_PASS,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoevoError, Result};
use crate::steady_state::{Quality, SocietyParams};

/// Simulation controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Agents per unit of population mass.
    pub n_scale: u32,
    pub t_end: f64,
    /// Statistics are collected only from this time on.
    pub burn_in: f64,
    pub seed: u64,
    pub replicates: usize,
    /// Histogram bins over `[-r, x_hist_max]`.
    pub hist_bins: usize,
    /// Upper histogram edge; defaults to `10 / λ_d`.
    pub x_hist_max: Option<f64>,
    /// Spacing of snapshots; defaults to `0.1 / λ_d`.
    pub sample_dt: Option<f64>,
    /// Hard cap on living agents; defaults to `10 · λ_b · n_scale / λ_d`.
    pub max_agents: Option<usize>,
    /// Completed lifetimes retained per replicate (the first ones after burn-in).
    pub lifetime_sample: usize,
    /// Keep the final agent population in the result.
    pub keep_final_agents: bool,
}

impl SimConfig {
    /// Defaults scaled to the natural-death time scale `1/λ_d`.
    pub fn for_params(params: &SocietyParams) -> Self {
        let tau = 1.0 / params.lambda_d;
        SimConfig {
            n_scale: 10_000,
            t_end: 60.0 * tau,
            burn_in: 20.0 * tau,
            seed: 0,
            replicates: 8,
            hist_bins: 50,
            x_hist_max: None,
            sample_dt: None,
            max_agents: None,
            lifetime_sample: 10_000,
            keep_final_agents: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scale < 1 {
            return Err(CoevoError::domain("n_scale", "must be >= 1"));
        }
        if !self.t_end.is_finite() || !(self.t_end > 0.0) {
            return Err(CoevoError::domain("t_end", format!("must be finite and > 0, got {}", self.t_end)));
        }
        if !(self.burn_in >= 0.0) || self.burn_in >= self.t_end {
            return Err(CoevoError::domain(
                "burn_in",
                format!("must satisfy 0 <= burn_in < t_end, got {}", self.burn_in),
            ));
        }
        if self.replicates < 1 {
            return Err(CoevoError::domain("replicates", "must be >= 1"));
        }
        if self.hist_bins < 1 {
            return Err(CoevoError::domain("hist_bins", "must be >= 1"));
        }
        if let Some(x) = self.x_hist_max {
            if !x.is_finite() || !(x > 0.0) {
                return Err(CoevoError::domain("x_hist_max", format!("must be finite and > 0, got {x}")));
            }
        }
        if let Some(dt) = self.sample_dt {
            if !dt.is_finite() || !(dt > 0.0) {
                return Err(CoevoError::domain("sample_dt", format!("must be finite and > 0, got {dt}")));
            }
        }
        Ok(())
    }

    pub(crate) fn agent_cap(&self, params: &SocietyParams) -> usize {
        self.max_agents
            .unwrap_or_else(|| (10.0 * params.lambda_b * self.n_scale as f64 / params.lambda_d).ceil() as usize)
    }

    pub(crate) fn sample_interval(&self, params: &SocietyParams) -> f64 {
        self.sample_dt.unwrap_or(0.1 / params.lambda_d)
    }

    pub fn hist_max(&self, params: &SocietyParams) -> f64 {
        self.x_hist_max.unwrap_or(10.0 / params.lambda_d)
    }

    /// Bin edges of the welfare histogram (`hist_bins + 1` values).
    pub fn hist_edges(&self, params: &SocietyParams) -> Vec<f64> {
        let lo = -params.r;
        let width = (self.hist_max(params) - lo) / self.hist_bins as f64;
        (0..=self.hist_bins).map(|i| lo + i as f64 * width).collect()
    }
}

/// A living individual as observed at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub quality: Quality,
    pub welfare: f64,
    pub birth_time: f64,
}

/// Whole-run event totals; `births = deaths_natural + deaths_boundary + alive_at_end`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeathCounts {
    pub births: usize,
    pub deaths_natural: usize,
    pub deaths_boundary: usize,
    pub alive_at_end: usize,
}

impl DeathCounts {
    pub fn is_conserved(&self) -> bool {
        self.births == self.deaths_natural + self.deaths_boundary + self.alive_at_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeRecord {
    pub quality: Quality,
    pub lifetime: f64,
}

/// Post-burn-in statistics of one replicate.
///
/// Population-level quantities are time averages over equally spaced
/// snapshots; welfare moments are pooled over all agent-snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStats {
    pub snapshots: usize,
    pub post_burn_in_events: usize,
    pub pop: f64,
    pub q_bar: f64,
    pub good_share: f64,
    pub x_bar: f64,
    pub var_x: f64,
    pub min_welfare: f64,
    pub lifetime_good: f64,
    pub lifetime_bad: f64,
    /// Mean over all completed lifetimes (newborn weighting).
    pub lifetime_all: f64,
    pub completed_good: usize,
    pub completed_bad: usize,
    pub deaths_natural: usize,
    pub deaths_boundary: usize,
}

impl ReplicateStats {
    /// Lifetime weighted by the observed population shares of each quality.
    pub fn lifetime_population_weighted(&self) -> f64 {
        self.good_share * self.lifetime_good + (1.0 - self.good_share) * self.lifetime_bad
    }

    pub fn boundary_to_natural(&self) -> f64 {
        self.deaths_boundary as f64 / self.deaths_natural as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRun {
    pub index: usize,
    pub seed: u64,
    pub counts: DeathCounts,
    pub stats: ReplicateStats,
    /// `(time, Q̂)` at every snapshot time, burn-in included.
    pub q_bar_series: Vec<(f64, f64)>,
    /// `(time, alive / n_scale)` at every snapshot time.
    pub pop_series: Vec<(f64, f64)>,
    /// Time-averaged population mass per histogram bin.
    pub welfare_hist: Vec<f64>,
    /// Mass above the last histogram edge.
    pub hist_overflow: f64,
    pub lifetimes: Vec<LifetimeRecord>,
    pub final_agents: Vec<Agent>,
}

/// Output of [`run_simulation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub params: SocietyParams,
    pub config: SimConfig,
    pub hist_edges: Vec<f64>,
    pub replicates: Vec<ReplicateRun>,
}

impl SimResult {
    /// Replicate-averaged welfare histogram.
    pub fn mean_histogram(&self) -> Vec<f64> {
        let n = self.replicates.len() as f64;
        let mut acc = vec![0.0; self.hist_edges.len().saturating_sub(1)];
        for run in &self.replicates {
            for (a, v) in acc.iter_mut().zip(&run.welfare_hist) {
                *a += v / n;
            }
        }
        acc
    }

    pub fn total_counts(&self) -> DeathCounts {
        self.replicates.iter().fold(DeathCounts::default(), |acc, r| DeathCounts {
            births: acc.births + r.counts.births,
            deaths_natural: acc.deaths_natural + r.counts.deaths_natural,
            deaths_boundary: acc.deaths_boundary + r.counts.deaths_boundary,
            alive_at_end: acc.alive_at_end + r.counts.alive_at_end,
        })
    }
}

/// Runs all replicates in parallel and merges them in index order.
pub fn run_simulation(params: &SocietyParams, cfg: &SimConfig) -> Result<SimResult> {
    let params = params.validate()?;
    cfg.validate()?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| engine::run_replicate(&params, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult {
        params,
        config: cfg.clone(),
        hist_edges: cfg.hist_edges(&params),
        replicates,
    })
}
