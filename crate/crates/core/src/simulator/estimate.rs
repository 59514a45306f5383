//! Replicate aggregation and analytical-vs-empirical comparison.

use serde::{Deserialize, Serialize};

use super::SimResult;
use crate::error::{CoevoError, Result};
use crate::metrics::{density_mass_between, SocietyMetrics};
use crate::steady_state::{SocietyParams, SteadyState};

/// |z| at or below this passes.
pub const Z_PASS: f64 = 3.0;

/// Minimum post-burn-in events per replicate for a usable estimate.
pub const MIN_EVENTS: usize = 1000;

/// Replicate mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Mean and `sd / √n` of at least two samples.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(CoevoError::InsufficientData(format!(
                "standard error needs at least 2 replicates, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let sd = (ss / (n - 1.0)).sqrt();
        Ok(Estimate {
            mean,
            stderr: sd / n.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimates {
    pub replicates: usize,
    pub q_bar: Estimate,
    pub pop: Estimate,
    pub x_bar: Estimate,
    pub var_x: Estimate,
    /// Completed lifetimes weighted by the observed population shares.
    pub t_bar: Estimate,
    pub t_good: Estimate,
    pub t_bad: Estimate,
    /// Plain mean of completed lifetimes.
    pub t_newborn: Estimate,
    pub boundary_to_natural: Estimate,
}

/// Aggregates the per-replicate post-burn-in statistics.
pub fn estimate_steady(result: &SimResult) -> Result<EmpiricalEstimates> {
    let runs = &result.replicates;
    for run in runs {
        if run.stats.post_burn_in_events < MIN_EVENTS {
            return Err(CoevoError::InsufficientData(format!(
                "replicate {} has {} post-burn-in events (need {MIN_EVENTS})",
                run.index, run.stats.post_burn_in_events
            )));
        }
    }
    let est = |f: &dyn Fn(&super::ReplicateStats) -> f64| {
        let xs: Vec<f64> = runs.iter().map(|r| f(&r.stats)).collect();
        Estimate::from_samples(&xs)
    };
    Ok(EmpiricalEstimates {
        replicates: runs.len(),
        q_bar: est(&|s| s.q_bar)?,
        pop: est(&|s| s.pop)?,
        x_bar: est(&|s| s.x_bar)?,
        var_x: est(&|s| s.var_x)?,
        t_bar: est(&|s| s.lifetime_population_weighted())?,
        t_good: est(&|s| s.lifetime_good)?,
        t_bad: est(&|s| s.lifetime_bad)?,
        t_newborn: est(&|s| s.lifetime_all)?,
        boundary_to_natural: est(&|s| s.boundary_to_natural())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub analytical: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

impl ComparisonRow {
    pub fn new(metric: &str, analytical: f64, est: Estimate) -> Self {
        let diff = est.mean - analytical;
        let z = if diff == 0.0 {
            0.0
        } else if est.stderr > 0.0 {
            diff / est.stderr
        } else {
            diff.signum() * f64::INFINITY
        };
        ComparisonRow {
            metric: metric.to_string(),
            analytical,
            empirical: est.mean,
            stderr: est.stderr,
            z,
            pass: z.abs() <= Z_PASS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Per-metric z-scores of the empirical estimates against the closed forms.
pub fn compare(analytical: &SocietyMetrics, empirical: &EmpiricalEstimates) -> ComparisonReport {
    let a = analytical;
    let e = empirical;
    ComparisonReport {
        rows: vec![
            ComparisonRow::new("q_bar", a.q_bar, e.q_bar),
            ComparisonRow::new("pop", a.pop, e.pop),
            ComparisonRow::new("x_bar", a.x_bar, e.x_bar),
            ComparisonRow::new("var_x", a.var_x, e.var_x),
            ComparisonRow::new("t_bar", a.t_bar, e.t_bar),
            ComparisonRow::new("t_good", a.t_good, e.t_good),
            ComparisonRow::new("t_bad", a.t_bad, e.t_bad),
            ComparisonRow::new("t_newborn", a.t_newborn, e.t_newborn),
            ComparisonRow::new("boundary_to_natural", a.q_bar, e.boundary_to_natural),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub lo: f64,
    pub hi: f64,
    pub analytical: f64,
    pub empirical: f64,
    pub rel_error: f64,
    /// Bin carries more than the mass threshold and enters `max_rel_error`.
    pub checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    pub rows: Vec<DensityRow>,
    pub max_rel_error: f64,
    pub bins_checked: usize,
}

/// Compares the replicate-averaged histogram to exact per-bin masses of the
/// analytical density, over bins holding more than `min_fraction` of the population.
pub fn compare_density(
    params: &SocietyParams,
    ss: &SteadyState,
    result: &SimResult,
    min_fraction: f64,
) -> Result<DensityComparison> {
    let hist = result.mean_histogram();
    let total = density_mass_between(params, ss, -params.r, f64::INFINITY)?;
    let mut rows = Vec::with_capacity(hist.len());
    let mut max_rel_error: f64 = 0.0;
    let mut bins_checked = 0;
    for (i, &emp) in hist.iter().enumerate() {
        let (lo, hi) = (result.hist_edges[i], result.hist_edges[i + 1]);
        let analytical = density_mass_between(params, ss, lo, hi)?;
        let rel_error = if analytical > 0.0 {
            (emp - analytical).abs() / analytical
        } else {
            f64::INFINITY
        };
        let checked = analytical > min_fraction * total;
        if checked {
            bins_checked += 1;
            max_rel_error = max_rel_error.max(rel_error);
        }
        rows.push(DensityRow {
            lo,
            hi,
            analytical,
            empirical: emp,
            rel_error,
            checked,
        });
    }
    Ok(DensityComparison {
        rows,
        max_rel_error,
        bins_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_error() {
        let e = Estimate::from_samples(&[0.25; 6]).unwrap();
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.stderr, 0.0);
        assert!(Estimate::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn stderr_matches_hand_computation() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.mean, 2.5);
        // sd = sqrt(5/3), se = sd / 2
        assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn z_scores_and_flags() {
        let same = ComparisonRow::new("m", 1.5, Estimate { mean: 1.5, stderr: 0.1 });
        assert_eq!(same.z, 0.0);
        assert!(same.pass);
        let off = ComparisonRow::new("m", 1.5, Estimate { mean: 2.5, stderr: 0.1 });
        assert!((off.z - 10.0).abs() < 1e-9);
        assert!(!off.pass);
        let exact = ComparisonRow::new("m", 0.0, Estimate { mean: 0.0, stderr: 0.0 });
        assert!(exact.pass);
        let degenerate = ComparisonRow::new("m", 0.0, Estimate { mean: 1e-3, stderr: 0.0 });
        assert!(!degenerate.pass);
    }
}
