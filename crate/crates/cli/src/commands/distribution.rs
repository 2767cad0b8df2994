use chaos_market_core::distribution::{
    excess_kurtosis, mean_with_stderr, phase_portrait, return_histogram, TailComparison,
};
use chaos_market_core::export::CsvTable;
use chaos_market_core::{returns, simulate_with_guard, DivergenceGuard};
use serde::{Deserialize, Serialize};

use super::CommandOutput;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::Artifact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub a1: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub samples: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub sample_variance: f64,
    pub degenerate_variance: bool,
    pub excess_kurtosis: Option<f64>,
    pub tail: Option<TailComparison>,
    pub fat_tailed: bool,
    /// Smallest and largest coordinate over the attractor points.
    pub attractor_range: (f64, f64),
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let d = &config.distribution;
    let params = config.model.params()?;
    let shock = config.shock.spec()?;
    let traj = simulate_with_guard(&params, &shock, d.burn_in + d.steps, DivergenceGuard::disabled())?;
    let r = returns(&traj)?;
    let tail = r
        .get(d.burn_in..)
        .ok_or_else(|| CliError::Numeric("trajectory ended before the burn-in".into()))?;

    let points = phase_portrait(&r, d.burn_in);
    let mut attractor = CsvTable::new(&["r_prev", "r"]);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(a, b) in &points {
        attractor.push_row(&[a, b]);
        lo = lo.min(a.min(b));
        hi = hi.max(a.max(b));
    }

    let hist = return_histogram(tail, d.bins)?;
    let (mean, standard_error) = mean_with_stderr(tail)?;
    let tail_cmp = hist.tail_comparison();
    let summary = DistributionSummary {
        a1: params.a1,
        steps: d.steps,
        burn_in: d.burn_in,
        bins: d.bins,
        samples: tail.len(),
        mean,
        standard_error,
        sample_variance: hist.sample_variance,
        degenerate_variance: hist.is_degenerate(),
        excess_kurtosis: excess_kurtosis(tail).ok(),
        fat_tailed: tail_cmp.is_some_and(|t| t.fat_tailed),
        tail: tail_cmp,
        attractor_range: (lo, hi),
    };
    Ok(CommandOutput::ok(vec![
        Artifact::csv("attractor.csv", &attractor),
        Artifact::csv("histogram.csv", &hist.to_csv()),
        Artifact::json("distribution.json", &summary)?,
    ]))
}
