use chaos_market_core::chaos::{
    autocorrelation, independence_locus, v_infinity_formula, IndependenceReport, VolatilitySource,
};
use chaos_market_core::export::CsvTable;
use chaos_market_core::monte_carlo::{
    converged_volatility, drift_curve, random_walk_ensemble, run_ensemble, volatility_curve, EnsembleConfig,
};
use chaos_market_core::{returns, simulate_with_guard, DivergenceGuard};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CommandOutput;
use crate::config::{RunConfig, VolatilitySourceChoice};
use crate::error::{CliError, Result};
use crate::output::{tag, Artifact};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub a1: f64,
    pub file: String,
    pub excluded_runs: usize,
    pub report: IndependenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    pub a1: f64,
    pub file: String,
    pub samples: usize,
    /// `2 / √N`.
    pub band: f64,
    pub lags: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceSummary {
    /// Strength at which the returns look independent for the configured `w`.
    pub locus_a1: f64,
    pub drift: Vec<DriftEntry>,
    pub autocorrelation: Vec<AutocorrelationReport>,
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let ind = &config.independence;
    let a1s = config.model_a1s(&ind.a1_values);
    let mut artifacts = Vec::new();
    let mut drift = Vec::new();
    let mut autocorr = Vec::new();

    if ind.drift {
        for &a1 in &a1s {
            let (entry, csv) = drift_entry(config, a1)?;
            artifacts.push(Artifact::csv(entry.file.clone(), &csv));
            drift.push(entry);
        }
    }
    if ind.autocorrelation {
        let results = a1s
            .par_iter()
            .map(|&a1| autocorrelation_entry(config, a1))
            .collect::<Result<Vec<_>>>()?;
        for (report, csv) in results {
            artifacts.push(Artifact::csv(report.file.clone(), &csv));
            autocorr.push(report);
        }
    }
    artifacts.push(Artifact::json(
        "independence.json",
        &IndependenceSummary {
            locus_a1: independence_locus(config.model.w),
            drift,
            autocorrelation: autocorr,
        },
    )?);
    Ok(CommandOutput::ok(artifacts))
}

fn drift_entry(config: &RunConfig, a1: f64) -> Result<(DriftEntry, CsvTable)> {
    let ind = &config.independence;
    let e = &config.ensemble;
    let params = config.model.params()?.with_a1(a1);
    let seed = config.seed_value();
    let ens = run_ensemble(&EnsembleConfig {
        params,
        p_star: config.shock.p_star,
        v0: e.v0,
        runs: e.runs,
        horizon: e.horizon,
        seed,
    })?;
    let d = drift_curve(&ens)?;
    let (v_inf, source) = match ind.v_inf_source {
        VolatilitySourceChoice::Formula => (v_infinity_formula(a1, params.w), VolatilitySource::Formula),
        VolatilitySourceChoice::Simulated => (
            converged_volatility(&volatility_curve(&ens)?, e.tail_fraction)?.value,
            VolatilitySource::Simulated,
        ),
    };
    let walk = random_walk_ensemble(v_inf, e.v0, config.shock.p_star, e.runs, e.horizon, seed)?;
    let walk_d = drift_curve(&walk)?;
    let mut csv = CsvTable::new(&["t", "d", "reference", "random_walk"]);
    for (i, (&dt, &wt)) in d.iter().zip(&walk_d).enumerate() {
        let t = (i + 1) as f64;
        csv.push_row(&[t, dt, v_inf * t.sqrt(), wt]);
    }
    let report = IndependenceReport::new(d, v_inf, source, ind.n1, ind.n2)?;
    Ok((
        DriftEntry {
            a1,
            file: format!("drift_a1_{}.csv", tag(a1)),
            excluded_runs: ens.excluded_runs(),
            report,
        },
        csv,
    ))
}

fn autocorrelation_entry(config: &RunConfig, a1: f64) -> Result<(AutocorrelationReport, CsvTable)> {
    let ind = &config.independence;
    let params = config.model.params()?.with_a1(a1);
    let shock = config.shock.spec()?;
    let traj = simulate_with_guard(&params, &shock, ind.burn_in + ind.steps, DivergenceGuard::disabled())?;
    let r = returns(&traj)?;
    let tail = r
        .get(ind.burn_in..)
        .ok_or_else(|| CliError::Numeric(format!("trajectory at a1={a1} ended before the burn-in")))?;
    let lags = autocorrelation(tail, ind.max_lag)?;
    let band = 2.0 / (tail.len() as f64).sqrt();
    let mut csv = CsvTable::new(&["lag", "rho", "band"]);
    for (k, &rho) in lags.iter().enumerate() {
        csv.push_row(&[(k + 1) as f64, rho, band]);
    }
    Ok((
        AutocorrelationReport {
            a1,
            file: format!("autocorrelation_a1_{}.csv", tag(a1)),
            samples: tail.len(),
            band,
            lags,
        },
        csv,
    ))
}
