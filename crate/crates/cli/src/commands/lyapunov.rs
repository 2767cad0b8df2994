use chaos_market_core::chaos::{
    analytic_lyapunov, empirical_lyapunov, lyapunov_candidates, lyapunov_gap_closed_form, LyapunovCandidates,
    LyapunovFit,
};
use chaos_market_core::export::{fmt_f64, CsvTable};
use chaos_market_core::monte_carlo::{
    converged_volatility, random_walk_ensemble, run_ensemble, volatility_curve, ConvergedVolatility, Ensemble,
    EnsembleConfig, VolatilityCurve,
};
use serde::{Deserialize, Serialize};

use super::CommandOutput;
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{tag, Artifact};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCase {
    pub a1: f64,
    pub v0: f64,
    pub file: String,
    pub excluded_runs: usize,
    pub converged: Option<ConvergedVolatility>,
    pub fit: Option<LyapunovFit>,
    /// Why the fit was not produced, when it was requested.
    pub fit_failure: Option<String>,
    pub analytic: Option<f64>,
    pub candidates: Option<LyapunovCandidates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub a1: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub gap: Option<f64>,
    pub gap_closed_form: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    pub cases: Vec<LyapunovCase>,
    pub random_walk: Option<ConvergedVolatility>,
    pub candidates: Vec<CandidateRow>,
}

fn volatility_csv(curve: &VolatilityCurve) -> CsvTable {
    let mut t = CsvTable::new(&["t", "v", "ln_v"]);
    for (i, &v) in curve.values.iter().enumerate() {
        t.push_row(&[(i + 1) as f64, v, if v > 0.0 { v.ln() } else { f64::NAN }]);
    }
    t
}

/// `r_t` for the first `paths` runs, one column per run, `t = 0..=T`.
fn return_paths_csv(ens: &Ensemble, paths: usize) -> CsvTable {
    let k = paths.min(ens.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..k).map(|j| format!("run_{j}")));
    let mut t = CsvTable::new(&header);
    for step in 0..=ens.horizon {
        let mut cells = vec![step.to_string()];
        for run in &ens.runs[..k] {
            let r = if step == 0 {
                run.r0
            } else if step < run.log_prices.len() && run.diverged_at.is_none_or(|d| step < d) {
                run.log_prices[step] - run.log_prices[step - 1]
            } else {
                f64::NAN
            };
            cells.push(fmt_f64(r));
        }
        t.push_cells(cells);
    }
    t
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let l = &config.lyapunov;
    let e = &config.ensemble;
    let base = config.model.params()?;
    let seed = config.seed_value();
    let mut artifacts = Vec::new();
    let mut cases = Vec::new();

    if !l.v0_values.is_empty() {
        for a1 in config.model_a1s(&l.a1_values) {
            let params = base.with_a1(a1);
            for &v0 in &l.v0_values {
                let ens = run_ensemble(&EnsembleConfig {
                    params,
                    p_star: config.shock.p_star,
                    v0,
                    runs: e.runs,
                    horizon: e.horizon,
                    seed,
                })?;
                let curve = volatility_curve(&ens)?;
                let converged = converged_volatility(&curve, e.tail_fraction).ok();
                let (fit, fit_failure) = if l.fit {
                    match converged.as_ref().map(|c| empirical_lyapunov(&curve, c.value)) {
                        Some(Ok(f)) => (Some(f), None),
                        Some(Err(err)) => (None, Some(err.to_string())),
                        None => (None, Some("no converged volatility".to_string())),
                    }
                } else {
                    (None, None)
                };
                let stem = format!("a1_{}_v0_{}", tag(a1), tag(v0));
                let file = format!("volatility_{stem}.csv");
                artifacts.push(Artifact::csv(file.clone(), &volatility_csv(&curve)));
                if l.return_paths > 0 {
                    artifacts.push(Artifact::csv(
                        format!("returns_{stem}.csv"),
                        &return_paths_csv(&ens, l.return_paths),
                    ));
                }
                cases.push(LyapunovCase {
                    a1,
                    v0,
                    file,
                    excluded_runs: ens.excluded_runs(),
                    converged,
                    fit,
                    fit_failure,
                    analytic: analytic_lyapunov(&params).ok(),
                    candidates: lyapunov_candidates(&params).ok(),
                });
            }
        }
    }

    let random_walk = match &l.random_walk {
        Some(rw) => {
            let ens = random_walk_ensemble(rw.sigma, rw.sigma0, config.shock.p_star, e.runs, e.horizon, seed)?;
            let curve = volatility_curve(&ens)?;
            artifacts.push(Artifact::csv("random_walk_volatility.csv", &volatility_csv(&curve)));
            if l.return_paths > 0 {
                artifacts.push(Artifact::csv(
                    "random_walk_returns.csv",
                    &return_paths_csv(&ens, l.return_paths),
                ));
            }
            converged_volatility(&curve, e.tail_fraction).ok()
        }
        None => None,
    };

    let mut candidates = Vec::new();
    if let Some(grid) = &l.candidates {
        let mut t = CsvTable::new(&["a1", "L1", "L2", "L3", "gap", "gap_closed_form"]);
        for a1 in grid.points()? {
            let params = base.with_a1(a1);
            let c = lyapunov_candidates(&params).ok();
            let row = CandidateRow {
                a1,
                l1: c.map(|c| c.l1),
                l2: c.map(|c| c.l2),
                l3: c.map(|c| c.l3),
                gap: c.map(|c| c.l3.exp() - c.l2.exp()),
                gap_closed_form: lyapunov_gap_closed_form(&params).ok(),
            };
            let nan = f64::NAN;
            t.push_row(&[
                a1,
                row.l1.unwrap_or(nan),
                row.l2.unwrap_or(nan),
                row.l3.unwrap_or(nan),
                row.gap.unwrap_or(nan),
                row.gap_closed_form.unwrap_or(nan),
            ]);
            candidates.push(row);
        }
        artifacts.push(Artifact::csv("candidates.csv", &t));
    }

    let failure = if l.fit && !cases.is_empty() && cases.iter().all(|c| c.fit.is_none()) {
        Some(format!(
            "no Lyapunov fit succeeded: {}",
            cases[0].fit_failure.clone().unwrap_or_default()
        ))
    } else {
        None
    };
    artifacts.push(Artifact::json(
        "lyapunov.json",
        &LyapunovSummary {
            cases,
            random_walk,
            candidates,
        },
    )?);
    Ok(CommandOutput { artifacts, failure })
}
