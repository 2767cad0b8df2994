use chaos_market_core::chaos::{diagnose_regime, RegimeDiagnosis};
use chaos_market_core::simulate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CommandOutput;
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{tag, Artifact};

/// Trailing window used for the reported mean price (the oscillation centre).
pub const CENTRE_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub a1: f64,
    pub file: String,
    pub steps: usize,
    pub regime: RegimeDiagnosis,
    pub final_price: f64,
    pub trailing_mean_price: f64,
    pub divergent: bool,
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let base = config.model.params()?;
    let shock = config.shock.spec()?;
    let criteria = config.regime.criteria();
    let horizon = config.simulate.horizon;
    let results = config
        .model_a1s(&config.simulate.a1_values)
        .par_iter()
        .map(|&a1| {
            let traj = simulate(&base.with_a1(a1), &shock, horizon)?;
            let file = format!("trajectory_a1_{}.csv", tag(a1));
            let summary = TrajectorySummary {
                a1,
                file: file.clone(),
                steps: traj.len() - 1,
                regime: diagnose_regime(&traj, &criteria),
                final_price: traj.final_price(),
                trailing_mean_price: traj.trailing_mean_price(CENTRE_WINDOW),
                divergent: traj.is_divergent(),
            };
            Ok((Artifact::csv(file, &traj.to_csv()), summary))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut artifacts, summaries): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    artifacts.push(Artifact::json("summary.json", &summaries)?);
    Ok(CommandOutput::ok(artifacts))
}
