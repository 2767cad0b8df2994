use chaos_market_core::chaos::{
    classify_params, distance_to_independence, oscillation_volatility, v_infinity_formula, RegimeLabel, RegimePoint,
    ZoneMap,
};
use chaos_market_core::export::{fmt_f64, CsvTable};
use chaos_market_core::monte_carlo::{
    converged_volatility, drift_curve, run_ensemble, volatility_curve, EnsembleConfig,
};
use chaos_market_core::ModelParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bool_cell, CommandOutput};
use crate::config::{RunConfig, SweepAxis, SweepKind, VolatilitySourceChoice};
use crate::error::Result;
use crate::output::Artifact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub regime: RegimeLabel,
    pub v_inf: Option<f64>,
    pub still_trending: Option<bool>,
    /// `0.2 a1` where the two-value steady state is admissible.
    pub two_point_v_inf: Option<f64>,
    pub distance: Option<f64>,
    pub excluded_runs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: SweepKind,
    pub axis: SweepAxis,
    pub zones: ZoneMap,
    pub rows: Vec<SweepRow>,
    /// First grid interval where the distance to independence changes sign.
    pub zero_crossing: Option<(f64, f64)>,
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let s = &config.sweep;
    let grid = s.grid.points()?;
    let base = config.model.params()?;
    let shock = config.shock.spec()?;
    let criteria = config.regime.criteria();

    let rows = grid
        .par_iter()
        .map(|&value| {
            let params = s.axis.apply(base, value);
            let regime = classify_params(&params, &shock, &criteria)?.label;
            let mut row = SweepRow {
                value,
                regime,
                v_inf: None,
                still_trending: None,
                two_point_v_inf: None,
                distance: None,
                excluded_runs: None,
            };
            if s.kind != SweepKind::Regimes {
                fill_ensemble_stats(config, &params, &mut row)?;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let zones = ZoneMap::from_points(
        rows.iter()
            .map(|r| RegimePoint {
                value: r.value,
                label: r.regime,
            })
            .collect(),
    );
    let zero_crossing = rows.windows(2).find_map(|w| match (w[0].distance, w[1].distance) {
        (Some(a), Some(b)) if a.signum() != b.signum() || a == 0.0 => Some((w[0].value, w[1].value)),
        _ => None,
    });

    let axis = s.axis.name();
    let (csv_name, csv) = match s.kind {
        SweepKind::Regimes => {
            let mut t = CsvTable::new(&[axis, "regime"]);
            for r in &rows {
                t.push_cells(vec![fmt_f64(r.value), r.regime.as_str().to_string()]);
            }
            ("regimes.csv".to_string(), t)
        }
        SweepKind::Volatility => {
            let mut t = CsvTable::new(&[axis, "v_inf", "still_trending", "two_point_v_inf", "excluded_runs", "regime"]);
            for r in &rows {
                t.push_cells(vec![
                    fmt_f64(r.value),
                    r.v_inf.map(fmt_f64).unwrap_or_default(),
                    r.still_trending.map(bool_cell).unwrap_or_default(),
                    r.two_point_v_inf.map(fmt_f64).unwrap_or_default(),
                    r.excluded_runs.map(|k| k.to_string()).unwrap_or_default(),
                    r.regime.as_str().to_string(),
                ]);
            }
            (format!("v_inf_vs_{axis}.csv"), t)
        }
        SweepKind::Independence => {
            let mut t = CsvTable::new(&[axis, "I", "v_inf", "excluded_runs", "regime"]);
            for r in &rows {
                t.push_cells(vec![
                    fmt_f64(r.value),
                    r.distance.map(fmt_f64).unwrap_or_default(),
                    r.v_inf.map(fmt_f64).unwrap_or_default(),
                    r.excluded_runs.map(|k| k.to_string()).unwrap_or_default(),
                    r.regime.as_str().to_string(),
                ]);
            }
            (format!("independence_vs_{axis}.csv"), t)
        }
    };
    let summary = SweepSummary {
        kind: s.kind,
        axis: s.axis,
        zones,
        rows,
        zero_crossing,
    };
    Ok(CommandOutput::ok(vec![
        Artifact::csv(csv_name, &csv),
        Artifact::json("sweep.json", &summary)?,
    ]))
}

fn fill_ensemble_stats(config: &RunConfig, params: &ModelParams, row: &mut SweepRow) -> Result<()> {
    let e = &config.ensemble;
    let ens = run_ensemble(&EnsembleConfig {
        params: *params,
        p_star: config.shock.p_star,
        v0: e.v0,
        runs: e.runs,
        horizon: e.horizon,
        seed: config.seed_value(),
    })?;
    row.excluded_runs = Some(ens.excluded_runs());
    let converged = converged_volatility(&volatility_curve(&ens)?, e.tail_fraction);
    let simulated = converged.as_ref().ok().map(|c| c.value);
    row.still_trending = converged.as_ref().ok().map(|c| c.still_trending);
    if params.m == 1 {
        let osc = oscillation_volatility(params)?;
        row.two_point_v_inf = osc.constraint_holds.then_some(osc.v_inf);
    }
    match config.sweep.kind {
        SweepKind::Volatility => row.v_inf = simulated,
        SweepKind::Independence => {
            let v_inf = match config.sweep.v_inf_source {
                VolatilitySourceChoice::Formula => Some(v_infinity_formula(params.a1, params.w)),
                VolatilitySourceChoice::Simulated => simulated,
            };
            row.v_inf = v_inf;
            if let Some(v) = v_inf {
                let d = drift_curve(&ens)?;
                let ind = &config.independence;
                row.distance = distance_to_independence(&d, v, ind.n1, ind.n2)
                    .ok()
                    .filter(|x| x.is_finite());
            }
        }
        SweepKind::Regimes => {}
    }
    Ok(())
}
