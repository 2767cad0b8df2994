use chaos_market_core::equilibrium::{
    certify_grid, chain_rule_bottom_row, is_equilibrium, jacobian_fd, linear_model_limit, linear_model_simulate,
    price_scaled_bottom_right, InstabilityCertificate, LinearOutcome, DEFAULT_RELATIVE_STEP,
};
use chaos_market_core::export::{fmt_f64, CsvTable};
use chaos_market_core::{ModelParams, PriceState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bool_cell, CommandOutput};
use crate::config::RunConfig;
use crate::error::Result;
use crate::output::Artifact;

/// Finite-difference bottom row against the chain rule at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub a1: f64,
    pub w: f64,
    pub n: usize,
    pub p_star: f64,
    pub fixed_point: bool,
    pub fd_bottom_right: f64,
    pub chain_rule_bottom_right: f64,
    pub price_scaled_bottom_right: f64,
    /// Largest relative gap over the bottom row.
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelRow {
    pub a: f64,
    pub outcome: LinearOutcome,
    pub closed_form_limit: Option<f64>,
    pub simulated_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub points: usize,
    pub unstable_points: usize,
    pub all_fixed_points: bool,
    pub max_relative_error: f64,
    pub certificates: Vec<InstabilityCertificate>,
    pub jacobian_checks: Vec<JacobianCheck>,
    pub linear_model: Vec<LinearModelRow>,
}

pub(super) fn run(config: &RunConfig) -> Result<CommandOutput> {
    let e = &config.equilibrium;
    let mut grid = Vec::new();
    for &a1 in &e.a1_values {
        for &w in &e.w_values {
            for &n in &e.n_values {
                for &p_star in &e.p_star_values {
                    grid.push((ModelParams::new(e.m, n, w, a1)?, p_star));
                }
            }
        }
    }
    let certificates = certify_grid(&grid)?;
    let checks = grid
        .par_iter()
        .map(|(params, p_star)| jacobian_check(params, *p_star))
        .collect::<Result<Vec<_>>>()?;

    let lm = &e.linear_model;
    let linear_model = lm
        .a_values
        .iter()
        .map(|&a| {
            let run = linear_model_simulate(a, lm.p_star, lm.r0, lm.horizon)?;
            Ok(LinearModelRow {
                a,
                outcome: run.outcome,
                closed_form_limit: linear_model_limit(a, lm.p_star, lm.r0).ok(),
                simulated_final: run.final_price(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cert_csv = CsvTable::new(&["a1", "w", "n", "p_star", "max_modulus", "unstable"]);
    for c in &certificates {
        cert_csv.push_cells(vec![
            fmt_f64(c.params.a1),
            fmt_f64(c.params.w),
            c.params.n.to_string(),
            fmt_f64(c.p_star),
            fmt_f64(c.max_modulus),
            bool_cell(c.unstable),
        ]);
    }
    let mut jac_csv = CsvTable::new(&[
        "a1",
        "w",
        "n",
        "p_star",
        "fixed_point",
        "fd_bottom_right",
        "chain_rule_bottom_right",
        "price_scaled_bottom_right",
        "max_relative_error",
    ]);
    for c in &checks {
        jac_csv.push_cells(vec![
            fmt_f64(c.a1),
            fmt_f64(c.w),
            c.n.to_string(),
            fmt_f64(c.p_star),
            bool_cell(c.fixed_point),
            fmt_f64(c.fd_bottom_right),
            fmt_f64(c.chain_rule_bottom_right),
            fmt_f64(c.price_scaled_bottom_right),
            fmt_f64(c.max_relative_error),
        ]);
    }
    let mut lin_csv = CsvTable::new(&["a", "p_star", "r0", "outcome", "closed_form_limit", "simulated_final"]);
    for row in &linear_model {
        lin_csv.push_cells(vec![
            fmt_f64(row.a),
            fmt_f64(lm.p_star),
            fmt_f64(lm.r0),
            match row.outcome {
                LinearOutcome::Converges => "converges",
                LinearOutcome::NoFiniteLimit => "no_finite_limit",
            }
            .to_string(),
            row.closed_form_limit.map(fmt_f64).unwrap_or_default(),
            fmt_f64(row.simulated_final),
        ]);
    }
    let summary = EquilibriumSummary {
        points: grid.len(),
        unstable_points: certificates.iter().filter(|c| c.unstable).count(),
        all_fixed_points: checks.iter().all(|c| c.fixed_point),
        max_relative_error: checks.iter().map(|c| c.max_relative_error).fold(0.0, f64::max),
        certificates,
        jacobian_checks: checks,
        linear_model,
    };
    Ok(CommandOutput::ok(vec![
        Artifact::csv("certificates.csv", &cert_csv),
        Artifact::csv("jacobian_check.csv", &jac_csv),
        Artifact::csv("linear_model.csv", &lin_csv),
        Artifact::json("equilibrium.json", &summary)?,
    ]))
}

pub(crate) fn jacobian_check(params: &ModelParams, p_star: f64) -> Result<JacobianCheck> {
    let fd = jacobian_fd(params, p_star, DEFAULT_RELATIVE_STEP * p_star)?.bottom_row();
    let chain = chain_rule_bottom_row(params);
    let max_relative_error = fd
        .iter()
        .zip(&chain)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
        .fold(0.0, f64::max);
    let state = PriceState::constant(p_star, params.n)?;
    Ok(JacobianCheck {
        a1: params.a1,
        w: params.w,
        n: params.n,
        p_star,
        fixed_point: is_equilibrium(&state, params, 1e-12 * p_star),
        fd_bottom_right: fd[fd.len() - 1],
        chain_rule_bottom_right: chain[chain.len() - 1],
        price_scaled_bottom_right: price_scaled_bottom_right(params, p_star),
        max_relative_error,
    })
}
