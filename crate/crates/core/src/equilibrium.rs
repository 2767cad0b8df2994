//! Equilibria of the price map and their linear stability.
//!
//! Every constant window is a fixed point. The Jacobian at such a point is
//! a companion matrix: the first `n - 1` rows shift the window, and the
//! last row holds the partials of `f = y_n * exp(a1 * ed1(x))`. Because `x`
//! depends only on price ratios, `p*` cancels from those partials and the
//! last row always sums to one, so `λ = 1` is an eigenvalue at every
//! equilibrium.
//!
//! Also hosts the two-lag linear model `ln p_{t+1} = ln p_t + a (ln p_t - ln p_{t-1})`
//! used as an analytically solvable reference.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::origin_slope;
use crate::engine::{
    log_ratio_of_logs, returns, simulate, step, ModelParams, PriceState, ShockSpec,
};
use crate::error::{Error, Result};

/// Eigenvalue moduli within this distance of 1 count as on the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-6;

/// Relative finite-difference step used by [`instability_certificate`].
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-6;

pub const SET_STABILITY_TOL: f64 = 1e-10;
pub const SET_STABILITY_HORIZON: usize = 10_000;
/// Number of trailing returns that must all be below tolerance.
pub const SET_STABILITY_TRAILING: usize = 100;
pub const DEFAULT_PROBE_SHOCKS: [f64; 6] = [-0.01, -0.005, -0.001, 0.001, 0.005, 0.01];

/// Step the state once and compare coordinate-wise.
pub fn is_equilibrium(state: &PriceState, params: &ModelParams, tol: f64) -> bool {
    match step(state, params) {
        Ok(next) => next
            .prices()
            .iter()
            .zip(state.prices())
            .all(|(a, b)| (a - b).abs() <= tol),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub jacobian: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_modulus: f64,
}

impl Linearization {
    pub fn from_jacobian(jacobian: DMatrix<f64>) -> Result<Self> {
        let eigenvalues = eigenvalues(&jacobian)?;
        let max_modulus = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(Self {
            jacobian,
            eigenvalues,
            max_modulus,
        })
    }

    /// Last row of the Jacobian, `∂f/∂y_1 .. ∂f/∂y_n`.
    pub fn bottom_row(&self) -> Vec<f64> {
        let n = self.jacobian.nrows();
        self.jacobian.row(n - 1).iter().copied().collect()
    }

    /// `|Π λ_i|`.
    pub fn eigenvalue_product_modulus(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).product()
    }
}

pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(Error::input("eigenvalues need a non-empty square matrix"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let schur = nalgebra::Schur::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Components of the map `F` in price coordinates.
fn map_prices(prices: &[f64], params: &ModelParams) -> Vec<f64> {
    let logs: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
    let x = log_ratio_of_logs(&logs, params.m);
    let r = params.a1 * crate::demand::ed1_unchecked(x, params.w);
    let n = prices.len();
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&prices[1..]);
    out.push(prices[n - 1] * r.exp());
    out
}

/// Central-difference Jacobian of `F` at the constant state `p_star`.
pub fn jacobian_fd(params: &ModelParams, p_star: f64, h: f64) -> Result<Linearization> {
    params.validate()?;
    if !(p_star.is_finite() && p_star > 0.0) {
        return Err(Error::param(format!("p_star must be positive, got {p_star}")));
    }
    if !(h.is_finite() && h > 0.0 && h < p_star) {
        return Err(Error::param(format!(
            "finite-difference step must lie in (0, p_star), got {h}"
        )));
    }
    let n = params.n;
    let base = vec![p_star; n];
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += h;
        minus[j] -= h;
        let f_plus = map_prices(&plus, params);
        let f_minus = map_prices(&minus, params);
        let width = plus[j] - minus[j];
        for i in 0..n {
            jac[(i, j)] = (f_plus[i] - f_minus[i]) / width;
        }
    }
    Linearization::from_jacobian(jac)
}

/// Chain-rule partials of `f` at the constant state:
/// `∂f/∂y_i = δ_in + a1 (0.1/w) ([i > n-m]/m - 1/n)`. Independent of `p*`.
pub fn chain_rule_bottom_row(params: &ModelParams) -> Vec<f64> {
    let n = params.n;
    let m = params.m;
    let gain = params.a1 * origin_slope(params.w);
    (0..n)
        .map(|i| {
            let short = if i >= n - m { 1.0 / m as f64 } else { 0.0 };
            let own = if i == n - 1 { 1.0 } else { 0.0 };
            own + gain * (short - 1.0 / n as f64)
        })
        .collect()
}

pub fn jacobian_chain_rule(params: &ModelParams) -> Result<Linearization> {
    params.validate()?;
    let n = params.n;
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        jac[(i, i + 1)] = 1.0;
    }
    for (j, v) in chain_rule_bottom_row(params).into_iter().enumerate() {
        jac[(n - 1, j)] = v;
    }
    Linearization::from_jacobian(jac)
}

/// `1 + a1 p* (0.1/w)(1/m - 1/n)`: the bottom-right partial with a spurious
/// factor of `p*`. Kept only for the comparison table; the finite-difference
/// Jacobian agrees with [`chain_rule_bottom_row`] instead.
pub fn price_scaled_bottom_right(params: &ModelParams, p_star: f64) -> f64 {
    1.0 + params.a1 * p_star * origin_slope(params.w) * (1.0 / params.m as f64 - 1.0 / params.n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityCertificate {
    pub params: ModelParams,
    pub p_star: f64,
    pub max_modulus: f64,
    pub unstable: bool,
}

/// Eigenvalues of the finite-difference Jacobian; unstable iff some
/// eigenvalue lies outside the unit circle by more than [`UNIT_CIRCLE_TOL`].
pub fn instability_certificate(params: &ModelParams, p_star: f64) -> Result<InstabilityCertificate> {
    let lin = jacobian_fd(params, p_star, DEFAULT_RELATIVE_STEP * p_star)?;
    Ok(InstabilityCertificate {
        params: *params,
        p_star,
        max_modulus: lin.max_modulus,
        unstable: lin.max_modulus > 1.0 + UNIT_CIRCLE_TOL,
    })
}

/// Certificates for many `(params, p_star)` points, in input order.
pub fn certify_grid(points: &[(ModelParams, f64)]) -> Result<Vec<InstabilityCertificate>> {
    points
        .par_iter()
        .map(|(params, p_star)| instability_certificate(params, *p_star))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearOutcome {
    /// `|a| < 1`: the price settles at a new equilibrium.
    Converges,
    /// `|a| >= 1`: no finite limit (explosive or sustained oscillation).
    NoFiniteLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelRun {
    pub a: f64,
    pub p_star: f64,
    pub r0: f64,
    /// `ln p_0 .. ln p_T`.
    pub log_prices: Vec<f64>,
    pub outcome: LinearOutcome,
}

impl LinearModelRun {
    pub fn final_price(&self) -> f64 {
        self.log_prices[self.log_prices.len() - 1].exp()
    }
}

/// Iterate the linear two-lag model from `p_{-1} = p*`, `p_0 = p* e^{r0}`.
pub fn linear_model_simulate(a: f64, p_star: f64, r0: f64, horizon: usize) -> Result<LinearModelRun> {
    ShockSpec::new(p_star, r0)?;
    if !a.is_finite() {
        return Err(Error::param(format!("a must be finite, got {a}")));
    }
    if horizon < 1 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let mut prev = p_star.ln();
    let mut cur = prev + r0;
    let mut log_prices = Vec::with_capacity(horizon + 1);
    log_prices.push(cur);
    for _ in 0..horizon {
        let next = cur + a * (cur - prev);
        prev = cur;
        cur = next;
        log_prices.push(cur);
    }
    let outcome = if a.abs() < 1.0 {
        LinearOutcome::Converges
    } else {
        LinearOutcome::NoFiniteLimit
    };
    Ok(LinearModelRun {
        a,
        p_star,
        r0,
        log_prices,
        outcome,
    })
}

/// Closed-form limit `p* e^{r0 / (1 - a)}` of the linear model.
pub fn linear_model_limit(a: f64, p_star: f64, r0: f64) -> Result<f64> {
    if !(a.abs() < 1.0) {
        return Err(Error::Domain(format!("the linear model has no finite limit for |a| >= 1 (a = {a})")));
    }
    ShockSpec::new(p_star, r0)?;
    Ok(p_star * (r0 / (1.0 - a)).exp())
}

/// True iff every shocked run settles (trailing returns below `tol`) at a
/// finite positive price. A diverging run fails the probe.
pub fn set_stability_probe(
    params: &ModelParams,
    p_star: f64,
    shocks: &[f64],
    horizon: usize,
    tol: f64,
) -> Result<bool> {
    if horizon < SET_STABILITY_TRAILING {
        return Err(Error::param(format!(
            "horizon must cover the {SET_STABILITY_TRAILING} trailing returns"
        )));
    }
    for &r0 in shocks {
        let traj = simulate(params, &ShockSpec::new(p_star, r0)?, horizon)?;
        if traj.is_divergent() {
            return Ok(false);
        }
        let r = returns(&traj)?;
        let tail = &r[r.len() - SET_STABILITY_TRAILING..];
        let settled = tail.iter().all(|x| x.abs() < tol);
        let p = traj.final_price();
        if !settled || !(p.is_finite() && p > 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}
