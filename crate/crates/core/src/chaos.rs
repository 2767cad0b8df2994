//! Regimes, Lyapunov exponents, volatility laws and return independence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::ORIGIN_SLOPE;
use crate::engine::{returns, simulate, ModelParams, ShockSpec, Trajectory};
use crate::error::{Error, Result};
use crate::monte_carlo::{least_squares_slope, VolatilityCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    Convergent,
    Divergent,
    Chaotic,
    Oscillating,
    Undetermined,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::Convergent => "convergent",
            RegimeLabel::Divergent => "divergent",
            RegimeLabel::Chaotic => "chaotic",
            RegimeLabel::Oscillating => "oscillating",
            RegimeLabel::Undetermined => "undetermined",
        }
    }
}

/// Thresholds for [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCriteria {
    /// Trailing returns below this are "settled".
    pub conv_tol: f64,
    /// Tolerance for periodicity checks (`|r_t - r_{t-k}|`, `|r_t + r_{t-1}|`).
    pub osc_tol: f64,
    /// Number of trailing returns inspected.
    pub trailing: usize,
    /// Minimum simulated steps before a verdict is given.
    pub horizon: usize,
    /// Longest return cycle searched for.
    pub max_period: usize,
}

impl Default for RegimeCriteria {
    fn default() -> Self {
        Self {
            conv_tol: 1e-10,
            osc_tol: 1e-8,
            trailing: 100,
            horizon: 5000,
            max_period: 64,
        }
    }
}

/// Label plus the evidence behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnosis {
    pub label: RegimeLabel,
    /// Period of the trailing return cycle, if one was found.
    pub period: Option<usize>,
    /// Mean log-return per step over the detected cycle.
    pub cycle_drift: Option<f64>,
    /// Step at which the divergence guard tripped.
    pub diverged_at: Option<usize>,
}

impl RegimeDiagnosis {
    fn plain(label: RegimeLabel) -> Self {
        Self {
            label,
            period: None,
            cycle_drift: None,
            diverged_at: None,
        }
    }
}

/// Classify the long-run behaviour of a trajectory.
///
/// - divergent: the guard tripped, or the trailing returns repeat with a
///   nonzero net drift per cycle (the log-price then moves linearly to
///   `±∞`);
/// - convergent: trailing returns all below `conv_tol`, or strictly
///   shrinking in magnitude at every step of the trailing window;
/// - oscillating: trailing returns alternate in sign with equal magnitude,
///   or more generally repeat with zero net drift;
/// - chaotic: bounded, not settled, not periodic.
pub fn diagnose_regime(traj: &Trajectory, criteria: &RegimeCriteria) -> RegimeDiagnosis {
    if let Some(div) = traj.divergence {
        return RegimeDiagnosis {
            diverged_at: Some(div.step),
            ..RegimeDiagnosis::plain(RegimeLabel::Divergent)
        };
    }
    let need = criteria.trailing + criteria.max_period;
    if traj.len() < criteria.horizon + 1 || traj.len() < need + 1 {
        return RegimeDiagnosis::plain(RegimeLabel::Undetermined);
    }
    let r = match returns(traj) {
        Ok(r) => r,
        Err(_) => return RegimeDiagnosis::plain(RegimeLabel::Undetermined),
    };
    let end = r.len();
    let tail = &r[end - criteria.trailing..];

    let settled = tail.iter().all(|x| x.abs() < criteria.conv_tol);
    let alternating = (end - criteria.trailing..end)
        .all(|t| (r[t] + r[t - 1]).abs() < criteria.osc_tol && r[t].abs() > criteria.conv_tol);
    // Slow convergence near the edge of the convergent zone: the returns
    // have not reached `conv_tol` within the horizon but shrink every step.
    let decaying = (end - criteria.trailing + 1..end).all(|t| r[t].abs() < r[t - 1].abs());
    if !settled && decaying {
        return RegimeDiagnosis::plain(RegimeLabel::Convergent);
    }
    match (settled, alternating) {
        (true, true) => return RegimeDiagnosis::plain(RegimeLabel::Undetermined),
        (true, false) => return RegimeDiagnosis::plain(RegimeLabel::Convergent),
        (false, true) => {
            return RegimeDiagnosis {
                period: Some(2),
                cycle_drift: Some((r[end - 1] + r[end - 2]) / 2.0),
                ..RegimeDiagnosis::plain(RegimeLabel::Oscillating)
            }
        }
        (false, false) => {}
    }

    let period = (1..=criteria.max_period)
        .find(|&k| (end - criteria.trailing..end).all(|t| (r[t] - r[t - k]).abs() < criteria.osc_tol));
    match period {
        Some(k) => {
            let net: f64 = r[end - k..].iter().sum();
            let label = if net.abs() > criteria.osc_tol {
                RegimeLabel::Divergent
            } else {
                RegimeLabel::Oscillating
            };
            RegimeDiagnosis {
                label,
                period: Some(k),
                cycle_drift: Some(net / k as f64),
                diverged_at: None,
            }
        }
        None => RegimeDiagnosis::plain(RegimeLabel::Chaotic),
    }
}

pub fn classify_regime(traj: &Trajectory, criteria: &RegimeCriteria) -> RegimeLabel {
    diagnose_regime(traj, criteria).label
}

/// Simulate `criteria.horizon` steps and classify.
pub fn classify_params(
    params: &ModelParams,
    shock: &ShockSpec,
    criteria: &RegimeCriteria,
) -> Result<RegimeDiagnosis> {
    let traj = simulate(params, shock, criteria.horizon)?;
    Ok(diagnose_regime(&traj, criteria))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    /// Value of the swept parameter.
    pub value: f64,
    pub label: RegimeLabel,
}

/// A maximal run of consecutive grid points sharing a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeZone {
    pub label: RegimeLabel,
    pub first: f64,
    pub last: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ZoneMap {
    pub points: Vec<RegimePoint>,
    pub zones: Vec<RegimeZone>,
}

impl ZoneMap {
    pub fn from_points(points: Vec<RegimePoint>) -> Self {
        let mut zones: Vec<RegimeZone> = Vec::new();
        for p in &points {
            match zones.last_mut() {
                Some(z) if z.label == p.label => {
                    z.last = p.value;
                    z.points += 1;
                }
                _ => zones.push(RegimeZone {
                    label: p.label,
                    first: p.value,
                    last: p.value,
                    points: 1,
                }),
            }
        }
        Self { points, zones }
    }

    pub fn zone_labels(&self) -> Vec<RegimeLabel> {
        self.zones.iter().map(|z| z.label).collect()
    }
}

/// Classify every `a1` on an ascending grid. Boundaries are reported as
/// grid intervals.
pub fn sweep_regimes(
    a1_grid: &[f64],
    params_base: &ModelParams,
    shock: &ShockSpec,
    criteria: &RegimeCriteria,
) -> Result<ZoneMap> {
    if a1_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("a1 grid must be strictly ascending"));
    }
    let points = a1_grid
        .par_iter()
        .map(|&a1| {
            let params = params_base.with_a1(a1);
            classify_params(&params, shock, criteria).map(|d| RegimePoint { value: a1, label: d.label })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZoneMap::from_points(points))
}

/// Successive growth-ratio estimates of the Lyapunov exponent from the
/// first three returns after a small shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCandidates {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

fn require_unit_short_average(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.m != 1 {
        return Err(Error::Unsupported(format!(
            "Lyapunov formulas are derived for m = 1, got m = {}",
            params.m
        )));
    }
    Ok(())
}

fn checked_ln(arg: f64, what: &str) -> Result<f64> {
    if arg > 0.0 && arg.is_finite() {
        Ok(arg.ln())
    } else {
        Err(Error::Domain(format!("{what}: logarithm of non-positive value {arg}")))
    }
}

/// Linear gain `k (1 - 1/n)` with `k = 0.1 a1 / w`.
fn first_step_gain(params: &ModelParams) -> f64 {
    ORIGIN_SLOPE * params.a1 / params.w * (1.0 - 1.0 / params.n as f64)
}

pub fn lyapunov_candidates(params: &ModelParams) -> Result<LyapunovCandidates> {
    require_unit_short_average(params)?;
    let n = params.n as f64;
    let k = ORIGIN_SLOPE * params.a1 / params.w;
    let g = first_step_gain(params);
    let e2 = (n - 2.0) / (n - 1.0) + g;
    let e3 = ((n - 3.0) / (n - 1.0) + k * (1.0 - 2.0 / n)) / e2 + g;
    Ok(LyapunovCandidates {
        l1: checked_ln(g, "L1")?,
        l2: checked_ln(e2, "L2")?,
        l3: checked_ln(e3, "L3")?,
    })
}

/// Closed form of `e^{L3} - e^{L2} = -n / (n(n-1)(n-2) + k (n-1)^3)`.
pub fn lyapunov_gap_closed_form(params: &ModelParams) -> Result<f64> {
    require_unit_short_average(params)?;
    let n = params.n as f64;
    let k = ORIGIN_SLOPE * params.a1 / params.w;
    Ok(-n / (n * (n - 1.0) * (n - 2.0) + k * (n - 1.0).powi(3)))
}

/// `ln((n-2)/(n-1) + (0.1 a1 / w)(1 - 1/n))`; for `n = 5, w = 0.01` this is `ln(3/4 + 8 a1)`.
pub fn analytic_lyapunov(params: &ModelParams) -> Result<f64> {
    require_unit_short_average(params)?;
    let n = params.n as f64;
    checked_ln((n - 2.0) / (n - 1.0) + first_step_gain(params), "Lyapunov exponent")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovFit {
    /// Slope of `ln v(t)` against `t`.
    pub exponent: f64,
    pub intercept: f64,
    /// Inclusive `(t_start, t_end)` of the growth window.
    pub window: (usize, usize),
    /// Squared correlation of the linear fit.
    pub fit_quality: f64,
}

/// Fit `ln v(t) = c + L t` over the initial growth window
/// `{t >= 2 : v(t) < v_inf / 3}`.
pub fn empirical_lyapunov(curve: &VolatilityCurve, v_inf: f64) -> Result<LyapunovFit> {
    if curve.is_empty() || !(v_inf.is_finite() && v_inf > 0.0) {
        return Err(Error::InsufficientGrowth { points: 0 });
    }
    let v1 = curve.at(1);
    if !(v1 < v_inf / 10.0) {
        return Err(Error::InsufficientGrowth { points: 0 });
    }
    let points: Vec<(f64, f64)> = (2..=curve.len())
        .map(|t| (t, curve.at(t)))
        .take_while(|&(_, v)| v > 0.0 && v < v_inf / 3.0)
        .map(|(t, v)| (t as f64, v.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientGrowth { points: points.len() });
    }
    let slope = least_squares_slope(&points);
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let fit_quality = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LyapunovFit {
        exponent: slope,
        intercept,
        window: (points[0].0 as usize, points[points.len() - 1].0 as usize),
        fit_quality,
    })
}

/// Fitted converged volatility in the chaotic zone at `(m, n) = (1, 5)`:
/// `0.19 a1 + 0.03 a1 sin(π (w + 0.06 a1) / (0.1 a1))`.
pub fn v_infinity_formula(a1: f64, w: f64) -> f64 {
    if a1 == 0.0 {
        return 0.0;
    }
    0.19 * a1 + 0.03 * a1 * (std::f64::consts::PI / (0.1 * a1) * (w + 0.06 * a1)).sin()
}

/// [`v_infinity_formula`] together with whether the parameters are in the
/// chaotic zone, where the fit applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedVolatility {
    pub value: f64,
    pub regime: RegimeLabel,
    pub in_chaotic_zone: bool,
}

pub fn v_infinity_flagged(
    params: &ModelParams,
    shock: &ShockSpec,
    criteria: &RegimeCriteria,
) -> Result<FlaggedVolatility> {
    let regime = classify_params(params, shock, criteria)?.label;
    Ok(FlaggedVolatility {
        value: v_infinity_formula(params.a1, params.w),
        regime,
        in_chaotic_zone: regime == RegimeLabel::Chaotic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationVolatility {
    /// `0.2 a1`: the saturated return magnitude.
    pub v_inf: f64,
    /// Whether `int(n/2) a1 / n >= 15 w`, the necessary condition for a
    /// two-value steady state.
    pub constraint_holds: bool,
}

pub fn oscillation_volatility(params: &ModelParams) -> Result<OscillationVolatility> {
    require_unit_short_average(params)?;
    let half = (params.n / 2) as f64;
    Ok(OscillationVolatility {
        v_inf: 0.2 * params.a1,
        constraint_holds: half * params.a1 >= 15.0 * params.w * params.n as f64,
    })
}

/// Mean gap `d(t) - v_inf √t` over `t = n1..=n2`. `d_curve[0]` is `d(1)`.
pub fn distance_to_independence(d_curve: &[f64], v_inf: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 < 1 || n1 >= n2 || n2 > d_curve.len() {
        return Err(Error::param(format!(
            "need 1 <= N1 < N2 <= {} , got N1={n1} N2={n2}",
            d_curve.len()
        )));
    }
    let total: f64 = (n1..=n2)
        .map(|t| d_curve[t - 1] - v_inf * (t as f64).sqrt())
        .sum();
    Ok(total / (n2 - n1 + 1) as f64)
}

/// Strength at which returns look independent for a given `w`: `a1 ≈ 14.28 w`.
pub fn independence_locus(w: f64) -> f64 {
    14.28 * w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilitySource {
    /// The fitted chaotic-zone formula.
    Formula,
    /// Tail mean of the simulated `v(t)`.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    #[serde(rename = "I")]
    pub distance: f64,
    pub v_inf: f64,
    pub v_inf_source: VolatilitySource,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub d_curve: Vec<f64>,
}

impl IndependenceReport {
    pub fn new(d_curve: Vec<f64>, v_inf: f64, v_inf_source: VolatilitySource, n1: usize, n2: usize) -> Result<Self> {
        let distance = distance_to_independence(&d_curve, v_inf, n1, n2)?;
        Ok(Self {
            distance,
            v_inf,
            v_inf_source,
            n1,
            n2,
            d_curve,
        })
    }
}

/// Sample autocorrelation at lags `1..=max_lag`, normalised by lag 0.
pub fn autocorrelation(returns: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag < 1 {
        return Err(Error::param("max_lag must be at least 1"));
    }
    if returns.len() <= 10 * max_lag {
        return Err(Error::param(format!(
            "autocorrelation to lag {max_lag} needs more than {} samples, got {}",
            10 * max_lag,
            returns.len()
        )));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let centred: Vec<f64> = returns.iter().map(|r| r - mean).collect();
    let c0: f64 = centred.iter().map(|x| x * x).sum();
    if c0 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((1..=max_lag)
        .map(|k| centred.iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a1: f64) -> ModelParams {
        ModelParams::new(1, 5, 0.01, a1).unwrap()
    }

    fn fig2_shock() -> ShockSpec {
        ShockSpec::from_simple_return(10.0, 0.01).unwrap()
    }

    #[test]
    fn regime_anchors() {
        let c = RegimeCriteria::default();
        let label = |a1| classify_params(&params(a1), &fig2_shock(), &c).unwrap().label;
        assert_eq!(label(0.049), RegimeLabel::Convergent);
        assert_eq!(label(0.26), RegimeLabel::Chaotic);
        assert_eq!(label(0.39), RegimeLabel::Oscillating);
        assert_eq!(label(0.365), RegimeLabel::Divergent);
        assert_eq!(label(0.38), RegimeLabel::Divergent);
        assert_eq!(label(0.0497), RegimeLabel::Convergent);
        assert_eq!(label(0.0498), RegimeLabel::Convergent);
    }

    #[test]
    fn short_trajectory_is_undetermined() {
        let traj = simulate(&params(0.26), &fig2_shock(), 50).unwrap();
        assert_eq!(classify_regime(&traj, &RegimeCriteria::default()), RegimeLabel::Undetermined);
    }

    #[test]
    fn low_grid_is_one_convergent_zone() {
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 * 0.005).collect();
        let map = sweep_regimes(&grid, &params(0.1), &fig2_shock(), &RegimeCriteria::default()).unwrap();
        assert_eq!(map.zone_labels(), vec![RegimeLabel::Convergent]);
        assert_eq!(map.zones[0].points, 9);
        let empty = sweep_regimes(&[], &params(0.1), &fig2_shock(), &RegimeCriteria::default()).unwrap();
        assert!(empty.points.is_empty() && empty.zones.is_empty());
        assert!(sweep_regimes(&[0.2, 0.1], &params(0.1), &fig2_shock(), &RegimeCriteria::default()).is_err());
    }

    #[test]
    fn candidate_values() {
        let c = lyapunov_candidates(&params(0.17)).unwrap();
        assert!((c.l1 - 1.36f64.ln()).abs() < 1e-12);
        assert!((c.l1 - 0.3075).abs() < 1e-4);
        assert!((c.l2 - 0.7467).abs() < 1e-4);
        let a1: f64 = 0.17;
        let l3 = (8.0 * a1 + (2.0 + 24.0 * a1) / (3.0 + 32.0 * a1)).ln();
        assert!((c.l3 - l3).abs() < 1e-12);
        let gap = c.l3.exp() - c.l2.exp();
        assert!((gap - lyapunov_gap_closed_form(&params(0.17)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn analytic_lyapunov_examples() {
        assert!((analytic_lyapunov(&params(0.17)).unwrap() - 0.7467).abs() < 1e-4);
        assert!(analytic_lyapunov(&params(1.0 / 32.0)).unwrap().abs() < 1e-15);
        assert!(matches!(analytic_lyapunov(&params(-0.2)), Err(Error::Domain(_))));
        let m2 = ModelParams::new(2, 5, 0.01, 0.17).unwrap();
        assert!(matches!(analytic_lyapunov(&m2), Err(Error::Unsupported(_))));
        assert!(matches!(lyapunov_candidates(&m2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn synthetic_exponential_fit() {
        let curve = VolatilityCurve::new((1..=60).map(|t| 1e-6 * (0.5 * t as f64).exp()).collect());
        let fit = empirical_lyapunov(&curve, 1.0).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!((fit.fit_quality - 1.0).abs() < 1e-12);
        assert_eq!(fit.window.0, 2);
        let flat = VolatilityCurve::new(vec![0.03; 60]);
        assert!(matches!(empirical_lyapunov(&flat, 0.03), Err(Error::InsufficientGrowth { .. })));
    }

    #[test]
    fn formula_values() {
        assert!((v_infinity_formula(0.12, 0.01) - 0.019).abs() < 1e-3);
        assert!((v_infinity_formula(0.14, 0.01) - 0.023).abs() < 1e-3);
        assert!((v_infinity_formula(0.18, 0.01) - 0.031).abs() < 1e-3);
        assert!((v_infinity_formula(0.17, 0.01) - 0.0295).abs() < 1e-4);
        assert_eq!(v_infinity_formula(0.0, 0.01), 0.0);
    }

    #[test]
    fn formula_flagged_outside_chaos() {
        let c = RegimeCriteria::default();
        let inside = v_infinity_flagged(&params(0.17), &fig2_shock(), &c).unwrap();
        assert!(inside.in_chaotic_zone);
        let outside = v_infinity_flagged(&params(0.03), &fig2_shock(), &c).unwrap();
        assert!(!outside.in_chaotic_zone);
        assert_eq!(outside.value, v_infinity_formula(0.03, 0.01));
    }

    #[test]
    fn oscillation_examples() {
        let o = oscillation_volatility(&params(0.39)).unwrap();
        assert!((o.v_inf - 0.078).abs() < 1e-15);
        assert!(o.constraint_holds);
        let o = oscillation_volatility(&params(0.3)).unwrap();
        assert!((o.v_inf - 0.06).abs() < 1e-15);
        assert!(!o.constraint_holds);
        let o = oscillation_volatility(&params(0.0)).unwrap();
        assert_eq!(o.v_inf, 0.0);
        assert!(!o.constraint_holds);
    }

    #[test]
    fn independence_distance() {
        let v = 0.02;
        let d: Vec<f64> = (1..=50).map(|t| v * (t as f64).sqrt()).collect();
        assert!(distance_to_independence(&d, v, 30, 45).unwrap().abs() < 1e-15);
        let up: Vec<f64> = d.iter().map(|x| x + 0.01).collect();
        assert!((distance_to_independence(&up, v, 30, 45).unwrap() - 0.01).abs() < 1e-12);
        assert!(distance_to_independence(&d, v, 45, 45).is_err());
        assert!(distance_to_independence(&d, v, 0, 45).is_err());
        assert!(distance_to_independence(&d, v, 30, 51).is_err());
    }

    #[test]
    fn locus() {
        assert!((independence_locus(0.01) - 0.1428).abs() < 1e-12);
        assert!((independence_locus(0.02) - 0.2856).abs() < 1e-12);
        assert_eq!(independence_locus(0.0), 0.0);
    }

    #[test]
    fn autocorrelation_basics() {
        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = autocorrelation(&alt, 4).unwrap();
        assert!((a[0] + 0.999).abs() < 1e-9);
        assert!((a[1] - 0.998).abs() < 1e-9);
        assert!(autocorrelation(&alt[..40], 4).is_err());
        assert!(matches!(autocorrelation(&[1.0; 100], 2), Err(Error::DegenerateVariance)));
    }
}
