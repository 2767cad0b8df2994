//! Seeded ensembles and their cross-sectional statistics.
//!
//! An ensemble is `S` runs of the price map from the same equilibrium,
//! each disturbed at `t = 0` by `r0 = v0 * ε` with `ε` standard normal. Two
//! statistics are taken across runs at each time:
//!
//! - volatility `v(t) = sqrt(mean_j (ln p_t^j - ln p_{t-1}^j)^2)`
//! - drift `d(t) = sqrt(mean_j (ln p_t^j - ln p_0^j)^2)`
//!
//! Runs execute in parallel; reductions always run in run-index order, so
//! results do not depend on the thread count. A run that trips the
//! divergence guard at step `k` is left out of both statistics for `t >= k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{simulate, ModelParams, ShockSpec, Trajectory};
use crate::error::{Error, Result};
use crate::rng::GaussianStream;

/// Default run count (matches the drift study ensemble size).
pub const DEFAULT_RUNS: usize = 600;
pub const DEFAULT_VOLATILITY_HORIZON: usize = 100;
pub const DEFAULT_DRIFT_HORIZON: usize = 50;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
/// Relative change across the tail window above which a curve is flagged as still trending.
pub const TREND_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub p_star: f64,
    /// Scale of the Gaussian shock at `t = 0`.
    pub v0: f64,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.p_star.is_finite() && self.p_star > 0.0) {
            return Err(Error::param(format!("p_star must be positive, got {}", self.p_star)));
        }
        if !(self.v0.is_finite() && self.v0 >= 0.0) {
            return Err(Error::param(format!("v0 must be non-negative, got {}", self.v0)));
        }
        check_shape(self.runs, self.horizon)
    }
}

fn check_shape(runs: usize, horizon: usize) -> Result<()> {
    if runs < 2 {
        return Err(Error::param(format!("an ensemble needs at least 2 runs, got {runs}")));
    }
    if horizon < 2 {
        return Err(Error::param(format!("ensemble horizon must be at least 2, got {horizon}")));
    }
    Ok(())
}

/// Random-walk reference `ln p_{t+1} = ln p_t + σ ε_t`, with the first step
/// scaled by `sigma0` instead of `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkConfig {
    pub sigma: f64,
    pub sigma0: f64,
    pub p_star: f64,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSource {
    PriceMap(EnsembleConfig),
    RandomWalk(RandomWalkConfig),
}

/// One ensemble member: its shock and log-price path `ln p_0 .. ln p_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub r0: f64,
    pub log_prices: Vec<f64>,
    /// Step at which the run left the divergence band, if it did.
    pub diverged_at: Option<usize>,
}

impl EnsembleRun {
    fn from_trajectory(traj: Trajectory) -> Self {
        Self {
            r0: traj.shock.r0,
            diverged_at: traj.divergence.map(|d| d.step),
            log_prices: traj.log_prices().to_vec(),
        }
    }

    /// Whether this run contributes to statistics at time `t`.
    fn included_at(&self, t: usize) -> bool {
        t < self.log_prices.len() && self.diverged_at.is_none_or(|k| t < k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub runs: Vec<EnsembleRun>,
    pub horizon: usize,
    pub source: EnsembleSource,
}

/// Ensemble metadata for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub source: EnsembleSource,
    /// Runs that tripped the divergence guard before the horizon.
    pub excluded_runs: usize,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn excluded_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged_at.is_some()).count()
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            source: self.source,
            excluded_runs: self.excluded_runs(),
        }
    }

    /// Root-mean-square over included runs of `g(run)` at each `t = 1..=T`.
    /// `NaN` where no run is included.
    fn rms_curve(&self, g: impl Fn(&EnsembleRun, usize) -> f64) -> Vec<f64> {
        (1..=self.horizon)
            .map(|t| {
                let mut sum = 0.0;
                let mut count = 0usize;
                for run in &self.runs {
                    if run.included_at(t) {
                        let d = g(run, t);
                        sum += d * d;
                        count += 1;
                    }
                }
                if count == 0 {
                    f64::NAN
                } else {
                    (sum / count as f64).sqrt()
                }
            })
            .collect()
    }
}

/// Simulate `runs` shocked trajectories; run `j` draws its shock from
/// substream `j` of `seed`.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<Ensemble> {
    config.validate()?;
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|j| {
            let eps = GaussianStream::substream(config.seed, j as u64).next_gaussian();
            let shock = ShockSpec::new(config.p_star, config.v0 * eps)?;
            simulate(&config.params, &shock, config.horizon).map(EnsembleRun::from_trajectory)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        runs,
        horizon: config.horizon,
        source: EnsembleSource::PriceMap(*config),
    })
}

pub fn random_walk_ensemble(
    sigma: f64,
    sigma0: f64,
    p_star: f64,
    runs: usize,
    horizon: usize,
    seed: u64,
) -> Result<Ensemble> {
    if !(sigma.is_finite() && sigma >= 0.0 && sigma0.is_finite() && sigma0 >= 0.0) {
        return Err(Error::param("random-walk scales must be non-negative"));
    }
    if !(p_star.is_finite() && p_star > 0.0) {
        return Err(Error::param(format!("p_star must be positive, got {p_star}")));
    }
    check_shape(runs, horizon)?;
    let base = p_star.ln();
    let members = (0..runs)
        .into_par_iter()
        .map(|j| {
            let mut stream = GaussianStream::substream(seed, j as u64);
            let r0 = sigma0 * stream.next_gaussian();
            let mut log_prices = Vec::with_capacity(horizon + 1);
            let mut l = base + r0;
            log_prices.push(l);
            for _ in 0..horizon {
                l += sigma * stream.next_gaussian();
                log_prices.push(l);
            }
            EnsembleRun {
                r0,
                log_prices,
                diverged_at: None,
            }
        })
        .collect();
    Ok(Ensemble {
        runs: members,
        horizon,
        source: EnsembleSource::RandomWalk(RandomWalkConfig {
            sigma,
            sigma0,
            p_star,
            runs,
            horizon,
            seed,
        }),
    })
}

/// `v(1) .. v(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityCurve {
    pub values: Vec<f64>,
}

impl VolatilityCurve {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `v(t)` for `t >= 1`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }
}

/// Ensemble volatility with the zero-mean convention.
pub fn volatility_curve(ens: &Ensemble) -> Result<VolatilityCurve> {
    if ens.len() < 2 {
        return Err(Error::param("volatility needs at least 2 runs"));
    }
    Ok(VolatilityCurve::new(
        ens.rms_curve(|run, t| run.log_prices[t] - run.log_prices[t - 1]),
    ))
}

/// Ensemble drift `d(1) .. d(T)` of the log-price from `t = 0`.
pub fn drift_curve(ens: &Ensemble) -> Result<Vec<f64>> {
    if ens.len() < 2 {
        return Err(Error::param("drift needs at least 2 runs"));
    }
    Ok(ens.rms_curve(|run, t| run.log_prices[t] - run.log_prices[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergedVolatility {
    pub value: f64,
    /// First `t` of the averaging window.
    pub tail_start: usize,
    /// Least-squares slope of `v(t)` over the window.
    pub tail_slope: f64,
    /// Set when the curve still moves by more than [`TREND_THRESHOLD`]
    /// (relative) across the window.
    pub still_trending: bool,
}

/// Mean of `v(t)` over the final `tail_fraction` of the horizon.
pub fn converged_volatility(curve: &VolatilityCurve, tail_fraction: f64) -> Result<ConvergedVolatility> {
    if curve.len() < 20 {
        return Err(Error::input(format!(
            "converged volatility needs at least 20 points, got {}",
            curve.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let t_len = curve.len();
    let k = ((tail_fraction * t_len as f64).ceil() as usize).clamp(2, t_len);
    let tail_start = t_len - k + 1;
    let points: Vec<(f64, f64)> = (tail_start..=t_len)
        .map(|t| (t as f64, curve.at(t)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    if points.len() < 2 {
        return Err(Error::Numeric("no finite volatility values in the tail window".into()));
    }
    let value = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let tail_slope = least_squares_slope(&points);
    let still_trending = (tail_slope * k as f64).abs() > TREND_THRESHOLD * value.abs().max(f64::MIN_POSITIVE);
    Ok(ConvergedVolatility {
        value,
        tail_start,
        tail_slope,
        still_trending,
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(a1: f64, v0: f64, runs: usize, horizon: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            params: ModelParams::new(1, 5, 0.01, a1).unwrap(),
            p_star: 10.0,
            v0,
            runs,
            horizon,
            seed,
        }
    }

    #[test]
    fn same_seed_same_ensemble() {
        let a = run_ensemble(&config(0.17, 1e-4, 50, 60, 9)).unwrap();
        let b = run_ensemble(&config(0.17, 1e-4, 50, 60, 9)).unwrap();
        assert_eq!(a, b);
        let c = run_ensemble(&config(0.17, 1e-4, 50, 60, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_shock_is_flat() {
        let ens = run_ensemble(&config(0.17, 0.0, 10, 30, 1)).unwrap();
        assert!(ens.runs.iter().all(|r| r.log_prices == ens.runs[0].log_prices));
        assert!(volatility_curve(&ens).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(drift_curve(&ens).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn drift_and_volatility_agree_at_one() {
        let ens = run_ensemble(&config(0.17, 1e-3, 40, 30, 3)).unwrap();
        let v = volatility_curve(&ens).unwrap();
        let d = drift_curve(&ens).unwrap();
        assert_eq!(v.at(1), d[0]);
    }

    #[test]
    fn rejects_small_ensembles() {
        assert!(run_ensemble(&config(0.17, 1e-3, 1, 30, 3)).is_err());
        assert!(run_ensemble(&config(0.17, 1e-3, 5, 1, 3)).is_err());
        assert!(run_ensemble(&config(0.17, -1.0, 5, 10, 3)).is_err());
        assert!(random_walk_ensemble(0.03, 1e-5, 10.0, 1, 10, 0).is_err());
    }

    #[test]
    fn random_walk_flat_volatility() {
        let ens = random_walk_ensemble(0.03, 1e-5, 10.0, 2000, 30, 5).unwrap();
        let v = volatility_curve(&ens).unwrap();
        for &x in &v.values {
            assert!((x - 0.03).abs() < 0.003, "v = {x}");
        }
        let still = random_walk_ensemble(0.0, 1e-5, 10.0, 5, 10, 5).unwrap();
        assert!(volatility_curve(&still).unwrap().values.iter().all(|&v| v == 0.0));
        assert_eq!(ens, random_walk_ensemble(0.03, 1e-5, 10.0, 2000, 30, 5).unwrap());
    }

    #[test]
    fn converged_volatility_of_flat_curve() {
        let curve = VolatilityCurve::new(vec![0.03; 100]);
        let c = converged_volatility(&curve, 0.25).unwrap();
        assert!((c.value - 0.03).abs() < 1e-15);
        assert_eq!(c.tail_start, 76);
        assert!(!c.still_trending);
        let short = VolatilityCurve::new(vec![0.03; 10]);
        assert!(converged_volatility(&short, 0.25).is_err());
        let rising = VolatilityCurve::new((1..=100).map(|t| t as f64 * 1e-3).collect());
        assert!(converged_volatility(&rising, 0.25).unwrap().still_trending);
    }

    #[test]
    fn divergent_runs_are_excluded() {
        let ens = Ensemble {
            runs: vec![
                EnsembleRun { r0: 0.0, log_prices: vec![0.0, 1.0, 2.0, 3.0], diverged_at: None },
                EnsembleRun { r0: 0.0, log_prices: vec![0.0, 3.0, 20.0], diverged_at: Some(2) },
            ],
            horizon: 3,
            source: EnsembleSource::RandomWalk(RandomWalkConfig {
                sigma: 1.0,
                sigma0: 0.0,
                p_star: 1.0,
                runs: 2,
                horizon: 3,
                seed: 0,
            }),
        };
        let v = volatility_curve(&ens).unwrap();
        assert!((v.at(1) - (5.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(v.at(2), 1.0);
        assert_eq!(v.at(3), 1.0);
        assert_eq!(ens.excluded_runs(), 1);
    }
}
