//! Declarative run configuration.
//!
//! Every section has defaults, so a config file only lists what it changes.
//! Unknown keys are rejected.

use std::path::PathBuf;

use chaos_market_core::chaos::RegimeCriteria;
use chaos_market_core::{ModelParams, ShockSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::CommandKind;

pub const DEFAULT_SEED: u64 = 20_110_117;
pub const SEED_ENV: &str = "CHAOS_MARKET_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub shock: ShockSection,
    pub regime: RegimeSection,
    pub simulate: SimulateSection,
    pub ensemble: EnsembleSection,
    pub sweep: SweepSection,
    pub lyapunov: LyapunovSection,
    pub independence: IndependenceSection,
    pub distribution: DistributionSection,
    pub equilibrium: EquilibriumSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            model: ModelSection::default(),
            shock: ShockSection::default(),
            regime: RegimeSection::default(),
            simulate: SimulateSection::default(),
            ensemble: EnsembleSection::default(),
            sweep: SweepSection::default(),
            lyapunov: LyapunovSection::default(),
            independence: IndependenceSection::default(),
            distribution: DistributionSection::default(),
            equilibrium: EquilibriumSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: usize,
    pub n: usize,
    pub w: f64,
    pub a1: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            m: 1,
            n: 5,
            w: 0.01,
            a1: 0.17,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.m, self.n, self.w, self.a1)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockConvention {
    /// `p_0 = p_star (1 + r0)`.
    Simple,
    /// `ln p_0 = ln p_star + r0`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockSection {
    pub p_star: f64,
    pub r0: f64,
    pub convention: ShockConvention,
}

impl Default for ShockSection {
    fn default() -> Self {
        Self {
            p_star: 10.0,
            r0: 0.01,
            convention: ShockConvention::Simple,
        }
    }
}

impl ShockSection {
    pub fn spec(&self) -> Result<ShockSpec> {
        Ok(match self.convention {
            ShockConvention::Simple => ShockSpec::from_simple_return(self.p_star, self.r0)?,
            ShockConvention::Log => ShockSpec::new(self.p_star, self.r0)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeSection {
    pub conv_tol: f64,
    pub osc_tol: f64,
    pub trailing: usize,
    pub horizon: usize,
    pub max_period: usize,
}

impl Default for RegimeSection {
    fn default() -> Self {
        let c = RegimeCriteria::default();
        Self {
            conv_tol: c.conv_tol,
            osc_tol: c.osc_tol,
            trailing: c.trailing,
            horizon: c.horizon,
            max_period: c.max_period,
        }
    }
}

impl RegimeSection {
    pub fn criteria(&self) -> RegimeCriteria {
        RegimeCriteria {
            conv_tol: self.conv_tol,
            osc_tol: self.osc_tol,
            trailing: self.trailing,
            horizon: self.horizon,
            max_period: self.max_period,
        }
    }
}

/// Either an explicit list or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub values: Vec<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

impl GridSpec {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Self {
            values: Vec::new(),
            start: Some(start),
            stop: Some(stop),
            step: Some(step),
        }
    }

    pub fn list(values: &[f64]) -> Self {
        Self {
            values: values.to_vec(),
            ..Self::default()
        }
    }

    /// Grid points; range points are `start + i * step`, rounded to 12
    /// decimals so that file names and CSV keys stay tidy.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !self.values.is_empty() {
            if self.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("grid values must be finite".into()));
            }
            return Ok(self.values.clone());
        }
        let (start, stop, step) = match (self.start, self.stop, self.step) {
            (Some(a), Some(b), Some(h)) => (a, b, h),
            (None, None, None) => return Err(CliError::Config("grid is empty".into())),
            _ => return Err(CliError::Config("grid range needs start, stop and step".into())),
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
            return Err(CliError::Config(format!(
                "invalid grid range start={start} stop={stop} step={step}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| round12(start + i as f64 * step)).collect())
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Strengths to simulate; empty means `model.a1`.
    pub a1_values: Vec<f64>,
    pub horizon: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            a1_values: Vec::new(),
            horizon: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub runs: usize,
    pub horizon: usize,
    /// Scale of the Gaussian log-return shock at `t = 0`.
    pub v0: f64,
    /// Fraction of the horizon averaged for the converged volatility.
    pub tail_fraction: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            runs: 600,
            horizon: 100,
            v0: 1e-3,
            tail_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Regimes,
    Volatility,
    Independence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    A1,
    W,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::A1 => "a1",
            SweepAxis::W => "w",
        }
    }

    pub fn apply(&self, base: ModelParams, value: f64) -> ModelParams {
        match self {
            SweepAxis::A1 => base.with_a1(value),
            SweepAxis::W => base.with_w(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilitySourceChoice {
    Formula,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub axis: SweepAxis,
    pub grid: GridSpec,
    /// Reference volatility for independence sweeps.
    pub v_inf_source: VolatilitySourceChoice,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kind: SweepKind::Regimes,
            axis: SweepAxis::A1,
            grid: GridSpec::range(0.01, 0.45, 0.0025),
            v_inf_source: VolatilitySourceChoice::Simulated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomWalkSection {
    pub sigma: f64,
    pub sigma0: f64,
}

impl Default for RandomWalkSection {
    fn default() -> Self {
        Self {
            sigma: 0.03,
            sigma0: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    /// Strengths to run ensembles for; empty means `model.a1`.
    pub a1_values: Vec<f64>,
    /// Initial shock scales; empty skips the ensembles.
    pub v0_values: Vec<f64>,
    pub fit: bool,
    /// Number of per-run return paths to export (0 for none).
    pub return_paths: usize,
    pub random_walk: Option<RandomWalkSection>,
    /// Grid of `a1` for the analytic candidate curves.
    pub candidates: Option<GridSpec>,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self {
            a1_values: Vec::new(),
            v0_values: vec![1e-6],
            fit: true,
            return_paths: 0,
            random_walk: None,
            candidates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependenceSection {
    /// Strengths to analyse; empty means `model.a1`.
    pub a1_values: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
    pub v_inf_source: VolatilitySourceChoice,
    /// Ensemble drift against the `v_inf √t` reference.
    pub drift: bool,
    /// Single-trajectory return autocorrelations.
    pub autocorrelation: bool,
    pub steps: usize,
    pub burn_in: usize,
    pub max_lag: usize,
}

impl Default for IndependenceSection {
    fn default() -> Self {
        Self {
            a1_values: Vec::new(),
            n1: 30,
            n2: 45,
            v_inf_source: VolatilitySourceChoice::Formula,
            drift: true,
            autocorrelation: false,
            steps: 100_000,
            burn_in: 1000,
            max_lag: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionSection {
    pub steps: usize,
    pub burn_in: usize,
    pub bins: usize,
}

impl Default for DistributionSection {
    fn default() -> Self {
        Self {
            steps: 100_000,
            burn_in: 1000,
            bins: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearModelSection {
    pub a_values: Vec<f64>,
    pub p_star: f64,
    pub r0: f64,
    pub horizon: usize,
}

impl Default for LinearModelSection {
    fn default() -> Self {
        Self {
            a_values: vec![-0.5, 0.5, 0.9, 1.0, -1.0],
            p_star: 10.0,
            r0: 0.01,
            horizon: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumSection {
    pub m: usize,
    pub a1_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub p_star_values: Vec<f64>,
    pub linear_model: LinearModelSection,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        Self {
            m: 1,
            a1_values: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4],
            w_values: vec![0.005, 0.01, 0.02],
            n_values: vec![3, 5, 10],
            p_star_values: vec![1.0, 10.0, 100.0],
            linear_model: LinearModelSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Overlay the keys of `overlay` onto this config.
    pub fn merged_with(&self, overlay: &str) -> Result<Self> {
        let base = toml::Table::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        let top: toml::Table = overlay.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut merged = toml::Value::Table(base);
        merge(&mut merged, toml::Value::Table(top));
        merged.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn seed_value(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn model_a1s(&self, values: &[f64]) -> Vec<f64> {
        if values.is_empty() {
            vec![self.model.a1]
        } else {
            values.to_vec()
        }
    }

    /// Checks that only depend on the configuration, run before any work.
    pub fn validate_for(&self, command: CommandKind) -> Result<()> {
        self.model.params()?;
        match command {
            CommandKind::Simulate => {
                self.shock.spec()?;
                if self.simulate.horizon < 1 {
                    return Err(CliError::Config("simulate.horizon must be at least 1".into()));
                }
            }
            CommandKind::Sweep => {
                let grid = self.sweep.grid.points()?;
                if self.sweep.kind == SweepKind::Regimes && self.sweep.axis != SweepAxis::A1 {
                    return Err(CliError::Config("regime sweeps run over a1 only".into()));
                }
                if self.sweep.kind != SweepKind::Regimes {
                    self.check_ensemble()?;
                }
                if self.sweep.kind == SweepKind::Independence {
                    self.check_window(self.independence.n1, self.independence.n2)?;
                }
                if grid.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(CliError::Config("sweep grid must be strictly ascending".into()));
                }
            }
            CommandKind::Lyapunov => {
                if !self.lyapunov.v0_values.is_empty() {
                    self.check_ensemble()?;
                }
                if let Some(g) = &self.lyapunov.candidates {
                    g.points()?;
                }
            }
            CommandKind::Independence => {
                if self.independence.drift {
                    self.check_ensemble()?;
                    self.check_window(self.independence.n1, self.independence.n2)?;
                }
                if self.independence.autocorrelation {
                    self.shock.spec()?;
                    if self.independence.steps <= 10 * self.independence.max_lag {
                        return Err(CliError::Config(
                            "independence.steps must exceed 10 * max_lag".into(),
                        ));
                    }
                }
            }
            CommandKind::Distribution => {
                self.shock.spec()?;
            }
            CommandKind::Equilibrium => {
                let e = &self.equilibrium;
                if e.a1_values.is_empty() || e.w_values.is_empty() || e.n_values.is_empty() || e.p_star_values.is_empty() {
                    return Err(CliError::Config("equilibrium grid is empty".into()));
                }
            }
        }
        Ok(())
    }

    fn check_ensemble(&self) -> Result<()> {
        let e = &self.ensemble;
        if e.runs < 2 {
            return Err(CliError::Config(format!("ensemble.runs must be at least 2, got {}", e.runs)));
        }
        if e.horizon < 20 {
            return Err(CliError::Config(format!(
                "ensemble.horizon must be at least 20, got {}",
                e.horizon
            )));
        }
        Ok(())
    }

    fn check_window(&self, n1: usize, n2: usize) -> Result<()> {
        if n1 < 1 || n1 >= n2 || n2 > self.ensemble.horizon {
            return Err(CliError::Config(format!(
                "need 1 <= n1 < n2 <= ensemble.horizon ({}), got n1={n1} n2={n2}",
                self.ensemble.horizon
            )));
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Flag, then config file, then environment, then the built-in default.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match env {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))),
        None => Ok(DEFAULT_SEED),
    }
}
