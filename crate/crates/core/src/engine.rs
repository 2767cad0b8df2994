//! The order-`n` price map and trajectory generation.
//!
//! State is a window of the last `n` prices. Each step computes the
//! moving-average log-ratio `x`, turns it into a log-return
//! `a1 * ed1(x, w)`, and appends the new price. Prices are held as
//! log-prices; `x` is evaluated relative to the most recent log-price, so
//! the map is scale free and never overflows even on divergent runs.

use serde::{Deserialize, Serialize};

use crate::demand::{ed1_unchecked, DemandShape};
use crate::error::{Error, Result};
use crate::export::CsvTable;

/// Default divergence bound on `|ln(p_t / p*)|`.
pub const DEFAULT_DIVERGENCE_LOG_BOUND: f64 = 13.815510557964274; // ln(1e6)

/// The four free parameters of the price map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Short moving-average length.
    pub m: usize,
    /// Long moving-average length, the order of the map.
    pub n: usize,
    pub w: f64,
    pub a1: f64,
}

impl ModelParams {
    pub fn new(m: usize, n: usize, w: f64, a1: f64) -> Result<Self> {
        let params = Self { m, n, w, a1 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.m >= self.n {
            return Err(Error::param(format!(
                "moving-average lengths need 1 <= m < n, got m={} n={}",
                self.m, self.n
            )));
        }
        DemandShape::new(self.w, self.a1).map(|_| ())
    }

    pub fn shape(&self) -> DemandShape {
        DemandShape::new(self.w, self.a1).expect("validated params")
    }

    pub fn with_a1(self, a1: f64) -> Self {
        Self { a1, ..self }
    }

    pub fn with_w(self, w: f64) -> Self {
        Self { w, ..self }
    }
}

/// Window of the last `n` prices, oldest first. Stored as log-prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    log_window: Vec<f64>,
}

impl PriceState {
    pub fn from_prices(prices: &[f64]) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::input("price window is empty"));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::input(format!("prices must be positive and finite, got {p}")));
        }
        Ok(Self {
            log_window: prices.iter().map(|p| p.ln()).collect(),
        })
    }

    pub fn from_log_prices(log_prices: &[f64]) -> Result<Self> {
        if log_prices.is_empty() {
            return Err(Error::input("price window is empty"));
        }
        if log_prices.iter().any(|l| !l.is_finite()) {
            return Err(Error::input("log-prices must be finite"));
        }
        Ok(Self {
            log_window: log_prices.to_vec(),
        })
    }

    /// Equilibrium state: `n` copies of `p_star`.
    pub fn constant(p_star: f64, n: usize) -> Result<Self> {
        Self::from_prices(&vec![p_star; n])
    }

    pub fn len(&self) -> usize {
        self.log_window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_window.is_empty()
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_window
    }

    pub fn prices(&self) -> Vec<f64> {
        self.log_window.iter().map(|l| l.exp()).collect()
    }

    pub fn last_price(&self) -> f64 {
        self.log_window[self.log_window.len() - 1].exp()
    }
}

/// Equilibrium price before the disturbance and the log-return shock at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockSpec {
    pub p_star: f64,
    pub r0: f64,
}

impl ShockSpec {
    pub fn new(p_star: f64, r0: f64) -> Result<Self> {
        if !(p_star.is_finite() && p_star > 0.0) {
            return Err(Error::param(format!("p_star must be positive, got {p_star}")));
        }
        if !r0.is_finite() {
            return Err(Error::param(format!("r0 must be finite, got {r0}")));
        }
        Ok(Self { p_star, r0 })
    }

    /// Shock given as a simple return, `p_0 = p_star * (1 + jump)`.
    pub fn from_simple_return(p_star: f64, jump: f64) -> Result<Self> {
        if !(jump > -1.0) {
            return Err(Error::param(format!("simple-return jump must exceed -1, got {jump}")));
        }
        Self::new(p_star, jump.ln_1p())
    }
}

/// Stop criterion for runs whose price escapes to infinity or zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceGuard {
    /// Halt once `|ln(p_t / p*)|` exceeds this bound.
    pub log_bound: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self {
            log_bound: DEFAULT_DIVERGENCE_LOG_BOUND,
        }
    }
}

impl DivergenceGuard {
    /// Only non-finite log-prices halt the run. Used for long stationary
    /// runs where only the returns matter.
    pub fn disabled() -> Self {
        Self {
            log_bound: f64::INFINITY,
        }
    }

    fn tripped(&self, log_price: f64, log_p_star: f64) -> bool {
        !log_price.is_finite() || (log_price - log_p_star).abs() > self.log_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

/// Where and which way a run left the guard band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// Time index of the first price outside the band. That price is kept
    /// as the last entry of the trajectory.
    pub step: usize,
    pub direction: Direction,
}

/// A simulated price path `p_0 .. p_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    log_prices: Vec<f64>,
    pub params: ModelParams,
    pub shock: ShockSpec,
    pub divergence: Option<Divergence>,
}

impl Trajectory {
    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    pub fn prices(&self) -> Vec<f64> {
        self.log_prices.iter().map(|l| l.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_prices.is_empty()
    }

    pub fn is_divergent(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn final_price(&self) -> f64 {
        self.log_prices[self.log_prices.len() - 1].exp()
    }

    /// Arithmetic mean of the last `window` prices.
    pub fn trailing_mean_price(&self, window: usize) -> f64 {
        let k = window.clamp(1, self.log_prices.len());
        let tail = &self.log_prices[self.log_prices.len() - k..];
        tail.iter().map(|l| l.exp()).sum::<f64>() / k as f64
    }

    /// Columns `t, price, log_price, return`. The return at `t = 0` is the
    /// initial shock relative to `p_star`.
    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(&["t", "price", "log_price", "return"]);
        let mut prev = self.shock.p_star.ln();
        for (t, &l) in self.log_prices.iter().enumerate() {
            table.push_row(&[t as f64, l.exp(), l, l - prev]);
            prev = l;
        }
        table
    }

    pub(crate) fn from_parts(
        log_prices: Vec<f64>,
        params: ModelParams,
        shock: ShockSpec,
        divergence: Option<Divergence>,
    ) -> Self {
        Self {
            log_prices,
            params,
            shock,
            divergence,
        }
    }
}

/// Arithmetic mean of the most recent `length` prices of `window`.
pub fn moving_average(window: &[f64], length: usize) -> Result<f64> {
    if length < 1 || length > window.len() {
        return Err(Error::param(format!(
            "moving-average length {length} outside 1..={}",
            window.len()
        )));
    }
    let tail = &window[window.len() - length..];
    Ok(tail.iter().sum::<f64>() / length as f64)
}

/// `ln(mean of last m) - ln(mean of all n)` over a log-price window,
/// evaluated relative to the last entry. Caller guarantees `1 <= m < n = window.len()`.
#[inline]
pub(crate) fn log_ratio_of_logs(log_window: &[f64], m: usize) -> f64 {
    let n = log_window.len();
    let last = log_window[n - 1];
    let mut sum_all = 0.0;
    let mut sum_short = 0.0;
    for (i, &l) in log_window.iter().enumerate() {
        let rel = (l - last).exp();
        sum_all += rel;
        if i >= n - m {
            sum_short += rel;
        }
    }
    (sum_short / m as f64).ln() - (sum_all / n as f64).ln()
}

/// Moving-average log-ratio `x = ln(mean_m) - ln(mean_n)` of a state.
pub fn log_ratio_x(state: &PriceState, m: usize, n: usize) -> Result<f64> {
    if n != state.len() {
        return Err(Error::param(format!(
            "long length n={n} must equal the window length {}",
            state.len()
        )));
    }
    if m < 1 || m >= n {
        return Err(Error::param(format!("need 1 <= m < n, got m={m} n={n}")));
    }
    Ok(log_ratio_of_logs(state.log_prices(), m))
}

/// Log-return produced by the map at this window.
#[inline]
pub(crate) fn next_return(log_window: &[f64], params: &ModelParams) -> f64 {
    params.a1 * ed1_unchecked(log_ratio_of_logs(log_window, params.m), params.w)
}

/// One application of the map: shift the window left and append
/// `y_n * exp(a1 * ed1(x))`.
pub fn step(state: &PriceState, params: &ModelParams) -> Result<PriceState> {
    params.validate()?;
    if state.len() != params.n {
        return Err(Error::param(format!(
            "state has {} prices but n={}",
            state.len(),
            params.n
        )));
    }
    let window = state.log_prices();
    let next = window[window.len() - 1] + next_return(window, params);
    if !next.is_finite() {
        return Err(Error::Numeric("price left the representable range".into()));
    }
    let mut log_window = Vec::with_capacity(window.len());
    log_window.extend_from_slice(&window[1..]);
    log_window.push(next);
    Ok(PriceState { log_window })
}

/// Initial window: `n - 1` prices at `p_star`, the last shocked by `r0`.
pub fn initial_log_window(params: &ModelParams, shock: &ShockSpec) -> Vec<f64> {
    let base = shock.p_star.ln();
    let mut window = vec![base; params.n];
    window[params.n - 1] = base + shock.r0;
    window
}

/// Iterate the map `horizon` times from the shocked equilibrium with the
/// default divergence guard.
pub fn simulate(params: &ModelParams, shock: &ShockSpec, horizon: usize) -> Result<Trajectory> {
    simulate_with_guard(params, shock, horizon, DivergenceGuard::default())
}

pub fn simulate_with_guard(
    params: &ModelParams,
    shock: &ShockSpec,
    horizon: usize,
    guard: DivergenceGuard,
) -> Result<Trajectory> {
    params.validate()?;
    ShockSpec::new(shock.p_star, shock.r0)?;
    if horizon < 1 {
        return Err(Error::param("horizon must be at least 1"));
    }
    let log_p_star = shock.p_star.ln();
    let mut window = initial_log_window(params, shock);
    let mut log_prices = Vec::with_capacity(horizon + 1);
    log_prices.push(window[params.n - 1]);

    let mut divergence = None;
    if guard.tripped(window[params.n - 1], log_p_star) {
        divergence = Some(Divergence {
            step: 0,
            direction: direction_of(window[params.n - 1], log_p_star),
        });
    } else {
        for t in 1..=horizon {
            let last = window[params.n - 1];
            let next = last + next_return(&window, params);
            window.copy_within(1.., 0);
            window[params.n - 1] = next;
            log_prices.push(next);
            if guard.tripped(next, log_p_star) {
                divergence = Some(Divergence {
                    step: t,
                    direction: direction_of(next, log_p_star),
                });
                break;
            }
        }
    }
    Ok(Trajectory::from_parts(log_prices, *params, *shock, divergence))
}

fn direction_of(log_price: f64, log_p_star: f64) -> Direction {
    if log_price >= log_p_star {
        Direction::Up
    } else {
        Direction::Down
    }
}

/// Log-returns `r_t = ln(p_t / p_{t-1})` for `t = 1..=T`.
pub fn returns(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.len() < 2 {
        return Err(Error::input("trajectory needs at least two prices"));
    }
    Ok(traj.log_prices.windows(2).map(|w| w[1] - w[0]).collect())
}
