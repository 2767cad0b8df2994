//! Simulation and analysis of a deterministic stock-price map driven by
//! fuzzy moving-average trading rules.
//!
//! The crate is organised bottom-up:
//!
//! - [`demand`]: the piecewise-linear excess demand `ed1`.
//! - [`engine`]: the order-`n` price map, trajectories and returns.
//! - [`equilibrium`]: fixed points, Jacobians, eigenvalue instability
//!   certificates and the two-lag linear reference model.
//! - [`rng`] and [`monte_carlo`]: seeded ensembles, volatility `v(t)` and
//!   drift `d(t)`, and the random-walk reference.
//! - [`chaos`]: regime classification, Lyapunov exponents, volatility laws
//!   and return-independence metrics.
//! - [`distribution`]: attractor projections, histograms and kurtosis.

pub mod chaos;
pub mod demand;
pub mod distribution;
pub mod engine;
pub mod equilibrium;
pub mod error;
pub mod export;
pub mod monte_carlo;
pub mod rng;

pub use demand::{ed1, excess_demand, zone_of, DemandShape, Zone};
pub use engine::{
    moving_average, returns, simulate, simulate_with_guard, step, DivergenceGuard, ModelParams,
    PriceState, ShockSpec, Trajectory,
};
pub use error::{Error, Result};
