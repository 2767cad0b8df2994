//! Piecewise-linear excess demand of the moving-average rule group.
//!
//! The demand is a seven-segment function of the moving-average log-ratio
//! `x`, with breakpoints at `±w`, `±2w`, `±3w`. Traders follow the trend
//! while `|x| < 8w/3` and act as contrarians beyond it; past `3w` the demand
//! saturates at `∓0.2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of the centre segment: `ed1(x) = ORIGIN_SLOPE * x / w` for `|x| < w`.
pub const ORIGIN_SLOPE: f64 = 0.1;

/// Zero crossings of the demand sit at `±CROSSING_MULTIPLE * w`.
pub const CROSSING_MULTIPLE: f64 = 8.0 / 3.0;

/// Peak magnitude of `ed1`, reached at `x = ±2w`.
pub const PEAK_DEMAND: f64 = 0.4;

/// Magnitude of the saturated branch for `|x| >= 3w`.
pub const SATURATED_DEMAND: f64 = 0.2;

/// Breakpoint multiples of `w` on the positive half-line.
pub const BREAKPOINT_MULTIPLES: [f64; 3] = [1.0, 2.0, 3.0];

/// Slope of `ed1` at the origin, `0.1 / w`.
pub fn origin_slope(w: f64) -> f64 {
    ORIGIN_SLOPE / w
}

fn check_w(w: f64) -> Result<()> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::param(format!("w must be positive and finite, got {w}")));
    }
    Ok(())
}

/// Positive half of the demand curve, evaluated on `u = |x| / w` with
/// left-closed segments `[0,1) [1,2) [2,3) [3,inf)`.
fn positive_branch(u: f64) -> f64 {
    if u < 1.0 {
        0.1 * u
    } else if u < 2.0 {
        0.3 * u - 0.2
    } else if u < 3.0 {
        -0.6 * u + 1.6
    } else {
        -SATURATED_DEMAND
    }
}

/// Raw excess demand `ed1(x)` for reference threshold `w`.
///
/// The value is computed on `|x|` and the sign reapplied, so
/// `ed1(-x, w) == -ed1(x, w)` holds bit-for-bit.
pub fn ed1(x: f64, w: f64) -> Result<f64> {
    check_w(w)?;
    if !x.is_finite() {
        return Err(Error::input(format!("log-ratio must be finite, got {x}")));
    }
    let value = positive_branch(x.abs() / w);
    Ok(if x < 0.0 { -value } else { value })
}

/// Unchecked variant used on the hot path once parameters are validated.
#[inline]
pub(crate) fn ed1_unchecked(x: f64, w: f64) -> f64 {
    let value = positive_branch(x.abs() / w);
    if x < 0.0 {
        -value
    } else {
        value
    }
}

/// Derivative of `ed1` with respect to `x` (left-closed segments, so the
/// right derivative at breakpoints).
pub fn ed1_slope(x: f64, w: f64) -> Result<f64> {
    check_w(w)?;
    if !x.is_finite() {
        return Err(Error::input(format!("log-ratio must be finite, got {x}")));
    }
    let u = x.abs() / w;
    let coeff = if u < 1.0 {
        0.1
    } else if u < 2.0 {
        0.3
    } else if u < 3.0 {
        -0.6
    } else {
        0.0
    };
    Ok(coeff / w)
}

/// Reference threshold `w` and trader strength `a1` of one rule group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandShape {
    w: f64,
    a1: f64,
}

impl DemandShape {
    pub fn new(w: f64, a1: f64) -> Result<Self> {
        check_w(w)?;
        if !a1.is_finite() {
            return Err(Error::param(format!("a1 must be finite, got {a1}")));
        }
        Ok(Self { w, a1 })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    /// The six breakpoints `-3w, -2w, -w, w, 2w, 3w` in ascending order.
    pub fn breakpoints(&self) -> [f64; 6] {
        let w = self.w;
        [-3.0 * w, -2.0 * w, -w, w, 2.0 * w, 3.0 * w]
    }

    /// Positive zero crossing `8w/3` separating trend-following from contrarian demand.
    pub fn crossing(&self) -> f64 {
        CROSSING_MULTIPLE * self.w
    }

    /// Scaled excess demand `a1 * ed1(x, w)`: the next log-return.
    pub fn excess_demand(&self, x: f64) -> Result<f64> {
        Ok(self.a1 * ed1(x, self.w)?)
    }
}

/// Scaled excess demand `a1 * ed1(x, w)`.
pub fn excess_demand(x: f64, shape: &DemandShape) -> Result<f64> {
    shape.excess_demand(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Demand has the sign of `x`: the trend continues.
    TrendFollowing,
    /// Demand opposes `x`: the trend reverses.
    Contrarian,
    /// Demand is clamped at `∓0.2`.
    Saturated,
}

pub fn zone_of(x: f64, w: f64) -> Result<Zone> {
    check_w(w)?;
    if !x.is_finite() {
        return Err(Error::input(format!("log-ratio must be finite, got {x}")));
    }
    let ax = x.abs();
    Ok(if ax >= 3.0 * w {
        Zone::Saturated
    } else if ax >= CROSSING_MULTIPLE * w {
        Zone::Contrarian
    } else {
        Zone::TrendFollowing
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 0.01;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn ed1_examples() {
        assert_eq!(ed1(0.0, W).unwrap(), 0.0);
        assert!(close(ed1(0.02, W).unwrap(), 0.4));
        assert!(close(ed1(0.05, W).unwrap(), -0.2));
        assert!(ed1(8.0 * W / 3.0, W).unwrap().abs() < 1e-12);
        assert!(close(ed1(-0.01, W).unwrap(), -0.1));
    }

    #[test]
    fn ed1_rejects_bad_inputs() {
        assert!(matches!(ed1(0.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(ed1(0.0, -1.0), Err(Error::Parameter(_))));
        assert!(matches!(ed1(f64::NAN, W), Err(Error::Input(_))));
        assert!(matches!(ed1(f64::INFINITY, W), Err(Error::Input(_))));
    }

    #[test]
    fn excess_demand_examples() {
        let shape = DemandShape::new(W, 0.17).unwrap();
        assert!(close(excess_demand(0.008, &shape).unwrap(), 0.0136));
        assert_eq!(excess_demand(0.0, &shape).unwrap(), 0.0);
        let strong = DemandShape::new(W, 0.39).unwrap();
        assert!(close(excess_demand(0.05, &strong).unwrap(), -0.078));
    }

    #[test]
    fn zones() {
        assert_eq!(zone_of(0.01, W).unwrap(), Zone::TrendFollowing);
        assert_eq!(zone_of(0.028, W).unwrap(), Zone::Contrarian);
        assert_eq!(zone_of(0.0, W).unwrap(), Zone::TrendFollowing);
        assert_eq!(zone_of(-0.028, W).unwrap(), Zone::Contrarian);
        assert_eq!(zone_of(0.03, W).unwrap(), Zone::Saturated);
        assert_eq!(zone_of(-1.0, W).unwrap(), Zone::Saturated);
    }

    #[test]
    fn breakpoints_and_crossing() {
        let shape = DemandShape::new(W, 0.2).unwrap();
        let bp = shape.breakpoints();
        assert_eq!(bp, [-0.03, -0.02, -0.01, 0.01, 0.02, 0.03]);
        assert!((shape.crossing() / W - 8.0 / 3.0).abs() < 1e-15);
        assert!(DemandShape::new(0.0, 0.1).is_err());
    }

    #[test]
    fn slope_at_origin() {
        assert!(close(ed1_slope(0.0, W).unwrap(), origin_slope(W)));
        assert!(close(origin_slope(W), 10.0));
        assert_eq!(ed1_slope(0.5, W).unwrap(), 0.0);
    }
}
