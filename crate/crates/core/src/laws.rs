//! Closed-form send-rate laws.
//!
//! Each law always returns a number together with a validity verdict, so
//! callers can plot the curves outside their domain.

use serde::{Deserialize, Serialize};

use crate::{check_open_probability, Error, PathSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Law {
    Sqrt,
    LinearUnsat,
    LinearSat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawResult {
    pub law: Law,
    /// Bits per second.
    pub send_rate: f64,
    /// Effective window, packets per RTT.
    pub w_eff: f64,
    pub valid: bool,
    /// The `p_min` or `p_max` that `p` was checked against.
    pub validity_bound: f64,
}

/// `SR = (P/RTT)·√(1.5/p)`, valid for `p ≥ (8/3)/⌊β⌋²`.
pub fn sqrt_law(path: &PathSpec, p: f64) -> Result<LawResult> {
    check_open_probability(p)?;
    let w_eff = (1.5 / p).sqrt();
    let bound = path.p_min();
    Ok(LawResult {
        law: Law::Sqrt,
        send_rate: path.window_to_rate(w_eff),
        w_eff,
        valid: p >= bound,
        validity_bound: bound,
    })
}

/// `W_eff = W_R·[1 − (W_R/4)(1 + W_R/2)p]` for a path that cannot saturate.
pub fn linear_law_unsat(path: &PathSpec, p: f64) -> Result<LawResult> {
    check_open_probability(p)?;
    if path.is_saturated() {
        return Err(Error::SaturatedPath { ratio: path.ratio });
    }
    let w = f64::from(path.receiver_window);
    let raw = w * (1.0 - (w / 4.0) * (1.0 + w / 2.0) * p);
    let bound = path.p_max_unsat();
    let w_eff = raw.max(0.0);
    Ok(LawResult {
        law: Law::LinearUnsat,
        send_rate: path.window_to_rate(w_eff),
        w_eff,
        valid: raw > 0.0 && p <= bound,
        validity_bound: bound,
    })
}

/// Returns `(K, p_max)` of the saturated linear law, checking its side
/// conditions `W_R − ⌊β⌋ > 3` and `⌊W_R/2⌋ < ⌊β⌋`.
pub(crate) fn saturated_constants(path: &PathSpec) -> Result<(f64, f64)> {
    if !path.is_saturated() {
        return Err(Error::UnsaturatedPath { ratio: path.ratio });
    }
    let w_r = i64::from(path.receiver_window);
    let fb = i64::from(path.floor_beta());
    let half = w_r / 2;
    if w_r - fb <= 3 {
        return Err(Error::SideCondition("W_R - floor(beta) > 3"));
    }
    if half >= fb {
        return Err(Error::SideCondition("floor(W_R/2) < floor(beta)"));
    }
    let beta = path.beta;
    let (w_r, fb, half) = (w_r as f64, fb as f64, half as f64);
    let k = (fb - half + 2.0) * beta - (fb - half + 1.0) * (fb + half + 2.0) / 2.0 - 1.0;
    let inv_p_max = (fb - half + 2.0) * beta + w_r + (w_r - fb + 1.0) * (w_r + fb) / 2.0 - 1.0;
    Ok((k, 1.0 / inv_p_max))
}

/// `SR = C(1 − Kp)`, `W_eff = β(1 − Kp)` for a saturated path.
pub fn linear_law_sat(path: &PathSpec, p: f64) -> Result<LawResult> {
    check_open_probability(p)?;
    let (k, p_max) = saturated_constants(path)?;
    let factor = (1.0 - k * p).max(0.0);
    Ok(LawResult {
        law: Law::LinearSat,
        send_rate: path.bottleneck_capacity * factor,
        w_eff: path.beta * factor,
        valid: factor > 0.0 && p <= p_max,
        validity_bound: p_max,
    })
}

/// Picks the linear law that matches the path's saturation state.
pub fn linear_law(path: &PathSpec, p: f64) -> Result<LawResult> {
    if path.is_saturated() {
        linear_law_sat(path, p)
    } else {
        linear_law_unsat(path, p)
    }
}
