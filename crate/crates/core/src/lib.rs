//! Long-term send rate of NewReno TCP under i.i.d. random packet drops.
//!
//! This crate holds the analytic side of the project:
//!
//! * [`path`]: network path arithmetic (transmission times, β, saturation
//!   ratio, standing queue) and regime classification.
//! * [`laws`]: closed-form square-root and linear send-rate laws.
//! * [`window`]: steady-state distribution of the sender window.
//! * [`model`]: the five-element send-rate model assembled from the window
//!   distribution.
//!
//! The packet-level simulator that validates these numbers lives in the
//! `tcpsr-sim` crate.

pub mod error;
pub mod laws;
pub mod model;
pub mod path;
pub mod window;

pub use error::{Error, Result};
pub use laws::{linear_law_sat, linear_law_unsat, sqrt_law, Law, LawResult};
pub use model::{assemble, ElementTotals, ModelBreakdown, TcpConfig};
pub use path::{classify_regime, PathSpec, RawPath, Regime, RegimeKind};
pub use window::{p_fr, solve_window_distribution, WindowDistribution};

/// Bits per byte, used wherever packet counts become bit rates.
pub const BITS_PER_BYTE: f64 = 8.0;

/// Checks that `p` is a probability strictly inside (0, 1).
pub(crate) fn check_open_probability(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}
