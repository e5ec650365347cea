//! Network path arithmetic and regime thresholds.
//!
//! The path is a single connection over an access link of capacity `C1`
//! feeding a router with an unbounded buffer, followed by a bottleneck link of
//! capacity `C`. All sizes are bytes, capacities bits per second and times
//! seconds.

use serde::{Deserialize, Serialize};

use crate::{check_open_probability, Error, Result, BITS_PER_BYTE};

/// Drop probability above which timeouts dominate and the simple laws stop
/// applying.
pub const TIMEOUT_REGIME_THRESHOLD: f64 = 0.02;

/// Physical inputs of a path, before anything is derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPath {
    pub access_capacity: f64,
    pub bottleneck_capacity: f64,
    pub packet_size: f64,
    pub ack_size: f64,
    /// Round-trip propagation delay.
    pub prop_delay: f64,
    pub receiver_window: u32,
}

/// A fully derived path description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub access_capacity: f64,
    pub bottleneck_capacity: f64,
    pub packet_size: f64,
    pub ack_size: f64,
    pub prop_delay: f64,
    pub receiver_window: u32,
    /// Transmission time of a data packet on the access link.
    pub delta1: f64,
    /// Transmission time of a data packet on the bottleneck.
    pub delta: f64,
    /// Round-trip time without queueing.
    pub rtt: f64,
    /// Path capacity in packets per RTT.
    pub beta: f64,
    /// `⌊β⌋ / W_R`; below 1 the connection can saturate the bottleneck.
    pub ratio: f64,
    /// Standing queue under saturation, `W_R − ⌊β⌋ + 1`.
    pub queue: Option<u32>,
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { field, value })
    }
}

/// Derives Δ1, Δ, RTT, β, r and Q from the raw path inputs.
pub fn derive_path(raw: RawPath) -> Result<PathSpec> {
    let c1 = positive("access_capacity", raw.access_capacity)?;
    let c = positive("bottleneck_capacity", raw.bottleneck_capacity)?;
    let size = positive("packet_size", raw.packet_size)?;
    let ack = positive("ack_size", raw.ack_size)?;
    let d = positive("prop_delay", raw.prop_delay)?;
    let rtt = d + (size + ack) * BITS_PER_BYTE * (1.0 / c1 + 1.0 / c);
    build(raw, rtt)
}

fn build(raw: RawPath, rtt: f64) -> Result<PathSpec> {
    if raw.receiver_window < 2 {
        return Err(Error::ReceiverWindow(raw.receiver_window));
    }
    let delta1 = raw.packet_size * BITS_PER_BYTE / raw.access_capacity;
    let delta = raw.packet_size * BITS_PER_BYTE / raw.bottleneck_capacity;
    let beta = rtt / delta;
    let floor_beta = beta.floor();
    let w_r = raw.receiver_window;
    let ratio = floor_beta / f64::from(w_r);
    let queue = (ratio < 1.0).then(|| w_r - floor_beta as u32 + 1);
    Ok(PathSpec {
        access_capacity: raw.access_capacity,
        bottleneck_capacity: raw.bottleneck_capacity,
        packet_size: raw.packet_size,
        ack_size: raw.ack_size,
        prop_delay: raw.prop_delay,
        receiver_window: w_r,
        delta1,
        delta,
        rtt,
        beta,
        ratio,
        queue,
    })
}

impl PathSpec {
    /// Builds a path whose RTT is given directly; the propagation delay is
    /// back-solved from the RTT formula.
    pub fn with_rtt(
        access_capacity: f64,
        bottleneck_capacity: f64,
        packet_size: f64,
        ack_size: f64,
        rtt: f64,
        receiver_window: u32,
    ) -> Result<PathSpec> {
        let c1 = positive("access_capacity", access_capacity)?;
        let c = positive("bottleneck_capacity", bottleneck_capacity)?;
        let size = positive("packet_size", packet_size)?;
        let ack = positive("ack_size", ack_size)?;
        let rtt = positive("rtt", rtt)?;
        let d = rtt - (size + ack) * BITS_PER_BYTE * (1.0 / c1 + 1.0 / c);
        let d = positive("prop_delay", d)?;
        build(
            RawPath {
                access_capacity: c1,
                bottleneck_capacity: c,
                packet_size: size,
                ack_size: ack,
                prop_delay: d,
                receiver_window,
            },
            rtt,
        )
    }

    pub fn floor_beta(&self) -> u32 {
        self.beta.floor() as u32
    }

    pub fn is_saturated(&self) -> bool {
        self.ratio < 1.0
    }

    /// Bits carried by one data packet.
    pub fn packet_bits(&self) -> f64 {
        self.packet_size * BITS_PER_BYTE
    }

    /// Converts an effective window (packets per RTT) into bits per second.
    pub fn window_to_rate(&self, w_eff: f64) -> f64 {
        w_eff * self.packet_bits() / self.rtt
    }

    /// Lower validity bound of the square-root law, `(8/3)/⌊β⌋²`.
    pub fn p_min(&self) -> f64 {
        let b = f64::from(self.floor_beta());
        (8.0 / 3.0) / (b * b)
    }

    /// Upper validity bound of the unsaturated linear law, `2/W_R²`.
    pub fn p_max_unsat(&self) -> f64 {
        let w = f64::from(self.receiver_window);
        2.0 / (w * w)
    }

    /// Upper validity bound of the saturated linear law, when its side
    /// conditions hold.
    pub fn p_max_sat(&self) -> Option<f64> {
        crate::laws::saturated_constants(self).ok().map(|(_, p_max)| p_max)
    }
}

/// The seven network settings used throughout the validation, keyed by a
/// `<C>M-R<RTT>-W<W_R>` label. Δ1 is fixed at 120 µs (100 Mbit/s access
/// link, 1500-byte packets) and acks are 40 bytes.
pub fn reference_settings() -> Vec<(String, PathSpec)> {
    const ACCESS: f64 = 100e6;
    const SIZE: f64 = 1500.0;
    const ACK: f64 = 40.0;
    let rows: [(f64, f64, u32); 7] = [
        (2.0, 100.0, 12),
        (2.0, 100.0, 24),
        (2.0, 200.0, 24),
        (2.0, 200.0, 44),
        (10.0, 40.0, 32),
        (10.0, 50.0, 44),
        (10.0, 100.0, 44),
    ];
    rows.iter()
        .map(|&(mbps, rtt_ms, w_r)| {
            let path = PathSpec::with_rtt(ACCESS, mbps * 1e6, SIZE, ACK, rtt_ms / 1e3, w_r)
                .expect("reference settings are valid");
            (format!("{mbps}M-R{rtt_ms}-W{w_r}"), path)
        })
        .collect()
}

/// Looks up one of [`reference_settings`] by label.
pub fn reference_setting(id: &str) -> Option<PathSpec> {
    reference_settings().into_iter().find(|(name, _)| name.eq_ignore_ascii_case(id)).map(|(_, path)| path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    Linear,
    SquareRoot,
    Timeout,
    /// Both simple laws hold; the linear law is the one to apply.
    Overlap,
    Unmodeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub p_min: f64,
    /// Upper bound of the applicable linear law (saturated or not), if any.
    pub p_max: Option<f64>,
}

impl Regime {
    /// The law the harness should report for this regime.
    pub fn preferred_is_linear(&self) -> bool {
        matches!(self.kind, RegimeKind::Linear | RegimeKind::Overlap)
    }
}

pub fn classify_regime(path: &PathSpec, p: f64) -> Result<Regime> {
    check_open_probability(p)?;
    let p_min = path.p_min();
    let p_max = if path.is_saturated() { path.p_max_sat() } else { Some(path.p_max_unsat()) };
    let linear = p_max.is_some_and(|bound| p <= bound);
    let sqrt = p >= p_min;
    let kind = if p > TIMEOUT_REGIME_THRESHOLD {
        RegimeKind::Timeout
    } else {
        match (linear, sqrt) {
            (true, true) => RegimeKind::Overlap,
            (true, false) => RegimeKind::Linear,
            (false, true) => RegimeKind::SquareRoot,
            (false, false) => RegimeKind::Unmodeled,
        }
    };
    Ok(Regime { kind, p_min, p_max })
}
