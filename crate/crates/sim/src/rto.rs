//! Retransmission timeout estimation with zero clock granularity.

/// Smoothed RTT estimator producing the base RTO, before any backoff.
#[derive(Debug, Clone)]
pub struct RtoEstimator {
    srtt: f64,
    rttvar: f64,
    rto: f64,
    min_rto: f64,
    samples: u64,
}

impl RtoEstimator {
    pub fn new(initial_rto: f64, min_rto: f64) -> Self {
        RtoEstimator { srtt: 0.0, rttvar: 0.0, rto: initial_rto, min_rto, samples: 0 }
    }

    pub fn sample(&mut self, r: f64) {
        if self.samples == 0 {
            self.srtt = r;
            self.rttvar = r / 2.0;
        } else {
            self.rttvar = 0.75 * self.rttvar + 0.25 * (self.srtt - r).abs();
            self.srtt = 0.875 * self.srtt + 0.125 * r;
        }
        self.samples += 1;
        self.rto = self.min_rto.max(self.srtt + 4.0 * self.rttvar);
    }

    /// Current RTO in seconds, without backoff.
    pub fn rto(&self) -> f64 {
        self.rto
    }

    pub fn srtt(&self) -> Option<f64> {
        (self.samples > 0).then_some(self.srtt)
    }

    pub fn rttvar(&self) -> f64 {
        self.rttvar
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }
}
