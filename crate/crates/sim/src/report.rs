use serde::{Deserialize, Serialize};

use crate::accounting::Element;

/// Packets and seconds attributed to one element over a whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementMeasure {
    pub packets: u64,
    pub time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossCounters {
    pub drops: u64,
    /// Triple duplicate acks that started a recovery.
    pub td: u64,
    /// All timer expiries, repeats included.
    pub to: u64,
    /// Timer expiries while no new ack had arrived since the previous one.
    pub to_repeat: u64,
    /// Timeouts ending a TD-FR.
    pub tdto: u64,
    /// Direct timeouts of a packet first sent during the preceding TD-FR.
    pub tofrxtd: u64,
    pub fr: u64,
    /// Completed recoveries that needed 1, 2 and 3 or more retransmissions.
    pub rxt_fr: [u64; 3],
}

impl LossCounters {
    pub fn loss_events(&self) -> u64 {
        self.td + self.to
    }

    fn share(part: u64, whole: u64) -> f64 {
        if whole == 0 {
            0.0
        } else {
            100.0 * part as f64 / whole as f64
        }
    }

    pub fn pct_td_of_le(&self) -> f64 {
        Self::share(self.td, self.loss_events())
    }

    pub fn pct_to_of_le(&self) -> f64 {
        Self::share(self.to, self.loss_events())
    }

    pub fn pct_fr_of_td(&self) -> f64 {
        Self::share(self.fr, self.td)
    }

    pub fn pct_tdto_of_td(&self) -> f64 {
        Self::share(self.tdto, self.td)
    }

    pub fn pct_tofrxtd_of_to(&self) -> f64 {
        Self::share(self.tofrxtd, self.to)
    }

    /// Share of fast recoveries that took `n` retransmissions (`n ≥ 3` pooled).
    pub fn pct_rxt_fr(&self, n: usize) -> f64 {
        Self::share(self.rxt_fr[n.clamp(1, 3) - 1], self.fr)
    }
}

/// Everything measured in one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub receiver_window: u32,
    pub p: f64,
    pub seed: u64,
    pub rtt: f64,
    pub packet_bits: f64,
    /// Seconds from the first send to the end of the run.
    pub elapsed: f64,
    pub sent: u64,
    pub sent_new: u64,
    pub retransmitted: u64,
    pub dropped: u64,
    /// Packets that reached the receiver by the end of the run.
    pub delivered: u64,
    pub in_flight: u64,
    /// Highest cumulatively acknowledged sequence seen by the sender.
    pub acked: u64,
    /// Packets counted by the traffic tap at the sender output.
    pub traffic_packets: u64,
    /// Indexed by [`Element`] order.
    pub elements: [ElementMeasure; 5],
    pub to_direct_time: f64,
    pub rtx_lost_time: f64,
    /// `window_changes[i]` counts changes to `W = i + 1`; timeouts are `W = 1`.
    pub window_changes: Vec<u64>,
    /// Packets and time of the periods opened at each window.
    pub per_window: Vec<ElementMeasure>,
    pub counters: LossCounters,
    pub max_queue: usize,
    pub rtt_samples: u64,
    pub final_rto: f64,
    /// Accounting mismatches; empty for a consistent run.
    pub inconsistencies: Vec<String>,
}

impl SimulationReport {
    pub fn element(&self, e: Element) -> ElementMeasure {
        self.elements[e as usize]
    }

    fn rate(&self, packets: u64, time: f64) -> f64 {
        if time > 0.0 {
            packets as f64 * self.packet_bits / time
        } else {
            0.0
        }
    }

    pub fn send_rate_traffic(&self) -> f64 {
        self.rate(self.traffic_packets, self.elapsed)
    }

    pub fn send_rate_sender(&self) -> f64 {
        self.rate(self.sent, self.elapsed)
    }

    pub fn send_rate_elements(&self) -> f64 {
        let packets = self.elements.iter().map(|e| e.packets).sum();
        let time = self.elements.iter().map(|e| e.time).sum();
        self.rate(packets, time)
    }

    pub fn send_rate_windows(&self) -> f64 {
        let packets = self.per_window.iter().map(|e| e.packets).sum();
        let time = self.per_window.iter().map(|e| e.time).sum();
        self.rate(packets, time)
    }

    /// Send rate in bits per second.
    pub fn send_rate(&self) -> f64 {
        self.send_rate_sender()
    }

    /// Send rate in packets per RTT.
    pub fn w_eff(&self) -> f64 {
        self.send_rate() * self.rtt / self.packet_bits
    }

    pub fn total_window_changes(&self) -> u64 {
        self.window_changes.iter().sum()
    }

    /// Measured element totals per window change, laid out like
    /// `tcpsr_core::model::ELEMENT_COLUMNS`.
    pub fn element_row(&self) -> [f64; 14] {
        let n = self.total_window_changes().max(1) as f64;
        let pk = |e: Element| self.element(e).packets as f64 / n;
        let ms = |t: f64| t / n * 1e3;
        let packets: f64 = Element::ALL.iter().map(|&e| pk(e)).sum();
        let time: f64 = self.elements.iter().map(|e| e.time).sum();
        [
            pk(Element::Rtt),
            pk(Element::To),
            pk(Element::Td),
            pk(Element::TdTo),
            pk(Element::TdFr),
            packets,
            ms(self.element(Element::Rtt).time),
            ms(self.rtx_lost_time),
            ms(self.to_direct_time),
            ms(self.element(Element::Td).time),
            ms(self.element(Element::TdTo).time),
            ms(self.element(Element::TdFr).time),
            ms(time),
            self.send_rate() / 1e3,
        ]
    }

    /// Empirical `P(W)` from the window-change histogram.
    pub fn window_frequencies(&self) -> Vec<f64> {
        let n = self.total_window_changes().max(1) as f64;
        self.window_changes.iter().map(|&c| c as f64 / n).collect()
    }
}
