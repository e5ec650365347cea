//! NewReno sender state machine.
//!
//! The sender is driven purely by ack arrivals and timer expiries and knows
//! nothing about the network. Each call returns a [`Step`] listing the
//! packets to put on the wire, the protocol events that happened, and what to
//! do with the retransmission timer. Time is in nanoseconds.

use serde::{Deserialize, Serialize};

use crate::rto::RtoEstimator;
use tcpsr_core::TcpConfig;

pub type Seq = u64;
pub type Nanos = u64;

pub(crate) fn secs_to_nanos(s: f64) -> Nanos {
    (s * 1e9).round() as Nanos
}

pub(crate) fn nanos_to_secs(t: Nanos) -> f64 {
    t as f64 / 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SendKind {
    New,
    /// Fast retransmit at TD or a retransmission on a partial ack.
    FastRetransmit,
    /// Timeout retransmission, including go-back-N resends below `snd_max`.
    TimeoutRetransmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: Seq,
    pub kind: SendKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenderEvent {
    /// The usable window changed to (or, at the cap, completed a round at) `W`.
    WindowChange(u32),
    /// Third duplicate ack; `window` is the usable window at detection.
    TripleDup { window: u32 },
    /// Fast recovery completed after `retransmissions` fast retransmits.
    FastRecovery { retransmissions: u32 },
    /// Retransmission timer expiry. `repeat` is set when no new ack arrived
    /// since the previous expiry.
    Timeout { during_recovery: bool, repeat: bool, seq: Seq },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerCmd {
    Keep,
    Set(Nanos),
    Clear,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub sends: Vec<Segment>,
    pub events: Vec<SenderEvent>,
    pub timer: TimerCmd,
}

impl Step {
    fn new() -> Self {
        Step { sends: Vec::new(), events: Vec::new(), timer: TimerCmd::Keep }
    }
}

#[derive(Debug, Clone)]
pub struct Sender {
    w_r: u32,
    cwnd: u32,
    ca_acks: u32,
    ssthresh: u32,
    una: Seq,
    nxt: Seq,
    snd_max: Seq,
    recover: Seq,
    in_fr: bool,
    dupacks: u32,
    backoff: u32,
    max_backoff: u32,
    rto: RtoEstimator,
    timer: Option<Nanos>,
    timing: Option<(Seq, Nanos)>,
    fr_retransmits: u32,
    /// Highest new sequence sent during the current or last TD-FR.
    rec_xtd: Seq,
}

impl Sender {
    pub fn new(w_r: u32, config: &TcpConfig) -> Self {
        Sender {
            w_r,
            cwnd: config.initial_window.clamp(1, w_r),
            ca_acks: 0,
            ssthresh: w_r,
            una: 1,
            nxt: 1,
            snd_max: 1,
            recover: 0,
            in_fr: false,
            dupacks: 0,
            backoff: 0,
            max_backoff: config.max_backoff,
            rto: RtoEstimator::new(config.initial_rto, config.min_rto),
            timer: None,
            timing: None,
            fr_retransmits: 0,
            rec_xtd: 0,
        }
    }

    pub fn cwnd(&self) -> u32 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u32 {
        self.ssthresh
    }

    /// Usable window `W = min(cwnd, W_R)`.
    pub fn window(&self) -> u32 {
        self.cwnd.min(self.w_r)
    }

    /// Packets in flight, `θ = nxt − una`.
    pub fn flight(&self) -> u32 {
        (self.nxt - self.una) as u32
    }

    pub fn una(&self) -> Seq {
        self.una
    }

    pub fn nxt(&self) -> Seq {
        self.nxt
    }

    pub fn snd_max(&self) -> Seq {
        self.snd_max
    }

    pub fn recover(&self) -> Seq {
        self.recover
    }

    pub fn in_recovery(&self) -> bool {
        self.in_fr
    }

    pub fn backoff(&self) -> u32 {
        self.backoff
    }

    pub fn rec_xtd(&self) -> Seq {
        self.rec_xtd
    }

    pub fn estimator(&self) -> &RtoEstimator {
        &self.rto
    }

    pub fn timer_deadline(&self) -> Option<Nanos> {
        self.timer
    }

    fn timeout_interval(&self) -> Nanos {
        secs_to_nanos(self.rto.rto() * f64::from(1u32 << self.backoff))
    }

    fn set_timer(&mut self, step: &mut Step, now: Nanos) {
        let deadline = now + self.timeout_interval();
        self.timer = Some(deadline);
        step.timer = TimerCmd::Set(deadline);
    }

    fn restart_or_clear(&mut self, step: &mut Step, now: Nanos) {
        if self.una < self.snd_max {
            self.set_timer(step, now);
        } else {
            self.timer = None;
            step.timer = TimerCmd::Clear;
        }
    }

    fn transmit(&mut self, step: &mut Step, now: Nanos, seq: Seq, kind: SendKind) {
        step.sends.push(Segment { seq, kind });
        if self.timer.is_none() {
            self.set_timer(step, now);
        }
        if kind == SendKind::New && self.timing.is_none() && !self.in_fr {
            self.timing = Some((seq, now));
        }
    }

    /// Sends `σ = W − θ` packets starting at `nxt`.
    fn fill_window(&mut self, step: &mut Step, now: Nanos) {
        let w = Seq::from(self.window());
        while self.nxt - self.una < w {
            let seq = self.nxt;
            let kind = if seq < self.snd_max {
                SendKind::TimeoutRetransmit
            } else {
                self.snd_max = seq + 1;
                if self.in_fr {
                    self.rec_xtd = seq;
                }
                SendKind::New
            };
            self.nxt += 1;
            self.transmit(step, now, seq, kind);
        }
    }

    /// Opens the connection by sending the initial window.
    pub fn start(&mut self, now: Nanos) -> Step {
        let mut step = Step::new();
        step.events.push(SenderEvent::WindowChange(self.window()));
        self.fill_window(&mut step, now);
        step
    }

    /// Processes a cumulative ack carrying the next expected sequence.
    pub fn on_ack(&mut self, ack: Seq, now: Nanos) -> Step {
        let mut step = Step::new();
        if ack > self.una {
            if self.in_fr {
                self.recovery_ack(ack, now, &mut step);
            } else {
                self.new_ack(ack, now, &mut step);
            }
        } else if ack == self.una && self.una < self.snd_max {
            self.duplicate_ack(now, &mut step);
        }
        step
    }

    fn new_ack(&mut self, ack: Seq, now: Nanos, step: &mut Step) {
        self.una = ack;
        self.nxt = self.nxt.max(ack);
        self.dupacks = 0;
        self.backoff = 0;
        if let Some((seq, sent)) = self.timing {
            if ack > seq {
                self.rto.sample(nanos_to_secs(now - sent));
                self.timing = None;
            }
        }
        if self.cwnd < self.w_r && self.cwnd <= self.ssthresh {
            self.cwnd += 1;
            self.ca_acks = 0;
            step.events.push(SenderEvent::WindowChange(self.window()));
        } else {
            // Congestion avoidance, also used to count rounds at the cap.
            self.ca_acks += 1;
            if self.ca_acks >= self.cwnd {
                self.ca_acks = 0;
                self.cwnd = (self.cwnd + 1).min(self.w_r);
                step.events.push(SenderEvent::WindowChange(self.window()));
            }
        }
        self.restart_or_clear(step, now);
        self.fill_window(step, now);
    }

    fn recovery_ack(&mut self, ack: Seq, now: Nanos, step: &mut Step) {
        let acked = (ack - self.una) as u32;
        self.una = ack;
        self.nxt = self.nxt.max(ack);
        self.backoff = 0;
        if ack > self.recover {
            self.in_fr = false;
            self.dupacks = 0;
            self.cwnd = (self.ssthresh + 1).min(self.w_r);
            self.ca_acks = 0;
            step.events.push(SenderEvent::FastRecovery { retransmissions: self.fr_retransmits });
            step.events.push(SenderEvent::WindowChange(self.window()));
            self.restart_or_clear(step, now);
            self.fill_window(step, now);
        } else {
            // Partial ack: deflate, retransmit the next hole, keep the timer.
            self.cwnd = (self.cwnd.saturating_sub(acked) + 1).min(self.w_r);
            self.fr_retransmits += 1;
            self.transmit(step, now, ack, SendKind::FastRetransmit);
            self.fill_window(step, now);
        }
    }

    fn duplicate_ack(&mut self, now: Nanos, step: &mut Step) {
        if self.in_fr {
            self.cwnd = (self.cwnd + 1).min(self.w_r);
            self.fill_window(step, now);
            return;
        }
        self.dupacks += 1;
        if self.dupacks != 3 || self.una <= self.recover {
            return;
        }
        let window = self.window();
        self.ssthresh = (self.flight() / 2).max(2);
        self.recover = self.snd_max - 1;
        self.in_fr = true;
        self.cwnd = (self.ssthresh + 3).min(self.w_r);
        self.fr_retransmits = 1;
        self.rec_xtd = 0;
        self.timing = None;
        step.events.push(SenderEvent::TripleDup { window });
        // The retransmit timer is armed on the first retransmission only.
        self.set_timer(step, now);
        step.sends.push(Segment { seq: self.una, kind: SendKind::FastRetransmit });
    }

    /// Handles expiry of the retransmission timer.
    pub fn on_timeout(&mut self, now: Nanos) -> Step {
        let mut step = Step::new();
        let repeat = self.backoff > 0;
        if repeat {
            self.recover = 0;
        } else {
            self.ssthresh = (self.flight() / 2).max(2);
            self.recover = self.snd_max - 1;
        }
        step.events.push(SenderEvent::Timeout { during_recovery: self.in_fr, repeat, seq: self.una });
        self.in_fr = false;
        self.backoff = (self.backoff + 1).min(self.max_backoff);
        self.cwnd = 1;
        self.ca_acks = 0;
        self.dupacks = 0;
        self.timing = None;
        self.nxt = self.una;
        step.events.push(SenderEvent::WindowChange(1));
        self.set_timer(&mut step, now);
        self.fill_window(&mut step, now);
        step
    }
}
