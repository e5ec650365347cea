//! Packet-level discrete-event simulation of one NewReno connection over a
//! two-link path with an infinite bottleneck buffer and i.i.d. random drops
//! in front of the receiver.
//!
//! Runs are single-threaded and fully determined by their inputs and seed.
//! Alongside the usual totals the simulator attributes every packet and
//! every nanosecond to the five basic elements, so its output can be set
//! directly against the analytic model in `tcpsr-core`.

pub mod accounting;
pub mod network;
pub mod receiver;
pub mod report;
pub mod rto;
pub mod sender;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use accounting::{Accounting, Element};
use network::{DropModule, Links};
use receiver::Receiver;
pub use report::{ElementMeasure, LossCounters, SimulationReport};
use sender::{nanos_to_secs, secs_to_nanos, Nanos, SendKind, Sender, SenderEvent, Seq, Step, TimerCmd};
use tcpsr_core::{Error, PathSpec, Result, TcpConfig};

/// Retransmissions the drop module must let through.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropFlags {
    /// Never drop fast retransmissions (TD and partial-ack retransmits).
    pub no_drop_rtx_td: bool,
    /// Never drop any retransmission.
    pub no_drop_rtx_all: bool,
}

impl DropFlags {
    fn exempt(&self, kind: SendKind) -> bool {
        match kind {
            SendKind::New => false,
            SendKind::FastRetransmit => self.no_drop_rtx_td || self.no_drop_rtx_all,
            SendKind::TimeoutRetransmit => self.no_drop_rtx_all,
        }
    }
}

/// One line of the optional event trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: &'static str,
    pub seq: Seq,
    pub window: u32,
    pub flags: &'static str,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} {} {} {} {}", self.time, self.kind, self.seq, self.window, self.flags)
    }
}

const ACK: u8 = 0;
const TIMER: u8 = 1;

/// `(time, kind, insertion counter, payload)`: acks sort before timer
/// expiries at the same instant, and ties within a kind keep insertion order.
type Event = Reverse<(Nanos, u8, u64, u64)>;

struct Run<'a> {
    sender: Sender,
    receiver: Receiver,
    links: Links,
    drops: DropModule,
    flags: DropFlags,
    accounting: Accounting,
    counters: LossCounters,
    queue: BinaryHeap<Event>,
    inserted: u64,
    timer_generation: u64,
    arrivals: VecDeque<Nanos>,
    sent: u64,
    sent_new: u64,
    retransmitted: u64,
    dropped: u64,
    delivered: u64,
    traffic: u64,
    /// New data sent during the most recent completed TD-FR.
    last_recovery_new: Option<RangeInclusive<Seq>>,
    trace: Option<&'a mut dyn FnMut(TraceRecord)>,
}

impl Run<'_> {
    fn push(&mut self, time: Nanos, kind: u8, payload: u64) {
        self.queue.push(Reverse((time, kind, self.inserted, payload)));
        self.inserted += 1;
    }

    fn trace(&mut self, now: Nanos, kind: &'static str, seq: Seq, flags: &'static str) {
        if let Some(t) = self.trace.as_mut() {
            let window = self.sender.window();
            t(TraceRecord { time: nanos_to_secs(now), kind, seq, window, flags });
        }
    }

    fn settle_arrivals(&mut self, now: Nanos) {
        while self.arrivals.front().is_some_and(|&t| t <= now) {
            self.arrivals.pop_front();
            self.delivered += 1;
        }
    }

    fn apply(&mut self, step: Step, now: Nanos) {
        let mut opened_by_event = false;
        for event in step.events {
            match event {
                SenderEvent::WindowChange(w) => {
                    if !std::mem::take(&mut opened_by_event) {
                        self.accounting.window_change(now, w);
                    }
                }
                SenderEvent::TripleDup { .. } => {
                    self.counters.td += 1;
                    self.accounting.triple_dup(now);
                    self.trace(now, "td", self.sender.una(), "");
                }
                SenderEvent::FastRecovery { retransmissions } => {
                    self.counters.fr += 1;
                    self.counters.rxt_fr[retransmissions.clamp(1, 3) as usize - 1] += 1;
                    let xtd = self.sender.rec_xtd();
                    self.last_recovery_new = (xtd > 0).then(|| self.sender.recover() + 1..=xtd);
                    self.accounting.fast_recovery(now, self.sender.window());
                    opened_by_event = true;
                    self.trace(now, "fr", self.sender.una(), "");
                }
                SenderEvent::Timeout { during_recovery, repeat, seq } => {
                    self.counters.to += 1;
                    if repeat {
                        self.counters.to_repeat += 1;
                    }
                    if during_recovery {
                        self.counters.tdto += 1;
                    } else if !repeat && self.last_recovery_new.as_ref().is_some_and(|r| r.contains(&seq)) {
                        self.counters.tofrxtd += 1;
                    }
                    self.accounting.timeout(now);
                    opened_by_event = true;
                    self.trace(now, "to", seq, if during_recovery { "tdto" } else { "" });
                }
            }
        }
        match step.timer {
            TimerCmd::Keep => {}
            TimerCmd::Set(deadline) => {
                self.timer_generation += 1;
                self.push(deadline, TIMER, self.timer_generation);
            }
            TimerCmd::Clear => self.timer_generation += 1,
        }
        if step.sends.is_empty() {
            return;
        }
        self.accounting.sent(now, step.sends.len() as u64);
        for seg in step.sends {
            self.sent += 1;
            if seg.kind == SendKind::New {
                self.sent_new += 1;
            } else {
                self.retransmitted += 1;
            }
            self.traffic += 1;
            let arrival = self.links.forward(now);
            let exempt = self.flags.exempt(seg.kind);
            let kind = if seg.kind == SendKind::New { "send" } else { "rtx" };
            if self.drops.decide(exempt) {
                self.dropped += 1;
                self.trace(now, kind, seg.seq, "dropped");
                continue;
            }
            self.trace(now, kind, seg.seq, "");
            self.arrivals.push_back(arrival);
            let ack = self.receiver.receive(seg.seq);
            let at = self.links.ack_arrival(arrival);
            self.push(at, ACK, ack);
        }
    }
}

fn validate(p: f64, n_packets: u64) -> Result<()> {
    if !(p.is_finite() && (0.0..1.0).contains(&p)) {
        return Err(Error::Probability(p));
    }
    if n_packets == 0 {
        return Err(Error::NonPositive { field: "n_packets", value: 0.0 });
    }
    Ok(())
}

/// Simulates a connection that transmits `n_packets` packets (first sends and
/// retransmissions alike) over `path` with drop probability `p`.
pub fn run_simulation(
    path: &PathSpec,
    tcp: &TcpConfig,
    p: f64,
    n_packets: u64,
    seed: u64,
    flags: DropFlags,
) -> Result<SimulationReport> {
    simulate(path, tcp, p, n_packets, seed, flags, None)
}

/// As [`run_simulation`], calling `trace` once per protocol event and per
/// transmitted packet.
pub fn run_simulation_traced(
    path: &PathSpec,
    tcp: &TcpConfig,
    p: f64,
    n_packets: u64,
    seed: u64,
    flags: DropFlags,
    trace: &mut dyn FnMut(TraceRecord),
) -> Result<SimulationReport> {
    simulate(path, tcp, p, n_packets, seed, flags, Some(trace))
}

fn simulate(
    path: &PathSpec,
    tcp: &TcpConfig,
    p: f64,
    n_packets: u64,
    seed: u64,
    flags: DropFlags,
    trace: Option<&mut dyn FnMut(TraceRecord)>,
) -> Result<SimulationReport> {
    validate(p, n_packets)?;
    let w_r = path.receiver_window;
    let mut run = Run {
        sender: Sender::new(w_r, tcp),
        receiver: Receiver::default(),
        links: Links::new(path),
        drops: DropModule::new(p, seed),
        flags,
        accounting: Accounting::new(secs_to_nanos(path.rtt), w_r),
        counters: LossCounters::default(),
        queue: BinaryHeap::new(),
        inserted: 0,
        timer_generation: 0,
        arrivals: VecDeque::new(),
        sent: 0,
        sent_new: 0,
        retransmitted: 0,
        dropped: 0,
        delivered: 0,
        traffic: 0,
        last_recovery_new: None,
        trace,
    };

    let step = run.sender.start(0);
    run.apply(step, 0);
    let mut now = 0;
    while let Some(Reverse((time, kind, _, payload))) = run.queue.pop() {
        now = time;
        run.settle_arrivals(now);
        let step = if kind == ACK {
            run.trace(now, "ack", payload, "");
            run.sender.on_ack(payload, now)
        } else if payload == run.timer_generation {
            run.sender.on_timeout(now)
        } else {
            continue;
        };
        run.apply(step, now);
        if run.sent >= n_packets {
            break;
        }
    }
    run.accounting.finish(now);
    run.counters.drops = run.dropped;
    Ok(build_report(run, path, p, seed, now))
}

fn build_report(run: Run<'_>, path: &PathSpec, p: f64, seed: u64, end: Nanos) -> SimulationReport {
    let acc = &run.accounting;
    let measure = |c: accounting::ElementCount| ElementMeasure { packets: c.packets, time: nanos_to_secs(c.time) };
    let elements = Element::ALL.map(|e| measure(acc.element(e)));

    let mut inconsistencies = Vec::new();
    let element_packets: u64 = Element::ALL.iter().map(|&e| acc.element(e).packets).sum();
    let element_time: Nanos = Element::ALL.iter().map(|&e| acc.element(e).time).sum();
    let window_packets: u64 = acc.per_window().iter().map(|c| c.packets).sum();
    let window_time: Nanos = acc.per_window().iter().map(|c| c.time).sum();
    let in_flight = run.arrivals.len() as u64;
    if element_packets != run.sent {
        inconsistencies.push(format!("element packets {element_packets} != sent {}", run.sent));
    }
    if element_time != end {
        inconsistencies.push(format!("element time {element_time} ns != elapsed {end} ns"));
    }
    if window_packets != run.sent || window_time != end {
        inconsistencies.push("per-window totals disagree with run totals".to_string());
    }
    if run.delivered + run.dropped + in_flight != run.sent {
        inconsistencies.push(format!(
            "sent {} != delivered {} + dropped {} + in flight {in_flight}",
            run.sent, run.delivered, run.dropped
        ));
    }
    if run.traffic != run.sent {
        inconsistencies.push(format!("traffic tap {} != sent {}", run.traffic, run.sent));
    }

    SimulationReport {
        receiver_window: path.receiver_window,
        p,
        seed,
        rtt: path.rtt,
        packet_bits: path.packet_bits(),
        elapsed: nanos_to_secs(end),
        sent: run.sent,
        sent_new: run.sent_new,
        retransmitted: run.retransmitted,
        dropped: run.dropped,
        delivered: run.delivered,
        in_flight,
        acked: run.sender.una() - 1,
        traffic_packets: run.traffic,
        elements,
        to_direct_time: nanos_to_secs(acc.to_direct_time()),
        rtx_lost_time: nanos_to_secs(acc.rtx_lost_time()),
        window_changes: acc.changes().to_vec(),
        per_window: acc.per_window().iter().map(|&c| measure(c)).collect(),
        counters: run.counters,
        max_queue: run.links.max_queue,
        rtt_samples: run.sender.estimator().samples(),
        final_rto: run.sender.estimator().rto(),
        inconsistencies,
    }
}
