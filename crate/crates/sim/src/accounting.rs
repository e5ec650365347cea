//! Attribution of every sent packet and every elapsed nanosecond to one of
//! the five basic elements.
//!
//! A counted window change at `t_c` opens a period. Its first RTT belongs to
//! the RTT element; whatever follows goes to the event that closes the
//! period: a TD claims it for the TD element, a timeout for the TO element
//! (split into direct and rtx-lost time depending on whether the period
//! itself started with a timeout), and a further window change leaves it in
//! the RTT element. The stretch from TD to its resolution is held until the
//! outcome is known and then goes to TDFR or TDTO.

use serde::{Deserialize, Serialize};

use crate::sender::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Rtt,
    Td,
    TdFr,
    TdTo,
    To,
}

impl Element {
    pub const ALL: [Element; 5] = [Element::Rtt, Element::Td, Element::TdFr, Element::TdTo, Element::To];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementCount {
    pub packets: u64,
    pub time: Nanos,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Normal { since: Nanos, window: u32, after_timeout: bool, early: u64, late: u64 },
    Recovery { since: Nanos, window: u32, packets: u64 },
}

#[derive(Debug, Clone)]
pub struct Accounting {
    rtt: Nanos,
    phase: Phase,
    elements: [ElementCount; 5],
    to_direct_time: Nanos,
    rtx_lost_time: Nanos,
    /// `changes[i]` counts window changes to `W = i + 1`.
    changes: Vec<u64>,
    /// Packets and time attributed to periods opened at each `W`.
    per_window: Vec<ElementCount>,
}

impl Accounting {
    pub fn new(rtt: Nanos, w_r: u32) -> Self {
        Accounting {
            rtt,
            phase: Phase::Normal { since: 0, window: 1, after_timeout: false, early: 0, late: 0 },
            elements: [ElementCount::default(); 5],
            to_direct_time: 0,
            rtx_lost_time: 0,
            changes: vec![0; w_r as usize],
            per_window: vec![ElementCount::default(); w_r as usize],
        }
    }

    fn credit(&mut self, element: Element, window: u32, packets: u64, time: Nanos) {
        let e = &mut self.elements[element.index()];
        e.packets += packets;
        e.time += time;
        let w = &mut self.per_window[window as usize - 1];
        w.packets += packets;
        w.time += time;
    }

    /// Closes the current normal period at `now`, sending its overflow past
    /// the first RTT to `overflow`. Returns whether the period began with a
    /// timeout.
    fn close_normal(&mut self, now: Nanos, overflow: Element) -> bool {
        let Phase::Normal { since, window, after_timeout, early, late } = self.phase else {
            unreachable!("close_normal outside a normal period");
        };
        let boundary = since + self.rtt;
        let first = now.min(boundary) - since;
        let rest = now.saturating_sub(boundary);
        self.credit(Element::Rtt, window, early, first);
        self.credit(overflow, window, late, rest);
        if overflow == Element::To {
            if after_timeout {
                self.rtx_lost_time += rest;
            } else {
                self.to_direct_time += rest;
            }
        }
        after_timeout
    }

    fn open_normal(&mut self, now: Nanos, window: u32, after_timeout: bool) {
        self.changes[window as usize - 1] += 1;
        self.phase = Phase::Normal { since: now, window, after_timeout, early: 0, late: 0 };
    }

    /// Records packets sent at `now`, after any events at the same instant.
    pub fn sent(&mut self, now: Nanos, count: u64) {
        let rtt = self.rtt;
        match &mut self.phase {
            Phase::Normal { since, early, late, .. } => {
                if now < *since + rtt {
                    *early += count;
                } else {
                    *late += count;
                }
            }
            Phase::Recovery { packets, .. } => *packets += count,
        }
    }

    pub fn window_change(&mut self, now: Nanos, window: u32) {
        match self.phase {
            Phase::Normal { .. } => {
                self.close_normal(now, Element::Rtt);
            }
            Phase::Recovery { .. } => unreachable!("window change inside TD-FR"),
        }
        self.open_normal(now, window, false);
    }

    pub fn triple_dup(&mut self, now: Nanos) {
        let Phase::Normal { window, .. } = self.phase else {
            unreachable!("TD inside TD-FR");
        };
        self.close_normal(now, Element::Td);
        self.phase = Phase::Recovery { since: now, window, packets: 0 };
    }

    /// Fast recovery completed; the caller follows with the `S + 1` window
    /// change.
    pub fn fast_recovery(&mut self, now: Nanos, next_window: u32) {
        let Phase::Recovery { since, window, packets } = self.phase else {
            unreachable!("FR outside TD-FR");
        };
        self.credit(Element::TdFr, window, packets, now - since);
        self.open_normal(now, next_window, false);
    }

    pub fn timeout(&mut self, now: Nanos) {
        match self.phase {
            Phase::Normal { .. } => {
                self.close_normal(now, Element::To);
            }
            Phase::Recovery { since, window, packets } => {
                self.credit(Element::TdTo, window, packets, now - since);
            }
        }
        self.open_normal(now, 1, true);
    }

    /// Closes whatever is open at the end of the run.
    pub fn finish(&mut self, now: Nanos) {
        match self.phase {
            Phase::Normal { .. } => {
                self.close_normal(now, Element::Rtt);
                self.phase = Phase::Normal { since: now, window: 1, after_timeout: false, early: 0, late: 0 };
            }
            Phase::Recovery { since, window, packets } => {
                self.credit(Element::TdFr, window, packets, now - since);
                self.phase = Phase::Recovery { since: now, window, packets: 0 };
            }
        }
    }

    pub fn element(&self, e: Element) -> ElementCount {
        self.elements[e.index()]
    }

    pub fn to_direct_time(&self) -> Nanos {
        self.to_direct_time
    }

    pub fn rtx_lost_time(&self) -> Nanos {
        self.rtx_lost_time
    }

    pub fn changes(&self) -> &[u64] {
        &self.changes
    }

    pub fn per_window(&self) -> &[ElementCount] {
        &self.per_window
    }
}
