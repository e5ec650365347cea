//! Cumulative-ack receiver with an out-of-order buffer.

use std::collections::BTreeSet;

use crate::sender::Seq;

#[derive(Debug, Clone)]
pub struct Receiver {
    next_expected: Seq,
    buffered: BTreeSet<Seq>,
}

impl Default for Receiver {
    fn default() -> Self {
        Receiver { next_expected: 1, buffered: BTreeSet::new() }
    }
}

impl Receiver {
    /// Accepts a packet and returns the ack to send: the next expected
    /// sequence. Every packet is acked, duplicates included.
    pub fn receive(&mut self, seq: Seq) -> Seq {
        if seq == self.next_expected {
            self.next_expected += 1;
            while self.buffered.remove(&self.next_expected) {
                self.next_expected += 1;
            }
        } else if seq > self.next_expected {
            self.buffered.insert(seq);
        }
        self.next_expected
    }

    pub fn next_expected(&self) -> Seq {
        self.next_expected
    }

    /// Distinct packets received, in order or buffered.
    pub fn distinct_received(&self) -> u64 {
        self.next_expected - 1 + self.buffered.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hole_produces_duplicates_then_jump() {
        let mut r = Receiver::default();
        assert_eq!(r.receive(1), 2);
        assert_eq!(r.receive(3), 2);
        assert_eq!(r.receive(4), 2);
        assert_eq!(r.receive(1), 2);
        assert_eq!(r.distinct_received(), 3);
        assert_eq!(r.receive(2), 5);
        assert_eq!(r.distinct_received(), 4);
    }
}
