//! The forward path: access link, bottleneck FIFO with an infinite buffer,
//! and the drop module in front of the receiver. Acks return after a
//! constant delay and are never lost.
//!
//! Both links serve packets in send order, so a packet's arrival time is
//! known the moment it is sent and the receiver sees packets in exactly the
//! order the sender emits them.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sender::{secs_to_nanos, Nanos};
use tcpsr_core::PathSpec;

/// Drop module: one uniform draw per data packet, whether or not the packet
/// is exempt from dropping.
#[derive(Debug, Clone)]
pub struct DropModule {
    rng: ChaCha8Rng,
    p: f64,
}

impl DropModule {
    pub fn new(p: f64, seed: u64) -> Self {
        DropModule { rng: ChaCha8Rng::seed_from_u64(seed), p }
    }

    pub fn decide(&mut self, exempt: bool) -> bool {
        let draw: f64 = self.rng.random();
        draw < self.p && !exempt
    }
}

#[derive(Debug, Clone)]
pub struct Links {
    delta1: Nanos,
    delta: Nanos,
    ack_delay: Nanos,
    access_free: Nanos,
    bottleneck_free: Nanos,
    /// Departure times of packets still held at the router.
    router: VecDeque<Nanos>,
    pub max_queue: usize,
}

impl Links {
    pub fn new(path: &PathSpec) -> Self {
        let delta1 = secs_to_nanos(path.delta1);
        let delta = secs_to_nanos(path.delta);
        let rtt = secs_to_nanos(path.rtt);
        Links {
            delta1,
            delta,
            ack_delay: rtt.saturating_sub(delta1 + delta),
            access_free: 0,
            bottleneck_free: 0,
            router: VecDeque::new(),
            max_queue: 0,
        }
    }

    /// Pushes a packet sent at `now` through both links and returns the time
    /// it reaches the drop module.
    pub fn forward(&mut self, now: Nanos) -> Nanos {
        self.access_free = self.access_free.max(now) + self.delta1;
        let at_router = self.access_free;
        while self.router.front().is_some_and(|&t| t <= at_router) {
            self.router.pop_front();
        }
        self.bottleneck_free = self.bottleneck_free.max(at_router) + self.delta;
        self.router.push_back(self.bottleneck_free);
        self.max_queue = self.max_queue.max(self.router.len());
        self.bottleneck_free
    }

    /// Time at which the ack for a packet delivered at `arrival` reaches the
    /// sender.
    pub fn ack_arrival(&self, arrival: Nanos) -> Nanos {
        arrival + self.ack_delay
    }

    /// Packets currently at the router, the one in service included.
    pub fn queue_at(&self, t: Nanos) -> usize {
        self.router.iter().filter(|&&d| d > t).count()
    }
}
