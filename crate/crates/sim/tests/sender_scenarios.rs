//! Hand-driven sender scenarios: exact ack sequences, no network.

use tcpsr_core::model::n_da;
use tcpsr_core::TcpConfig;
use tcpsr_sim::sender::{SendKind, Sender, SenderEvent, Seq};

const RTT: u64 = 100_000_000;

/// Slow-starts a fresh sender, acking one packet at a time, until `cwnd = w`
/// with `w` packets in flight.
fn grow_to(w_r: u32, w: u32) -> (Sender, u64) {
    let mut s = Sender::new(w_r, &TcpConfig::default());
    s.start(0);
    let mut now = 0;
    while s.cwnd() < w {
        now += 1_000;
        let ack = s.una() + 1;
        s.on_ack(ack, now);
    }
    assert_eq!(s.flight(), w);
    (s, now)
}

struct Recovery {
    new_on_dupacks: u32,
    cwnd_after_dupacks: u32,
    burst: u32,
    between: u32,
}

/// Drops the first outstanding packet, delivers every other one as a
/// duplicate ack, then acks the retransmission.
fn single_drop(mut s: Sender, mut now: u64) -> Recovery {
    let w = s.flight();
    let hole = s.una();
    let mut new_on_dupacks = 0;
    let mut between = 0;
    for i in 1..w {
        now += 1_000;
        let step = s.on_ack(hole, now);
        if i == 3 {
            assert!(step.events.iter().any(|e| matches!(e, SenderEvent::TripleDup { window } if *window == w)));
            assert_eq!(step.sends.len(), 1, "only the retransmission goes out on the TD");
            assert_eq!(step.sends[0].seq, hole);
            assert_eq!(step.sends[0].kind, SendKind::FastRetransmit);
            between += 1;
        } else {
            assert!(step.sends.iter().all(|seg| seg.kind == SendKind::New));
            new_on_dupacks += step.sends.len() as u32;
            between += step.sends.len() as u32;
        }
    }
    let cwnd_after_dupacks = s.cwnd();
    let full: Seq = s.recover() + 1;
    now += RTT;
    let step = s.on_ack(full, now);
    assert!(step.events.iter().any(|e| matches!(e, SenderEvent::FastRecovery { retransmissions: 1 })));
    assert!(!s.in_recovery());
    Recovery { new_on_dupacks, cwnd_after_dupacks, burst: step.sends.len() as u32, between }
}

#[test]
fn td_at_receiver_window_bursts_half_plus_one() {
    for w_r in [4u32, 5, 8, 12, 17, 24, 44] {
        let (s, now) = grow_to(w_r, w_r);
        let r = single_drop(s, now);
        assert_eq!(r.new_on_dupacks, 0, "W_R={w_r}");
        assert_eq!(r.burst, w_r / 2 + 1, "W_R={w_r}");
    }
}

#[test]
fn new_data_on_duplicate_acks_follows_window_end() {
    for w_r in [64u32, 20, 13] {
        for w in 5..=w_r.min(30) {
            let (s, now) = grow_to(w_r, w);
            let r = single_drop(s, now);
            let half = w / 2;
            let w_end = w + half - 1;
            assert_eq!(r.new_on_dupacks, n_da(w, w_r), "W={w} W_R={w_r}");
            assert_eq!(r.cwnd_after_dupacks, w_end.min(w_r), "W={w} W_R={w_r}");
            if w_r >= w_end {
                assert_eq!(r.between, half, "S packets between TD and FR, W={w}");
            }
            // On FR the window is S + 1 with the new data still in flight.
            assert_eq!(r.burst, half + 1 - n_da(w, w_r), "W={w} W_R={w_r}");
        }
    }
}

#[test]
fn td_at_four_sends_no_new_data() {
    // Three duplicate acks exhaust a window of four, and nothing new goes
    // out on the TD itself, so the closed form's S − 1 = 1 is never reached.
    let (s, now) = grow_to(64, 4);
    let r = single_drop(s, now);
    assert_eq!(r.new_on_dupacks, 0);
    assert_eq!(r.cwnd_after_dupacks, 5);
    assert_eq!(r.burst, 3);
    assert_eq!(n_da(4, 64), 1);
}

#[test]
fn partial_ack_retransmits_next_hole_and_sends_new_data() {
    let (mut s, mut now) = grow_to(64, 10);
    let first = s.una();
    // Packets first and first + 2 are lost; eight duplicate acks arrive.
    for _ in 0..8 {
        now += 1_000;
        s.on_ack(first, now);
    }
    let timer = s.timer_deadline();
    now += RTT;
    let step = s.on_ack(first + 2, now);
    assert!(s.in_recovery());
    assert_eq!(step.sends[0].seq, first + 2);
    assert_eq!(step.sends[0].kind, SendKind::FastRetransmit);
    assert!(step.sends[1..].iter().all(|seg| seg.kind == SendKind::New));
    assert!(!step.sends[1..].is_empty());
    assert_eq!(s.timer_deadline(), timer, "partial acks leave the timer alone");
    now += RTT;
    let step = s.on_ack(s.recover() + 1, now);
    assert!(step.events.iter().any(|e| matches!(e, SenderEvent::FastRecovery { retransmissions: 2 })));
}

#[test]
fn no_td_while_recovering_from_timeout() {
    let (mut s, mut now) = grow_to(64, 12);
    now += 2_000_000_000;
    s.on_timeout(now);
    let hole = s.una();
    for _ in 0..5 {
        now += 1_000;
        let step = s.on_ack(hole, now);
        assert!(step.events.is_empty());
    }
    assert!(!s.in_recovery());
}
