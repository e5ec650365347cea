use proptest::prelude::*;
use tcpsr_core::path::reference_setting;
use tcpsr_core::{PathSpec, TcpConfig};
use tcpsr_sim::accounting::Element;
use tcpsr_sim::rto::RtoEstimator;
use tcpsr_sim::{run_simulation, run_simulation_traced, DropFlags, SimulationReport};

fn setting(id: &str) -> PathSpec {
    reference_setting(id).unwrap()
}

fn run(id: &str, p: f64, n: u64, seed: u64) -> SimulationReport {
    run_simulation(&setting(id), &TcpConfig::default(), p, n, seed, DropFlags::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn same_seed_same_report() {
    let a = run("10M-R40-W32", 0.03, 50_000, 11);
    let b = run("10M-R40-W32", 0.03, 50_000, 11);
    assert_eq!(a, b);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let c = run("10M-R40-W32", 0.03, 50_000, 12);
    assert_ne!(a.dropped, c.dropped);
}

#[test]
fn lossless_window_limited_rate() {
    let r = run("2M-R100-W12", 0.0, 200_000, 1);
    let expected = 12.0 * 12_000.0 / 0.1;
    assert!(rel(r.send_rate(), expected) < 2e-3, "{}", r.send_rate());
    assert_eq!(r.dropped, 0);
    assert_eq!(r.retransmitted, 0);
    assert_eq!(r.element(Element::Rtt).packets, r.sent);
    assert!((r.element(Element::Rtt).time - r.elapsed).abs() < 1e-9);
    assert!(r.inconsistencies.is_empty());
}

#[test]
fn lossless_saturated_path_fills_bottleneck_and_queue() {
    let path = setting("2M-R100-W24");
    let r = run("2M-R100-W24", 0.0, 200_000, 1);
    assert!(rel(r.send_rate(), 2e6) < 2e-3, "{}", r.send_rate());
    let q = path.receiver_window - path.floor_beta() + 1;
    assert_eq!(q, 9);
    assert_eq!(r.max_queue as u32, q);
}

#[test]
fn four_send_rates_agree() {
    for (id, p) in [("2M-R100-W12", 0.01), ("10M-R50-W44", 0.1), ("2M-R200-W24", 0.2)] {
        let r = run(id, p, 100_000, 5);
        let base = r.send_rate_traffic();
        for other in [r.send_rate_sender(), r.send_rate_elements(), r.send_rate_windows()] {
            assert!(rel(other, base) <= 1e-9, "{id} p={p}: {other} vs {base}");
        }
    }
}

#[test]
fn w_eff_at_one_percent() {
    let r = run("2M-R100-W12", 0.01, 2_000_000, 1);
    assert!(rel(r.w_eff(), 9.5) <= 0.03, "w_eff = {}", r.w_eff());
}

#[test]
fn element_totals_near_printed_measurements() {
    // (10M, R50, W44) at 5%: #inRTT + s-TD = 5.386 + 0.293, t-sum 95.686 ms,
    // SR 868.273 kbit/s.
    let r = run("10M-R50-W44", 0.05, 2_000_000, 1);
    let row = r.element_row();
    assert!(rel(row[0] + row[2], 5.386 + 0.293) <= 0.02, "{row:?}");
    assert!(rel(row[12], 95.686) <= 0.02, "{row:?}");
    assert!(rel(row[13], 868.273) <= 0.02, "{row:?}");
}

#[test]
fn replications_stay_within_two_per_mille_of_their_mean() {
    let rates: Vec<f64> = (1..=4).map(|seed| run("2M-R100-W12", 0.01, 10_000_000, seed).send_rate()).collect();
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    for r in &rates {
        assert!(rel(*r, mean) <= 2e-3, "{rates:?}");
    }
}

#[test]
fn rto_converges_to_rfc_factors() {
    for r in [0.05, 0.2, 0.5, 2.0] {
        let mut e = RtoEstimator::new(1.0, 1.0);
        e.sample(r);
        for _ in 0..10 {
            e.sample(r);
        }
        assert!((e.rto() - (1.113 * r).max(1.0)).abs() <= 1e-3 * r, "R={r}: {}", e.rto());
        for _ in 0..10 {
            e.sample(r);
        }
        assert!((e.rto() - (1.006 * r).max(1.0)).abs() <= 1e-3 * r, "R={r}: {}", e.rto());
    }
}

#[test]
fn exempt_retransmissions_are_never_dropped() {
    let path = setting("2M-R100-W12");
    let tcp = TcpConfig::default();
    for (flags, td_only) in [
        (DropFlags { no_drop_rtx_td: true, no_drop_rtx_all: false }, true),
        (DropFlags { no_drop_rtx_td: false, no_drop_rtx_all: true }, false),
    ] {
        let mut dropped_rtx = 0;
        let mut rtx = 0;
        let r = run_simulation_traced(&path, &tcp, 0.1, 100_000, 3, flags, &mut |t| {
            if t.kind == "rtx" {
                rtx += 1;
                if t.flags == "dropped" {
                    dropped_rtx += 1;
                }
            }
        })
        .unwrap();
        assert!(rtx > 1000);
        if td_only {
            // Timeout retransmissions can still be dropped.
            assert!(dropped_rtx > 0);
            assert!(r.counters.tdto < run("2M-R100-W12", 0.1, 100_000, 3).counters.tdto / 10);
        } else {
            assert_eq!(dropped_rtx, 0);
            assert_eq!(r.counters.to_repeat, 0);
        }
    }
}

#[test]
fn trace_lines_have_five_fields() {
    let path = setting("2M-R100-W12");
    let mut lines = Vec::new();
    run_simulation_traced(&path, &TcpConfig::default(), 0.05, 2_000, 1, DropFlags::default(), &mut |t| {
        lines.push(t.to_string())
    })
    .unwrap();
    assert!(lines.len() > 4_000);
    for line in &lines {
        let fields: Vec<_> = line.split(' ').collect();
        assert_eq!(fields.len(), 5, "{line}");
        fields[0].parse::<f64>().unwrap();
    }
    assert!(lines.iter().any(|l| l.contains(" td ")));
}

#[test]
fn rejects_bad_inputs() {
    let path = setting("2M-R100-W12");
    let tcp = TcpConfig::default();
    assert!(run_simulation(&path, &tcp, 1.0, 10, 1, DropFlags::default()).is_err());
    assert!(run_simulation(&path, &tcp, -0.1, 10, 1, DropFlags::default()).is_err());
    assert!(run_simulation(&path, &tcp, 0.1, 0, 1, DropFlags::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn packets_and_time_are_conserved(
        w_r in 2u32..48,
        p in 0.0f64..0.3,
        seed in any::<u64>(),
        rtt_ms in 20u32..250,
        mbps in prop::sample::select(vec![1.0, 2.0, 10.0]),
    ) {
        let path = PathSpec::with_rtt(100e6, mbps * 1e6, 1500.0, 40.0, f64::from(rtt_ms) / 1e3, w_r).unwrap();
        let r = run_simulation(&path, &TcpConfig::default(), p, 20_000, seed, DropFlags::default()).unwrap();
        prop_assert!(r.inconsistencies.is_empty(), "{:?}", r.inconsistencies);
        prop_assert_eq!(r.sent, r.delivered + r.dropped + r.in_flight);
        prop_assert_eq!(r.sent, r.sent_new + r.retransmitted);
        let packets: u64 = r.elements.iter().map(|e| e.packets).sum();
        prop_assert_eq!(packets, r.sent);
        let time: f64 = r.elements.iter().map(|e| e.time).sum();
        prop_assert!((time - r.elapsed).abs() <= 1e-9 * r.elapsed.max(1.0));
        let base = r.send_rate_traffic();
        prop_assert!((r.send_rate_windows() - base).abs() <= 1e-9 * base);
        prop_assert!((r.send_rate_elements() - base).abs() <= 1e-9 * base);
        prop_assert_eq!(r.counters.tdto + r.counters.fr <= r.counters.td, true);
        prop_assert!(r.window_changes[0] == r.counters.to);
    }
}
