use tcpsr_core::path::reference_settings;
use tcpsr_core::{assemble, TcpConfig};

#[test]
fn send_rate_strictly_decreasing_in_p() {
    let tcp = TcpConfig::default();
    let grid: Vec<f64> = (0..=195).map(|i| 0.005 + 0.001 * f64::from(i)).collect();
    for (id, path) in reference_settings() {
        let rates: Vec<f64> = grid.iter().map(|&p| assemble(&path, &tcp, p).unwrap().send_rate).collect();
        for (i, pair) in rates.windows(2).enumerate() {
            assert!(pair[1] < pair[0], "{id}: SR rises between p={} and p={}", grid[i], grid[i + 1]);
        }
    }
}

#[test]
fn breakdown_is_exhaustive_and_consistent() {
    let tcp = TcpConfig::default();
    for (_, path) in reference_settings() {
        for p in [0.005, 0.01, 0.05, 0.1, 0.2] {
            let m = assemble(&path, &tcp, p).unwrap();
            let parts = [m.rtt, m.td, m.tdfr, m.tdto, m.to];
            assert!(parts.iter().all(|e| e.packets >= 0.0 && e.time >= 0.0));
            let n: f64 = parts.iter().map(|e| e.packets).sum();
            let t: f64 = parts.iter().map(|e| e.time).sum();
            assert_eq!(n, m.sum_packets);
            assert_eq!(t, m.sum_time);
            assert_eq!(m.send_rate, m.sum_packets * path.packet_bits() / m.sum_time);
            assert!((m.to.time - m.to_direct_time - m.rtx_lost_time).abs() < 1e-15);
        }
    }
}
