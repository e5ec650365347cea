//! CSV row layouts.
//!
//! Column sets are fixed. Element columns use the standard element header names
//! (`#inRTT`, `s-TODir`, ..., `SR`), packet counts and milliseconds per window
//! change, SR in kbit/s. Because `sum` appears twice in that layout, rows are
//! written as plain records rather than through a derived struct.
//!
//! * model: `setting, p, regime, p_min, p_max, sqrt SR, sqrt valid, linear SR,
//!   linear valid, <elements>, <W>, P(W>floor beta), warning`
//! * simulation: `setting, p, seed, packets, <elements>, w_eff, LE, %TD/LE,
//!   %TO/LE, %FR/TD, %TDTO/TD, %TOFRxtd/TO, %rxtFR1, %rxtFR2, %rxtFR3,
//!   dropped, retransmitted, elapsed, inconsistencies`
//! * comparison: `setting, p, regime, model SR, sim SR, %err, in band,
//!   %wErr <col>` for the eleven non-sum element columns, then `status`
//! * distribution: `W, P(W)`

use std::io::Write;

use tcpsr_core::laws::linear_law;
use tcpsr_core::model::ELEMENT_COLUMNS;
use tcpsr_core::{
    assemble, classify_regime, solve_window_distribution, sqrt_law, ModelBreakdown, PathSpec, Regime, RegimeKind,
    WindowDistribution,
};
use tcpsr_sim::SimulationReport;

use crate::config::SettingConfig;
use crate::Result;

/// Indices of the two `sum` columns in the element layout.
const PACKET_SUM: usize = 5;
const TIME_SUM: usize = 12;
const SR: usize = 13;

pub fn regime_label(kind: RegimeKind) -> &'static str {
    match kind {
        RegimeKind::Linear => "linear",
        RegimeKind::SquareRoot => "sqrt",
        RegimeKind::Timeout => "timeout",
        RegimeKind::Overlap => "linear+sqrt",
        RegimeKind::Unmodeled => "unmodeled",
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// A header plus records, written with the csv crate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn element_header() -> impl Iterator<Item = String> {
    ELEMENT_COLUMNS.iter().map(|c| c.to_string())
}

// ---------------------------------------------------------------- model

#[derive(Debug, Clone)]
pub struct ModelRow {
    pub setting: String,
    pub p: f64,
    pub regime: Regime,
    pub sqrt_rate: f64,
    pub sqrt_valid: bool,
    pub linear_rate: f64,
    pub linear_valid: bool,
    pub breakdown: ModelBreakdown,
    /// `P(W > ⌊β⌋)`; zero when `W_R ≤ ⌊β⌋`.
    pub saturation_tail: f64,
    pub warning: Option<String>,
}

impl ModelRow {
    pub fn compute(setting: &SettingConfig, p: f64, epsilon: f64) -> Result<Self> {
        let path = setting.path()?;
        let regime = classify_regime(&path, p)?;
        let sqrt = sqrt_law(&path, p)?;
        // The saturated law has side conditions some paths miss; report NaN then.
        let (linear_rate, linear_valid) = match linear_law(&path, p) {
            Ok(l) => (l.send_rate, l.valid),
            Err(_) => (f64::NAN, false),
        };
        let breakdown = assemble(&path, &setting.tcp, p)?;
        let dist = solve_window_distribution(path.receiver_window, p)?;
        let saturation_tail = saturation_tail(&path, &dist);
        Ok(ModelRow {
            setting: setting.id.clone(),
            p,
            regime,
            sqrt_rate: sqrt.send_rate,
            sqrt_valid: sqrt.valid,
            linear_rate,
            linear_valid,
            breakdown,
            saturation_tail,
            warning: saturation_warning(&path, saturation_tail, epsilon),
        })
    }

    pub fn header() -> Vec<String> {
        let mut h: Vec<String> =
            ["setting", "p", "regime", "p_min", "p_max", "sqrt SR", "sqrt valid", "linear SR", "linear valid"]
                .map(String::from)
                .to_vec();
        h.extend(element_header());
        h.extend(["<W>", "P(W>floor beta)", "warning"].map(String::from));
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.setting.clone(),
            num(self.p),
            regime_label(self.regime.kind).to_string(),
            num(self.regime.p_min),
            self.regime.p_max.map(num).unwrap_or_default(),
            fixed(self.sqrt_rate / 1e3),
            self.sqrt_valid.to_string(),
            fixed(self.linear_rate / 1e3),
            self.linear_valid.to_string(),
        ];
        r.extend(self.breakdown.element_row().iter().map(|&x| fixed(x)));
        r.push(fixed(self.breakdown.mean_window));
        r.push(fixed(self.saturation_tail));
        r.push(self.warning.clone().unwrap_or_default());
        r
    }
}

/// `P(W > ⌊β⌋)` for a path whose receiver window exceeds its capacity.
pub fn saturation_tail(path: &PathSpec, dist: &WindowDistribution) -> f64 {
    let fb = path.floor_beta();
    if path.receiver_window > fb {
        dist.tail_above(fb)
    } else {
        0.0
    }
}

/// The `P(W>⌊β⌋)=x%` line, issued when the tail exceeds `epsilon`.
pub fn saturation_warning(path: &PathSpec, tail: f64, epsilon: f64) -> Option<String> {
    (path.receiver_window > path.floor_beta() && tail > epsilon)
        .then(|| format!("P(W>{})={:.1}%", path.floor_beta(), 100.0 * tail))
}

// ----------------------------------------------------------- simulation

pub fn sim_header() -> Vec<String> {
    let mut h: Vec<String> = ["setting", "p", "seed", "packets"].map(String::from).to_vec();
    h.extend(element_header());
    h.extend(
        [
            "w_eff",
            "LE",
            "%TD/LE",
            "%TO/LE",
            "%FR/TD",
            "%TDTO/TD",
            "%TOFRxtd/TO",
            "%rxtFR1",
            "%rxtFR2",
            "%rxtFR3",
            "dropped",
            "retransmitted",
            "elapsed",
            "inconsistencies",
        ]
        .map(String::from),
    );
    h
}

pub fn sim_record(setting: &str, report: &SimulationReport) -> Vec<String> {
    let c = &report.counters;
    let mut r = vec![setting.to_string(), num(report.p), report.seed.to_string(), report.sent.to_string()];
    r.extend(report.element_row().iter().map(|&x| fixed(x)));
    r.extend([
        fixed(report.w_eff()),
        c.loss_events().to_string(),
        fixed(c.pct_td_of_le()),
        fixed(c.pct_to_of_le()),
        fixed(c.pct_fr_of_td()),
        fixed(c.pct_tdto_of_td()),
        fixed(c.pct_tofrxtd_of_to()),
        fixed(c.pct_rxt_fr(1)),
        fixed(c.pct_rxt_fr(2)),
        fixed(c.pct_rxt_fr(3)),
        report.dropped.to_string(),
        report.retransmitted.to_string(),
        fixed(report.elapsed),
        report.inconsistencies.len().to_string(),
    ]);
    r
}

// ----------------------------------------------------------- comparison

/// Model against simulation at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub setting: String,
    pub p: f64,
    pub regime: String,
    /// kbit/s.
    pub model_sr: f64,
    /// kbit/s.
    pub sim_sr: f64,
    /// `100·(model − sim)/sim`.
    pub pct_err: f64,
    /// Whether the point is inside the acceptance band; `None` when no band
    /// applies to it.
    pub in_band: Option<bool>,
    /// Per-column weighted errors for the eleven non-sum element columns.
    pub weighted_errors: Vec<f64>,
    /// `ok`, or the error that stopped this point.
    pub status: String,
}

/// Element columns that get a weighted error.
pub fn weighted_columns() -> impl Iterator<Item = usize> {
    (0..SR).filter(|&i| i != PACKET_SUM && i != TIME_SUM)
}

/// `100·(calc − meas)/meas_sum`, where the sum is the measured packet total
/// for packet columns and the measured time total for time columns.
pub fn weighted_errors(calc: &[f64; 14], meas: &[f64; 14]) -> Vec<f64> {
    weighted_columns()
        .map(|i| {
            let total = if i < PACKET_SUM { meas[PACKET_SUM] } else { meas[TIME_SUM] };
            100.0 * (calc[i] - meas[i]) / total
        })
        .collect()
}

impl ComparisonRow {
    pub fn new(setting: &str, p: f64, regime: Regime, calc: &[f64; 14], meas: &[f64; 14]) -> Self {
        ComparisonRow {
            setting: setting.to_string(),
            p,
            regime: regime_label(regime.kind).to_string(),
            model_sr: calc[SR],
            sim_sr: meas[SR],
            pct_err: 100.0 * (calc[SR] - meas[SR]) / meas[SR],
            in_band: None,
            weighted_errors: weighted_errors(calc, meas),
            status: "ok".to_string(),
        }
    }

    pub fn failed(setting: &str, p: f64, message: String) -> Self {
        ComparisonRow {
            setting: setting.to_string(),
            p,
            regime: String::new(),
            model_sr: f64::NAN,
            sim_sr: f64::NAN,
            pct_err: f64::NAN,
            in_band: Some(false),
            weighted_errors: vec![f64::NAN; weighted_columns().count()],
            status: message,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn header() -> Vec<String> {
        let mut h: Vec<String> =
            ["setting", "p", "regime", "model SR", "sim SR", "%err", "in band"].map(String::from).to_vec();
        h.extend(weighted_columns().map(|i| format!("%wErr {}", ELEMENT_COLUMNS[i])));
        h.push("status".to_string());
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.setting.clone(),
            num(self.p),
            self.regime.clone(),
            fixed(self.model_sr),
            fixed(self.sim_sr),
            fixed(self.pct_err),
            self.in_band.map(|b| b.to_string()).unwrap_or_default(),
        ];
        r.extend(self.weighted_errors.iter().map(|&x| fixed(x)));
        r.push(self.status.clone());
        r
    }

    /// The row as it reads back from CSV, i.e. with values at written
    /// precision.
    pub fn normalized(self) -> Self {
        let rec = csv::StringRecord::from(self.record());
        Self::parse(&rec).unwrap_or(self)
    }

    /// Parses a record written by [`ComparisonRow::record`].
    pub fn parse(record: &csv::StringRecord) -> Option<Self> {
        let n = weighted_columns().count();
        if record.len() != 8 + n {
            return None;
        }
        let f = |i: usize| record.get(i).and_then(|s| s.parse::<f64>().ok());
        let in_band = match record.get(6)? {
            "" => None,
            s => Some(s.parse().ok()?),
        };
        Some(ComparisonRow {
            setting: record.get(0)?.to_string(),
            p: f(1)?,
            regime: record.get(2)?.to_string(),
            model_sr: f(3)?,
            sim_sr: f(4)?,
            pct_err: f(5)?,
            in_band,
            weighted_errors: (7..7 + n).map(f).collect::<Option<_>>()?,
            status: record.get(7 + n)?.to_string(),
        })
    }
}

// --------------------------------------------------------- distribution

pub fn dist_table(dist: &WindowDistribution) -> Table {
    let mut t = Table::new(vec!["W".into(), "P(W)".into()]);
    t.rows = dist.iter().map(|(w, m)| vec![w.to_string(), num(m)]).collect();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::named_setting;

    #[test]
    fn headers_carry_element_names_verbatim() {
        let h = ModelRow::header();
        let at = h.iter().position(|c| c == "#inRTT").unwrap();
        assert_eq!(&h[at..at + 14], &ELEMENT_COLUMNS.map(String::from));
        assert_eq!(h.iter().filter(|c| *c == "sum").count(), 2);
        assert!(sim_header().iter().any(|c| c == "%TOFRxtd/TO"));
        assert_eq!(ComparisonRow::header().len(), 19);
    }

    #[test]
    fn model_row_width_matches_header() {
        let row = ModelRow::compute(&named_setting("10M-R50-W44").unwrap(), 0.05, 0.01).unwrap();
        assert_eq!(row.record().len(), ModelRow::header().len());
    }

    #[test]
    fn saturation_warning_values() {
        // P(W > 41) at (10M, R50, W44): 40.8% at p = 0.1% and 0.9% at 0.5%.
        let s = named_setting("10M-R50-W44").unwrap();
        let low = ModelRow::compute(&s, 0.001, 0.01).unwrap();
        assert!((low.saturation_tail - 0.408).abs() < 5e-4, "{}", low.saturation_tail);
        assert_eq!(low.warning.as_deref(), Some("P(W>41)=40.8%"));
        let high = ModelRow::compute(&s, 0.005, 0.01).unwrap();
        assert!((high.saturation_tail - 0.009).abs() < 5e-4, "{}", high.saturation_tail);
        assert_eq!(high.warning, None);
        let strict = ModelRow::compute(&s, 0.005, 0.005).unwrap();
        assert_eq!(strict.warning.as_deref(), Some("P(W>41)=0.9%"));
        // A path that never saturates has no tail.
        let w12 = ModelRow::compute(&named_setting("2M-R100-W12").unwrap(), 0.001, 0.0).unwrap();
        assert_eq!(w12.saturation_tail, 0.0);
        assert_eq!(w12.warning, None);
    }

    #[test]
    fn weighted_errors_use_measured_sums() {
        let mut calc = [0.0; 14];
        let mut meas = [0.0; 14];
        meas[PACKET_SUM] = 10.0;
        meas[TIME_SUM] = 200.0;
        calc[0] = 1.0;
        calc[6] = 20.0;
        let e = weighted_errors(&calc, &meas);
        assert_eq!(e.len(), 11);
        assert_eq!(e[0], 10.0);
        assert_eq!(e[5], 10.0);
    }

    #[test]
    fn comparison_round_trips_through_csv() {
        let calc = [1.0; 14];
        let mut meas = [1.0; 14];
        meas[SR] = 0.8;
        let mut row = ComparisonRow::new(
            "x",
            0.0123,
            classify_regime(&named_setting("2M-R100-W12").unwrap().path().unwrap(), 0.0123).unwrap(),
            &calc,
            &meas,
        );
        row.in_band = Some(false);
        let mut t = Table::new(ComparisonRow::header());
        t.rows.push(row.record());
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let rec = rd.records().next().unwrap().unwrap();
        let back = ComparisonRow::parse(&rec).unwrap();
        assert_eq!(back.setting, "x");
        assert_eq!(back.p, 0.0123);
        assert!((back.pct_err - 25.0).abs() < 1e-6);
        assert_eq!(back.in_band, Some(false));
    }
}
