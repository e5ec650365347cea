//! Model-vs-simulation sweeps over settings × p.
//!
//! Points run on a bounded rayon pool. Each finished row is appended to
//! `comparison.csv` straight away, so a killed sweep rerun on the same
//! directory skips what it already has. When the sweep completes the file
//! is rewritten in grid order.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use tcpsr_core::{assemble, classify_regime};
use tcpsr_sim::run_simulation;

use crate::config::{SettingConfig, SweepSpec};
use crate::rows::{ComparisonRow, Table};
use crate::{HarnessError, Result};

pub const COMPARISON_FILE: &str = "comparison.csv";

/// Error band for unsaturated paths, in percent, before slack.
pub const BAND: (f64, f64) = (-5.0, 0.0);
pub const BAND_SLACK: f64 = 1.5;
/// Range of p over which the band is checked.
pub const BAND_P: (f64, f64) = (0.005, 0.2);

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// In grid order: settings as listed, p as listed.
    pub rows: Vec<ComparisonRow>,
    /// Points computed in this invocation (the rest were loaded).
    pub computed: usize,
    pub file: PathBuf,
}

impl SweepOutcome {
    /// Rows that failed to run or fell outside the band.
    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.in_band == Some(false))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// One line per checked point and a closing verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let mut checked = 0;
        for r in &self.rows {
            let Some(ok) = r.in_band else { continue };
            checked += 1;
            let tag = if ok { "PASS" } else { "FAIL" };
            if r.is_ok() {
                s += &format!("{tag} {} p={} %err={:.2}\n", r.setting, r.p, r.pct_err);
            } else {
                s += &format!("{tag} {} p={} {}\n", r.setting, r.p, r.status);
            }
        }
        let failed = self.failures().count();
        s += &format!(
            "{} of {checked} banded points inside the error band; {} rows total\n",
            checked - failed,
            self.rows.len()
        );
        s
    }
}

type Key = (String, u64);

fn key(setting: &str, p: f64) -> Key {
    (setting.to_string(), p.to_bits())
}

/// Band for one point, if any applies: unsaturated paths with p in
/// [`BAND_P`].
pub fn band_for(setting: &SettingConfig, p: f64, scale: f64) -> Option<(f64, f64)> {
    let path = setting.path().ok()?;
    let inside = p >= BAND_P.0 - 1e-12 && p <= BAND_P.1 + 1e-12;
    (!path.is_saturated() && inside).then_some((BAND.0 - BAND_SLACK * scale, BAND.1 + BAND_SLACK * scale))
}

/// Runs the model and the simulator at one point.
pub fn compare_point(spec: &SweepSpec, setting: &SettingConfig, p: f64) -> ComparisonRow {
    let run = || -> Result<ComparisonRow> {
        let path = setting.path()?;
        let regime = classify_regime(&path, p)?;
        let model = assemble(&path, &setting.tcp, p)?;
        let seed = spec.seed.seed_for(&setting.id, p);
        let report = run_simulation(&path, &setting.tcp, p, spec.packets_for(p), seed, spec.flags)?;
        Ok(ComparisonRow::new(&setting.id, p, regime, &model.element_row(), &report.element_row()))
    };
    let mut row = run().map_or_else(|e| ComparisonRow::failed(&setting.id, p, e.to_string()), |r| r.normalized());
    if row.is_ok() {
        row.in_band = band_for(setting, p, spec.tolerance_scale())
            .map(|(lo, hi)| row.pct_err.is_finite() && row.pct_err >= lo && row.pct_err <= hi);
    }
    row
}

/// Reads rows already present in `file`; a missing file yields none and
/// unparsable lines (e.g. a torn final write) are ignored.
pub fn load_rows(file: &Path) -> Result<Vec<ComparisonRow>> {
    if !file.exists() {
        return Ok(Vec::new());
    }
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_path(file)?;
    Ok(rd.records().filter_map(|r| r.ok()).filter_map(|r| ComparisonRow::parse(&r)).collect())
}

fn open_append(file: &Path, fresh: bool) -> Result<File> {
    let mut f = OpenOptions::new().create(true).append(true).open(file).map_err(|e| HarnessError::io(file, e))?;
    if fresh {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ComparisonRow::header())?;
        let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
        f.write_all(&bytes).map_err(|e| HarnessError::io(file, e))?;
    }
    Ok(f)
}

fn append_row(f: &mut File, row: &ComparisonRow) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(row.record()).map_err(std::io::Error::other)?;
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    f.write_all(&bytes)?;
    f.flush()
}

/// Runs every grid point not already recorded in `out_dir`.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path) -> Result<SweepOutcome> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let file = out_dir.join(COMPARISON_FILE);

    let done: HashMap<Key, ComparisonRow> = load_rows(&file)?.into_iter().map(|r| (key(&r.setting, r.p), r)).collect();
    let pending: Vec<(&SettingConfig, f64)> = spec
        .settings
        .iter()
        .flat_map(|s| spec.p_grid.iter().map(move |&p| (s, p)))
        .filter(|(s, p)| !done.contains_key(&key(&s.id, *p)))
        .collect();

    let sink = Mutex::new(open_append(&file, fs::metadata(&file).map_or(true, |m| m.len() == 0))?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let fresh: Vec<ComparisonRow> = pool.install(|| {
        pending
            .par_iter()
            .map(|&(s, p)| {
                let row = compare_point(spec, s, p);
                let mut f = sink.lock().unwrap_or_else(|e| e.into_inner());
                // A lost append only costs a recomputation on resume.
                let _ = append_row(&mut f, &row);
                row
            })
            .collect()
    });
    let computed = fresh.len();

    let mut by_key = done;
    by_key.extend(fresh.into_iter().map(|r| (key(&r.setting, r.p), r)));
    let rows: Vec<ComparisonRow> = spec
        .settings
        .iter()
        .flat_map(|s| spec.p_grid.iter().map(move |&p| key(&s.id, p)))
        .filter_map(|k| by_key.remove(&k))
        .collect();

    let mut table = Table::new(ComparisonRow::header());
    table.rows = rows.iter().map(ComparisonRow::record).collect();
    let tmp = out_dir.join(format!("{COMPARISON_FILE}.tmp"));
    let f = File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    table.write_to(f)?;
    fs::rename(&tmp, &file).map_err(|e| HarnessError::io(&file, e))?;

    Ok(SweepOutcome { rows, computed, file })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::named_setting;

    #[test]
    fn band_applies_to_unsaturated_mid_range_only() {
        let w12 = named_setting("2M-R100-W12").unwrap();
        let w24 = named_setting("2M-R100-W24").unwrap();
        assert_eq!(band_for(&w12, 0.01, 1.0), Some((-6.5, 1.5)));
        assert_eq!(band_for(&w12, 0.2, 2.0), Some((-8.0, 3.0)));
        assert_eq!(band_for(&w12, 0.001, 1.0), None);
        assert_eq!(band_for(&w24, 0.01, 1.0), None);
    }
}
