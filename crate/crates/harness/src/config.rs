//! Sweep configuration: network settings, the drop-probability grid and run
//! sizes, stored as TOML.
//!
//! A manifest may carry settings inline (`[[settings]]` tables) and may also
//! name one file per setting under `setting_files`, resolved relative to the
//! manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcpsr_core::path::reference_settings;
use tcpsr_core::{PathSpec, TcpConfig};
use tcpsr_sim::DropFlags;

use crate::{HarnessError, Result};

pub const DEFAULT_P_GRID: [f64; 11] = [0.0001, 0.0005, 0.001, 0.005, 0.01, 0.02, 0.03, 0.05, 0.1, 0.15, 0.2];

/// Packets per run below [`LOW_P_THRESHOLD`] and at or above it.
pub const PACKETS_LOW_P: u64 = 20_000_000;
pub const PACKETS: u64 = 10_000_000;
pub const LOW_P_THRESHOLD: f64 = 0.005;
pub const QUICK_PACKETS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingConfig {
    pub id: String,
    /// Bits per second.
    pub access_capacity: f64,
    /// Bits per second.
    pub bottleneck_capacity: f64,
    /// Bytes.
    pub packet_size: f64,
    /// Bytes.
    pub ack_size: f64,
    /// Seconds.
    pub rtt: f64,
    pub receiver_window: u32,
    #[serde(default)]
    pub tcp: TcpConfig,
}

impl SettingConfig {
    pub fn path(&self) -> Result<PathSpec> {
        PathSpec::with_rtt(
            self.access_capacity,
            self.bottleneck_capacity,
            self.packet_size,
            self.ack_size,
            self.rtt,
            self.receiver_window,
        )
        .map_err(|e| HarnessError::Setting(self.id.clone(), e))
    }

    fn from_reference(id: String, path: &PathSpec) -> Self {
        SettingConfig {
            id,
            access_capacity: path.access_capacity,
            bottleneck_capacity: path.bottleneck_capacity,
            packet_size: path.packet_size,
            ack_size: path.ack_size,
            rtt: path.rtt,
            receiver_window: path.receiver_window,
            tcp: TcpConfig::default(),
        }
    }
}

/// The seven reference settings as configs.
pub fn default_settings() -> Vec<SettingConfig> {
    reference_settings().into_iter().map(|(id, path)| SettingConfig::from_reference(id, &path)).collect()
}

/// Looks up a reference setting by label, case-insensitively.
pub fn named_setting(id: &str) -> Result<SettingConfig> {
    default_settings()
        .into_iter()
        .find(|s| s.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| HarnessError::Usage(format!("unknown setting `{id}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub base: u64,
    /// Derive a distinct seed per (setting, p) point from `base`; otherwise
    /// every point uses `base`.
    pub per_point: bool,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy { base: 1, per_point: true }
    }
}

impl SeedPolicy {
    pub fn seed_for(&self, setting: &str, p: f64) -> u64 {
        if !self.per_point {
            return self.base;
        }
        // FNV-1a over the key, folded into the base seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in setting.bytes().chain(p.to_bits().to_le_bytes()) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.base ^ h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub settings: Vec<SettingConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setting_files: Vec<PathBuf>,
    pub p_grid: Vec<f64>,
    pub packets: u64,
    pub packets_low_p: u64,
    pub low_p_threshold: f64,
    pub seed: SeedPolicy,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub quick: bool,
    #[serde(default)]
    pub flags: DropFlags,
    /// Threshold on `P(W > ⌊β⌋)` above which a saturation warning is issued.
    pub warn_epsilon: f64,
    /// Worker threads; `None` uses all available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            settings: default_settings(),
            setting_files: Vec::new(),
            p_grid: DEFAULT_P_GRID.to_vec(),
            packets: PACKETS,
            packets_low_p: PACKETS_LOW_P,
            low_p_threshold: LOW_P_THRESHOLD,
            seed: SeedPolicy::default(),
            out_dir: PathBuf::from("."),
            quick: false,
            flags: DropFlags::default(),
            warn_epsilon: 0.01,
            jobs: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() {
            return Err(HarnessError::Usage("sweep has no settings".into()));
        }
        if self.p_grid.is_empty() {
            return Err(HarnessError::Usage("empty p grid".into()));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p < 1.0)) {
            return Err(HarnessError::Usage(format!("grid value {p} outside (0, 1)")));
        }
        if self.packets == 0 || self.packets_low_p == 0 {
            return Err(HarnessError::Usage("packet counts must be positive".into()));
        }
        for s in &self.settings {
            s.path()?;
        }
        Ok(())
    }

    /// Packets simulated at drop probability `p`.
    pub fn packets_for(&self, p: f64) -> u64 {
        if self.quick {
            QUICK_PACKETS
        } else if p < self.low_p_threshold {
            self.packets_low_p
        } else {
            self.packets
        }
    }

    /// Multiplier applied to acceptance tolerances.
    pub fn tolerance_scale(&self) -> f64 {
        if self.quick {
            2.0
        } else {
            1.0
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a manifest and appends the settings it names in
    /// `setting_files`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut spec = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for file in &spec.setting_files {
            let file = base.join(file);
            let text = fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
            let setting: SettingConfig =
                toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", file.display())))?;
            spec.settings.push(setting);
        }
        spec.validate()?;
        Ok(spec)
    }
}
