//! Scenario files: flat `key = value` text with `#` comments.
//!
//! ```text
//! # sub-urban reference scenario
//! radius_km = 12
//! mean_devices = 500
//! d1_grid = 0.1:12:60        # min:max:points, uniform on (min, max]
//! nbar_sweep = 1, 500, 1000  # or an explicit list
//! ```
//!
//! Every key can also be given on the command line as `--<key> <value>`,
//! which takes precedence over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lorascale::phy::SfTable;
use lorascale::{NetworkConfig, QuadratureSettings};

use crate::error::CliError;

/// Keys accepted in scenario files, in documentation order.
pub const KEYS: &[&str] = &[
    "radius_km",
    "mean_devices",
    "duty_cycle",
    "path_loss_exponent",
    "tx_power_dbm",
    "noise_figure_db",
    "bandwidth_hz",
    "carrier_freq_hz",
    "sf_boundaries_km",
    "snr_thresholds_db",
    "trials",
    "seed",
    "d1_grid",
    "nbar_sweep",
    "output_path",
    "sim_target",
    "sweep_mc",
    "abs_tol",
    "rel_tol",
    "max_subdivisions",
];

/// Probe distances to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Explicit distances, used as given.
    Points(Vec<f64>),
    /// `points` evenly spaced values on `(min, max]`, nudged 1 m off any
    /// SF boundary.
    Uniform { min: f64, max: f64, points: usize },
}

/// Whether `simulate` runs at fixed distances or averages over the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimTarget {
    Grid,
    Disk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub radius_km: f64,
    pub mean_devices: f64,
    pub duty_cycle: f64,
    pub path_loss_exponent: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub sf_boundaries_km: [f64; 6],
    pub snr_thresholds_db: [f64; 6],
    pub trials: u64,
    pub seed: u64,
    /// `None` means 60 points on `(0.1, R]`.
    pub d1_grid: Option<Grid>,
    pub nbar_sweep: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub sim_target: SimTarget,
    pub sweep_mc: bool,
    pub quadrature: QuadratureSettings,
}

/// Distance by which default grid points are pushed off SF boundaries.
const BOUNDARY_NUDGE_KM: f64 = 1e-3;

impl Default for Scenario {
    fn default() -> Self {
        let net = NetworkConfig::default();
        let table = SfTable::default();
        Self {
            radius_km: net.radius_km,
            mean_devices: net.mean_devices,
            duty_cycle: net.duty_cycle,
            path_loss_exponent: net.path_loss_exponent,
            tx_power_dbm: net.tx_power_dbm,
            noise_figure_db: net.noise_figure_db,
            bandwidth_hz: net.bandwidth_hz,
            carrier_freq_hz: net.carrier_freq_hz,
            sf_boundaries_km: table.boundaries_km(),
            snr_thresholds_db: table.rows().map(|r| r.snr_threshold_db),
            trials: 100_000,
            seed: 1,
            d1_grid: None,
            nbar_sweep: std::iter::once(1.0).chain((1..=20).map(|i| 100.0 * i as f64)).collect(),
            output_path: None,
            sim_target: SimTarget::Grid,
            sweep_mc: false,
            quadrature: QuadratureSettings::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_six(key: &str, value: &str) -> Result<[f64; 6], CliError> {
    let v = parse_list(key, value)?;
    v.try_into()
        .map_err(|v: Vec<f64>| CliError::Usage(format!("{key}: expected 6 values, got {}", v.len())))
}

fn parse_grid(value: &str) -> Result<Grid, CliError> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [min, max, points] => Ok(Grid::Uniform {
            min: parse("d1_grid", min)?,
            max: parse("d1_grid", max)?,
            points: parse("d1_grid", points)?,
        }),
        [_] => Ok(Grid::Points(parse_list("d1_grid", value)?)),
        _ => Err(CliError::Usage(format!(
            "d1_grid: expected a list or min:max:points, got '{value}'"
        ))),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Usage(format!("{key}: expected true or false, got '{value}'"))),
    }
}

impl Scenario {
    /// Sets one key. Accepts the same keys as the file format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "radius_km" => self.radius_km = parse(key, value)?,
            "mean_devices" | "nbar" => self.mean_devices = parse(key, value)?,
            "duty_cycle" => self.duty_cycle = parse(key, value)?,
            "path_loss_exponent" => self.path_loss_exponent = parse(key, value)?,
            "tx_power_dbm" => self.tx_power_dbm = parse(key, value)?,
            "noise_figure_db" => self.noise_figure_db = parse(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = parse(key, value)?,
            "carrier_freq_hz" => self.carrier_freq_hz = parse(key, value)?,
            "sf_boundaries_km" => self.sf_boundaries_km = parse_six(key, value)?,
            "snr_thresholds_db" => self.snr_thresholds_db = parse_six(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "d1_grid" => self.d1_grid = Some(parse_grid(value)?),
            "nbar_sweep" => self.nbar_sweep = parse_list(key, value)?,
            "output_path" | "out" => {
                self.output_path = if value.is_empty() || value == "-" {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "sim_target" => {
                self.sim_target = match value {
                    "grid" => SimTarget::Grid,
                    "disk" => SimTarget::Disk,
                    _ => {
                        return Err(CliError::Usage(format!(
                            "sim_target: expected grid or disk, got '{value}'"
                        )))
                    }
                }
            }
            "sweep_mc" => self.sweep_mc = parse_bool(key, value)?,
            "abs_tol" => self.quadrature.abs_tol = parse(key, value)?,
            "rel_tol" => self.quadrature.rel_tol = parse(key, value)?,
            "max_subdivisions" => self.quadrature.max_subdivisions = parse(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Usage(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    /// Defaults, then the optional file, then `overrides` in order.
    pub fn load(config: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self, CliError> {
        let mut s = Scenario::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            s.apply_text(&text)?;
        }
        for (key, value) in overrides {
            s.set(key, value)?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn network(&self) -> Result<NetworkConfig, CliError> {
        let sf_table = SfTable::with_boundaries(self.snr_thresholds_db, self.sf_boundaries_km)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let cfg = NetworkConfig {
            radius_km: self.radius_km,
            mean_devices: self.mean_devices,
            duty_cycle: self.duty_cycle,
            path_loss_exponent: self.path_loss_exponent,
            tx_power_dbm: self.tx_power_dbm,
            noise_figure_db: self.noise_figure_db,
            bandwidth_hz: self.bandwidth_hz,
            carrier_freq_hz: self.carrier_freq_hz,
            sf_table,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.network()?;
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.nbar_sweep.is_empty() || self.nbar_sweep.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(CliError::Usage(
                "nbar_sweep needs at least one non-negative value".into(),
            ));
        }
        let q = &self.quadrature;
        if !(q.abs_tol >= 0.0 && q.rel_tol >= 0.0 && q.abs_tol + q.rel_tol > 0.0) || q.max_subdivisions == 0 {
            return Err(CliError::Usage(
                "quadrature tolerances must be non-negative and not both zero".into(),
            ));
        }
        for d in self.d1_points() {
            if !(d > 0.0 && d <= self.radius_km) {
                return Err(CliError::Usage(format!(
                    "d1_grid point {d} km outside (0, {}] km",
                    self.radius_km
                )));
            }
        }
        Ok(())
    }

    /// The probe distances of `d1_grid`.
    pub fn d1_points(&self) -> Vec<f64> {
        let grid = self.d1_grid.clone().unwrap_or(Grid::Uniform {
            min: 0.1,
            max: self.radius_km,
            points: 60,
        });
        match grid {
            Grid::Points(p) => p,
            Grid::Uniform { min, max, points } => {
                let step = (max - min) / points as f64;
                let inner = &self.sf_boundaries_km[1..];
                (1..=points)
                    .map(|k| {
                        let d = if k == points { max } else { min + step * k as f64 };
                        match inner.iter().find(|&&l| (d - l).abs() < BOUNDARY_NUDGE_KM) {
                            Some(&l) if l + BOUNDARY_NUDGE_KM <= max => l + BOUNDARY_NUDGE_KM,
                            Some(&l) => l - BOUNDARY_NUDGE_KM,
                            None => d,
                        }
                    })
                    .collect()
            }
        }
    }
}
