//! LoRa link-budget model: the spreading-factor table, Friis path gain,
//! thermal noise floor and the distance based SF assignment policy.
//!
//! Everything inside the crate is computed in linear units (mW and linear
//! power gains). Decibels only appear in the configuration and at the
//! reporting boundary.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise power spectral density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Number of spreading factors in a full table (SF7 to SF12).
pub const SF_COUNT: usize = 6;

/// One row of the spreading-factor table.
///
/// `annulus_outer_km` of the last row is usually `f64::INFINITY`; the
/// network configuration clamps it to the deployment radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfParams {
    pub sf: u8,
    /// Minimum decodable SNR, dB.
    pub snr_threshold_db: f64,
    pub sensitivity_dbm: f64,
    /// Time on air of a 25 byte message at 125 kHz.
    pub airtime_ms: f64,
    pub bitrate_kbps: f64,
    /// Informational only, never used in computation.
    pub transmits_per_hour: u32,
    pub annulus_inner_km: f64,
    pub annulus_outer_km: f64,
}

/// The six SF rows ordered by spreading factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SfTable {
    rows: [SfParams; SF_COUNT],
}

impl SfTable {
    /// Builds a table after checking the ordering invariants.
    pub fn new(rows: [SfParams; SF_COUNT]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if usize::from(row.sf) != 7 + i {
                return Err(Error::Config(format!(
                    "row {i} has SF{} but SF{} was expected",
                    row.sf,
                    7 + i
                )));
            }
            if !(row.annulus_inner_km >= 0.0 && row.annulus_inner_km < row.annulus_outer_km) {
                return Err(Error::Config(format!(
                    "SF{} annulus [{}, {}) is empty or negative",
                    row.sf, row.annulus_inner_km, row.annulus_outer_km
                )));
            }
        }
        for pair in rows.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            if hi.snr_threshold_db >= lo.snr_threshold_db {
                return Err(Error::Config(format!(
                    "SNR threshold must decrease from SF{} to SF{}",
                    lo.sf, hi.sf
                )));
            }
            if hi.airtime_ms <= lo.airtime_ms {
                return Err(Error::Config(format!(
                    "airtime must increase from SF{} to SF{}",
                    lo.sf, hi.sf
                )));
            }
            if lo.annulus_outer_km != hi.annulus_inner_km {
                return Err(Error::Config(format!(
                    "SF{} and SF{} annuli are not contiguous",
                    lo.sf, hi.sf
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Default table for a 25 byte message at 125 kHz with the
    /// `l_i = 2i` km boundaries.
    pub fn lora_default() -> Self {
        Self::with_boundaries(
            [-6.0, -9.0, -12.0, -15.0, -17.5, -20.0],
            [0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        )
        .expect("built-in table is valid")
    }

    /// Default airtime/bitrate/sensitivity columns with custom SNR
    /// thresholds and annulus inner boundaries `l_0..l_5`.
    pub fn with_boundaries(snr_thresholds_db: [f64; 6], boundaries_km: [f64; 6]) -> Result<Self> {
        const BITRATE: [f64; 6] = [5.47, 3.13, 1.76, 0.98, 0.54, 0.29];
        const AIRTIME: [f64; 6] = [36.6, 64.0, 113.0, 204.0, 372.0, 682.0];
        const PER_HOUR: [u32; 6] = [98, 56, 31, 17, 9, 5];
        const SENSITIVITY: [f64; 6] = [-123.0, -126.0, -129.0, -132.0, -134.5, -137.0];

        let rows = std::array::from_fn(|i| SfParams {
            sf: 7 + i as u8,
            snr_threshold_db: snr_thresholds_db[i],
            sensitivity_dbm: SENSITIVITY[i],
            airtime_ms: AIRTIME[i],
            bitrate_kbps: BITRATE[i],
            transmits_per_hour: PER_HOUR[i],
            annulus_inner_km: boundaries_km[i],
            annulus_outer_km: boundaries_km.get(i + 1).copied().unwrap_or(f64::INFINITY),
        });
        Self::new(rows)
    }

    pub fn rows(&self) -> &[SfParams; SF_COUNT] {
        &self.rows
    }

    /// Row for spreading factor `sf` (7..=12).
    pub fn get(&self, sf: u8) -> Option<&SfParams> {
        sf.checked_sub(7).and_then(|i| self.rows.get(usize::from(i)))
    }

    /// Inner boundaries `l_0..l_5`.
    pub fn boundaries_km(&self) -> [f64; 6] {
        self.rows.map(|r| r.annulus_inner_km)
    }
}

impl Default for SfTable {
    fn default() -> Self {
        Self::lora_default()
    }
}

/// Scenario parameters of a single-gateway deployment on a disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub radius_km: f64,
    /// Mean number of end-devices in the disk.
    pub mean_devices: f64,
    /// Fraction of time a device transmits.
    pub duty_cycle: f64,
    pub path_loss_exponent: f64,
    /// Common transmit power of every device.
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub sf_table: SfTable,
}

impl Default for NetworkConfig {
    /// Sub-urban scenario: R = 12 km, 500 devices, 1% duty cycle,
    /// exponent 2.7, 19 dBm, NF 6 dB, 125 kHz at 868 MHz.
    fn default() -> Self {
        Self {
            radius_km: 12.0,
            mean_devices: 500.0,
            duty_cycle: 0.01,
            path_loss_exponent: 2.7,
            tx_power_dbm: 19.0,
            noise_figure_db: 6.0,
            bandwidth_hz: 125e3,
            carrier_freq_hz: 868e6,
            sf_table: SfTable::default(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(
            self.radius_km > 0.0 && self.radius_km.is_finite(),
            "radius_km must be positive",
        )?;
        check(
            self.mean_devices >= 0.0 && self.mean_devices.is_finite(),
            "mean_devices must be non-negative",
        )?;
        check((0.0..=1.0).contains(&self.duty_cycle), "duty_cycle must lie in [0, 1]")?;
        check(
            self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite(),
            "path_loss_exponent must be at least 2",
        )?;
        check(self.tx_power_dbm.is_finite(), "tx_power_dbm must be finite")?;
        check(self.noise_figure_db.is_finite(), "noise_figure_db must be finite")?;
        check(
            self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite(),
            "bandwidth_hz must be positive",
        )?;
        check(
            self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite(),
            "carrier_freq_hz must be positive",
        )?;
        check(
            self.sf_table.rows()[0].annulus_inner_km < self.radius_km,
            "the SF7 annulus starts outside the deployment disk",
        )
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Device intensity per km².
    pub fn density_per_km2(&self) -> f64 {
        self.mean_devices / (PI * self.radius_km * self.radius_km)
    }

    pub fn tx_power_mw(&self) -> f64 {
        db_to_linear(self.tx_power_dbm)
    }

    pub fn noise_power_mw(&self) -> Result<f64> {
        noise_power_dbm(self).map(db_to_linear)
    }

    /// Annulus of `sf` with the outer radius clamped to the disk. Both
    /// bounds are clamped, so annuli beyond the disk come back empty
    /// (`inner == outer == R`).
    pub fn annulus_bounds_km(&self, params: &SfParams) -> (f64, f64) {
        let inner = params.annulus_inner_km.min(self.radius_km);
        let outer = params.annulus_outer_km.min(self.radius_km);
        (inner, outer)
    }
}

/// Free-space style power gain `(λ / 4πd)^η`.
pub fn path_gain(d_km: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(domain(format!("path gain needs a positive distance, got {d_km} km")));
    }
    Ok(path_gain_unchecked(d_km, cfg))
}

#[inline]
pub(crate) fn path_gain_unchecked(d_km: f64, cfg: &NetworkConfig) -> f64 {
    (cfg.wavelength_m() / (4.0 * PI * d_km * 1e3)).powf(cfg.path_loss_exponent)
}

/// Receiver noise floor `-174 + NF + 10 log10(BW)` in dBm.
pub fn noise_power_dbm(cfg: &NetworkConfig) -> Result<f64> {
    if !(cfg.bandwidth_hz > 0.0) {
        return Err(domain(format!(
            "bandwidth must be positive, got {} Hz",
            cfg.bandwidth_hz
        )));
    }
    Ok(THERMAL_NOISE_DBM_PER_HZ + cfg.noise_figure_db + 10.0 * cfg.bandwidth_hz.log10())
}

/// Spreading factor a device at `d_km` is assigned.
///
/// Annuli are half-open `[l_j, l_{j+1})`: a device sitting exactly on a
/// boundary gets the higher SF. The one exception is `d == R` landing on a
/// boundary, which stays in the last annulus that intersects the disk.
pub fn assign_sf(d_km: f64, cfg: &NetworkConfig) -> Result<SfParams> {
    if !(d_km > 0.0 && d_km <= cfg.radius_km) {
        return Err(domain(format!("distance {d_km} km outside (0, {}] km", cfg.radius_km)));
    }
    let rows = cfg.sf_table.rows();
    let idx = rows
        .iter()
        .rposition(|r| r.annulus_inner_km <= d_km)
        .ok_or_else(|| domain(format!("no spreading factor covers {d_km} km")))?;
    if rows[idx].annulus_inner_km >= cfg.radius_km && idx > 0 {
        return Ok(rows[idx - 1]);
    }
    Ok(rows[idx])
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("cannot express {x} in dB")));
    }
    Ok(10.0 * x.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_gain_at_reference_distance() {
        let cfg = NetworkConfig::default();
        let d_km = cfg.wavelength_m() / (4.0 * PI) / 1e3;
        assert_relative_eq!(path_gain(d_km, &cfg).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn gain_ratio_for_doubled_distance() {
        let cfg = NetworkConfig::default();
        let ratio = path_gain(1.0, &cfg).unwrap() / path_gain(2.0, &cfg).unwrap();
        assert_relative_eq!(ratio, 2f64.powf(2.7), max_relative = 1e-12);
        assert!((ratio - 6.498).abs() < 1e-3);
    }

    #[test]
    fn gain_at_one_km_regression() {
        // lambda = 299792458 / 868e6 = 0.345383016 m, evaluated in 30-digit arithmetic
        let cfg = NetworkConfig::default();
        let lambda = 299_792_458.0 / 868e6;
        assert_relative_eq!(cfg.wavelength_m(), lambda);
        let expected = (lambda / (4.0 * PI * 1000.0)).powf(2.7);
        let g = path_gain(1.0, &cfg).unwrap();
        assert_relative_eq!(g, expected, max_relative = 1e-14);
        assert_relative_eq!(g, 4.847_814_653_217_75e-13, max_relative = 1e-12);
    }

    #[test]
    fn gain_rejects_non_positive_distance() {
        let cfg = NetworkConfig::default();
        assert!(matches!(path_gain(0.0, &cfg), Err(Error::Domain(_))));
        assert!(path_gain(-1.0, &cfg).is_err());
        assert!(path_gain(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn near_field_gain_is_not_clamped() {
        let cfg = NetworkConfig::default();
        assert!(path_gain(1e-6, &cfg).unwrap() > 1.0);
    }

    #[test]
    fn noise_floor_values() {
        let mut cfg = NetworkConfig::default();
        assert!((noise_power_dbm(&cfg).unwrap() - -117.03).abs() < 0.01);
        cfg.bandwidth_hz = 250e3;
        assert!((noise_power_dbm(&cfg).unwrap() - -114.02).abs() < 0.01);
        cfg.noise_figure_db = 0.0;
        cfg.bandwidth_hz = 1.0;
        assert_eq!(noise_power_dbm(&cfg).unwrap(), -174.0);
        cfg.bandwidth_hz = 0.0;
        assert!(noise_power_dbm(&cfg).is_err());
    }

    #[test]
    fn sensitivity_column_matches_noise_floor_plus_threshold() {
        let cfg = NetworkConfig::default();
        let floor = noise_power_dbm(&cfg).unwrap();
        for row in cfg.sf_table.rows() {
            assert!(
                (row.sensitivity_dbm - (floor + row.snr_threshold_db)).abs() <= 0.1,
                "SF{}",
                row.sf
            );
        }
    }

    #[test]
    fn sf_assignment_examples() {
        let cfg = NetworkConfig::default();
        assert_eq!(assign_sf(1.0, &cfg).unwrap().sf, 7);
        assert_eq!(assign_sf(2.0, &cfg).unwrap().sf, 8);
        assert_eq!(assign_sf(10.0, &cfg).unwrap().sf, 12);
        assert_eq!(assign_sf(11.0, &cfg).unwrap().sf, 12);
        assert_eq!(assign_sf(12.0, &cfg).unwrap().sf, 12);
        assert!(assign_sf(0.0, &cfg).is_err());
        assert!(assign_sf(12.0001, &cfg).is_err());
    }

    #[test]
    fn disk_edge_on_a_boundary_keeps_lower_sf() {
        let cfg = NetworkConfig {
            radius_km: 10.0,
            ..NetworkConfig::default()
        };
        assert_eq!(assign_sf(10.0, &cfg).unwrap().sf, 11);
        let sf12 = cfg.sf_table.get(12).unwrap();
        let (inner, outer) = cfg.annulus_bounds_km(sf12);
        assert_eq!(inner, outer);
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(6.0) - 3.981).abs() < 1e-3);
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-2.0).is_err());
    }

    #[test]
    fn table_invariants_are_enforced() {
        let mut rows = *SfTable::lora_default().rows();
        rows[3].snr_threshold_db = -5.0;
        assert!(SfTable::new(rows).is_err());

        let mut rows = *SfTable::lora_default().rows();
        rows[2].annulus_outer_km = 5.0;
        assert!(SfTable::new(rows).is_err());

        let mut rows = *SfTable::lora_default().rows();
        rows[4].airtime_ms = 1.0;
        assert!(SfTable::new(rows).is_err());

        let table = SfTable::lora_default();
        assert_eq!(table.rows().len(), 6);
        assert_eq!(table.get(12).unwrap().annulus_outer_km, f64::INFINITY);
        assert!(table.get(6).is_none());
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::default().validate().is_ok());
        let bad = NetworkConfig {
            duty_cycle: 1.5,
            ..NetworkConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = NetworkConfig {
            path_loss_exponent: 1.9,
            ..NetworkConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn gain_scaling_law(d in 0.01f64..50.0, a in 0.1f64..10.0, eta in 2.0f64..5.0) {
            let cfg = NetworkConfig { path_loss_exponent: eta, ..NetworkConfig::default() };
            let lhs = path_gain(a * d, &cfg).unwrap();
            let rhs = a.powf(-eta) * path_gain(d, &cfg).unwrap();
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
            prop_assert!(path_gain(d * 1.001, &cfg).unwrap() < path_gain(d, &cfg).unwrap());
        }

        #[test]
        fn db_round_trip(x in 1e-30f64..1e30) {
            let back = db_to_linear(linear_to_db(x).unwrap());
            prop_assert!(((back - x) / x).abs() < 1e-12);
        }

        #[test]
        fn assignment_partitions_the_disk(d in 1e-9f64..=12.0) {
            let cfg = NetworkConfig::default();
            let row = assign_sf(d, &cfg).unwrap();
            let (inner, outer) = cfg.annulus_bounds_km(&row);
            prop_assert!(inner <= d && (d < outer || d == cfg.radius_km));
            let hits = cfg
                .sf_table
                .rows()
                .iter()
                .filter(|r| r.annulus_inner_km <= d && d < r.annulus_outer_km)
                .count();
            prop_assert_eq!(hits, 1);
        }
    }
}
