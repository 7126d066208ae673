//! Closed-form and quadrature evaluation of the uplink outage metrics.
//!
//! For a probe device at distance `d1` from the gateway:
//!
//! * `H1` is the probability that its SNR clears the SF threshold,
//! * `Q1` is the probability that its received power is at least
//!   [`CAPTURE_RATIO`] times that of the strongest concurrent transmitter
//!   sharing its spreading factor,
//! * `Q̃1` is a crude closed-form stand-in for `Q1`,
//!
//! and [`coverage`] averages any of them over a uniformly placed probe.
//!
//! The interferer marks `X = |h|² g(d)` (Rayleigh fading times path gain,
//! `d` uniform over the probe's SF annulus) have the density and cdf given
//! by [`product_pdf`] and [`product_cdf`]. The strongest of a Poisson
//! number of them is handled by [`max_interferer_cdf`].

pub mod gamma;
pub mod quadrature;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::phy::{assign_sf, db_to_linear, path_gain_unchecked, NetworkConfig, SfParams};

pub use gamma::{lower_incomplete_gamma, upper_incomplete_gamma};
pub use quadrature::{integrate, Integral, QuadratureSettings};

/// Required power ratio between the desired signal and the strongest
/// same-SF interferer (6 dB rounded to exactly 4).
pub const CAPTURE_RATIO: f64 = 4.0;

/// Upper limit for the fading integral in [`q1`]; `e^-46 < 1e-20`.
pub const FADING_TRUNCATION: f64 = 46.0;

/// The ring of devices sharing one spreading factor, clamped to the disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub sf: u8,
    pub inner_km: f64,
    pub outer_km: f64,
    pub area_km2: f64,
    /// Mean number of concurrently active devices in the ring,
    /// `p0 · ρ · area`.
    pub interferer_intensity: f64,
}

impl Annulus {
    pub fn for_sf(params: &SfParams, cfg: &NetworkConfig) -> Self {
        let (inner_km, outer_km) = cfg.annulus_bounds_km(params);
        let area_km2 = PI * (outer_km * outer_km - inner_km * inner_km);
        Self {
            sf: params.sf,
            inner_km,
            outer_km,
            area_km2,
            interferer_intensity: cfg.duty_cycle * cfg.density_per_km2() * area_km2,
        }
    }

    /// Annulus of the SF a device at `d1_km` is assigned.
    pub fn containing(d1_km: f64, cfg: &NetworkConfig) -> Result<Self> {
        Ok(Self::for_sf(&assign_sf(d1_km, cfg)?, cfg))
    }

    /// All six annuli in SF order, including empty ones beyond the disk.
    pub fn all(cfg: &NetworkConfig) -> Vec<Self> {
        cfg.sf_table.rows().iter().map(|p| Self::for_sf(p, cfg)).collect()
    }

    pub fn is_empty(&self) -> bool {
        !(self.outer_km > self.inner_km)
    }
}

/// Conditional complementary outage probabilities at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub d1_km: f64,
    pub h1: f64,
    pub q1: f64,
    pub q1_approx: f64,
    /// `h1 · q1`.
    pub joint: f64,
}

/// Which conditional metric to average over the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    H1,
    Q1,
    Q1Approx,
    Joint,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::H1, Metric::Q1, Metric::Q1Approx, Metric::Joint];

    pub fn name(self) -> &'static str {
        match self {
            Metric::H1 => "h1",
            Metric::Q1 => "q1",
            Metric::Q1Approx => "q1_approx",
            Metric::Joint => "joint",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Ok(Metric::H1),
            "q1" => Ok(Metric::Q1),
            "q1_approx" | "q1approx" => Ok(Metric::Q1Approx),
            "joint" => Ok(Metric::Joint),
            other => Err(domain(format!("unknown metric '{other}'"))),
        }
    }
}

/// Probability that the probe's SNR reaches its SF threshold,
/// `exp(-N q / (P g(d1)))`.
pub fn h1(d1_km: f64, cfg: &NetworkConfig) -> Result<f64> {
    let params = assign_sf(d1_km, cfg)?;
    let noise = cfg.noise_power_mw()?;
    let threshold = db_to_linear(params.snr_threshold_db);
    let gain = path_gain_unchecked(d1_km, cfg);
    Ok((-noise * threshold / (cfg.tx_power_mw() * gain)).exp())
}

/// Distribution of one interferer's mark `|h|² g(d)` with `d` uniform over
/// an annulus. Lengths are in km throughout, so the wavelength is too.
#[derive(Debug, Clone, Copy)]
struct MarkLaw {
    /// `1 + 2/η`
    shape: f64,
    /// `2/η`
    power: f64,
    pdf_scale: f64,
    cdf_scale: f64,
    /// `g(l_j)`; infinite when the annulus starts at the gateway.
    gain_inner: f64,
    /// `g(l_{j+1})`
    gain_outer: f64,
}

impl MarkLaw {
    fn new(ann: &Annulus, cfg: &NetworkConfig) -> Result<Self> {
        if ann.is_empty() {
            return Err(domain(format!("SF{} annulus is empty", ann.sf)));
        }
        let eta = cfg.path_loss_exponent;
        let lambda_km = cfg.wavelength_m() / 1e3;
        let gain_inner = if ann.inner_km > 0.0 {
            path_gain_unchecked(ann.inner_km, cfg)
        } else {
            f64::INFINITY
        };
        Ok(Self {
            shape: 1.0 + 2.0 / eta,
            power: 2.0 / eta,
            pdf_scale: lambda_km * lambda_km / (8.0 * eta * PI * ann.area_km2),
            cdf_scale: lambda_km * lambda_km / (16.0 * PI * ann.area_km2),
            gain_inner,
            gain_outer: path_gain_unchecked(ann.outer_km, cfg),
        })
    }

    fn pdf(&self, z: f64) -> f64 {
        let a = self.shape;
        let u0 = z / self.gain_inner;
        let u1 = z / self.gain_outer;
        // Γ(a, u0) − Γ(a, u1), taken through whichever tail is not close
        // to Γ(a) to avoid cancellation.
        let diff = if u1 < a + 1.0 {
            gamma::lower_unchecked(a, u1) - gamma::lower_unchecked(a, u0)
        } else {
            gamma::upper_unchecked(a, u0) - gamma::upper_unchecked(a, u1)
        };
        (self.pdf_scale * z.powf(-a) * diff).max(0.0)
    }

    fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z.is_infinite() {
            return 1.0;
        }
        // Bracket of the closed form with Γ(a, u) = Γ(a) − γ(a, u); the
        // Γ(a) terms cancel between the two limits.
        let term = |u: f64| {
            if u == 0.0 {
                0.0
            } else {
                (-u).exp_m1() * u.powf(self.power) + gamma::lower_unchecked(self.shape, u)
            }
        };
        let bracket = term(z / self.gain_inner) - term(z / self.gain_outer);
        (self.cdf_scale * z.powf(-self.power) * bracket).clamp(0.0, 1.0)
    }
}

/// Density of an interferer's received mark `X = |h|² g(d)`.
pub fn product_pdf(z: f64, ann: &Annulus, cfg: &NetworkConfig) -> Result<f64> {
    if !(z > 0.0) {
        return Err(domain(format!("product pdf needs z > 0, got {z}")));
    }
    Ok(MarkLaw::new(ann, cfg)?.pdf(z))
}

/// Distribution function of an interferer's received mark.
pub fn product_cdf(z: f64, ann: &Annulus, cfg: &NetworkConfig) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(domain(format!("product cdf needs z >= 0, got {z}")));
    }
    Ok(MarkLaw::new(ann, cfg)?.cdf(z))
}

/// Distribution of the largest of `n ~ Poisson(v)` i.i.d. marks with
/// common cdf value `single_cdf`: `Σ F^k v^k e^-v / k! = exp(v (F − 1))`.
/// The maximum of an empty sample is taken as 0, so `v = 0` gives 1.
pub fn poisson_max_cdf(single_cdf: f64, intensity: f64) -> f64 {
    (intensity * (single_cdf - 1.0)).exp()
}

/// Distribution of the strongest active interferer in `ann`.
pub fn max_interferer_cdf(z: f64, ann: &Annulus, cfg: &NetworkConfig) -> Result<f64> {
    if ann.interferer_intensity == 0.0 && z >= 0.0 {
        return Ok(1.0);
    }
    Ok(poisson_max_cdf(product_cdf(z, ann, cfg)?, ann.interferer_intensity))
}

/// Probability that the probe beats the strongest same-SF interferer by
/// [`CAPTURE_RATIO`], averaged over the probe's own Rayleigh fading.
pub fn q1(d1_km: f64, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<f64> {
    let ann = Annulus::containing(d1_km, cfg)?;
    let v = ann.interferer_intensity;
    if v == 0.0 {
        return Ok(1.0);
    }
    let law = MarkLaw::new(&ann, cfg)?;
    let scale = path_gain_unchecked(d1_km, cfg) / CAPTURE_RATIO;
    // the mark cdf changes character around the annulus' extreme gains
    let breaks = [law.gain_outer / scale, law.gain_inner / scale];
    let integral = integrate(
        |z| (-z).exp() * poisson_max_cdf(law.cdf(z * scale), v),
        0.0,
        FADING_TRUNCATION,
        &breaks,
        quad,
    )?;
    Ok(integral.value.clamp(0.0, 1.0))
}

/// Probability that both conditions hold in the same transmission.
///
/// `h1 · q1` treats the two conditions as independent, but both improve
/// with the probe's fading `|h1|²`. Conditioning on the SNR threshold
/// `t = N q / (P g(d1))` simply moves the lower limit of the fading
/// integral in [`q1`] to `t`.
pub fn joint_exact(d1_km: f64, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<f64> {
    let ann = Annulus::containing(d1_km, cfg)?;
    let params = assign_sf(d1_km, cfg)?;
    let gain = path_gain_unchecked(d1_km, cfg);
    let threshold = cfg.noise_power_mw()? * db_to_linear(params.snr_threshold_db) / (cfg.tx_power_mw() * gain);
    let v = ann.interferer_intensity;
    if v == 0.0 {
        return Ok((-threshold).exp());
    }
    let law = MarkLaw::new(&ann, cfg)?;
    let scale = gain / CAPTURE_RATIO;
    let breaks = [law.gain_outer / scale, law.gain_inner / scale];
    let integral = integrate(
        |z| (-z).exp() * poisson_max_cdf(law.cdf(z * scale), v),
        threshold,
        threshold + FADING_TRUNCATION,
        &breaks,
        quad,
    )?;
    Ok(integral.value.clamp(0.0, 1.0))
}

/// Leading-order closed-form approximation of [`q1`]. It only depends on
/// the probe's annulus, so it is constant across each annulus.
pub fn q1_approx(d1_km: f64, cfg: &NetworkConfig) -> Result<f64> {
    let ann = Annulus::containing(d1_km, cfg)?;
    if ann.is_empty() {
        return Err(domain(format!("SF{} annulus is empty", ann.sf)));
    }
    let v = ann.interferer_intensity;
    if v == 0.0 {
        return Ok(1.0);
    }
    let eta = cfg.path_loss_exponent;
    let (inner, outer, area) = (ann.inner_km, ann.outer_km, ann.area_km2);
    let outer_eta = outer.powf(eta);
    let numerator = 2.0 * (-v).exp() * outer_eta * (eta + 2.0) * area;
    let denominator = PI * v * inner.powf(eta + 2.0) + outer_eta * (2.0 * (eta + 2.0) * area - PI * v * outer * outer);
    let value = numerator / denominator;
    Ok(if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) })
}

/// All conditional metrics at `d1_km`.
pub fn link_metrics(d1_km: f64, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<LinkMetrics> {
    let h1 = h1(d1_km, cfg)?;
    let q1 = q1(d1_km, cfg, quad)?;
    Ok(LinkMetrics {
        d1_km,
        h1,
        q1,
        q1_approx: q1_approx(d1_km, cfg)?,
        joint: h1 * q1,
    })
}

/// One conditional metric at `d1_km`.
pub fn metric_at(metric: Metric, d1_km: f64, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<f64> {
    match metric {
        Metric::H1 => h1(d1_km, cfg),
        Metric::Q1 => q1(d1_km, cfg, quad),
        Metric::Q1Approx => q1_approx(d1_km, cfg),
        Metric::Joint => Ok(h1(d1_km, cfg)? * q1(d1_km, cfg, quad)?),
    }
}

/// Averages `f(d)` over a uniformly placed point of the disk,
/// `(2/R²) ∫₀^R f(d) d dd`, splitting at every SF boundary inside the disk.
pub fn disk_average<F>(mut f: F, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    let radius = cfg.radius_km;
    let breaks = cfg.sf_table.boundaries_km();
    let norm = 2.0 / (radius * radius);
    let mut failure = None;
    let integral = integrate(
        |d| match f(d) {
            Ok(x) => norm * x * d,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        radius,
        &breaks,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral?.value)
}

/// Coverage probability of `metric` for a uniformly placed probe.
pub fn coverage(metric: Metric, cfg: &NetworkConfig, quad: &QuadratureSettings) -> Result<f64> {
    disk_average(|d| metric_at(metric, d, cfg, quad), cfg, quad).map(|c| c.clamp(0.0, 1.0))
}

/// Smallest mean device count at which `coverage[Q1]` falls below
/// `coverage[H1]`, bracketed by the first sweep point where that happens
/// and refined by bisection to within half a device. `None` if the curves
/// never cross on the sweep.
pub fn crossover_mean_devices(cfg: &NetworkConfig, sweep: &[f64], quad: &QuadratureSettings) -> Result<Option<f64>> {
    let h1_cov = coverage(Metric::H1, cfg, quad)?;
    let gap = |nbar: f64| -> Result<f64> {
        let c = NetworkConfig {
            mean_devices: nbar,
            ..cfg.clone()
        };
        Ok(coverage(Metric::Q1, &c, quad)? - h1_cov)
    };
    let mut points: Vec<f64> = sweep.to_vec();
    points.sort_by(f64::total_cmp);
    let mut lo = 0.0;
    for &nbar in &points {
        if gap(nbar)? < 0.0 {
            let mut hi = nbar;
            while hi - lo > 0.5 {
                let mid = 0.5 * (lo + hi);
                if gap(mid)? < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        lo = nbar;
    }
    Ok(None)
}
