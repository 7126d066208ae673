//! The four subcommands. Each renders its whole output into a [`Report`]
//! so that the caller decides where it goes.

use std::fmt::Write as _;

use lorascale::analysis::{self, coverage, crossover_mean_devices, link_metrics, Annulus, Metric};
use lorascale::montecarlo::{estimate_conditional, estimate_coverage_all, Estimate};
use lorascale::phy::noise_power_dbm;

use crate::error::CliError;
use crate::format::sig9;
use crate::scenario::{Scenario, SimTarget};

#[derive(Debug)]
pub struct Report {
    /// CSV or text destined for `--out` or stdout.
    pub body: String,
    /// Human-readable notes, printed on stderr.
    pub summary: Option<String>,
    /// Set when some rows could not be computed; the body is still valid
    /// and marks those rows.
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(body: String) -> Self {
        Self {
            body,
            summary: None,
            failure: None,
        }
    }
}

fn row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// Analytic `h1`, `q1`, `q1_approx` and `joint = h1·q1` on the d1 grid.
pub fn analyze(s: &Scenario) -> Result<Report, CliError> {
    let cfg = s.network()?;
    let mut body = row(&["d1_km", "h1", "q1", "q1_approx", "joint"].map(String::from));
    let mut failure = None;
    for d in s.d1_points() {
        match link_metrics(d, &cfg, &s.quadrature) {
            Ok(m) => body.push_str(&row(&[
                sig9(d),
                sig9(m.h1),
                sig9(m.q1),
                sig9(m.q1_approx),
                sig9(m.joint),
            ])),
            Err(e) => {
                body.push_str(&row(&[
                    sig9(d),
                    "error".into(),
                    "error".into(),
                    "error".into(),
                    "error".into(),
                ]));
                failure.get_or_insert(CliError::Model(e));
            }
        }
    }
    Ok(Report {
        body,
        summary: None,
        failure,
    })
}

fn estimate_row(d1: &str, metric: Metric, e: &Estimate, seed: u64) -> String {
    row(&[
        d1.to_string(),
        metric.name().to_string(),
        sig9(e.estimate),
        sig9(e.ci95_halfwidth),
        e.trials.to_string(),
        seed.to_string(),
    ])
}

/// Monte Carlo estimates, either per grid distance or disk averaged.
pub fn simulate(s: &Scenario) -> Result<Report, CliError> {
    let cfg = s.network()?;
    let mut body = row(&["d1_km", "metric", "estimate", "ci95", "trials", "seed"].map(String::from));
    match s.sim_target {
        SimTarget::Grid => {
            for d in s.d1_points() {
                let est = estimate_conditional(d, &cfg, s.trials, s.seed)?;
                let d1 = sig9(d);
                body.push_str(&estimate_row(&d1, Metric::H1, &est.h1, s.seed));
                body.push_str(&estimate_row(&d1, Metric::Q1, &est.q1, s.seed));
                body.push_str(&estimate_row(&d1, Metric::Joint, &est.joint, s.seed));
            }
        }
        SimTarget::Disk => {
            for r in estimate_coverage_all(&cfg, s.trials, s.seed)? {
                let e = Estimate {
                    estimate: r.estimate,
                    ci95_halfwidth: r.ci95_halfwidth,
                    trials: r.trials,
                };
                body.push_str(&estimate_row("disk", r.metric, &e, r.seed));
            }
        }
    }
    Ok(Report::ok(body))
}

/// Analytic coverage against the mean device count, optional Monte Carlo
/// columns, and the density at which co-SF interference takes over from
/// noise as the main cause of outage.
pub fn sweep(s: &Scenario) -> Result<Report, CliError> {
    let base = s.network()?;
    let quad = &s.quadrature;
    let mut header = vec![
        "nbar",
        "coverage_h1",
        "coverage_q1",
        "coverage_q1_approx",
        "coverage_joint",
    ];
    if s.sweep_mc {
        header.extend([
            "mc_h1",
            "mc_h1_ci95",
            "mc_q1",
            "mc_q1_ci95",
            "mc_joint",
            "mc_joint_ci95",
            "trials",
            "seed",
        ]);
    }
    let mut body = row(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    let mut failure = None;
    for &nbar in &s.nbar_sweep {
        let cfg = lorascale::NetworkConfig {
            mean_devices: nbar,
            ..base.clone()
        };
        let mut fields = vec![sig9(nbar)];
        for metric in [Metric::H1, Metric::Q1, Metric::Q1Approx, Metric::Joint] {
            match coverage(metric, &cfg, quad) {
                Ok(c) => fields.push(sig9(c)),
                Err(e) => {
                    fields.push("error".into());
                    failure.get_or_insert(CliError::Model(e));
                }
            }
        }
        if s.sweep_mc {
            for r in estimate_coverage_all(&cfg, s.trials, s.seed)? {
                fields.push(sig9(r.estimate));
                fields.push(sig9(r.ci95_halfwidth));
            }
            fields.push(s.trials.to_string());
            fields.push(s.seed.to_string());
        }
        body.push_str(&row(&fields));
    }

    let mut summary = String::new();
    match coverage(Metric::H1, &base, quad) {
        Ok(h) => writeln!(summary, "coverage[h1] = {} for every nbar", sig9(h)).unwrap(),
        Err(e) => {
            failure.get_or_insert(CliError::Model(e));
        }
    }
    match crossover_mean_devices(&base, &s.nbar_sweep, quad) {
        Ok(Some(n)) => writeln!(
            summary,
            "crossover nbar* = {} (coverage[q1] < coverage[h1] above it, +-0.25 devices)",
            sig9(n)
        )
        .unwrap(),
        Ok(None) => writeln!(summary, "crossover nbar* not reached on this sweep").unwrap(),
        Err(e) => {
            failure.get_or_insert(CliError::Model(e));
        }
    }
    Ok(Report {
        body,
        summary: Some(summary),
        failure,
    })
}

/// Spreading-factor table and the quantities derived from the scenario.
pub fn table(s: &Scenario) -> Result<Report, CliError> {
    let cfg = s.network()?;
    let mut out = String::new();
    writeln!(
        out,
        "{:>3} {:>9} {:>10} {:>9} {:>12} {:>9} {:>16} {:>12}",
        "SF", "kb/s", "airtime_ms", "tx/hour", "sens_dBm", "q_SF_dB", "annulus_km", "v"
    )
    .unwrap();
    let annuli = Annulus::all(&cfg);
    for (p, ann) in cfg.sf_table.rows().iter().zip(&annuli) {
        let range = format!("[{}, {})", sig9(ann.inner_km), sig9(ann.outer_km));
        writeln!(
            out,
            "{:>3} {:>9} {:>10} {:>9} {:>12} {:>9} {:>16} {:>12}",
            p.sf,
            sig9(p.bitrate_kbps),
            sig9(p.airtime_ms),
            p.transmits_per_hour,
            sig9(p.sensitivity_dbm),
            sig9(p.snr_threshold_db),
            range,
            sig9(ann.interferer_intensity),
        )
        .unwrap();
    }
    let noise = noise_power_dbm(&cfg)?;
    let total_v: f64 = annuli.iter().map(|a| a.interferer_intensity).sum();
    writeln!(out).unwrap();
    writeln!(out, "noise floor        {} dBm", sig9(noise)).unwrap();
    writeln!(out, "wavelength         {} m", sig9(cfg.wavelength_m())).unwrap();
    writeln!(out, "density            {} devices/km^2", sig9(cfg.density_per_km2())).unwrap();
    writeln!(out, "active devices     {} (sum of v)", sig9(total_v)).unwrap();
    writeln!(out, "capture ratio      {}", sig9(analysis::CAPTURE_RATIO)).unwrap();
    Ok(Report::ok(out))
}
