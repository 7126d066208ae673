//! Monte Carlo estimation of the outage conditions.
//!
//! Each trial is an independent snapshot of the network: a Poisson number
//! of devices is dropped uniformly on the disk, each is active with
//! probability `p0` and gets a unit-mean exponential fading gain. The probe
//! device is always transmitting and is not part of the interferer set.
//!
//! Trial `i` draws from its own ChaCha8 stream `(seed, i)`, so estimates
//! are bitwise reproducible whatever the number of worker threads.

use std::ops::Add;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::analysis::{Metric, CAPTURE_RATIO};
use crate::error::{domain, Result};
use crate::phy::{assign_sf, db_to_linear, path_gain_unchecked, NetworkConfig};

/// z-score of a two-sided 95% normal interval.
const Z95: f64 = 1.96;

/// Where the probe device sits in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbePlacement {
    At(f64),
    /// Uniform over the disk, redrawn every trial.
    Random,
}

/// One realisation of the deployment, seen from the probe.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeploymentSnapshot {
    pub distances_km: Vec<f64>,
    pub sfs: Vec<u8>,
    pub active: Vec<bool>,
    /// `|h_k|²`
    pub fading: Vec<f64>,
    pub probe_distance_km: f64,
    pub probe_sf: u8,
    pub probe_fading: f64,
}

impl DeploymentSnapshot {
    pub fn len(&self) -> usize {
        self.distances_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_km.is_empty()
    }

    fn clear(&mut self) {
        self.distances_km.clear();
        self.sfs.clear();
        self.active.clear();
        self.fading.clear();
    }
}

/// Validated configuration plus the pieces reused across snapshots.
#[derive(Debug, Clone)]
pub struct DeploymentSampler<'a> {
    cfg: &'a NetworkConfig,
    count: Option<Poisson<f64>>,
    boundaries: [f64; 6],
}

impl<'a> DeploymentSampler<'a> {
    pub fn new(cfg: &'a NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let count = if cfg.mean_devices > 0.0 {
            Some(Poisson::new(cfg.mean_devices).map_err(|e| domain(format!("device count: {e}")))?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            count,
            boundaries: cfg.sf_table.boundaries_km(),
        })
    }

    /// Checks that a fixed probe distance lies in `(0, R]`.
    pub fn check_probe(&self, probe: ProbePlacement) -> Result<()> {
        match probe {
            ProbePlacement::At(d) if !(d > 0.0 && d <= self.cfg.radius_km) => Err(domain(format!(
                "probe distance {d} km outside (0, {}] km",
                self.cfg.radius_km
            ))),
            _ => Ok(()),
        }
    }

    /// Same rule as [`assign_sf`] for a distance already known to be in
    /// `(0, R]` and past `l_0`.
    fn sf_of(&self, d_km: f64) -> u8 {
        let mut idx = self.boundaries.iter().rposition(|&l| l <= d_km).unwrap_or(0);
        if idx > 0 && self.boundaries[idx] >= self.cfg.radius_km {
            idx -= 1;
        }
        7 + idx as u8
    }

    /// Uniform point of the disk, as a distance in `(0, R]`.
    fn radial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.cfg.radius_km * (1.0 - u).sqrt()
    }

    /// Refills `snap` with a fresh realisation. The probe placement must
    /// have passed [`check_probe`](Self::check_probe).
    pub fn sample_into<R: Rng + ?Sized>(&self, snap: &mut DeploymentSnapshot, probe: ProbePlacement, rng: &mut R) {
        snap.clear();
        snap.probe_distance_km = match probe {
            ProbePlacement::At(d) => d,
            ProbePlacement::Random => self.radial(rng),
        };
        snap.probe_sf = self.sf_of(snap.probe_distance_km);
        snap.probe_fading = Exp1.sample(rng);

        let n = self.count.as_ref().map_or(0, |p| p.sample(rng) as usize);
        snap.distances_km.reserve(n);
        for _ in 0..n {
            let d = self.radial(rng);
            snap.distances_km.push(d);
            snap.sfs.push(self.sf_of(d));
            snap.active.push(rng.random::<f64>() < self.cfg.duty_cycle);
            snap.fading.push(Exp1.sample(rng));
        }
    }
}

/// Draws one snapshot with the probe at `probe`.
pub fn sample_deployment<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    probe: ProbePlacement,
    rng: &mut R,
) -> Result<DeploymentSnapshot> {
    let sampler = DeploymentSampler::new(cfg)?;
    sampler.check_probe(probe)?;
    let mut snap = DeploymentSnapshot::default();
    sampler.sample_into(&mut snap, probe, rng);
    Ok(snap)
}

/// SNR condition: `P |h|² g(d1) / N ≥ q_SF`.
pub fn eval_condition1(snap: &DeploymentSnapshot, cfg: &NetworkConfig) -> bool {
    let Ok(params) = assign_sf(snap.probe_distance_km, cfg) else {
        return false;
    };
    let Ok(noise) = cfg.noise_power_mw() else {
        return false;
    };
    let received = cfg.tx_power_mw() * snap.probe_fading * path_gain_unchecked(snap.probe_distance_km, cfg);
    received / noise >= db_to_linear(params.snr_threshold_db)
}

/// Capture condition: the probe is at least [`CAPTURE_RATIO`] times
/// stronger than every active device on its SF. Transmit powers are equal
/// and cancel. Vacuously true without such a device.
pub fn eval_condition2(snap: &DeploymentSnapshot, cfg: &NetworkConfig) -> bool {
    let strongest = (0..snap.len())
        .filter(|&k| snap.active[k] && snap.sfs[k] == snap.probe_sf)
        .map(|k| snap.fading[k] * path_gain_unchecked(snap.distances_km[k], cfg))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |m| m.max(x))));
    match strongest {
        None => true,
        Some(max) => snap.probe_fading * path_gain_unchecked(snap.probe_distance_km, cfg) >= CAPTURE_RATIO * max,
    }
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Bernoulli proportion with its normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub ci95_halfwidth: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        Self {
            estimate: p,
            ci95_halfwidth: Z95 * (p * (1.0 - p) / n).sqrt(),
            trials,
        }
    }
}

/// Empirical counterparts of `H1`, `Q1` and their conjunction at a fixed
/// probe distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalEstimate {
    pub d1_km: f64,
    pub h1: Estimate,
    pub q1: Estimate,
    /// Both conditions met in the same trial.
    pub joint: Estimate,
    pub seed: u64,
}

/// Disk-averaged coverage estimate for one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageResult {
    pub metric: Metric,
    pub estimate: f64,
    pub ci95_halfwidth: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    snr: u64,
    capture: u64,
    both: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            snr: self.snr + o.snr,
            capture: self.capture + o.capture,
            both: self.both + o.both,
        }
    }
}

fn run_trials(cfg: &NetworkConfig, probe: ProbePlacement, trials: u64, seed: u64) -> Result<Tally> {
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    let sampler = DeploymentSampler::new(cfg)?;
    sampler.check_probe(probe)?;
    Ok((0..trials)
        .into_par_iter()
        .map_init(DeploymentSnapshot::default, |snap, i| {
            let mut rng = trial_rng(seed, i);
            sampler.sample_into(snap, probe, &mut rng);
            let c1 = eval_condition1(snap, cfg);
            let c2 = eval_condition2(snap, cfg);
            Tally {
                snr: u64::from(c1),
                capture: u64::from(c2),
                both: u64::from(c1 && c2),
            }
        })
        .reduce(Tally::default, Tally::add))
}

/// Runs `trials` snapshots with the probe fixed at `d1_km`.
pub fn estimate_conditional(d1_km: f64, cfg: &NetworkConfig, trials: u64, seed: u64) -> Result<ConditionalEstimate> {
    let t = run_trials(cfg, ProbePlacement::At(d1_km), trials, seed)?;
    Ok(ConditionalEstimate {
        d1_km,
        h1: Estimate::from_counts(t.snr, trials),
        q1: Estimate::from_counts(t.capture, trials),
        joint: Estimate::from_counts(t.both, trials),
        seed,
    })
}

/// Coverage of `H1`, `Q1` and their conjunction with the probe redrawn
/// uniformly on the disk every trial. All three come from the same trials.
pub fn estimate_coverage_all(cfg: &NetworkConfig, trials: u64, seed: u64) -> Result<[CoverageResult; 3]> {
    let t = run_trials(cfg, ProbePlacement::Random, trials, seed)?;
    let make = |metric, successes| {
        let e = Estimate::from_counts(successes, trials);
        CoverageResult {
            metric,
            estimate: e.estimate,
            ci95_halfwidth: e.ci95_halfwidth,
            trials,
            seed,
        }
    };
    Ok([
        make(Metric::H1, t.snr),
        make(Metric::Q1, t.capture),
        make(Metric::Joint, t.both),
    ])
}

/// Coverage of a single metric. `Q1Approx` has no simulated counterpart.
pub fn estimate_coverage(metric: Metric, cfg: &NetworkConfig, trials: u64, seed: u64) -> Result<CoverageResult> {
    if metric == Metric::Q1Approx {
        return Err(domain("q1_approx is an analytic approximation and cannot be simulated"));
    }
    let all = estimate_coverage_all(cfg, trials, seed)?;
    Ok(*all.iter().find(|r| r.metric == metric).expect("simulated metric"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{h1, q1, QuadratureSettings};
    use proptest::prelude::*;

    fn cfg_with(nbar: f64) -> NetworkConfig {
        NetworkConfig {
            mean_devices: nbar,
            ..NetworkConfig::default()
        }
    }

    fn snapshot(
        probe_d: f64,
        probe_fading: f64,
        devices: &[(f64, bool, f64)],
        cfg: &NetworkConfig,
    ) -> DeploymentSnapshot {
        DeploymentSnapshot {
            distances_km: devices.iter().map(|d| d.0).collect(),
            sfs: devices.iter().map(|d| assign_sf(d.0, cfg).unwrap().sf).collect(),
            active: devices.iter().map(|d| d.1).collect(),
            fading: devices.iter().map(|d| d.2).collect(),
            probe_distance_km: probe_d,
            probe_sf: assign_sf(probe_d, cfg).unwrap().sf,
            probe_fading,
        }
    }

    #[test]
    fn empty_network_has_no_devices() {
        let cfg = cfg_with(0.0);
        let mut rng = trial_rng(1, 0);
        for _ in 0..100 {
            let snap = sample_deployment(&cfg, ProbePlacement::At(3.0), &mut rng).unwrap();
            assert!(snap.is_empty());
            assert!(eval_condition2(&snap, &cfg));
        }
    }

    #[test]
    fn device_count_is_poisson() {
        let cfg = cfg_with(50.0);
        let mut rng = trial_rng(3, 0);
        let n = 10_000;
        let total: usize = (0..n)
            .map(|_| sample_deployment(&cfg, ProbePlacement::Random, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 50.0).abs() <= 4.0 * (50.0f64 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn distances_are_uniform_on_the_disk() {
        // Kolmogorov–Smirnov against F(d) = (d/R)², 1% critical value 1.628/sqrt(n).
        let cfg = cfg_with(200.0);
        let mut rng = trial_rng(11, 0);
        let mut d: Vec<f64> = (0..100)
            .flat_map(|_| {
                sample_deployment(&cfg, ProbePlacement::At(1.0), &mut rng)
                    .unwrap()
                    .distances_km
            })
            .collect();
        d.sort_by(f64::total_cmp);
        let n = d.len() as f64;
        let ks = d
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x / 12.0).powi(2);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / n.sqrt(), "KS statistic {ks} over {n} samples");
    }

    #[test]
    fn activity_rate_matches_duty_cycle() {
        let cfg = NetworkConfig {
            duty_cycle: 0.2,
            ..cfg_with(100.0)
        };
        let mut rng = trial_rng(5, 0);
        let (mut on, mut all) = (0usize, 0usize);
        for _ in 0..2000 {
            let s = sample_deployment(&cfg, ProbePlacement::Random, &mut rng).unwrap();
            on += s.active.iter().filter(|&&a| a).count();
            all += s.len();
        }
        let rate = on as f64 / all as f64;
        assert!((rate - 0.2).abs() < 4.0 * (0.16 / all as f64).sqrt(), "rate {rate}");
    }

    #[test]
    fn invalid_probe_is_rejected() {
        let cfg = NetworkConfig::default();
        let mut rng = trial_rng(0, 0);
        assert!(sample_deployment(&cfg, ProbePlacement::At(0.0), &mut rng).is_err());
        assert!(sample_deployment(&cfg, ProbePlacement::At(12.5), &mut rng).is_err());
        assert!(estimate_conditional(-1.0, &cfg, 10, 0).is_err());
        assert!(estimate_conditional(1.0, &cfg, 0, 0).is_err());
    }

    #[test]
    fn zero_fading_fails_snr() {
        let cfg = NetworkConfig::default();
        assert!(!eval_condition1(&snapshot(1.0, 0.0, &[], &cfg), &cfg));
        assert!(eval_condition1(&snapshot(1.0, 1.0, &[], &cfg), &cfg));
    }

    #[test]
    fn no_snr_requirement_always_passes() {
        let cfg = NetworkConfig {
            sf_table: crate::phy::SfTable::with_boundaries(
                [-400.0, -410.0, -420.0, -430.0, -440.0, -450.0],
                [0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            )
            .unwrap(),
            ..NetworkConfig::default()
        };
        assert!(eval_condition1(&snapshot(11.9, 1e-6, &[], &cfg), &cfg));
    }

    #[test]
    fn capture_rules() {
        let cfg = NetworkConfig::default();
        // exactly four times stronger: captured
        assert!(eval_condition2(&snapshot(5.0, 2.0, &[(5.0, true, 0.5)], &cfg), &cfg));
        // slightly less: lost
        assert!(!eval_condition2(
            &snapshot(5.0, 2.0, &[(5.0, true, 0.500_001)], &cfg),
            &cfg
        ));
        // inactive or other-SF devices do not count
        assert!(eval_condition2(&snapshot(5.0, 2.0, &[(5.0, false, 100.0)], &cfg), &cfg));
        assert!(eval_condition2(
            &snapshot(5.0, 2.0, &[(1.0, true, 100.0), (9.0, true, 100.0)], &cfg),
            &cfg
        ));
        // strongest of several decides
        let devs = [(5.5, true, 0.1), (4.2, true, 3.0)];
        assert!(!eval_condition2(&snapshot(5.0, 2.0, &devs, &cfg), &cfg));
    }

    #[test]
    fn silent_network_always_captures() {
        let cfg = NetworkConfig {
            duty_cycle: 0.0,
            ..NetworkConfig::default()
        };
        let est = estimate_conditional(7.0, &cfg, 2000, 9).unwrap();
        assert_eq!(est.q1.estimate, 1.0);
    }

    #[test]
    fn single_trial_is_reproducible() {
        let cfg = NetworkConfig::default();
        let a = estimate_conditional(4.5, &cfg, 1, 42).unwrap();
        let b = estimate_conditional(4.5, &cfg, 1, 42).unwrap();
        assert_eq!(a, b);
        for e in [a.h1, a.q1, a.joint] {
            assert!(e.estimate == 0.0 || e.estimate == 1.0);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let cfg = NetworkConfig::default();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        estimate_conditional(9.0, &cfg, 5000, 7).unwrap(),
                        estimate_coverage_all(&cfg, 5000, 7).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn conjunction_is_bounded_by_marginals() {
        let est = estimate_conditional(11.0, &NetworkConfig::default(), 4000, 1).unwrap();
        assert!(est.joint.estimate <= est.h1.estimate.min(est.q1.estimate));
    }

    #[test]
    fn agrees_with_analysis_at_one_distance() {
        let cfg = NetworkConfig::default();
        let quad = QuadratureSettings::default();
        let est = estimate_conditional(5.0, &cfg, 40_000, 2024).unwrap();
        let h = h1(5.0, &cfg).unwrap();
        let q = q1(5.0, &cfg, &quad).unwrap();
        assert!((est.h1.estimate - h).abs() <= 3.0 * est.h1.ci95_halfwidth);
        assert!((est.q1.estimate - q).abs() <= 3.0 * est.q1.ci95_halfwidth);
    }

    #[test]
    fn q1_approx_cannot_be_simulated() {
        assert!(estimate_coverage(Metric::Q1Approx, &NetworkConfig::default(), 10, 0).is_err());
        let r = estimate_coverage(Metric::Joint, &NetworkConfig::default(), 100, 0).unwrap();
        assert_eq!(r.metric, Metric::Joint);
        assert_eq!(r.trials, 100);
    }

    #[test]
    fn ci_formula() {
        let e = Estimate::from_counts(25, 100);
        assert!((e.ci95_halfwidth - 1.96 * (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_counts(100, 100).ci95_halfwidth, 0.0);
    }

    proptest! {
        #[test]
        fn sampler_sf_matches_assignment(d in 1e-9f64..=12.0, radius in prop::sample::select(vec![6.0, 10.0, 12.0, 15.0])) {
            let cfg = NetworkConfig { radius_km: radius, ..NetworkConfig::default() };
            let d = d.min(radius);
            let sampler = DeploymentSampler::new(&cfg).unwrap();
            prop_assert_eq!(sampler.sf_of(d), assign_sf(d, &cfg).unwrap().sf);
            prop_assert_eq!(sampler.sf_of(radius), assign_sf(radius, &cfg).unwrap().sf);
        }
    }
}
