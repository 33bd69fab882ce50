//! Randomized audits of the path-space results in [`crate::theory`].
//!
//! Each audit draws random channels and beams, evaluates a claim on every
//! draw and counts the failures. The `theory-audit` command and the test
//! suites both go through these functions.

use num_complex::Complex;
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::codebook::PhaseSet;
use crate::error::{Error, Result};
use crate::geometry::{synth_interference_matrix, ArrayGeometry, InterferenceChannel, InterferencePath};
use crate::measurement::{measure_interference, Interferer};
use crate::orchestrator::{random_beam, InterfererPolicy};
use crate::scalar::Real;
use crate::theory::{
    asymptotics_medians, build_projection, check_bounds, check_prop1_condition, expected_interference_closed_form, pi_norm_asymptotics,
};

/// `l` paths with gains of magnitude in `[0.2, 1]`, uniform phases, and
/// receive/transmit azimuths uniform in `[0, π]`.
pub fn random_interference_channel<T: Real>(m: usize, l: usize, rng: &mut dyn RngCore) -> Result<InterferenceChannel<T>> {
    if l == 0 {
        return Err(Error::InvalidParameter("a channel needs at least one path".into()));
    }
    let geom = ArrayGeometry::<T>::half_wavelength(m)?;
    let pi = std::f64::consts::PI;
    let paths = (0..l)
        .map(|_| {
            let mag: f64 = rng.random_range(0.2..=1.0);
            let ph: f64 = rng.random_range(-pi..pi);
            InterferencePath {
                gain: Complex::from_polar(T::lit(mag), T::lit(ph)),
                rx_azimuth: T::lit(rng.random_range(0.0..=pi)),
                rx_elevation: T::FRAC_PI_2(),
                tx_azimuth: T::lit(rng.random_range(0.0..=pi)),
                tx_elevation: T::FRAC_PI_2(),
            }
        })
        .collect();
    InterferenceChannel::new(paths, geom, geom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloRow {
    pub instance: usize,
    pub paths: usize,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub rel_error: f64,
}

/// Sample mean of `|wᴴHf|²` over `samples` random-phase beams `f` against
/// the closed form, one row per random `(w, H)` instance. Path counts cycle
/// through `path_counts`.
pub fn closed_form_vs_monte_carlo<T: Real>(
    instances: usize,
    m: usize,
    path_counts: &[usize],
    samples: usize,
    phase_set: PhaseSet,
    rng: &mut dyn RngCore,
) -> Result<Vec<MonteCarloRow>> {
    if path_counts.is_empty() {
        return Err(Error::Empty("path count list"));
    }
    let policy = InterfererPolicy::<T>::RandomBeam { m, phase_set };
    (0..instances)
        .map(|instance| {
            let l = path_counts[instance % path_counts.len()];
            let ch = random_interference_channel::<T>(m, l, rng)?;
            let w = random_beam::<T>(m, phase_set, rng);
            let closed = expected_interference_closed_form(&build_projection(&w, &ch)?).as_f64();
            let h = synth_interference_matrix(&ch);
            let draws = measure_interference(&w, &[Interferer { matrix: &h, source: &policy }], samples, T::zero(), rng)?;
            let mc = draws.iter().map(|x| x.as_f64()).sum::<f64>() / samples as f64;
            Ok(MonteCarloRow { instance, paths: l, closed_form: closed, monte_carlo: mc, rel_error: (mc - closed).abs() / closed })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prop1Report {
    pub pairs: usize,
    /// Pairs where the sufficient condition held.
    pub condition_met: usize,
    /// Of those, pairs where the expected interference was not ordered.
    pub violations: usize,
    /// Pairs skipped because `I + Π` was numerically singular.
    pub degenerate: usize,
}

/// Random beam pairs on a shared random channel with `1..=max_paths` paths.
pub fn prop1_audit<T: Real>(pairs: usize, m: usize, max_paths: usize, phase_set: PhaseSet, rng: &mut dyn RngCore) -> Result<Prop1Report> {
    let mut report = Prop1Report { pairs, condition_met: 0, violations: 0, degenerate: 0 };
    for _ in 0..pairs {
        let l = rng.random_range(1..=max_paths);
        let ch = random_interference_channel::<T>(m, l, rng)?;
        let w = random_beam::<T>(m, phase_set, rng);
        let w2 = random_beam::<T>(m, phase_set, rng);
        match check_prop1_condition(&build_projection(&w, &ch)?, &build_projection(&w2, &ch)?) {
            Ok((true, ordered)) => {
                report.condition_met += 1;
                if !ordered {
                    report.violations += 1;
                }
            }
            Ok((false, _)) => {}
            Err(Error::NotPositiveDefinite(_)) => report.degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundsAuditReport {
    pub projections: usize,
    pub weyl_violations: usize,
    pub rayleigh_violations: usize,
}

pub fn bounds_audit<T: Real>(
    projections: usize,
    m: usize,
    max_paths: usize,
    phase_set: PhaseSet,
    rng: &mut dyn RngCore,
) -> Result<BoundsAuditReport> {
    let mut report = BoundsAuditReport { projections, weyl_violations: 0, rayleigh_violations: 0 };
    for _ in 0..projections {
        let l = rng.random_range(1..=max_paths);
        let ch = random_interference_channel::<T>(m, l, rng)?;
        let w = random_beam::<T>(m, phase_set, rng);
        let b = check_bounds(&build_projection(&w, &ch)?);
        report.weyl_violations += usize::from(!b.weyl_holds());
        report.rayleigh_violations += usize::from(!b.rayleigh_holds());
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsSummary {
    pub m: usize,
    pub median_pi_norm: f64,
    pub median_eta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryAudit {
    pub monte_carlo_max_rel_error: f64,
    pub monte_carlo: Vec<MonteCarloRow>,
    pub prop1: Prop1Report,
    pub bounds: BoundsAuditReport,
    pub asymptotics: Vec<AsymptoticsSummary>,
}

impl TheoryAudit {
    /// Count of failed checks, with Monte-Carlo rows judged at `mc_tolerance`.
    pub fn violations(&self, mc_tolerance: f64) -> usize {
        self.monte_carlo.iter().filter(|r| !(r.rel_error <= mc_tolerance)).count()
            + self.prop1.violations
            + self.bounds.weyl_violations
            + self.bounds.rayleigh_violations
    }
}

/// Sizes for [`run_theory_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditSizes {
    pub m: usize,
    pub mc_instances: usize,
    pub mc_samples: usize,
    pub pairs: usize,
    pub projections: usize,
    pub asymptotic_trials: usize,
}

impl Default for AuditSizes {
    fn default() -> Self {
        Self { m: 16, mc_instances: 50, mc_samples: 100_000, pairs: 10_000, projections: 10_000, asymptotic_trials: 200 }
    }
}

pub fn run_theory_audit<T: Real>(sizes: AuditSizes, phase_set: PhaseSet, rng: &mut dyn RngCore) -> Result<TheoryAudit> {
    let monte_carlo = closed_form_vs_monte_carlo::<T>(sizes.mc_instances, sizes.m, &[1, 2, 3], sizes.mc_samples, phase_set, rng)?;
    let prop1 = prop1_audit::<T>(sizes.pairs, sizes.m, 4, phase_set, rng)?;
    let bounds = bounds_audit::<T>(sizes.projections, sizes.m, 4, phase_set, rng)?;
    let rows = pi_norm_asymptotics::<T>(&[16, 64, 256], 2, sizes.asymptotic_trials, rng)?;
    let asymptotics = asymptotics_medians(&rows)
        .into_iter()
        .map(|(m, median_pi_norm, median_eta_prime)| AsymptoticsSummary { m, median_pi_norm, median_eta_prime })
        .collect();
    Ok(TheoryAudit {
        monte_carlo_max_rel_error: monte_carlo.iter().map(|r| r.rel_error).fold(0.0, f64::max),
        monte_carlo,
        prop1,
        bounds,
        asymptotics,
    })
}
