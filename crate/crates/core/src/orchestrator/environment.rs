use num_complex::Complex;
use rand::RngCore;

use super::cache::MeasurementCache;
use crate::codebook::QuantizedBeam;
use crate::config::CacheMode;
use crate::error::{Error, Result};
use crate::learning::{BeamEnvironment, BeamEstimate};
use crate::measurement::{
    estimate_expected_interference, estimate_gain, measure_interference, measure_signal_plus_interference, sample_indices, Interferer,
    MeasurementSet,
};
use crate::scalar::Real;

/// Burst sizes and noise for one beam evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPlan<T> {
    pub p: usize,
    pub q: usize,
    /// Users drawn (without replacement) from the cluster per evaluation.
    pub sample_size: usize,
    pub noise_power: T,
    pub cache_mode: CacheMode,
}

/// Evaluates beams for one agent purely through simulated power
/// measurements at BS `bs`.
///
/// New interference samples are not written to the cache directly; they are
/// queued and handed back by [`MeasuredEnvironment::take_pending`] so the
/// caller decides when (and in what order) they become visible to other
/// agents.
pub struct MeasuredEnvironment<'a, T> {
    bs: usize,
    users: &'a [&'a [Complex<T>]],
    interferers: &'a [Interferer<'a, T>],
    plan: MeasurementPlan<T>,
    cache: Option<&'a MeasurementCache<T>>,
    pending: Vec<(Vec<u16>, Vec<T>)>,
}

impl<'a, T: Real> MeasuredEnvironment<'a, T> {
    pub fn new(
        bs: usize,
        users: &'a [&'a [Complex<T>]],
        interferers: &'a [Interferer<'a, T>],
        plan: MeasurementPlan<T>,
        cache: Option<&'a MeasurementCache<T>>,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::Empty("cluster"));
        }
        if plan.p == 0 || plan.q == 0 || plan.sample_size == 0 {
            return Err(Error::InvalidParameter("P, Q and the user sample size must be positive".into()));
        }
        Ok(Self { bs, users, interferers, plan, cache: if plan.cache_mode == CacheMode::Off { None } else { cache }, pending: Vec::new() })
    }

    pub fn take_pending(&mut self) -> Vec<(Vec<u16>, Vec<T>)> {
        std::mem::take(&mut self.pending)
    }

    /// Cached plus fresh interference samples for `w`.
    fn interference_samples(&mut self, w: &QuantizedBeam<T>, rng: &mut dyn RngCore) -> Result<Vec<T>> {
        let plan = self.plan;
        let Some(cache) = self.cache else {
            return measure_interference(w, self.interferers, plan.p, plan.noise_power, rng);
        };
        let mut samples = cache.lookup(self.bs, w)?;
        let fresh_count = match plan.cache_mode {
            CacheMode::TopUp => plan.p.saturating_sub(samples.len()),
            CacheMode::Replace | CacheMode::Off => plan.p,
        };
        if fresh_count > 0 {
            let fresh = measure_interference(w, self.interferers, fresh_count, plan.noise_power, rng)?;
            samples.extend_from_slice(&fresh);
            self.pending.push((w.indices().to_vec(), fresh));
        }
        Ok(samples)
    }

    pub fn measure(&mut self, w: &QuantizedBeam<T>, rng: &mut dyn RngCore) -> Result<MeasurementSet<T>> {
        let interference = self.interference_samples(w, rng)?;
        let picks = sample_indices(self.users.len(), self.plan.sample_size, rng);
        let mut si = Vec::with_capacity(picks.len() * self.plan.q);
        for i in picks {
            si.extend(measure_signal_plus_interference(w, self.users[i], self.interferers, self.plan.q, self.plan.noise_power, rng)?);
        }
        MeasurementSet::new(interference, si)
    }
}

impl<T: Real> BeamEnvironment<T> for MeasuredEnvironment<'_, T> {
    fn evaluate(&mut self, beam: &QuantizedBeam<T>, rng: &mut dyn RngCore) -> Result<BeamEstimate<T>> {
        let ms = self.measure(beam, rng)?;
        // every sampled user contributes Q samples, so mean(SI) − mean(I)
        // is the cluster-average gain estimate
        let gain = estimate_gain(&ms)?.raw;
        let interference = estimate_expected_interference(&ms, gain)?;
        Ok(BeamEstimate { gain, interference })
    }
}
