use num_complex::Complex;
use rand::RngCore;
use serde::Serialize;

use super::agent::{agent_step, AgentConfig, BeamAgent, BeamEstimate, StepRecord};
use crate::codebook::{beamforming_gain, Codebook, QuantizedBeam};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::measurement::Interferer;
use crate::orchestrator::cache::{CrossBsAudit, MeasurementCache};
use crate::orchestrator::environment::{MeasuredEnvironment, MeasurementPlan};
use crate::scalar::Real;

/// One row of the training log CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingLogRow {
    pub step: usize,
    pub beam_index: usize,
    pub gain_est: f64,
    pub interf_est: f64,
    pub reward: i8,
    pub epsilon: f64,
    pub best_gain: f64,
    pub best_interf: f64,
}

impl TrainingLogRow {
    pub fn from_step<T: Real>(beam_index: usize, rec: &StepRecord<T>) -> Self {
        Self {
            step: rec.step,
            beam_index,
            gain_est: rec.reward.gain.as_f64(),
            interf_est: rec.reward.interference.as_f64(),
            reward: rec.reward.reward,
            epsilon: rec.epsilon,
            best_gain: rec.best_gain.as_f64(),
            best_interf: rec.best_interference.as_f64(),
        }
    }
}

impl TrainingLogRow {
    /// Row for step 1, the baseline measurement (logged with reward −1).
    pub fn baseline<T: Real>(beam_index: usize, agent: &BeamAgent<T>) -> Self {
        let best = agent.best();
        Self {
            step: 1,
            beam_index,
            gain_est: best.gain.as_f64(),
            interf_est: best.interference.as_f64(),
            reward: -1,
            epsilon: agent.config().epsilon(0),
            best_gain: best.gain.as_f64(),
            best_interf: best.interference.as_f64(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedBeam<T> {
    pub initial: QuantizedBeam<T>,
    pub best: QuantizedBeam<T>,
    pub best_estimate: BeamEstimate<T>,
    pub log: Vec<TrainingLogRow>,
}

/// The beam of `steering` with the highest average gain over `cluster`.
pub fn initial_beam<T: Real>(cluster: &[&[Complex<T>]], steering: &Codebook<T>) -> Result<QuantizedBeam<T>> {
    if cluster.is_empty() {
        return Err(Error::Empty("cluster"));
    }
    let mut best = 0;
    let mut best_gain = T::neg_infinity();
    for (n, b) in steering.beams().iter().enumerate() {
        let mut g = T::zero();
        for h in cluster {
            g += beamforming_gain(b, h)?;
        }
        if g > best_gain {
            best = n;
            best_gain = g;
        }
    }
    Ok(steering.beams()[best].clone())
}

pub fn measurement_plan<T: Real>(cfg: &ScenarioConfig) -> MeasurementPlan<T> {
    MeasurementPlan {
        p: cfg.p_measurements,
        q: cfg.q_measurements,
        sample_size: cfg.cluster_sample_size,
        noise_power: T::lit(cfg.measurement_noise),
        cache_mode: cfg.cache_mode,
    }
}

/// Learns one beam for `cluster` against fixed interferer behaviour.
///
/// The agent starts from the best beam of `steering` for the cluster. Step 1
/// of the budget measures that beam as the baseline; the remaining steps
/// explore. The result is the agent's best record, so `budget = 1` returns
/// the initial beam.
pub fn train_beam<T: Real>(
    cluster: &[&[Complex<T>]],
    interferers: &[Interferer<'_, T>],
    steering: &Codebook<T>,
    budget: usize,
    cfg: &ScenarioConfig,
    beam_index: usize,
    rng: &mut dyn RngCore,
) -> Result<TrainedBeam<T>> {
    if budget == 0 {
        return Err(Error::InvalidParameter("training budget must be at least 1".into()));
    }
    let initial = initial_beam(cluster, steering)?;
    let cache = MeasurementCache::new(0, CrossBsAudit::default());
    let plan = measurement_plan(cfg);
    let agent_cfg = AgentConfig::from_scenario(cfg, budget);

    let mut env = MeasuredEnvironment::new(0, cluster, interferers, plan, Some(&cache))?;
    let mut agent = BeamAgent::start(initial.clone(), &mut env, agent_cfg, rng)?;
    commit(&cache, &mut env)?;
    let mut log = Vec::with_capacity(budget);
    log.push(TrainingLogRow::baseline(beam_index, &agent));
    for _ in 1..budget {
        let rec = agent_step(&mut agent, &mut env, rng)?;
        commit(&cache, &mut env)?;
        log.push(TrainingLogRow::from_step(beam_index, &rec));
    }
    let best = agent.best();
    Ok(TrainedBeam {
        initial,
        best: best.beam.clone(),
        best_estimate: BeamEstimate { gain: best.gain, interference: best.interference },
        log,
    })
}

fn commit<T: Real>(cache: &MeasurementCache<T>, env: &mut MeasuredEnvironment<'_, T>) -> Result<()> {
    for (key, samples) in env.take_pending() {
        cache.append_key(cache.owner(), &key, &samples)?;
    }
    Ok(())
}
