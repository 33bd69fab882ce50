//! Per-beam learning agent.
//!
//! The agent walks the phase-configuration space one phase step at a time.
//! Every new beam is handed to a [`BeamEnvironment`], which returns only the
//! two scalar estimates (cluster gain, expected interference) a real BS
//! could obtain from power measurements. The binary reward compares them to
//! the previous beam's estimates.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use serde::Serialize;

use super::value::{MlpEstimator, TableEstimator, Transition, ValueFunction};
use crate::codebook::QuantizedBeam;
use crate::config::{EstimatorKind, RewardKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Steps one phase index: action `2m` increments antenna `m`, `2m + 1`
/// decrements it, both modulo `levels`.
pub fn apply_action(state: &[u16], action: usize, levels: usize) -> Result<Vec<u16>> {
    let actions = 2 * state.len();
    if action >= actions {
        return Err(Error::InvalidAction { action, actions });
    }
    let levels = levels as u16;
    let mut next = state.to_vec();
    let m = action / 2;
    next[m] = if action.is_multiple_of(2) { (next[m] + 1) % levels } else { (next[m] + levels - 1) % levels };
    Ok(next)
}

/// What a BS can learn about one beam from its own measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamEstimate<T> {
    /// Cluster-average beamforming gain (may be negative from noise).
    pub gain: T,
    /// Expected interference power.
    pub interference: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRecord<T> {
    pub reward: i8,
    pub gain: T,
    pub interference: T,
    /// Gain-to-interference ratio; `+∞` when no interference was measured.
    pub zeta: T,
}

fn zeta<T: Real>(e: BeamEstimate<T>) -> T {
    if e.interference > T::zero() {
        e.gain / e.interference
    } else {
        T::infinity()
    }
}

/// `+1` iff interference strictly fell and gain strictly rose ([`RewardKind::Joint`]),
/// or iff the gain-to-interference ratio strictly rose ([`RewardKind::Ratio`]).
pub fn compute_reward<T: Real>(current: BeamEstimate<T>, previous: BeamEstimate<T>, kind: RewardKind) -> RewardRecord<T> {
    let z = zeta(current);
    let better = match kind {
        RewardKind::Joint => current.interference < previous.interference && current.gain > previous.gain,
        RewardKind::Ratio => z > zeta(previous),
    };
    RewardRecord { reward: if better { 1 } else { -1 }, gain: current.gain, interference: current.interference, zeta: z }
}

/// Source of beam evaluations. Implementations may only expose what power
/// measurements reveal.
pub trait BeamEnvironment<T> {
    fn evaluate(&mut self, beam: &QuantizedBeam<T>, rng: &mut dyn RngCore) -> Result<BeamEstimate<T>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps over which epsilon decays linearly to `epsilon_end`.
    pub epsilon_decay_steps: usize,
    pub discount: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub reward: RewardKind,
    pub estimator: EstimatorKind,
    /// Jump back to the best beam every this many steps (0 disables).
    pub restart_interval: usize,
}

impl AgentConfig {
    pub fn from_scenario(cfg: &ScenarioConfig, budget: usize) -> Self {
        Self {
            epsilon_start: cfg.epsilon_start,
            epsilon_end: cfg.epsilon_end,
            epsilon_decay_steps: (cfg.epsilon_decay_fraction * budget as f64).round() as usize,
            discount: cfg.discount,
            learning_rate: cfg.learning_rate,
            replay_capacity: cfg.replay_capacity,
            batch_size: cfg.batch_size,
            reward: cfg.reward,
            estimator: cfg.estimator,
            restart_interval: cfg.restart_interval,
        }
    }

    pub fn epsilon(&self, step: usize) -> f64 {
        if step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestRecord<T> {
    pub beam: QuantizedBeam<T>,
    pub gain: T,
    pub interference: T,
}

#[derive(Debug, Clone)]
pub struct BeamAgent<T> {
    state: QuantizedBeam<T>,
    previous: BeamEstimate<T>,
    value: ValueFunction<T>,
    replay: VecDeque<Transition>,
    best: BestRecord<T>,
    steps: usize,
    cfg: AgentConfig,
}

/// Everything that happened in one [`agent_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    /// 1-based step count.
    pub step: usize,
    pub action: usize,
    pub epsilon: f64,
    pub reward: RewardRecord<T>,
    pub best_gain: T,
    pub best_interference: T,
    pub best_updated: bool,
}

impl<T: Real> BeamAgent<T> {
    /// Agent sitting on `initial`, whose measured estimate becomes the first
    /// comparison baseline and the initial best record.
    pub fn new(initial: QuantizedBeam<T>, baseline: BeamEstimate<T>, cfg: AgentConfig, rng: &mut dyn RngCore) -> Result<Self> {
        if cfg.replay_capacity == 0 || cfg.batch_size == 0 {
            return Err(Error::InvalidParameter("replay capacity and batch size must be positive".into()));
        }
        let m = initial.num_antennas();
        let ps = initial.phase_set();
        let value = match cfg.estimator {
            EstimatorKind::Mlp => ValueFunction::Mlp(MlpEstimator::new(m, ps.levels(), rng)?),
            EstimatorKind::Table => ValueFunction::Table(TableEstimator::new(m, ps.bits())?),
        };
        Ok(Self {
            best: BestRecord { beam: initial.clone(), gain: baseline.gain, interference: baseline.interference },
            state: initial,
            previous: baseline,
            value,
            replay: VecDeque::with_capacity(cfg.replay_capacity),
            // measuring the baseline was step 1
            steps: 1,
            cfg,
        })
    }

    /// Measures `initial` in `env` and builds the agent on it.
    pub fn start(initial: QuantizedBeam<T>, env: &mut dyn BeamEnvironment<T>, cfg: AgentConfig, rng: &mut dyn RngCore) -> Result<Self> {
        let value_seed: u64 = rng.random();
        let baseline = env.evaluate(&initial, rng)?;
        let mut value_rng = rand_chacha::ChaCha8Rng::seed_from_u64(value_seed);
        Self::new(initial, baseline, cfg, &mut value_rng)
    }

    pub fn state(&self) -> &QuantizedBeam<T> {
        &self.state
    }

    pub fn best(&self) -> &BestRecord<T> {
        &self.best
    }

    /// Steps taken so far, counting the baseline measurement.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn value(&self) -> &ValueFunction<T> {
        &self.value
    }

    pub fn value_mut(&mut self) -> &mut ValueFunction<T> {
        &mut self.value
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon(self.steps)
    }

    /// ε-greedy choice; greedy ties go to the lowest action id.
    pub fn select_action(&self, epsilon: f64, rng: &mut dyn RngCore) -> usize {
        let actions = 2 * self.state.num_antennas();
        if rng.random::<f64>() < epsilon {
            return rng.random_range(0..actions);
        }
        let q = self.value.q_values(self.state.indices());
        let mut best = 0;
        for (a, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = a;
            }
        }
        best
    }

    fn learn(&mut self, transition: Transition, rng: &mut dyn RngCore) {
        if self.replay.len() == self.cfg.replay_capacity {
            self.replay.pop_front();
        }
        self.replay.push_back(transition);
        let len = self.replay.len();
        let batch: Vec<&Transition> = (0..self.cfg.batch_size.min(len)).map(|_| &self.replay[rng.random_range(0..len)]).collect();
        self.value.td_update(&batch, T::lit(self.cfg.discount), T::lit(self.cfg.learning_rate));
    }
}

/// One interaction: pick an action, measure the resulting beam, reward it
/// against the previous beam, learn, and update the best record.
///
/// The best record only moves on a `+1` reward and only to a beam whose
/// estimates dominate it, so its gain never falls and its interference never
/// rises.
pub fn agent_step<T: Real>(agent: &mut BeamAgent<T>, env: &mut dyn BeamEnvironment<T>, rng: &mut dyn RngCore) -> Result<StepRecord<T>> {
    let epsilon = agent.epsilon();
    let action = agent.select_action(epsilon, rng);
    let ps = agent.state.phase_set();
    let next_idx = apply_action(agent.state.indices(), action, ps.levels())?;
    let next = QuantizedBeam::from_indices(next_idx, ps)?;
    let estimate = env.evaluate(&next, rng)?;
    let reward = compute_reward(estimate, agent.previous, agent.cfg.reward);

    agent.learn(
        Transition { state: agent.state.indices().to_vec(), action, reward: f64::from(reward.reward), next_state: next.indices().to_vec() },
        rng,
    );

    // The stored record can be stale: co-learning neighbours keep changing
    // their beams, so a candidate must also beat the record re-measured now.
    let best_updated = reward.reward == 1 && estimate.gain > agent.best.gain && estimate.interference < agent.best.interference && {
        let now = env.evaluate(&agent.best.beam, rng)?;
        estimate.gain > now.gain && estimate.interference < now.interference
    };
    if best_updated {
        agent.best = BestRecord { beam: next.clone(), gain: estimate.gain, interference: estimate.interference };
    }
    agent.state = next;
    agent.previous = estimate;
    agent.steps += 1;

    let restart = agent.cfg.restart_interval;
    if restart > 0 && agent.steps.is_multiple_of(restart) && agent.state != agent.best.beam {
        agent.state = agent.best.beam.clone();
        agent.previous = BeamEstimate { gain: agent.best.gain, interference: agent.best.interference };
    }

    Ok(StepRecord {
        step: agent.steps,
        action,
        epsilon,
        reward,
        best_gain: agent.best.gain,
        best_interference: agent.best.interference,
        best_updated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::PhaseSet;
    use rand_chacha::ChaCha8Rng;

    fn est(gain: f64, interference: f64) -> BeamEstimate<f64> {
        BeamEstimate { gain, interference }
    }

    #[test]
    fn reward_truth_table() {
        let r = |g0, i0, g1, i1| compute_reward(est(g1, i1), est(g0, i0), RewardKind::Joint).reward;
        assert_eq!(r(2.0, 5.0, 3.0, 4.0), 1);
        assert_eq!(r(2.0, 5.0, 2.0, 4.0), -1);
        assert_eq!(r(2.0, 4.0, 3.0, 5.0), -1);
        assert_eq!(r(2.0, 4.0, 3.0, 4.0), -1);
        assert_eq!(r(3.0, 4.0, 2.0, 5.0), -1);
    }

    #[test]
    fn ratio_reward() {
        let rec = compute_reward(est(3.0, 2.0), est(2.0, 1.0), RewardKind::Ratio);
        assert_eq!(rec.reward, -1);
        assert_eq!(rec.zeta, 1.5);
        assert_eq!(compute_reward(est(3.0, 1.0), est(2.0, 1.0), RewardKind::Ratio).reward, 1);
    }

    #[test]
    fn inverse_and_wrapping_actions() {
        let s = vec![0u16, 3, 1];
        let up = apply_action(&s, 2, 4).unwrap();
        assert_eq!(up, vec![0, 0, 1]);
        assert_eq!(apply_action(&up, 3, 4).unwrap(), s);
        let mut t = s.clone();
        for _ in 0..4 {
            t = apply_action(&t, 4, 4).unwrap();
        }
        assert_eq!(t, s);
        assert!(matches!(apply_action(&s, 6, 4), Err(Error::InvalidAction { action: 6, actions: 6 })));
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = AgentConfig::from_scenario(&ScenarioConfig::default(), 100);
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(25) - 0.525).abs() < 1e-12);
        assert_eq!(cfg.epsilon(50), 0.05);
        assert_eq!(cfg.epsilon(99), 0.05);
    }

    #[test]
    fn greedy_follows_table() {
        let cfg = AgentConfig { estimator: EstimatorKind::Table, ..AgentConfig::from_scenario(&ScenarioConfig::default(), 10) };
        let ps = PhaseSet::new(2).unwrap();
        let beam = QuantizedBeam::<f64>::from_indices(vec![0, 1, 2], ps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = BeamAgent::new(beam, est(1.0, 1.0), cfg, &mut rng).unwrap();
        match agent.value_mut() {
            ValueFunction::Table(t) => t.set(&[0, 1, 2], 3, 5.0),
            ValueFunction::Mlp(_) => unreachable!(),
        }
        for _ in 0..10 {
            assert_eq!(agent.select_action(0.0, &mut rng), 3);
        }
    }
}
