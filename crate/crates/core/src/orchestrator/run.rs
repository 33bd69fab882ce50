use std::sync::Arc;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cache::{CrossBsAudit, MeasurementCache};
use super::environment::MeasuredEnvironment;
use super::policy::InterfererPolicy;
use crate::codebook::{beamsteering_codebook, Codebook, PhaseSet};
use crate::config::{PolicyKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::learning::train::{initial_beam, measurement_plan, TrainingLogRow};
use crate::learning::{agent_step, cluster_users, AgentConfig, BeamAgent, UserCluster};
use crate::measurement::Interferer;
use crate::scalar::Real;
use crate::scenario::Scenario;

/// Cache appends an agent produced during one step, keyed by phase indices.
type Pending<T> = Vec<(Vec<u16>, Vec<T>)>;
/// A started agent with its private random stream, its baseline log row and its pending appends.
type Started<T> = Result<((BeamAgent<T>, ChaCha8Rng), TrainingLogRow, Pending<T>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Receive,
    Transmit,
}

/// Who receives in which slot. Slot `s` belongs to BS `s mod K`, which
/// measures while every other BS transmits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrchestrationSchedule {
    pub bs_count: usize,
    /// Agent steps per beam; every BS gets one receive slot per round.
    pub rounds: usize,
    pub p_measurements: usize,
    pub q_measurements: usize,
    pub order: &'static str,
}

impl OrchestrationSchedule {
    pub fn new(bs_count: usize, cfg: &ScenarioConfig) -> Self {
        Self { bs_count, rounds: cfg.budget, p_measurements: cfg.p_measurements, q_measurements: cfg.q_measurements, order: "round-robin" }
    }

    pub fn slot_count(&self) -> usize {
        self.rounds * self.bs_count
    }

    pub fn receiver(&self, slot: usize) -> usize {
        slot % self.bs_count
    }

    pub fn role(&self, bs: usize, slot: usize) -> Role {
        if self.receiver(slot) == bs {
            Role::Receive
        } else {
            Role::Transmit
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearningOutcome<T> {
    /// Learned codebook per BS (beam `n` serves cluster `n`).
    pub codebooks: Vec<Codebook<T>>,
    /// The beamsteering starting point of each agent.
    pub initial_codebooks: Vec<Codebook<T>>,
    /// Clusters per BS; members index into that cell's user list.
    pub clusters: Vec<Vec<UserCluster>>,
    /// Training log per BS, all beams, in execution order.
    pub logs: Vec<Vec<TrainingLogRow>>,
    pub schedule: OrchestrationSchedule,
    pub cross_bs_violations: usize,
}

/// Stream ids keep every RNG consumer independent of the others and of the
/// worker count.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn cluster_stream(bs: usize) -> u64 {
    1 + bs as u64
}

pub(crate) fn agent_stream(bs: usize, beam: usize) -> u64 {
    ((bs as u64 + 1) << 32) | beam as u64
}

/// Clusters of every cell, using each BS's own sensing codebook.
pub fn cluster_all<T: Real>(scenario: &Scenario<T>, cfg: &ScenarioConfig) -> Result<Vec<Vec<UserCluster>>> {
    let ps = PhaseSet::new(cfg.r)?;
    let sensing = beamsteering_codebook(&scenario.geometry, cfg.sensing_beams, ps)?;
    (0..scenario.bs_count())
        .map(|k| {
            let hs: Vec<&[Complex<T>]> = scenario.cell(k).users.iter().map(|u| u.h.as_slice()).collect();
            let mut rng = stream_rng(cfg.seed, cluster_stream(k));
            cluster_users(&hs, cfg.n, &sensing, cfg.kmeans_iterations, &mut rng)
        })
        .collect()
}

struct BsState<T> {
    clusters: Vec<UserCluster>,
    agents: Vec<(BeamAgent<T>, ChaCha8Rng)>,
    cache: MeasurementCache<T>,
    steering: Arc<Codebook<T>>,
    initial: Codebook<T>,
    log: Vec<TrainingLogRow>,
}

fn live_codebook<T: Real>(bs: &BsState<T>) -> Result<Arc<Codebook<T>>> {
    Codebook::new(bs.agents.iter().map(|(a, _)| a.state().clone()).collect()).map(Arc::new)
}

/// Every BS learns its codebook from its own power measurements only.
///
/// BSs take turns (round-robin); within a BS the `N` beam agents step in
/// parallel, and the interference samples they gather are appended to that
/// BS's cache in agent order after the round, so results do not depend on
/// thread timing. What the other BSs transmit while BS `k` measures depends
/// on `cfg.policy`: random beams, their fixed beamsteering codebooks, or
/// (co-learning) whatever beams their agents currently hold.
pub fn run_decentralized_learning<T: Real>(scenario: &Scenario<T>, cfg: &ScenarioConfig) -> Result<LearningOutcome<T>> {
    cfg.validate()?;
    let k_count = scenario.bs_count();
    if k_count < 2 {
        return Err(Error::InvalidParameter(format!("decentralized learning needs at least 2 BSs, got {k_count}")));
    }
    if scenario.num_antennas() != cfg.m {
        return Err(Error::DimensionMismatch { expected: cfg.m, actual: scenario.num_antennas() });
    }
    for k in 0..k_count {
        for q in (0..k_count).filter(|&q| q != k) {
            if scenario.link(q, k).is_none() {
                return Err(Error::InvalidParameter(format!("scenario lacks the interference link {q} -> {k}")));
            }
        }
    }
    let ps = PhaseSet::new(cfg.r)?;
    let plan = measurement_plan::<T>(cfg);
    let agent_cfg = AgentConfig::from_scenario(cfg, cfg.budget);
    let audit = CrossBsAudit::default();
    let schedule = OrchestrationSchedule::new(k_count, cfg);
    let steering = Arc::new(beamsteering_codebook(&scenario.geometry, cfg.n, ps)?);
    let clusters = cluster_all(scenario, cfg)?;

    let user_sets: Vec<Vec<Vec<&[Complex<T>]>>> = clusters
        .iter()
        .enumerate()
        .map(|(k, cs)| {
            let users = &scenario.cell(k).users;
            cs.iter().map(|c| c.members.iter().map(|&i| users[i].h.as_slice()).collect()).collect()
        })
        .collect();

    let mut states: Vec<BsState<T>> = Vec::with_capacity(k_count);
    for (k, cs) in clusters.into_iter().enumerate() {
        let initial = Codebook::new(user_sets[k].iter().map(|users| initial_beam(users, &steering)).collect::<Result<Vec<_>>>()?)?;
        states.push(BsState {
            clusters: cs,
            agents: Vec::new(),
            cache: MeasurementCache::new(k, audit.clone()),
            steering: steering.clone(),
            initial,
            log: Vec::new(),
        });
    }

    let policy_for = |states: &[BsState<T>], q: usize| -> Result<InterfererPolicy<T>> {
        Ok(match cfg.policy {
            PolicyKind::Random => InterfererPolicy::RandomBeam { m: cfg.m, phase_set: ps },
            PolicyKind::Dft => InterfererPolicy::FixedCodebookSweep(states[q].steering.clone()),
            PolicyKind::Colearn if states[q].agents.is_empty() => {
                // not started yet: it transmits its initial codebook
                InterfererPolicy::CoLearning(Arc::new(states[q].initial.clone()))
            }
            PolicyKind::Colearn => InterfererPolicy::CoLearning(live_codebook(&states[q])?),
        })
    };

    for round in 0..cfg.budget {
        for k in 0..k_count {
            let policies: Vec<(usize, InterfererPolicy<T>)> =
                (0..k_count).filter(|&q| q != k).map(|q| Ok((q, policy_for(&states, q)?))).collect::<Result<_>>()?;
            let interferers: Vec<Interferer<'_, T>> = policies
                .iter()
                .map(|(q, p)| Interferer { matrix: &scenario.link(*q, k).expect("checked above").matrix, source: p })
                .collect();
            let st = &mut states[k];
            let cache = &st.cache;
            let users = &user_sets[k];

            // (log row, pending cache appends) per agent, in agent order
            let results: Vec<Result<(TrainingLogRow, Pending<T>)>> = if round == 0 {
                let started: Vec<Started<T>> = st
                    .initial
                    .beams()
                    .par_iter()
                    .enumerate()
                    .map(|(n, beam)| {
                        let mut rng = stream_rng(cfg.seed, agent_stream(k, n));
                        let mut env = MeasuredEnvironment::new(k, &users[n], &interferers, plan, Some(cache))?;
                        let agent = BeamAgent::start(beam.clone(), &mut env, agent_cfg.clone(), &mut rng)?;
                        let row = TrainingLogRow::baseline(n, &agent);
                        Ok(((agent, rng), row, env.take_pending()))
                    })
                    .collect();
                let mut out = Vec::with_capacity(started.len());
                for s in started {
                    let (agent, row, pending) = s?;
                    st.agents.push(agent);
                    out.push(Ok((row, pending)));
                }
                out
            } else {
                st.agents
                    .par_iter_mut()
                    .enumerate()
                    .map(|(n, (agent, rng))| {
                        let mut env = MeasuredEnvironment::new(k, &users[n], &interferers, plan, Some(cache))?;
                        let rec = agent_step(agent, &mut env, rng)?;
                        Ok((TrainingLogRow::from_step(n, &rec), env.take_pending()))
                    })
                    .collect()
            };
            for r in results {
                let (row, pending) = r?;
                for (key, samples) in pending {
                    st.cache.append_key(k, &key, &samples)?;
                }
                st.log.push(row);
            }
        }
    }

    let mut codebooks = Vec::with_capacity(k_count);
    let mut initial_codebooks = Vec::with_capacity(k_count);
    let mut all_clusters = Vec::with_capacity(k_count);
    let mut logs = Vec::with_capacity(k_count);
    for st in states {
        codebooks.push(Codebook::new(st.agents.iter().map(|(a, _)| a.best().beam.clone()).collect())?);
        initial_codebooks.push(st.initial);
        all_clusters.push(st.clusters);
        logs.push(st.log);
    }
    Ok(LearningOutcome { codebooks, initial_codebooks, clusters: all_clusters, logs, schedule, cross_bs_violations: audit.violations() })
}
