use codebook_learn::audit::random_interference_channel;
use codebook_learn::codebook::{beamforming_gain, beamsteering_codebook, PhaseSet, QuantizedBeam};
use codebook_learn::config::{RewardKind, ScenarioConfig};
use codebook_learn::geometry::{array_response, synth_interference_matrix, ArrayGeometry};
use codebook_learn::learning::cluster::kmeans;
use codebook_learn::learning::*;
use codebook_learn::linalg::CMatrix;
use codebook_learn::measurement::Interferer;
use codebook_learn::orchestrator::InterfererPolicy;
use codebook_learn::theory::{build_projection, expected_interference_closed_form};
use codebook_learn::Result;
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn est(gain: f64, interference: f64) -> BeamEstimate<f64> {
    BeamEstimate { gain, interference }
}

#[test]
fn joint_reward_truth_table() {
    // every ordering of (gain, interference) against the previous beam
    for dg in [-1.0, 0.0, 1.0] {
        for di in [-1.0, 0.0, 1.0] {
            let r = compute_reward(est(5.0 + dg, 5.0 + di), est(5.0, 5.0), RewardKind::Joint);
            let expect = if dg > 0.0 && di < 0.0 { 1 } else { -1 };
            assert_eq!(r.reward, expect, "Δgain {dg}, Δinterference {di}");
        }
    }
}

#[test]
fn ratio_reward_uses_zeta() {
    let r = compute_reward(est(4.0, 0.0), est(1.0, 1.0), RewardKind::Ratio);
    assert_eq!((r.reward, r.zeta), (1, f64::INFINITY));
    assert_eq!(compute_reward(est(1.0, 2.0), est(1.0, 1.0), RewardKind::Ratio).reward, -1);
}

fn cluster(m: usize, azimuths: &[f64]) -> Vec<Vec<Complex64>> {
    let g = ArrayGeometry::<f64>::half_wavelength(m).unwrap();
    azimuths.iter().map(|&a| array_response(&g, a, FRAC_PI_2)).collect()
}

fn small_cfg() -> ScenarioConfig {
    ScenarioConfig { m: 8, p_measurements: 10, q_measurements: 10, ..Default::default() }
}

#[test]
fn best_record_is_monotone_in_logs() {
    let cfg = small_cfg();
    let users = cluster(8, &[1.0, 1.1, 1.2]);
    let refs: Vec<&[Complex64]> = users.iter().map(|u| u.as_slice()).collect();
    let mut r = rng(1);
    let ch = random_interference_channel::<f64>(8, 2, &mut r).unwrap();
    let h = synth_interference_matrix(&ch);
    let policy = InterfererPolicy::RandomBeam { m: 8, phase_set: PhaseSet::new(cfg.r).unwrap() };
    let steering = beamsteering_codebook(&ArrayGeometry::half_wavelength(8).unwrap(), 8, PhaseSet::new(cfg.r).unwrap()).unwrap();
    let out = train_beam(&refs, &[Interferer { matrix: &h, source: &policy }], &steering, 3000, &cfg, 0, &mut r).unwrap();
    assert_eq!(out.log.len(), 3000);
    for pair in out.log.windows(2) {
        assert!(pair[1].best_gain >= pair[0].best_gain);
        assert!(pair[1].best_interf <= pair[0].best_interf);
        assert_eq!(pair[1].step, pair[0].step + 1);
    }
    let last = out.log.last().unwrap();
    assert_eq!((last.best_gain, last.best_interf), (out.best_estimate.gain, out.best_estimate.interference));
}

#[test]
fn unit_budget_returns_initial_beam() {
    let cfg = small_cfg();
    let users = cluster(8, &[0.7]);
    let refs: Vec<&[Complex64]> = users.iter().map(|u| u.as_slice()).collect();
    let h = CMatrix::zeros(8, 8);
    let policy = InterfererPolicy::RandomBeam { m: 8, phase_set: PhaseSet::new(cfg.r).unwrap() };
    let steering = beamsteering_codebook(&ArrayGeometry::half_wavelength(8).unwrap(), 8, PhaseSet::new(cfg.r).unwrap()).unwrap();
    let itf = [Interferer { matrix: &h, source: &policy }];
    let out = train_beam(&refs, &itf, &steering, 1, &cfg, 0, &mut rng(2)).unwrap();
    assert_eq!(out.best, out.initial);
    assert_eq!(out.log.len(), 1);
    assert!(train_beam(&refs, &itf, &steering, 0, &cfg, 0, &mut rng(2)).is_err());
}

#[test]
fn interference_free_training_keeps_steering_gain() {
    let cfg = ScenarioConfig { m: 16, ..Default::default() };
    let users = cluster(16, &[1.3, 1.35, 1.4, 1.45]);
    let refs: Vec<&[Complex64]> = users.iter().map(|u| u.as_slice()).collect();
    let h = CMatrix::zeros(16, 16);
    let policy = InterfererPolicy::RandomBeam { m: 16, phase_set: PhaseSet::new(cfg.r).unwrap() };
    let steering = beamsteering_codebook(&ArrayGeometry::half_wavelength(16).unwrap(), 16, PhaseSet::new(cfg.r).unwrap()).unwrap();
    let best_steering =
        steering.beams().iter().map(|b| refs.iter().map(|u| beamforming_gain(b, u).unwrap()).sum::<f64>() / 4.0).fold(0.0, f64::max);
    let out = train_beam(&refs, &[Interferer { matrix: &h, source: &policy }], &steering, 5000, &cfg, 0, &mut rng(3)).unwrap();
    let learned = refs.iter().map(|u| beamforming_gain(&out.best, u).unwrap()).sum::<f64>() / 4.0;
    assert!(learned >= 0.9 * best_steering, "{learned} vs {best_steering}");
}

#[test]
fn training_is_reproducible() {
    let cfg = small_cfg();
    let users = cluster(8, &[2.0, 2.1]);
    let refs: Vec<&[Complex64]> = users.iter().map(|u| u.as_slice()).collect();
    let ch = random_interference_channel::<f64>(8, 1, &mut rng(4)).unwrap();
    let h = synth_interference_matrix(&ch);
    let policy = InterfererPolicy::RandomBeam { m: 8, phase_set: PhaseSet::new(cfg.r).unwrap() };
    let steering = beamsteering_codebook(&ArrayGeometry::half_wavelength(8).unwrap(), 8, PhaseSet::new(cfg.r).unwrap()).unwrap();
    let run = || train_beam(&refs, &[Interferer { matrix: &h, source: &policy }], &steering, 500, &cfg, 3, &mut rng(5)).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.best, b.best);
    assert_eq!(a.log, b.log);
    assert!(a.log.iter().all(|r| r.beam_index == 3));
}

/// Noise-free oracle: exact cluster gain and exact expected interference.
struct Oracle {
    users: Vec<Vec<Complex64>>,
    channel: codebook_learn::geometry::InterferenceChannel<f64>,
    calls: usize,
}

impl BeamEnvironment<f64> for Oracle {
    fn evaluate(&mut self, beam: &QuantizedBeam<f64>, _: &mut dyn RngCore) -> Result<BeamEstimate<f64>> {
        self.calls += 1;
        let gain = self.users.iter().map(|u| beamforming_gain(beam, u).unwrap()).sum::<f64>() / self.users.len() as f64;
        let interference = expected_interference_closed_form(&build_projection(beam, &self.channel)?);
        Ok(BeamEstimate { gain, interference })
    }
}

#[test]
fn agent_against_exact_oracle_improves_ratio() {
    let ps = PhaseSet::new(4).unwrap();
    let users = cluster(16, &[1.0, 1.05]);
    let mut r = rng(6);
    let channel = random_interference_channel::<f64>(16, 1, &mut r).unwrap();
    let mut env = Oracle { users, channel, calls: 0 };
    let g = ArrayGeometry::<f64>::half_wavelength(16).unwrap();
    let steering = beamsteering_codebook(&g, 16, ps).unwrap();
    let refs: Vec<&[Complex64]> = env.users.iter().map(|u| u.as_slice()).collect();
    let start = initial_beam(&refs, &steering).unwrap();
    let cfg = AgentConfig::from_scenario(&ScenarioConfig::default(), 4000);
    let mut agent = BeamAgent::start(start, &mut env, cfg, &mut r).unwrap();
    let first = agent.best().clone();
    let mut updates = 0;
    for _ in 1..4000 {
        let rec = agent_step(&mut agent, &mut env, &mut r).unwrap();
        if rec.best_updated {
            updates += 1;
            assert_eq!(rec.reward.reward, 1);
        }
    }
    let best = agent.best();
    assert!(updates > 0);
    assert!(best.gain > first.gain && best.interference < first.interference);
    // the baseline measurement counts as the first step
    assert_eq!(agent.steps(), 4000);
    // one evaluation per step plus a re-measurement per record update
    assert_eq!(env.calls, 4000 + updates);
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let mut points = Vec::new();
    let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    for (k, c) in centres.iter().enumerate() {
        for i in 0..20 {
            let t = i as f64 * 0.31 + k as f64;
            points.push(vec![c[0] + 0.5 * t.sin(), c[1] + 0.5 * t.cos()]);
        }
    }
    let labels = kmeans(&points, 3, 100, &mut rng(7)).unwrap();
    for k in 0..3 {
        let block = &labels[20 * k..20 * (k + 1)];
        assert!(block.iter().all(|&l| l == block[0]));
    }
    let mut firsts = vec![labels[0], labels[20], labels[40]];
    firsts.sort();
    firsts.dedup();
    assert_eq!(firsts.len(), 3);
    assert!(kmeans(&points[..2], 3, 10, &mut rng(7)).is_err());
}

#[test]
fn users_group_by_direction() {
    let ps = PhaseSet::new(4).unwrap();
    let g = ArrayGeometry::<f64>::half_wavelength(16).unwrap();
    let sensing = beamsteering_codebook(&g, 32, ps).unwrap();
    let users = cluster(16, &[0.5, 0.52, 0.55, 2.5, 2.55, 2.6]);
    let refs: Vec<&[Complex64]> = users.iter().map(|u| u.as_slice()).collect();
    let clusters = cluster_users(&refs, 2, &sensing, 100, &mut rng(8)).unwrap();
    let mut groups: Vec<Vec<usize>> = clusters.into_iter().map(|c| c.members).collect();
    groups.sort();
    assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4, 5]]);
}
