// explicit index loops keep the oracle arithmetic readable
#![allow(clippy::needless_range_loop)]

use codebook_learn::codebook::{beamforming_gain, Codebook, PhaseSet, QuantizedBeam};
use codebook_learn::config::ScenarioConfig;
use codebook_learn::eval::*;
use codebook_learn::geometry::ArrayGeometry;
use codebook_learn::linalg::CMatrix;
use codebook_learn::orchestrator::{run_decentralized_learning, InterfererPolicy};
use codebook_learn::scenario::{generate_two_bs_scenario, parse_channel_dataset, Scenario};
use codebook_learn::theory::{build_projection, expected_interference_closed_form};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ps(bits: u32) -> PhaseSet {
    PhaseSet::new(bits).unwrap()
}

fn broadside(m: usize) -> QuantizedBeam<f64> {
    QuantizedBeam::from_phases(&vec![0.0; m], ps(2)).unwrap()
}

#[test]
fn rate_of_ten_linear_snr_is_log2_11() {
    // broadside beam on a flat channel: |wᴴh|² = M·|h₀|² = 4 · 2.5
    let w = broadside(4);
    let h = vec![c(2.5f64.sqrt(), 0.0); 4];
    let other = Codebook::new(vec![broadside(4)]).unwrap();
    let r = user_rate(&w, &h, &other, &CMatrix::zeros(4, 4), 1.0, 1.0).unwrap();
    assert!((r - 11f64.log2()).abs() < 1e-12);
    assert_eq!(user_rate(&w, &[c(0.0, 0.0); 4], &other, &CMatrix::zeros(4, 4), 1.0, 1.0).unwrap(), 0.0);
    assert!(user_rate(&w, &h, &other, &CMatrix::zeros(4, 4), 1.0, 0.0).is_err());
}

#[test]
fn rate_matches_brute_force() {
    let set = ps(3);
    let w = QuantizedBeam::<f64>::from_indices(vec![1, 5, 2], set).unwrap();
    let other = Codebook::new((0..4u16).map(|i| QuantizedBeam::from_indices(vec![i, 2 * i % 8, 7 - i], set).unwrap()).collect()).unwrap();
    let h = vec![c(0.3, -1.0), c(0.8, 0.2), c(-0.5, 0.5)];
    let hi = CMatrix::from_fn(3, 3, |i, j| c(0.1 * (i + 1) as f64, -0.2 * j as f64 + 0.05));
    let (px, s2) = (3.0, 0.5);
    let mut expect = 0.0;
    for f in other.beams() {
        let mut sig = c(0.0, 0.0);
        let mut itf = c(0.0, 0.0);
        for i in 0..3 {
            sig += w.weights()[i].conj() * h[i];
            let mut hf = c(0.0, 0.0);
            for j in 0..3 {
                hf += hi.get(i, j) * f.weights()[j];
            }
            itf += w.weights()[i].conj() * hf;
        }
        expect += (1.0 + sig.norm_sqr() * px / (itf.norm_sqr() * px + s2)).log2();
    }
    expect /= 4.0;
    assert!((user_rate(&w, &h, &other, &hi, px, s2).unwrap() - expect).abs() < 1e-12);
}

const TWO_BS: &str = r#"{
  "m": 2,
  "bs": [
    {"id": 0, "users": [{"id": 0, "pos": [1.0, 0.0, 0.0], "h_re": [1.0, 0.5], "h_im": [0.0, -0.5]},
                        {"id": 1, "pos": [2.0, 0.0, 0.0], "h_re": [0.2, 0.0], "h_im": [0.3, 1.0]}]},
    {"id": 1, "users": [{"id": 2, "pos": [9.0, 0.0, 0.0], "h_re": [0.25, 0.0], "h_im": [0.75, 1.0]}]}
  ],
  "interference": [
    {"from": 1, "to": 0, "H_re": [0.1, 0.2, 0.3, 0.4], "H_im": [0.0, 0.0, 0.0, -0.1]},
    {"from": 0, "to": 1, "H_re": [0.5, 0.1, 0.0, 0.2], "H_im": [0.1, 0.0, 0.3, 0.0]}
  ]
}"#;

const TWO_BS_SWAPPED: &str = r#"{
  "m": 2,
  "bs": [
    {"id": 0, "users": [{"id": 2, "pos": [9.0, 0.0, 0.0], "h_re": [0.25, 0.0], "h_im": [0.75, 1.0]}]},
    {"id": 1, "users": [{"id": 0, "pos": [1.0, 0.0, 0.0], "h_re": [1.0, 0.5], "h_im": [0.0, -0.5]},
                        {"id": 1, "pos": [2.0, 0.0, 0.0], "h_re": [0.2, 0.0], "h_im": [0.3, 1.0]}]}
  ],
  "interference": [
    {"from": 0, "to": 1, "H_re": [0.1, 0.2, 0.3, 0.4], "H_im": [0.0, 0.0, 0.0, -0.1]},
    {"from": 1, "to": 0, "H_re": [0.5, 0.1, 0.0, 0.2], "H_im": [0.1, 0.0, 0.3, 0.0]}
  ]
}"#;

fn tiny_codebooks() -> [Codebook<f64>; 2] {
    let b = |i: &[u16]| QuantizedBeam::from_indices(i.to_vec(), ps(2)).unwrap();
    [Codebook::new(vec![b(&[0, 1]), b(&[3, 3])]).unwrap(), Codebook::new(vec![b(&[2, 0]), b(&[1, 1]), b(&[0, 3])]).unwrap()]
}

#[test]
fn objective_is_symmetric_under_bs_relabeling() {
    let a: Scenario<f64> = parse_channel_dataset(TWO_BS).unwrap();
    let b: Scenario<f64> = parse_channel_dataset(TWO_BS_SWAPPED).unwrap();
    let [c0, c1] = tiny_codebooks();
    let ra = objective_value(&[c0.clone(), c1.clone()], &a, 2.0, 0.1).unwrap();
    let rb = objective_value(&[c1, c0], &b, 2.0, 0.1).unwrap();
    assert!((ra.objective - rb.objective).abs() < 1e-12);
    assert!((ra.per_bs[0] - rb.per_bs[1]).abs() < 1e-12);
    assert_eq!(ra.per_user.len(), 3);
}

#[test]
fn single_beam_interferer_gives_equal_avg_and_min() {
    let s: Scenario<f64> = parse_channel_dataset(TWO_BS).unwrap();
    let [c0, _] = tiny_codebooks();
    let one = Codebook::new(vec![QuantizedBeam::from_indices(vec![1, 2], ps(2)).unwrap()]).unwrap();
    let rep = sir_map(&c0, &one, &s, 0, 1, 120.0).unwrap();
    assert_eq!(rep.rows.len(), 2);
    for r in &rep.rows {
        assert_eq!(r.avg_sir_db, r.min_sir_db);
    }
}

#[test]
fn zero_interference_hits_the_cap() {
    let text =
        TWO_BS.replace("\"H_re\": [0.1, 0.2, 0.3, 0.4], \"H_im\": [0.0, 0.0, 0.0, -0.1]", "\"H_re\": [0, 0, 0, 0], \"H_im\": [0, 0, 0, 0]");
    let s: Scenario<f64> = parse_channel_dataset(&text).unwrap();
    let [c0, c1] = tiny_codebooks();
    let rep = sir_map(&c0, &c1, &s, 0, 1, 120.0).unwrap();
    assert!(rep.rows.iter().all(|r| r.avg_sir_db == f64::INFINITY));
    assert_eq!(rep.median_avg_db(), Some(120.0));
    assert!(sir_map_two_bs(&[c0], &s, 120.0).is_err());
}

fn roc_scenario() -> Scenario<f64> {
    generate_two_bs_scenario(&ScenarioConfig { m: 16, n: 4, grid_rows: 4, grid_cols: 6, inter_bs_paths: 2, ..Default::default() }).unwrap()
}

#[test]
fn roc_endpoints_and_monotonicity() {
    let sc = roc_scenario();
    let policy = InterfererPolicy::<f64>::RandomBeam { m: 16, phase_set: ps(4) };
    let grid = gamma_grid(21);
    let curve = roc_curve(&sc, 0, &policy, 5, &grid, 400, ps(4), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let first = curve.points.first().unwrap();
    let last = curve.points.last().unwrap();
    assert_eq!((first.gamma, first.tpr, first.fpr), (0.0, 0.0, 0.0));
    assert_eq!((last.gamma, last.tpr, last.fpr), (f64::INFINITY, 1.0, 1.0));
    for w in curve.points.windows(2) {
        assert!(w[0].gamma < w[1].gamma);
        assert!(w[0].tpr <= w[1].tpr && w[0].fpr <= w[1].fpr);
    }
    assert!(curve.at(1.0).is_some());
    assert!(curve.auc > 0.5 && curve.auc <= 1.0);
}

#[test]
fn more_measurements_sharpen_the_test() {
    let sc = roc_scenario();
    let policy = InterfererPolicy::<f64>::RandomBeam { m: 16, phase_set: ps(4) };
    let grid = gamma_grid(5);
    let auc = |p| roc_curve(&sc, 0, &policy, p, &grid, 1000, ps(4), &mut ChaCha8Rng::seed_from_u64(4)).unwrap().auc;
    assert!(auc(1) < auc(10));
}

#[test]
fn roc_rejects_bad_inputs() {
    let sc = roc_scenario();
    let policy = InterfererPolicy::<f64>::RandomBeam { m: 16, phase_set: ps(4) };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    assert!(roc_curve(&sc, 0, &policy, 5, &[1.0], 0, ps(4), &mut rng).is_err());
    assert!(roc_curve(&sc, 0, &policy, 0, &[1.0], 10, ps(4), &mut rng).is_err());
    assert!(roc_curve(&sc, 0, &policy, 5, &[-1.0], 10, ps(4), &mut rng).is_err());
    // datasets without path descriptions have no ground truth
    let bare: Scenario<f64> = parse_channel_dataset(TWO_BS).unwrap();
    let p2 = InterfererPolicy::<f64>::RandomBeam { m: 2, phase_set: ps(4) };
    assert!(roc_curve(&bare, 0, &p2, 5, &[1.0], 10, ps(4), &mut rng).is_err());
}

#[test]
fn gamma_grid_has_endpoints_and_unity() {
    let g = gamma_grid(41);
    assert_eq!(g.first(), Some(&0.0));
    assert_eq!(g.last(), Some(&f64::INFINITY));
    assert!(g.contains(&1.0));
    assert_eq!(g.len(), 43);
}

/// Beam steered to `cos φ = c0` with the upper half of the array flipped
/// by π. When `c0 − c1 = 2/M` the flip cancels the response at `c1` pair by
/// pair while leaving the main lobe at full gain `M`.
fn nulled_beam(m: usize, c0: f64, c1: f64, bits: u32) -> QuantizedBeam<f64> {
    let half = m / 2;
    let phases: Vec<f64> =
        (0..m).map(|i| if i < half { PI * i as f64 * c0 } else { PI * i as f64 * c1 + PI * (i - half) as f64 * (c0 - c1) + PI }).collect();
    QuantizedBeam::from_phases(&phases, ps(bits)).unwrap()
}

#[test]
fn constructed_null_is_reported_deep() {
    let (m, c0, c1) = (16, 0.125, 0.0);
    let w = nulled_beam(m, c0, c1, 6);
    let g = ArrayGeometry::<f64>::half_wavelength(m).unwrap();
    let main = beamforming_gain(&w, &codebook_learn::geometry::array_response(&g, c0.acos(), FRAC_PI_2)).unwrap();
    assert!((main - m as f64).abs() < 1e-9, "{main}");
    let cb = Codebook::new(vec![w]).unwrap();
    let (rows, notes) = beam_patterns(&cb, &g, Some(c1.acos()), 721).unwrap();
    assert_eq!(rows.len(), 721);
    assert!(notes[0].null_depth_db.unwrap() >= 30.0, "{:?}", notes[0]);
    assert!((notes[0].main_lobe_rad.cos() - c0).abs() < 0.01);
    let (_, none) = beam_patterns(&cb, &g, None, 11).unwrap();
    assert_eq!(none[0].null_depth_db, None);
}

#[test]
fn exported_csvs_have_one_row_per_sample() {
    let g = ArrayGeometry::<f64>::half_wavelength(8).unwrap();
    let cb = codebook_learn::codebook::beamsteering_codebook(&g, 3, ps(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_patterns(&cb, &g, Some(1.0), 50, dir.path()).unwrap();
    let lines = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!(lines("patterns.csv"), 1 + 3 * 50);
    assert_eq!(lines("pattern_annotations.csv"), 1 + 3);
}

/// Closed-form expected interference of each beam of `own` on `link`.
fn expected_interference(own: &Codebook<f64>, ch: &codebook_learn::geometry::InterferenceChannel<f64>) -> Vec<f64> {
    own.beams().iter().map(|w| expected_interference_closed_form(&build_projection(w, ch).unwrap())).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// At P = Q = 10 the gain estimate is too noisy for co-learning to be
/// reliable at this budget; the larger bursts used by the benchmark config
/// make the improvement hold on every seed tried.
#[test]
fn colearning_lowers_interference_below_initialization() {
    for seed in 0..3 {
        let cfg = ScenarioConfig {
            m: 16,
            n: 4,
            budget: 2000,
            p_measurements: 200,
            q_measurements: 50,
            inter_bs_paths: 1,
            seed,
            ..Default::default()
        };
        let sc: Scenario<f64> = generate_two_bs_scenario(&cfg).unwrap();
        let out = run_decentralized_learning(&sc, &cfg).unwrap();
        for k in 0..2 {
            let ch = sc.link(1 - k, k).unwrap().channel.as_ref().unwrap();
            let before = median(expected_interference(&out.initial_codebooks[k], ch));
            let after = median(expected_interference(&out.codebooks[k], ch));
            assert!(after < before, "seed {seed}, BS {k}: {after} vs {before}");
        }
    }
}
