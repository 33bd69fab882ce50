use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codebook::PhaseSet;
use crate::error::{Error, Result};
use crate::measurement::{measure_interference, BeamSource, Interferer};
use crate::orchestrator::random_beam;
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::theory::build_projection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub p_measurements: usize,
    pub trials: usize,
    /// Area under the empirical ROC over all thresholds (ties count half).
    pub auc: f64,
}

#[derive(Serialize)]
struct RocCsvRow {
    gamma: f64,
    tpr: f64,
    fpr: f64,
    trials: usize,
    p_measurements: usize,
}

impl RocCurve {
    pub fn at(&self, gamma: f64) -> Option<RocPoint> {
        self.points.iter().copied().find(|p| p.gamma == gamma)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(RocCsvRow { gamma: p.gamma, tpr: p.tpr, fpr: p.fpr, trials: self.trials, p_measurements: self.p_measurements })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `0`, then `points` log-spaced values over `[1e-3, 1e3]` (always
/// including 1), then `+∞`.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    if points == 1 {
        g.push(1.0);
    } else {
        g.extend((0..points).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (points - 1) as f64)));
        if !g.contains(&1.0) {
            g.push(1.0);
        }
    }
    g.push(f64::INFINITY);
    g.sort_by(f64::total_cmp);
    g
}

/// Mann–Whitney AUC: probability that a positive scores below a negative.
fn auc_lower_is_positive(pos: &[f64], neg: &[f64]) -> f64 {
    if pos.is_empty() || neg.is_empty() {
        return 0.5;
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum over positives of (#negatives strictly above + ½ #ties)
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let (mut p_tie, mut n_tie) = (0usize, 0usize);
        while j < all.len() && all[j].0.total_cmp(&all[i].0).is_eq() {
            if all[j].1 {
                p_tie += 1;
            } else {
                n_tie += 1;
            }
            j += 1;
        }
        let neg_above = neg.len() - neg_below - n_tie;
        wins += p_tie as f64 * (neg_above as f64 + 0.5 * n_tie as f64);
        neg_below += n_tie;
        i = j;
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

/// ROC of the ratio test at BS `k`: each trial draws two random quantized
/// beams, takes `p` interference measurements with each while the
/// interferers follow `policy`, and predicts `H0` (first beam better) when
/// the ratio of sample means is below `γ`. Ground truth compares the
/// multipath projections `‖ξ‖²` of the two beams.
///
/// Beam pairs come from a stream seeded by the first draw from `rng`, so
/// curves for different `p` from equally seeded generators share them.
#[allow(clippy::too_many_arguments)]
pub fn roc_curve<T: Real>(
    scenario: &Scenario<T>,
    k: usize,
    policy: &dyn BeamSource<T>,
    p: usize,
    gammas: &[f64],
    trials: usize,
    phase_set: PhaseSet,
    rng: &mut dyn RngCore,
) -> Result<RocCurve> {
    if trials == 0 {
        return Err(Error::InvalidParameter("ROC needs at least one trial".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("ROC needs P >= 1".into()));
    }
    if gammas.is_empty() || gammas.iter().any(|g| g.is_nan() || *g < 0.0) {
        return Err(Error::InvalidParameter("gamma grid must be nonempty and nonnegative".into()));
    }
    let links = scenario.links_into(k);
    if links.is_empty() {
        return Err(Error::InvalidParameter(format!("BS {k} has no interference links")));
    }
    let channels = links
        .iter()
        .map(|l| {
            l.channel.as_ref().ok_or_else(|| Error::InvalidParameter("ROC ground truth needs the path description of every link".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let interferers: Vec<Interferer<'_, T>> = links.iter().map(|l| Interferer { matrix: &l.matrix, source: policy }).collect();

    let mut beam_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut meas_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let m = scenario.num_antennas();
    let xi_norm = |w: &crate::codebook::QuantizedBeam<T>| -> Result<f64> {
        let mut total = 0.0;
        for ch in &channels {
            total += build_projection(w, ch)?.xi_norm_sqr().as_f64();
        }
        Ok(total)
    };
    let mean = |v: Vec<T>| v.iter().map(|x| x.as_f64()).sum::<f64>() / v.len() as f64;

    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for _ in 0..trials {
        let w = random_beam(m, phase_set, &mut beam_rng);
        let w2 = random_beam(m, phase_set, &mut beam_rng);
        let truth_h0 = xi_norm(&w)? < xi_norm(&w2)?;
        let est = mean(measure_interference(&w, &interferers, p, T::zero(), &mut meas_rng)?);
        let est2 = mean(measure_interference(&w2, &interferers, p, T::zero(), &mut meas_rng)?);
        let ratio = if est2 > 0.0 {
            est / est2
        } else if est > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        if truth_h0 {
            pos.push(ratio);
        } else {
            neg.push(ratio);
        }
    }

    let rate = |scores: &[f64], gamma: f64| -> f64 {
        if scores.is_empty() {
            return if gamma.is_infinite() { 1.0 } else { 0.0 };
        }
        let hits = scores.iter().filter(|&&s| gamma.is_infinite() || s < gamma).count();
        hits as f64 / scores.len() as f64
    };
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    Ok(RocCurve {
        points: sorted.into_iter().map(|gamma| RocPoint { gamma, tpr: rate(&pos, gamma), fpr: rate(&neg, gamma) }).collect(),
        p_measurements: p,
        trials,
        auc: auc_lower_is_positive(&pos, &neg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_endpoints_and_one() {
        let g = gamma_grid(4);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), f64::INFINITY);
        assert!(g.contains(&1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn auc_brute_force() {
        let pos = [0.1, 0.5, 0.5, 2.0];
        let neg = [0.5, 1.0, 3.0];
        let mut wins = 0.0;
        for &p in &pos {
            for &n in &neg {
                wins += if p < n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        assert!((auc_lower_is_positive(&pos, &neg) - wins / 12.0).abs() < 1e-15);
    }
}
