use std::io::Write;

use serde::Serialize;

use crate::codebook::{beam_training_select, beamforming_gain, Codebook};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SirRow {
    pub user_id: usize,
    pub x: f64,
    pub y: f64,
    /// `+∞` when no beam of the other codebook leaks any interference.
    pub avg_sir_db: f64,
    pub min_sir_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirReport {
    pub rows: Vec<SirRow>,
    pub cap_db: f64,
}

fn sir_db(signal: f64, interference: f64) -> f64 {
    if signal == 0.0 {
        f64::NEG_INFINITY
    } else if interference == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / interference).log10()
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl SirReport {
    /// Average SIR per user, clamped to the map cap.
    pub fn capped_avg_db(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.avg_sir_db.min(self.cap_db)).collect()
    }

    pub fn median_avg_db(&self) -> Option<f64> {
        median(self.capped_avg_db())
    }

    pub fn median_min_db(&self) -> Option<f64> {
        median(self.rows.iter().map(|r| r.min_sir_db.min(self.cap_db)).collect())
    }

    /// CSV with raw values; unbounded entries are written as `inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-user SIR at BS `k` with BS `q` interfering: the serving beam comes
/// from beam training over `codebook_self`, the average SIR divides by the
/// interference averaged over `codebook_other` (each beam equally likely),
/// and the minimum SIR uses the worst beam.
pub fn sir_map<T: Real>(
    codebook_self: &Codebook<T>,
    codebook_other: &Codebook<T>,
    scenario: &Scenario<T>,
    k: usize,
    q: usize,
    cap_db: f64,
) -> Result<SirReport> {
    let link = scenario.link(q, k).ok_or_else(|| Error::InvalidParameter(format!("missing interference link {q} -> {k}")))?;
    let mut rows = Vec::with_capacity(scenario.cell(k).users.len());
    for u in &scenario.cell(k).users {
        let (n, _) = beam_training_select(codebook_self, &u.h)?;
        let w = &codebook_self.beams()[n];
        let signal = beamforming_gain(w, &u.h)?.as_f64();
        let leaks: Vec<f64> =
            codebook_other.beams().iter().map(|f| link.matrix.bilinear(w.weights(), f.weights()).norm_sqr().as_f64()).collect();
        let mean = leaks.iter().sum::<f64>() / leaks.len() as f64;
        let worst = leaks.iter().copied().fold(0.0, f64::max);
        rows.push(SirRow { user_id: u.id, x: u.pos[0], y: u.pos[1], avg_sir_db: sir_db(signal, mean), min_sir_db: sir_db(signal, worst) });
    }
    Ok(SirReport { rows, cap_db })
}

/// SIR maps for both directions of a two-BS scenario, concatenated.
pub fn sir_map_two_bs<T: Real>(codebooks: &[Codebook<T>], scenario: &Scenario<T>, cap_db: f64) -> Result<SirReport> {
    if codebooks.len() != 2 {
        return Err(Error::InvalidParameter(format!("expected 2 codebooks, got {}", codebooks.len())));
    }
    let mut a = sir_map(&codebooks[0], &codebooks[1], scenario, 0, 1, cap_db)?;
    let b = sir_map(&codebooks[1], &codebooks[0], scenario, 1, 0, cap_db)?;
    a.rows.extend(b.rows);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sir_db_sentinels() {
        assert_eq!(sir_db(1.0, 0.0), f64::INFINITY);
        assert_eq!(sir_db(0.0, 1.0), f64::NEG_INFINITY);
        assert!((sir_db(100.0, 1.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn inf_is_written_as_inf() {
        let rep = SirReport {
            rows: vec![SirRow { user_id: 3, x: 1.0, y: 2.0, avg_sir_db: f64::INFINITY, min_sir_db: f64::INFINITY }],
            cap_db: 120.0,
        };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "user_id,x,y,avg_sir_db,min_sir_db\n3,1.0,2.0,inf,inf\n");
        assert_eq!(rep.median_avg_db(), Some(120.0));
    }
}
