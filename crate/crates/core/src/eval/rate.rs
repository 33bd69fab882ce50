use num_complex::Complex;
use serde::Serialize;

use crate::codebook::{beam_training_select, beamforming_gain, Codebook, QuantizedBeam};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::scenario::Scenario;

/// Rate of one user averaged over the interferer's codebook, each beam
/// equally likely:
/// `(1/|W₂|) Σ_f log₂(1 + |wᴴh|²P_x / (|wᴴHf|²P_x + σ²))`.
pub fn user_rate<T: Real>(
    w: &QuantizedBeam<T>,
    h: &[Complex<T>],
    codebook_other: &Codebook<T>,
    h_interference: &CMatrix<T>,
    px: T,
    sigma2: T,
) -> Result<T> {
    if !(sigma2 > T::zero()) || !(px > T::zero()) {
        return Err(Error::InvalidParameter("rates need P_x > 0 and sigma^2 > 0".into()));
    }
    let signal = beamforming_gain(w, h)? * px;
    let mut total = T::zero();
    for f in codebook_other.beams() {
        let interference = h_interference.bilinear(w.weights(), f.weights()).norm_sqr() * px;
        total += (T::one() + signal / (interference + sigma2)).log2();
    }
    Ok(total / T::from_usize_lossy(codebook_other.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserRate {
    pub bs: usize,
    pub user_id: usize,
    pub rate_bps_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub per_user: Vec<UserRate>,
    /// Per-BS averages over served users.
    pub per_bs: Vec<f64>,
    /// Sum of the per-BS averages.
    pub objective: f64,
}

/// The two-BS objective: each BS's average user rate (serving beam chosen by
/// beam training over its own codebook, interference averaged over the other
/// BS's codebook), summed over both BSs.
pub fn objective_value<T: Real>(codebooks: &[Codebook<T>], scenario: &Scenario<T>, px: T, sigma2: T) -> Result<RateResult> {
    if scenario.bs_count() != 2 || codebooks.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "objective is defined for two BSs, got {} BSs and {} codebooks",
            scenario.bs_count(),
            codebooks.len()
        )));
    }
    let mut per_user = Vec::new();
    let mut per_bs = Vec::with_capacity(2);
    for k in 0..2 {
        let q = 1 - k;
        let link = scenario.link(q, k).ok_or_else(|| Error::InvalidParameter(format!("missing interference link {q} -> {k}")))?;
        let users = &scenario.cell(k).users;
        let mut sum = 0.0;
        for u in users {
            let (n, _) = beam_training_select(&codebooks[k], &u.h)?;
            let r = user_rate(&codebooks[k].beams()[n], &u.h, &codebooks[q], &link.matrix, px, sigma2)?.as_f64();
            sum += r;
            per_user.push(UserRate { bs: k, user_id: u.id, rate_bps_hz: r });
        }
        per_bs.push(if users.is_empty() { 0.0 } else { sum / users.len() as f64 });
    }
    Ok(RateResult { objective: per_bs.iter().sum(), per_user, per_bs })
}
