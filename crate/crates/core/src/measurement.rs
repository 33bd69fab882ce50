//! Power-measurement protocol and the averaging estimators built on it.
//!
//! A beam under test first measures `P` interference-only slots (its users
//! muted), then `Q` slots of signal plus interference. The interferers pick
//! a fresh beam for every slot.

use num_complex::Complex;
use rand::{Rng, RngCore};

use crate::codebook::QuantizedBeam;
use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, CVec};
use crate::scalar::Real;

/// Anything that decides which transmit beam an interfering BS uses in a slot.
pub trait BeamSource<T>: Sync {
    fn draw(&self, rng: &mut dyn RngCore) -> QuantizedBeam<T>;
}

/// One interfering BS as seen by the receiver: its channel into us and how it
/// picks beams.
#[derive(Clone, Copy)]
pub struct Interferer<'a, T> {
    pub matrix: &'a CMatrix<T>,
    pub source: &'a dyn BeamSource<T>,
}

fn noise_sample<T: Real>(noise_power: T, rng: &mut dyn RngCore) -> T {
    if noise_power <= T::zero() {
        return T::zero();
    }
    // |wᴴn|² for unit-norm w and n ~ CN(0, σ²I) is exponential with mean σ²
    let u: f64 = rng.random();
    noise_power * T::lit(-(1.0 - u).ln())
}

/// Precomputed `wᴴ H_q` rows so each slot costs one length-M dot product per
/// interferer.
struct ProjectedInterferers<'a, T> {
    rows: Vec<(CVec<T>, &'a dyn BeamSource<T>)>,
}

impl<'a, T: Real> ProjectedInterferers<'a, T> {
    fn new(w: &QuantizedBeam<T>, interferers: &[Interferer<'a, T>]) -> Result<Self> {
        let m = w.num_antennas();
        let rows = interferers
            .iter()
            .map(|i| {
                if i.matrix.rows() != m {
                    return Err(Error::DimensionMismatch { expected: m, actual: i.matrix.rows() });
                }
                Ok((i.matrix.left_project(w.weights()), i.source))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    fn sample(&self, rng: &mut dyn RngCore) -> T {
        self.rows
            .iter()
            .map(|(row, src)| {
                let f = src.draw(rng);
                row.iter().zip(f.weights()).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b).norm_sqr()
            })
            .sum()
    }
}

/// `P` samples of `Σ_q |wᴴ H_q f_q|²` (plus `|wᴴn|²` when noise is on).
pub fn measure_interference<T: Real>(
    w: &QuantizedBeam<T>,
    interferers: &[Interferer<'_, T>],
    p: usize,
    noise_power: T,
    rng: &mut dyn RngCore,
) -> Result<Vec<T>> {
    if p == 0 {
        return Err(Error::InvalidParameter("interference burst needs P >= 1".into()));
    }
    let proj = ProjectedInterferers::new(w, interferers)?;
    Ok((0..p).map(|_| proj.sample(rng) + noise_sample(noise_power, rng)).collect())
}

/// `Q` samples of `|wᴴh|² + Σ_q |wᴴ H_q f'_q|²`.
pub fn measure_signal_plus_interference<T: Real>(
    w: &QuantizedBeam<T>,
    h_user: &[Complex<T>],
    interferers: &[Interferer<'_, T>],
    q: usize,
    noise_power: T,
    rng: &mut dyn RngCore,
) -> Result<Vec<T>> {
    if q == 0 {
        return Err(Error::InvalidParameter("signal burst needs Q >= 1".into()));
    }
    if h_user.len() != w.num_antennas() {
        return Err(Error::DimensionMismatch { expected: w.num_antennas(), actual: h_user.len() });
    }
    let signal = inner(w.weights(), h_user).norm_sqr();
    let proj = ProjectedInterferers::new(w, interferers)?;
    Ok((0..q).map(|_| signal + proj.sample(rng) + noise_sample(noise_power, rng)).collect())
}

/// The sets 𝓘(w) and 𝓢𝓘(w) for one beam.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    pub interference: Vec<T>,
    pub signal_plus_interference: Vec<T>,
}

impl<T: Real> MeasurementSet<T> {
    pub fn new(interference: Vec<T>, signal_plus_interference: Vec<T>) -> Result<Self> {
        if interference.iter().chain(&signal_plus_interference).any(|&x| !(x >= T::zero())) {
            return Err(Error::InvalidParameter("power samples must be nonnegative".into()));
        }
        Ok(Self { interference, signal_plus_interference })
    }
}

fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len()))
    }
}

/// Gain estimate `mean(𝓢𝓘) − mean(𝓘)`; finite samples can push it below zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate<T> {
    pub raw: T,
}

impl<T: Real> GainEstimate<T> {
    pub fn is_negative(&self) -> bool {
        self.raw < T::zero()
    }

    /// Estimate clamped at zero, as used for rewards.
    pub fn clamped(&self) -> T {
        self.raw.max(T::zero())
    }
}

pub fn estimate_gain<T: Real>(ms: &MeasurementSet<T>) -> Result<GainEstimate<T>> {
    let si = mean(&ms.signal_plus_interference).ok_or(Error::Empty("signal-plus-interference sample set"))?;
    let i = mean(&ms.interference).ok_or(Error::Empty("interference sample set"))?;
    Ok(GainEstimate { raw: si - i })
}

/// `(P·mean(𝓘) + Q·mean(𝓢𝓘) − Q·gain) / (P + Q)`.
pub fn estimate_expected_interference<T: Real>(ms: &MeasurementSet<T>, gain_estimate: T) -> Result<T> {
    let p = ms.interference.len();
    let q = ms.signal_plus_interference.len();
    if p + q == 0 {
        return Err(Error::Empty("measurement set"));
    }
    let sum_i: T = ms.interference.iter().copied().sum();
    let sum_si: T = ms.signal_plus_interference.iter().copied().sum();
    Ok((sum_i + sum_si - T::from_usize_lossy(q) * gain_estimate) / T::from_usize_lossy(p + q))
}

/// Average of `|wᴴh|²` over a cluster, or over `sample_size` users drawn
/// without replacement when that is smaller than the cluster.
pub fn cluster_average_gain<T: Real>(
    w: &QuantizedBeam<T>,
    cluster: &[&[Complex<T>]],
    sample_size: usize,
    rng: &mut dyn RngCore,
) -> Result<T> {
    if cluster.is_empty() {
        return Err(Error::Empty("cluster"));
    }
    let picks = sample_indices(cluster.len(), sample_size, rng);
    let mut total = T::zero();
    for &i in &picks {
        total += crate::codebook::beamforming_gain(w, cluster[i])?;
    }
    Ok(total / T::from_usize_lossy(picks.len()))
}

/// `min(n, k)` distinct indices; all of `0..n` in order when `k >= n`.
pub(crate) fn sample_indices(n: usize, k: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    rand::seq::index::sample(rng, n, k.max(1)).into_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `w` suppresses interference better than `w'`.
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionThreshold<T> {
    gamma: T,
}

impl<T: Real> DecisionThreshold<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) {
            return Err(Error::InvalidParameter(format!("decision threshold must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
}

impl<T: Real> Default for DecisionThreshold<T> {
    fn default() -> Self {
        Self { gamma: T::one() }
    }
}

/// `H0` iff `est_w / est_w' < γ`.
pub fn decide_better<T: Real>(est_w: T, est_w_prime: T, threshold: DecisionThreshold<T>) -> Result<Hypothesis> {
    if !(est_w_prime > T::zero()) {
        return Err(Error::NonPositiveDenominator(est_w_prime.as_f64()));
    }
    Ok(if est_w / est_w_prime < threshold.gamma { Hypothesis::H0 } else { Hypothesis::H1 })
}
