//! Path-space view of the interference power and the quantities that
//! govern how well the averaging estimator ranks beams.
//!
//! For `H = Σ_ℓ α_ℓ a_r,ℓ a_t,ℓᴴ` and a receive beam `w`, the interference is
//! `|ξᵀ z|²` with `ξ_ℓ = α_ℓ wᴴ a_r,ℓ` and `z_ℓ = a_t,ℓᴴ f`. When `f` has
//! i.i.d. uniform phases, `E[f fᴴ] = I/M`, hence
//! `E|wᴴHf|² = ξ̃ᴴ Σ ξ̃` with `ξ̃ = ξ*` and `Σ = (I + Π)/M`, where `Π` holds the
//! off-diagonal transmit steering correlations.

use num_complex::Complex;
use rand::{Rng, RngCore};

use crate::codebook::QuantizedBeam;
use crate::error::{Error, Result};
use crate::geometry::{steering_vector, ArrayGeometry, InterferenceChannel};
use crate::linalg::{hermitian_eigenvalues, inner, norm_sqr, CMatrix, CVec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathProjection<T> {
    /// `ξ_ℓ = α_ℓ β_ℓ` with `β_ℓ = wᴴ a_r,ℓ`.
    pub xi: CVec<T>,
    /// Hermitian, zero diagonal.
    pub pi: CMatrix<T>,
    /// Antennas at the transmitter, the `M` in `Σ = (I + Π)/M`.
    pub m: usize,
}

/// Builds `Π` from unit-norm transmit steering vectors.
pub fn pi_matrix<T: Real>(tx_steering: &[CVec<T>]) -> CMatrix<T> {
    let l = tx_steering.len();
    CMatrix::from_fn(l, l, |i, j| if i == j { Complex::new(T::zero(), T::zero()) } else { inner(&tx_steering[i], &tx_steering[j]) })
}

pub fn build_projection<T: Real>(w: &QuantizedBeam<T>, ch: &InterferenceChannel<T>) -> Result<MultipathProjection<T>> {
    if w.num_antennas() != ch.rx_geometry.num_antennas() {
        return Err(Error::DimensionMismatch { expected: ch.rx_geometry.num_antennas(), actual: w.num_antennas() });
    }
    let xi = (0..ch.num_paths()).map(|l| ch.paths()[l].gain * inner(w.weights(), &ch.rx_steering(l))).collect();
    let tx: Vec<CVec<T>> = (0..ch.num_paths()).map(|l| ch.tx_steering(l)).collect();
    Ok(MultipathProjection { xi, pi: pi_matrix(&tx), m: ch.tx_geometry.num_antennas() })
}

impl<T: Real> MultipathProjection<T> {
    pub fn num_paths(&self) -> usize {
        self.xi.len()
    }

    /// `ξ̃ = ξ*`.
    pub fn xi_tilde(&self) -> CVec<T> {
        self.xi.iter().map(|x| x.conj()).collect()
    }

    /// `‖ξ‖²`, the quantity the hypothesis test ranks beams by.
    pub fn xi_norm_sqr(&self) -> T {
        norm_sqr(&self.xi)
    }

    /// `ξ̃ᴴ Π ξ̃`, returned with its (round-off) imaginary residue.
    pub fn pi_quadratic(&self) -> Complex<T> {
        self.pi.quadratic_form(&self.xi_tilde())
    }

    /// Eigenvalues of `I + Π`, decreasing.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut a = self.pi.clone();
        for i in 0..a.rows() {
            a.set(i, i, a.get(i, i) + Complex::new(T::one(), T::zero()));
        }
        hermitian_eigenvalues(&a)
    }

    /// `‖Π‖₂` from the eigenvalues of the Hermitian `Π`.
    pub fn pi_norm(&self) -> T {
        self.eigenvalues().into_iter().fold(T::zero(), |m, l| m.max((l - T::one()).abs()))
    }

    fn same_channel(&self, other: &Self) -> bool {
        let tol = T::lit(1e-12);
        self.m == other.m
            && self.pi.rows() == other.pi.rows()
            && self.pi.as_slice().iter().zip(other.pi.as_slice()).all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// `ξ̃ᴴ Σ ξ̃ = (‖ξ‖² + ξ̃ᴴΠξ̃) / M`.
pub fn expected_interference_closed_form<T: Real>(proj: &MultipathProjection<T>) -> T {
    let q = proj.xi_norm_sqr() + proj.pi_quadratic().re;
    (q / T::from_usize_lossy(proj.m)).max(T::zero())
}

/// Resolution `η = λ_L(I + Π) / (1 + ‖Π‖₂)`.
pub fn eta_resolution<T: Real>(proj: &MultipathProjection<T>) -> Result<T> {
    let ev = proj.eigenvalues();
    let lambda_min = *ev.last().expect("at least one path");
    let floor = T::lit(1e3) * T::epsilon() * T::from_usize_lossy(ev.len());
    if lambda_min <= floor {
        return Err(Error::NotPositiveDefinite(lambda_min.as_f64()));
    }
    let norm = ev.iter().fold(T::zero(), |m, &l| m.max((l - T::one()).abs()));
    Ok(lambda_min / (T::one() + norm))
}

/// `(condition_holds, ordering_holds)` for a pair of beams on one channel:
/// the sufficient condition `‖ξ̃‖² < η ‖ξ̃'‖²` and whether the closed-form
/// expected interference of `w` is below that of `w'`.
pub fn check_prop1_condition<T: Real>(proj_w: &MultipathProjection<T>, proj_w_prime: &MultipathProjection<T>) -> Result<(bool, bool)> {
    if !proj_w.same_channel(proj_w_prime) {
        return Err(Error::ChannelMismatch);
    }
    let eta = eta_resolution(proj_w)?;
    let condition = proj_w.xi_norm_sqr() < eta * proj_w_prime.xi_norm_sqr();
    let ordering = expected_interference_closed_form(proj_w) < expected_interference_closed_form(proj_w_prime);
    Ok((condition, ordering))
}

/// Margins of the eigenvalue perturbation bound and the Rayleigh sandwich;
/// every margin is nonnegative when the bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport<T> {
    /// `‖Π‖₂ − max_k |λ_k(I + Π) − 1|`.
    pub weyl_margin: T,
    /// `ξ̃ᴴΣξ̃ − λ_L(I + Π)‖ξ̃‖²/M`.
    pub rayleigh_lower_margin: T,
    /// `(1 + ‖Π‖₂)‖ξ̃‖²/M − ξ̃ᴴΣξ̃`.
    pub rayleigh_upper_margin: T,
    /// Absolute slack allowed for round-off.
    pub tolerance: T,
}

impl<T: Real> BoundReport<T> {
    pub fn weyl_holds(&self) -> bool {
        self.weyl_margin >= -self.tolerance
    }

    pub fn rayleigh_holds(&self) -> bool {
        self.rayleigh_lower_margin >= -self.tolerance && self.rayleigh_upper_margin >= -self.tolerance
    }
}

pub fn check_bounds<T: Real>(proj: &MultipathProjection<T>) -> BoundReport<T> {
    let ev = proj.eigenvalues();
    let m = T::from_usize_lossy(proj.m);
    // ‖Π‖₂ from Π itself, independent of the shifted spectrum
    let pi_norm = hermitian_eigenvalues(&proj.pi).into_iter().fold(T::zero(), |a, l| a.max(l.abs()));
    let max_shift = ev.iter().fold(T::zero(), |a, &l| a.max((l - T::one()).abs()));
    let xi2 = proj.xi_norm_sqr();
    let e = expected_interference_closed_form(proj);
    let lambda_min = *ev.last().expect("at least one path");
    let scale = (T::one() + pi_norm) * (T::one() + xi2 / m);
    BoundReport {
        weyl_margin: pi_norm - max_shift,
        rayleigh_lower_margin: e - lambda_min * xi2 / m,
        rayleigh_upper_margin: (T::one() + pi_norm) * xi2 / m - e,
        tolerance: T::lit(1e3) * T::epsilon() * scale * T::from_usize_lossy(ev.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsRow {
    pub m: usize,
    pub l: usize,
    pub trial: usize,
    pub pi_norm2: f64,
    pub eta_prime: f64,
}

/// `‖Π‖₂` and `η' = (1 − ‖Π‖₂)/(1 + ‖Π‖₂)` for random transmit angles drawn
/// uniformly from `[0, π]` (elevation at broadside), one row per trial.
pub fn pi_norm_asymptotics<T: Real>(m_list: &[usize], l: usize, trials: usize, rng: &mut dyn RngCore) -> Result<Vec<AsymptoticsRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("asymptotics need at least one trial".into()));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("asymptotics need at least one path".into()));
    }
    let mut rows = Vec::with_capacity(m_list.len() * trials);
    for &m in m_list {
        let geom = ArrayGeometry::<T>::half_wavelength(m)?;
        for trial in 0..trials {
            let tx: Vec<CVec<T>> = (0..l)
                .map(|_| {
                    let phi: f64 = rng.random_range(0.0..=std::f64::consts::PI);
                    steering_vector(&geom, T::lit(phi), T::FRAC_PI_2())
                })
                .collect();
            let pi = pi_matrix(&tx);
            let norm = hermitian_eigenvalues(&pi).into_iter().fold(T::zero(), |a, x| a.max(x.abs())).as_f64();
            rows.push(AsymptoticsRow { m, l, trial, pi_norm2: norm, eta_prime: (1.0 - norm) / (1.0 + norm) });
        }
    }
    Ok(rows)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Per-M medians `(M, median ‖Π‖₂, median η')`.
pub fn asymptotics_medians(rows: &[AsymptoticsRow]) -> Vec<(usize, f64, f64)> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let mut norms: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.pi_norm2).collect();
            let mut etas: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.eta_prime).collect();
            (m, median(&mut norms), median(&mut etas))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryReport<T> {
    /// `E / E'` from the full closed form.
    pub ratio: T,
    /// The large-array limit `‖ξ̃‖² / ‖ξ̃'‖²`.
    pub limit_ratio: T,
    /// `|ratio − limit_ratio|`.
    pub gap: T,
    /// Largest gap permitted by `|ξ̃ᴴΠξ̃| ≤ ‖Π‖₂‖ξ̃‖²` on both quadratic terms.
    pub gap_bound: T,
}

impl<T: Real> CorollaryReport<T> {
    pub fn within_bound(&self) -> bool {
        self.gap <= self.gap_bound + T::lit(1e3) * T::epsilon() * (T::one() + self.limit_ratio)
    }
}

pub fn check_corollary1<T: Real>(proj_w: &MultipathProjection<T>, proj_w_prime: &MultipathProjection<T>) -> Result<CorollaryReport<T>> {
    if !proj_w.same_channel(proj_w_prime) {
        return Err(Error::ChannelMismatch);
    }
    let (a, b) = (proj_w.xi_norm_sqr(), proj_w_prime.xi_norm_sqr());
    if !(b > T::zero()) {
        return Err(Error::NonPositiveDenominator(b.as_f64()));
    }
    let ratio = (a + proj_w.pi_quadratic().re) / (b + proj_w_prime.pi_quadratic().re);
    let limit_ratio = a / b;
    let p = proj_w.pi_norm();
    let gap_bound = if p < T::one() {
        let hi = (T::one() + p) / (T::one() - p) * limit_ratio - limit_ratio;
        let lo = limit_ratio - (T::one() - p) / (T::one() + p) * limit_ratio;
        hi.max(lo)
    } else {
        T::infinity()
    };
    Ok(CorollaryReport { ratio, limit_ratio, gap: (ratio - limit_ratio).abs(), gap_bound })
}
