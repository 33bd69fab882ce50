//! Array responses and narrowband geometric channels.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVec};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ArrayAxis {
    X,
    #[default]
    Y,
    Z,
}

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry<T> {
    num_antennas: usize,
    /// Element spacing in wavelengths.
    spacing: T,
    pub axis: ArrayAxis,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn new(num_antennas: usize, spacing: T, axis: ArrayAxis) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::InvalidParameter("array needs at least one antenna".into()));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("antenna spacing must be positive, got {spacing}")));
        }
        Ok(Self { num_antennas, spacing, axis })
    }

    /// Half-wavelength ULA along the y axis.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, T::lit(0.5), ArrayAxis::Y)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }
}

/// Array response with unit-modulus entries:
/// `[a]_m = exp(j 2π d (m-1) cos φ sin ϑ)`.
pub fn array_response<T: Real>(geom: &ArrayGeometry<T>, azimuth: T, elevation: T) -> CVec<T> {
    let step = T::lit(2.0) * T::PI() * geom.spacing * azimuth.cos() * elevation.sin();
    (0..geom.num_antennas).map(|m| Complex::from_polar(T::one(), step * T::from_usize_lossy(m))).collect()
}

/// Unit-norm steering vector `a / √M`, used on both sides of BS-to-BS links.
pub fn steering_vector<T: Real>(geom: &ArrayGeometry<T>, azimuth: T, elevation: T) -> CVec<T> {
    let scale = T::one() / T::from_usize_lossy(geom.num_antennas).sqrt();
    array_response(geom, azimuth, elevation).into_iter().map(|x| x * scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent<T> {
    pub gain: Complex<T>,
    pub azimuth: T,
    pub elevation: T,
}

impl<T: Real> PathComponent<T> {
    /// Azimuth-only path with elevation fixed at broadside.
    pub fn planar(gain: Complex<T>, azimuth: T) -> Self {
        Self { gain, azimuth, elevation: T::FRAC_PI_2() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet<T> {
    paths: Vec<PathComponent<T>>,
}

impl<T: Real> PathSet<T> {
    pub fn new(paths: Vec<PathComponent<T>>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Empty("path set"));
        }
        if paths.iter().any(|p| !(p.gain.re.is_finite() && p.gain.im.is_finite() && p.azimuth.is_finite() && p.elevation.is_finite())) {
            return Err(Error::InvalidParameter("non-finite path parameter".into()));
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[PathComponent<T>] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// `h = Σ_ℓ α_ℓ a(φ_ℓ, ϑ_ℓ)`.
pub fn synth_channel<T: Real>(paths: &PathSet<T>, geom: &ArrayGeometry<T>) -> CVec<T> {
    let mut h = vec![Complex::new(T::zero(), T::zero()); geom.num_antennas()];
    for p in paths.paths() {
        for (hm, am) in h.iter_mut().zip(array_response(geom, p.azimuth, p.elevation)) {
            *hm += p.gain * am;
        }
    }
    h
}

/// One BS-to-BS propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferencePath<T> {
    pub gain: Complex<T>,
    pub rx_azimuth: T,
    pub rx_elevation: T,
    pub tx_azimuth: T,
    pub tx_elevation: T,
}

/// Multipath BS-to-BS channel `H = Σ_ℓ α_ℓ a_r a_tᴴ` with unit-norm
/// steering vectors, so `|wᴴ a_r| ≤ 1` and `|a_tᴴ f| ≤ 1` for unit-norm beams.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceChannel<T> {
    paths: Vec<InterferencePath<T>>,
    pub rx_geometry: ArrayGeometry<T>,
    pub tx_geometry: ArrayGeometry<T>,
}

impl<T: Real> InterferenceChannel<T> {
    pub fn new(paths: Vec<InterferencePath<T>>, rx_geometry: ArrayGeometry<T>, tx_geometry: ArrayGeometry<T>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Empty("interference path list"));
        }
        Ok(Self { paths, rx_geometry, tx_geometry })
    }

    pub fn paths(&self) -> &[InterferencePath<T>] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn rx_steering(&self, l: usize) -> CVec<T> {
        let p = &self.paths[l];
        steering_vector(&self.rx_geometry, p.rx_azimuth, p.rx_elevation)
    }

    pub fn tx_steering(&self, l: usize) -> CVec<T> {
        let p = &self.paths[l];
        steering_vector(&self.tx_geometry, p.tx_azimuth, p.tx_elevation)
    }

    /// The same link seen in the opposite direction: realizes `Hᴴ`.
    pub fn reversed(&self) -> Self {
        Self {
            paths: self
                .paths
                .iter()
                .map(|p| InterferencePath {
                    gain: p.gain.conj(),
                    rx_azimuth: p.tx_azimuth,
                    rx_elevation: p.tx_elevation,
                    tx_azimuth: p.rx_azimuth,
                    tx_elevation: p.rx_elevation,
                })
                .collect(),
            rx_geometry: self.tx_geometry,
            tx_geometry: self.rx_geometry,
        }
    }
}

pub fn synth_interference_matrix<T: Real>(ch: &InterferenceChannel<T>) -> CMatrix<T> {
    let mut h = CMatrix::zeros(ch.rx_geometry.num_antennas(), ch.tx_geometry.num_antennas());
    for (l, p) in ch.paths.iter().enumerate() {
        h.add_outer(p.gain, &ch.rx_steering(l), &ch.tx_steering(l));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn broadside_response_is_all_ones() {
        let g = ArrayGeometry::<f64>::half_wavelength(4).unwrap();
        for a in array_response(&g, FRAC_PI_2, FRAC_PI_2) {
            assert!((a - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_turn_phase_step() {
        let g = ArrayGeometry::<f64>::half_wavelength(4).unwrap();
        let a = array_response(&g, (0.5f64).acos(), FRAC_PI_2);
        let want = [Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), Complex::new(-1.0, 0.0), Complex::new(0.0, -1.0)];
        for (x, y) in a.iter().zip(want) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn response_matches_elementwise_formula() {
        let g = ArrayGeometry::<f64>::half_wavelength(16).unwrap();
        let a = array_response(&g, 1.0, FRAC_PI_2);
        for (m, x) in a.iter().enumerate() {
            let phase = PI * m as f64 * 1.0f64.cos();
            assert!((x.re - phase.cos()).abs() < 1e-12 && (x.im - phase.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ArrayGeometry::<f64>::new(0, 0.5, ArrayAxis::Y).is_err());
        assert!(ArrayGeometry::<f64>::new(4, 0.0, ArrayAxis::Y).is_err());
        assert!(PathSet::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn single_and_zeroed_paths() {
        let g = ArrayGeometry::<f64>::half_wavelength(8).unwrap();
        let p1 = PathComponent::planar(Complex::new(1.0, 0.0), 0.7);
        let single = synth_channel(&PathSet::new(vec![p1]).unwrap(), &g);
        assert_eq!(single, array_response(&g, 0.7, FRAC_PI_2));
        let p2 = PathComponent::planar(Complex::new(0.0, 0.0), 2.1);
        let two = synth_channel(&PathSet::new(vec![p1, p2]).unwrap(), &g);
        for (x, y) in two.iter().zip(&single) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_combiner_sees_no_interference() {
        let g = ArrayGeometry::<f64>::half_wavelength(4).unwrap();
        let ch = InterferenceChannel::new(
            vec![InterferencePath {
                gain: Complex::new(1.0, 0.0),
                rx_azimuth: FRAC_PI_2,
                rx_elevation: FRAC_PI_2,
                tx_azimuth: 1.0,
                tx_elevation: FRAC_PI_2,
            }],
            g,
            g,
        )
        .unwrap();
        let h = synth_interference_matrix(&ch);
        // [1, -1, 1, -1]/2 is orthogonal to the all-ones broadside response
        let w: Vec<_> = (0..4).map(|m| Complex::new(if m % 2 == 0 { 0.5 } else { -0.5 }, 0.0)).collect();
        let f = ch.tx_steering(0);
        assert!(h.bilinear(&w, &f).norm() < 1e-14);
    }

    #[test]
    fn reversed_channel_is_conjugate_transpose() {
        let g = ArrayGeometry::<f64>::half_wavelength(5).unwrap();
        let ch = InterferenceChannel::new(
            vec![
                InterferencePath {
                    gain: Complex::new(0.3, -1.2),
                    rx_azimuth: 0.4,
                    rx_elevation: FRAC_PI_2,
                    tx_azimuth: 2.0,
                    tx_elevation: FRAC_PI_2,
                },
                InterferencePath {
                    gain: Complex::new(-0.5, 0.1),
                    rx_azimuth: 1.3,
                    rx_elevation: 1.2,
                    tx_azimuth: 0.9,
                    tx_elevation: FRAC_PI_2,
                },
            ],
            g,
            g,
        )
        .unwrap();
        let h = synth_interference_matrix(&ch).conj_transpose();
        let hr = synth_interference_matrix(&ch.reversed());
        for (x, y) in h.as_slice().iter().zip(hr.as_slice()) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
