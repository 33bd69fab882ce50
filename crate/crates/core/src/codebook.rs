//! Phase-quantized analog beams and beam codebooks.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{array_response, ArrayGeometry};
use crate::linalg::{inner, CVec};
use crate::scalar::Real;

/// The `2^r` phase-shifter levels `-π + 2πk/2^r`, `k = 1..2^r`.
///
/// Level index `i` corresponds to `k = i + 1`, so index 0 is the smallest
/// phase above `-π` and the last index is exactly `π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSet {
    bits: u32,
}

impl PhaseSet {
    pub const MAX_BITS: u32 = 15;

    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > Self::MAX_BITS {
            return Err(Error::InvalidParameter(format!("phase resolution must be 1..={} bits, got {bits}", Self::MAX_BITS)));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    pub fn phase<T: Real>(&self, index: usize) -> T {
        let levels = T::from_usize_lossy(self.levels());
        -T::PI() + T::lit(2.0) * T::PI() * T::from_usize_lossy(index + 1) / levels
    }

    pub fn values<T: Real>(&self) -> Vec<T> {
        (0..self.levels()).map(|i| self.phase(i)).collect()
    }

    /// Index of the level closest (on the circle) to `theta`.
    pub fn quantize<T: Real>(&self, theta: T) -> usize {
        let levels = self.levels() as i64;
        let two_pi = T::lit(2.0) * T::PI();
        let pos = ((theta + T::PI()) / two_pi * T::from_usize_lossy(self.levels())).round().to_i64().unwrap_or(0);
        (pos - 1).rem_euclid(levels) as usize
    }
}

/// Analog beam `w = M^{-1/2} [e^{jθ_1}, …, e^{jθ_M}]` with every `θ_m` in the
/// phase set.
#[derive(Debug, Clone)]
pub struct QuantizedBeam<T> {
    indices: Vec<u16>,
    phase_set: PhaseSet,
    weights: CVec<T>,
}

impl<T> PartialEq for QuantizedBeam<T> {
    fn eq(&self, other: &Self) -> bool {
        self.indices == other.indices && self.phase_set == other.phase_set
    }
}

impl<T> Eq for QuantizedBeam<T> {}

impl<T: Real> QuantizedBeam<T> {
    pub fn from_indices(indices: Vec<u16>, phase_set: PhaseSet) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("phase index vector"));
        }
        let levels = phase_set.levels();
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= levels) {
            return Err(Error::IndexOutOfRange { index: bad as usize, levels });
        }
        let amp = T::one() / T::from_usize_lossy(indices.len()).sqrt();
        let weights = indices.iter().map(|&i| Complex::from_polar(amp, phase_set.phase::<T>(i as usize))).collect();
        Ok(Self { indices, phase_set, weights })
    }

    /// Quantizes arbitrary element phases to the nearest levels.
    pub fn from_phases(phases: &[T], phase_set: PhaseSet) -> Result<Self> {
        let idx = phases.iter().map(|&p| phase_set.quantize(p) as u16).collect();
        Self::from_indices(idx, phase_set)
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn phase_set(&self) -> PhaseSet {
        self.phase_set
    }

    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    pub fn num_antennas(&self) -> usize {
        self.indices.len()
    }

    pub fn phases(&self) -> Vec<T> {
        self.indices.iter().map(|&i| self.phase_set.phase(i as usize)).collect()
    }
}

/// Convenience wrapper over [`QuantizedBeam::from_indices`] that checks `M`.
pub fn beam_from_indices<T: Real>(indices: &[u16], m: usize, phase_set: PhaseSet) -> Result<QuantizedBeam<T>> {
    if indices.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: indices.len() });
    }
    QuantizedBeam::from_indices(indices.to_vec(), phase_set)
}

/// `|wᴴ h|²`.
pub fn beamforming_gain<T: Real>(w: &QuantizedBeam<T>, h: &[Complex<T>]) -> Result<T> {
    if h.len() != w.num_antennas() {
        return Err(Error::DimensionMismatch { expected: w.num_antennas(), actual: h.len() });
    }
    Ok(inner(w.weights(), h).norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    beams: Vec<QuantizedBeam<T>>,
}

impl<T: Real> Codebook<T> {
    pub fn new(beams: Vec<QuantizedBeam<T>>) -> Result<Self> {
        let first = beams.first().ok_or(Error::Empty("codebook"))?;
        let (m, ps) = (first.num_antennas(), first.phase_set());
        for b in &beams {
            if b.num_antennas() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: b.num_antennas() });
            }
            if b.phase_set() != ps {
                return Err(Error::InvalidParameter("codebook beams use different phase resolutions".into()));
            }
        }
        Ok(Self { beams })
    }

    pub fn beams(&self) -> &[QuantizedBeam<T>] {
        &self.beams
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn num_antennas(&self) -> usize {
        self.beams[0].num_antennas()
    }

    pub fn phase_set(&self) -> PhaseSet {
        self.beams[0].phase_set()
    }

    /// One row per beam: `beam_id, p0, …, p{M-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["beam_id".to_string()];
        header.extend((0..self.num_antennas()).map(|m| format!("p{m}")));
        wtr.write_record(&header)?;
        for (id, b) in self.beams.iter().enumerate() {
            let mut row = vec![id.to_string()];
            row.extend(b.indices().iter().map(|i| i.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, phase_set: PhaseSet) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut beams = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let idx = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<u16>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad phase index in codebook csv: {e}")))?;
            beams.push(QuantizedBeam::from_indices(idx, phase_set)?);
        }
        Self::new(beams)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: &Path, phase_set: PhaseSet) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, phase_set)
    }
}

/// Beam training: `argmax_n |w_nᴴ h|²`, lowest index on ties.
pub fn beam_training_select<T: Real>(codebook: &Codebook<T>, h: &[Complex<T>]) -> Result<(usize, T)> {
    let mut best = (0, -T::one());
    for (n, w) in codebook.beams().iter().enumerate() {
        let g = beamforming_gain(w, h)?;
        if g > best.1 {
            best = (n, g);
        }
    }
    Ok(best)
}

/// Spatial frequencies `cos φ_n = -1 + (2n + 1)/N` of a beamsteering grid.
pub fn steering_grid<T: Real>(n: usize) -> Vec<T> {
    let nn = T::from_usize_lossy(n);
    (0..n).map(|i| -T::one() + (T::lit(2.0) * T::from_usize_lossy(i) + T::one()) / nn).collect()
}

/// Beamsteering codebook with `N` beams on a uniform spatial-frequency grid
/// over `[-1, 1)`, element phases quantized to the phase set.
pub fn beamsteering_codebook<T: Real>(geom: &ArrayGeometry<T>, n: usize, phase_set: PhaseSet) -> Result<Codebook<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("codebook needs at least one beam".into()));
    }
    let beams = steering_grid::<T>(n).into_iter().map(|c| steering_beam(geom, c.acos(), phase_set)).collect::<Result<Vec<_>>>()?;
    Codebook::new(beams)
}

/// Quantized beam matched to `a(azimuth, π/2)`.
pub fn steering_beam<T: Real>(geom: &ArrayGeometry<T>, azimuth: T, phase_set: PhaseSet) -> Result<QuantizedBeam<T>> {
    let a = array_response(geom, azimuth, T::FRAC_PI_2());
    let phases: Vec<T> = a.iter().map(|x| x.arg()).collect();
    QuantizedBeam::from_phases(&phases, phase_set)
}

/// `|wᴴ a(φ, π/2)|²` over an azimuth grid.
pub fn beam_pattern<T: Real>(w: &QuantizedBeam<T>, geom: &ArrayGeometry<T>, angles: &[T]) -> Result<Vec<(T, T)>> {
    if angles.is_empty() {
        return Err(Error::Empty("angle grid"));
    }
    angles.iter().map(|&phi| Ok((phi, beamforming_gain(w, &array_response(geom, phi, T::FRAC_PI_2()))?))).collect()
}
