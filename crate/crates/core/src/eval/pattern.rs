use std::path::Path;

use serde::Serialize;

use crate::codebook::{beam_pattern, beamforming_gain, Codebook};
use crate::error::{Error, Result};
use crate::geometry::{array_response, ArrayGeometry};
use crate::scalar::{to_db, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternRow {
    pub beam_id: usize,
    pub angle_rad: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternAnnotation {
    pub beam_id: usize,
    pub main_lobe_rad: f64,
    pub main_lobe_gain_db: f64,
    pub interference_rad: Option<f64>,
    /// Main-lobe gain minus the gain toward the interference, in dB.
    pub null_depth_db: Option<f64>,
}

/// `points` azimuths evenly covering `[0, π]`.
pub fn angle_grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![std::f64::consts::FRAC_PI_2];
    }
    (0..points).map(|i| std::f64::consts::PI * i as f64 / (points - 1) as f64).collect()
}

/// Sweeps every beam's pattern over the azimuth grid and annotates its
/// main lobe (grid argmax) and, when given, the exact gain toward the
/// interference azimuth.
pub fn beam_patterns<T: Real>(
    codebook: &Codebook<T>,
    geom: &ArrayGeometry<T>,
    interference_azimuth: Option<T>,
    points: usize,
) -> Result<(Vec<PatternRow>, Vec<PatternAnnotation>)> {
    if points == 0 {
        return Err(Error::Empty("angle grid"));
    }
    let angles: Vec<T> = angle_grid(points).into_iter().map(T::lit).collect();
    let mut rows = Vec::with_capacity(codebook.len() * points);
    let mut notes = Vec::with_capacity(codebook.len());
    for (id, w) in codebook.beams().iter().enumerate() {
        let pattern = beam_pattern(w, geom, &angles)?;
        let (mut peak_angle, mut peak) = (pattern[0].0, pattern[0].1);
        for &(phi, g) in &pattern {
            rows.push(PatternRow { beam_id: id, angle_rad: phi.as_f64(), gain_db: to_db(g).as_f64() });
            if g > peak {
                peak = g;
                peak_angle = phi;
            }
        }
        let peak_db = to_db(peak).as_f64();
        let toward = interference_azimuth.map(|az| beamforming_gain(w, &array_response(geom, az, T::FRAC_PI_2()))).transpose()?;
        notes.push(PatternAnnotation {
            beam_id: id,
            main_lobe_rad: peak_angle.as_f64(),
            main_lobe_gain_db: peak_db,
            interference_rad: interference_azimuth.map(|a| a.as_f64()),
            null_depth_db: toward.map(|g| peak_db - to_db(g).as_f64()),
        });
    }
    Ok((rows, notes))
}

/// Writes `patterns.csv` and `pattern_annotations.csv` into `dir`.
pub fn export_patterns<T: Real>(
    codebook: &Codebook<T>,
    geom: &ArrayGeometry<T>,
    interference_azimuth: Option<T>,
    points: usize,
    dir: &Path,
) -> Result<Vec<PatternAnnotation>> {
    let (rows, notes) = beam_patterns(codebook, geom, interference_azimuth, points)?;
    let mut w = csv::Writer::from_path(dir.join("patterns.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("pattern_annotations.csv"))?;
    for n in &notes {
        w.serialize(n)?;
    }
    w.flush()?;
    Ok(notes)
}
