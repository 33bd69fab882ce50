//! Multi-BS scenarios: synthetic two-BS layouts, user association and the
//! JSON channel dataset format.
//!
//! Dataset layout (complex values split into parallel real arrays, matrices
//! row-major, positions in meters):
//!
//! ```text
//! {"m": 16,
//!  "bs": [{"id": 0, "users": [{"id": 3, "pos": [x, y, z], "h_re": [..], "h_im": [..]}]}],
//!  "interference": [{"from": 1, "to": 0, "H_re": [..], "H_im": [..]}]}
//! ```

use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    synth_channel, synth_interference_matrix, ArrayGeometry, InterferenceChannel, InterferencePath, PathComponent, PathSet,
};
use crate::linalg::{norm_sqr, CMatrix, CVec};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel<T> {
    pub id: usize,
    pub pos: [f64; 3],
    pub h: CVec<T>,
}

/// Users served by one BS (the set 𝓗_k).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<T> {
    pub id: usize,
    pub users: Vec<UserChannel<T>>,
}

/// Interference from BS `from` (transmitting) into BS `to` (receiving).
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceLink<T> {
    pub from: usize,
    pub to: usize,
    pub matrix: CMatrix<T>,
    /// Path description: always present for synthesized links, optional in datasets.
    pub channel: Option<InterferenceChannel<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub geometry: ArrayGeometry<T>,
    pub bs_positions: Vec<[f64; 3]>,
    pub cells: Vec<Cell<T>>,
    pub links: Vec<InterferenceLink<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn bs_count(&self) -> usize {
        self.cells.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.geometry.num_antennas()
    }

    pub fn cell(&self, k: usize) -> &Cell<T> {
        &self.cells[k]
    }

    pub fn link(&self, from: usize, to: usize) -> Option<&InterferenceLink<T>> {
        self.links.iter().find(|l| l.from == from && l.to == to)
    }

    /// Links carrying interference into BS `k`, ordered by transmitter.
    pub fn links_into(&self, k: usize) -> Vec<&InterferenceLink<T>> {
        let mut v: Vec<_> = self.links.iter().filter(|l| l.to == k).collect();
        v.sort_by_key(|l| l.from);
        v
    }

    /// Receive azimuth of the first (LOS) path of the strongest link into `k`.
    pub fn interference_azimuth(&self, k: usize) -> Option<T> {
        self.links_into(k)
            .into_iter()
            .filter_map(|l| l.channel.as_ref())
            .max_by(|a, b| a.paths()[0].gain.norm().partial_cmp(&b.paths()[0].gain.norm()).unwrap_or(std::cmp::Ordering::Equal))
            .map(|c| c.paths()[0].rx_azimuth)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &ScenarioFile::from_scenario(self))?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&ScenarioFile::from_scenario(self))?)
    }
}

/// Candidate user with a channel to every BS, before association.
#[derive(Debug, Clone, PartialEq)]
pub struct UserCandidate<T> {
    pub id: usize,
    pub pos: [f64; 3],
    pub channels: Vec<CVec<T>>,
}

/// Serving BS per user: the strongest channel 2-norm, lowest index on ties.
pub fn associate_users<T: Real>(users: &[UserCandidate<T>]) -> Vec<usize> {
    users
        .iter()
        .map(|u| {
            let mut best = (0, -T::one());
            for (k, h) in u.channels.iter().enumerate() {
                let p = norm_sqr(h);
                if p > best.1 {
                    best = (k, p);
                }
            }
            best.0
        })
        .collect()
}

/// Per-BS partition of user indices induced by [`associate_users`].
pub fn partition_users<T: Real>(users: &[UserCandidate<T>], bs_count: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); bs_count];
    for (i, k) in associate_users(users).into_iter().enumerate() {
        parts[k].push(i);
    }
    parts
}

/// Azimuth seen by a y-axis ULA at `from` toward `to`, in `[0, π]`.
fn azimuth_between(from: [f64; 3], to: [f64; 3]) -> f64 {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    dx.abs().atan2(dy)
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn random_phase<R: Rng + ?Sized, T: Real>(rng: &mut R, magnitude: f64) -> Complex<T> {
    let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Complex::from_polar(T::lit(magnitude), T::lit(phase))
}

fn grid_axis(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(min + max) / 2.0];
    }
    (0..count).map(|i| min + (max - min) * i as f64 / (count - 1) as f64).collect()
}

/// BS 0 at the origin and BS 1 at `(bs_distance, bs_offset_y)`, both with
/// y-axis ULAs; with zero offset the inter-BS LOS arrives at broadside.
/// Users sit on a rectangular grid between them; user paths have amplitude
/// `d_ref / d` (`d_ref` = half the BS spacing) and the inter-BS LOS
/// amplitude is `inter_bs_gain_db` above the strongest user channel norm.
pub fn generate_two_bs_scenario<T: Real>(cfg: &ScenarioConfig) -> Result<Scenario<T>> {
    cfg.validate()?;
    if cfg.k != 2 {
        return Err(Error::InvalidParameter(format!("two-BS generator needs k = 2, got {}", cfg.k)));
    }
    let geometry = ArrayGeometry::new(cfg.m, T::lit(cfg.antenna_spacing), Default::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bs_positions = vec![[0.0, 0.0, 0.0], [cfg.bs_distance, cfg.bs_offset_y, 0.0]];
    let d_ref = cfg.bs_distance / 2.0;
    let nlos_amp = 10f64.powf(cfg.nlos_offset_db / 20.0);

    let xs = grid_axis(cfg.grid_x_min, cfg.grid_x_max, cfg.grid_cols);
    let ys = grid_axis(cfg.grid_y_min, cfg.grid_y_max, cfg.grid_rows);
    let mut candidates = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let pos = [x, y, 0.0];
            let channels = bs_positions
                .iter()
                .map(|&bs| {
                    let d = distance(bs, pos).max(1.0);
                    let los_amp = d_ref / d;
                    let mut paths = vec![PathComponent::planar(random_phase(&mut rng, los_amp), T::lit(azimuth_between(bs, pos)))];
                    for _ in 1..cfg.user_paths {
                        let az = rng.random_range(0.0..std::f64::consts::PI);
                        paths.push(PathComponent::planar(random_phase(&mut rng, los_amp * nlos_amp), T::lit(az)));
                    }
                    Ok(synth_channel(&PathSet::new(paths)?, &geometry))
                })
                .collect::<Result<Vec<_>>>()?;
            candidates.push(UserCandidate { id: candidates.len(), pos, channels });
        }
    }

    let serving = associate_users(&candidates);
    let strongest = candidates.iter().zip(&serving).map(|(u, &k)| norm_sqr(&u.channels[k]).as_f64().sqrt()).fold(0.0, f64::max);
    let los_gain = 10f64.powf(cfg.inter_bs_gain_db / 20.0) * strongest;

    let broadside = T::FRAC_PI_2();
    let mut paths = vec![InterferencePath {
        gain: random_phase(&mut rng, los_gain),
        rx_azimuth: T::lit(azimuth_between(bs_positions[0], bs_positions[1])),
        rx_elevation: broadside,
        tx_azimuth: T::lit(azimuth_between(bs_positions[1], bs_positions[0])),
        tx_elevation: broadside,
    }];
    for _ in 1..cfg.inter_bs_paths {
        let rx = rng.random_range(0.0..std::f64::consts::PI);
        let tx = rng.random_range(0.0..std::f64::consts::PI);
        paths.push(InterferencePath {
            gain: random_phase(&mut rng, los_gain * nlos_amp),
            rx_azimuth: T::lit(rx),
            rx_elevation: broadside,
            tx_azimuth: T::lit(tx),
            tx_elevation: broadside,
        });
    }
    // BS 1 transmitting into BS 0, and its reverse
    let into_0 = InterferenceChannel::new(paths, geometry, geometry)?;
    let into_1 = into_0.reversed();
    let links = vec![
        InterferenceLink { from: 1, to: 0, matrix: synth_interference_matrix(&into_0), channel: Some(into_0) },
        InterferenceLink { from: 0, to: 1, matrix: synth_interference_matrix(&into_1), channel: Some(into_1) },
    ];

    let mut cells: Vec<Cell<T>> = (0..2).map(|id| Cell { id, users: Vec::new() }).collect();
    for (u, k) in candidates.into_iter().zip(serving) {
        cells[k].users.push(UserChannel { id: u.id, pos: u.pos, h: u.channels[k].clone() });
    }
    Ok(Scenario { geometry, bs_positions, cells, links })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    m: usize,
    bs: Vec<BsEntry>,
    interference: Vec<LinkEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BsEntry {
    id: usize,
    /// Optional extension of the schema; ray-traced exports may omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<[f64; 3]>,
    users: Vec<UserEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UserEntry {
    id: usize,
    pos: [f64; 3],
    h_re: Vec<f64>,
    h_im: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    from: usize,
    to: usize,
    #[serde(rename = "H_re")]
    h_re: Vec<f64>,
    #[serde(rename = "H_im")]
    h_im: Vec<f64>,
    /// Optional path description; datasets from ray tracers usually have
    /// only the matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paths: Option<Vec<PathEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathEntry {
    gain_re: f64,
    gain_im: f64,
    rx_azimuth: f64,
    rx_elevation: f64,
    tx_azimuth: f64,
    tx_elevation: f64,
}

fn split<T: Real>(v: &[Complex<T>]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|x| x.re.as_f64()).collect(), v.iter().map(|x| x.im.as_f64()).collect())
}

fn join<T: Real>(re: &[f64], im: &[f64], expected: usize) -> Result<CVec<T>> {
    for len in [re.len(), im.len()] {
        if len != expected {
            return Err(Error::DimensionMismatch { expected, actual: len });
        }
    }
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex::new(T::lit(a), T::lit(b))).collect())
}

impl ScenarioFile {
    fn from_scenario<T: Real>(s: &Scenario<T>) -> Self {
        Self {
            m: s.num_antennas(),
            bs: s
                .cells
                .iter()
                .enumerate()
                .map(|(k, c)| BsEntry {
                    id: c.id,
                    pos: s.bs_positions.get(k).copied(),
                    users: c
                        .users
                        .iter()
                        .map(|u| {
                            let (h_re, h_im) = split(&u.h);
                            UserEntry { id: u.id, pos: u.pos, h_re, h_im }
                        })
                        .collect(),
                })
                .collect(),
            interference: s
                .links
                .iter()
                .map(|l| {
                    let (h_re, h_im) = split(l.matrix.as_slice());
                    let paths = l.channel.as_ref().map(|ch| {
                        ch.paths()
                            .iter()
                            .map(|p| PathEntry {
                                gain_re: p.gain.re.as_f64(),
                                gain_im: p.gain.im.as_f64(),
                                rx_azimuth: p.rx_azimuth.as_f64(),
                                rx_elevation: p.rx_elevation.as_f64(),
                                tx_azimuth: p.tx_azimuth.as_f64(),
                                tx_elevation: p.tx_elevation.as_f64(),
                            })
                            .collect()
                    });
                    LinkEntry { from: l.from, to: l.to, h_re, h_im, paths }
                })
                .collect(),
        }
    }

    fn into_scenario<T: Real>(self) -> Result<Scenario<T>> {
        let m = self.m;
        let geometry = ArrayGeometry::half_wavelength(m)?;
        if self.bs.len() < 2 {
            return Err(Error::Dataset(format!("need at least two BSs, found {}", self.bs.len())));
        }
        for (i, b) in self.bs.iter().enumerate() {
            if b.id != i {
                return Err(Error::Dataset(format!("BS ids must be 0..K in order; entry {i} has id {}", b.id)));
            }
        }
        let bs_positions: Vec<[f64; 3]> = self.bs.iter().filter_map(|b| b.pos).collect();
        let bs_positions = if bs_positions.len() == self.bs.len() { bs_positions } else { Vec::new() };
        let cells = self
            .bs
            .into_iter()
            .map(|b| {
                Ok(Cell {
                    id: b.id,
                    users: b
                        .users
                        .into_iter()
                        .map(|u| Ok(UserChannel { id: u.id, pos: u.pos, h: join(&u.h_re, &u.h_im, m)? }))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let k = cells.len();
        let links = self
            .interference
            .into_iter()
            .map(|l| {
                if l.from >= k || l.to >= k || l.from == l.to {
                    return Err(Error::Dataset(format!("bad interference link {} -> {}", l.from, l.to)));
                }
                let matrix = CMatrix::from_row_major(m, m, join(&l.h_re, &l.h_im, m * m)?)?;
                let channel = l.paths.map(|paths| link_channel(&paths, &geometry, &matrix)).transpose()?;
                Ok(InterferenceLink { from: l.from, to: l.to, matrix, channel })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario { geometry, bs_positions, cells, links })
    }
}

/// Rebuilds a link's path description and checks it reproduces the stored
/// matrix, which stays authoritative.
fn link_channel<T: Real>(paths: &[PathEntry], geometry: &ArrayGeometry<T>, matrix: &CMatrix<T>) -> Result<InterferenceChannel<T>> {
    let ch = InterferenceChannel::new(
        paths
            .iter()
            .map(|p| InterferencePath {
                gain: Complex::new(T::lit(p.gain_re), T::lit(p.gain_im)),
                rx_azimuth: T::lit(p.rx_azimuth),
                rx_elevation: T::lit(p.rx_elevation),
                tx_azimuth: T::lit(p.tx_azimuth),
                tx_elevation: T::lit(p.tx_elevation),
            })
            .collect(),
        *geometry,
        *geometry,
    )?;
    let rebuilt = synth_interference_matrix(&ch);
    let scale = matrix.as_slice().iter().fold(T::zero(), |a, x| a.max(x.norm()));
    let tol = T::lit(1e-6) * (T::one() + scale);
    if rebuilt.as_slice().iter().zip(matrix.as_slice()).any(|(a, b)| (*a - *b).norm() > tol) {
        return Err(Error::Dataset("interference paths do not reproduce the stored matrix".into()));
    }
    Ok(ch)
}

pub fn load_channel_dataset<T: Real>(path: &Path) -> Result<Scenario<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_channel_dataset(&text)
}

pub fn parse_channel_dataset<T: Real>(text: &str) -> Result<Scenario<T>> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Dataset(e.to_string()))?;
    file.into_scenario()
}

pub fn save_channel_dataset<T: Real>(scenario: &Scenario<T>, path: &Path) -> Result<()> {
    scenario.save_json(path)
}
