//! Run configuration.
//!
//! A config file is flat TOML: one `key = value` per line, `#` comments.
//! Every key is optional and unknown keys are rejected. The resolved config
//! (file values merged over defaults) is echoed into each run manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Every interferer phase drawn i.i.d. uniform per measurement slot.
    Random,
    /// Uniform draws from a fixed beamsteering (DFT-grid) codebook.
    Dft,
    /// The other BSs are learning at the same time.
    #[default]
    Colearn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CacheMode {
    Off,
    /// Cached samples count toward the P-burst; only the shortfall is measured.
    #[default]
    TopUp,
    /// A full fresh burst is taken and pooled with every cached sample.
    Replace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    /// +1 only when gain rises and interference falls.
    #[default]
    Joint,
    /// +1 when the gain-to-interference ratio rises.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    #[default]
    Mlp,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Antennas per BS.
    pub m: usize,
    /// Beams per codebook.
    pub n: usize,
    /// Number of base stations.
    pub k: usize,
    /// Phase-shifter resolution in bits.
    pub r: u32,
    pub antenna_spacing: f64,
    pub p_measurements: usize,
    pub q_measurements: usize,
    /// Users whose channels enter one cluster-gain evaluation.
    pub cluster_sample_size: usize,
    /// Transmit SNR `P_x / σ²` used for rates.
    pub snr_db: f64,
    /// Receiver noise added to each power measurement (linear, 0 disables).
    pub measurement_noise: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_x_min: f64,
    pub grid_x_max: f64,
    pub grid_y_min: f64,
    pub grid_y_max: f64,
    pub bs_distance: f64,
    /// y coordinate of BS 1; nonzero moves the inter-BS LOS off broadside.
    pub bs_offset_y: f64,
    pub user_paths: usize,
    pub inter_bs_paths: usize,
    pub nlos_offset_db: f64,
    /// Inter-BS LOS amplitude relative to the strongest user channel norm.
    pub inter_bs_gain_db: f64,
    pub policy: PolicyKind,
    pub cache_mode: CacheMode,
    pub reward: RewardKind,
    pub estimator: EstimatorKind,
    /// Agent steps per beam.
    pub budget: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the budget over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub discount: f64,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Steps between restarts from the best beam found so far (0 disables).
    pub restart_interval: usize,
    pub gamma: f64,
    pub roc_trials: usize,
    pub roc_gamma_points: usize,
    pub sir_cap_db: f64,
    pub pattern_points: usize,
    pub sensing_beams: usize,
    pub kmeans_iterations: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 16,
            n: 16,
            k: 2,
            r: 4,
            antenna_spacing: 0.5,
            p_measurements: 10,
            q_measurements: 10,
            cluster_sample_size: 4,
            snr_db: 30.0,
            measurement_noise: 0.0,
            grid_rows: 10,
            grid_cols: 20,
            grid_x_min: 10.0,
            grid_x_max: 90.0,
            grid_y_min: -45.0,
            grid_y_max: 45.0,
            bs_distance: 100.0,
            bs_offset_y: 6.0,
            user_paths: 1,
            inter_bs_paths: 1,
            nlos_offset_db: -15.0,
            inter_bs_gain_db: 20.0,
            policy: PolicyKind::Colearn,
            cache_mode: CacheMode::TopUp,
            reward: RewardKind::Joint,
            estimator: EstimatorKind::Mlp,
            budget: 20_000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            discount: 0.5,
            learning_rate: 0.01,
            replay_capacity: 2048,
            batch_size: 8,
            restart_interval: 100,
            gamma: 1.0,
            roc_trials: 2000,
            roc_gamma_points: 41,
            sir_cap_db: 120.0,
            pattern_points: 721,
            sensing_beams: 64,
            kmeans_iterations: 100,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Returns the first offending key and a message.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        fn positive(key: &'static str, v: usize) -> std::result::Result<(), (&'static str, String)> {
            if v == 0 {
                Err((key, format!("{key} must be positive")))
            } else {
                Ok(())
            }
        }
        positive("m", self.m)?;
        positive("n", self.n)?;
        positive("p_measurements", self.p_measurements)?;
        positive("q_measurements", self.q_measurements)?;
        positive("cluster_sample_size", self.cluster_sample_size)?;
        positive("grid_rows", self.grid_rows)?;
        positive("grid_cols", self.grid_cols)?;
        positive("user_paths", self.user_paths)?;
        positive("inter_bs_paths", self.inter_bs_paths)?;
        positive("budget", self.budget)?;
        positive("replay_capacity", self.replay_capacity)?;
        positive("batch_size", self.batch_size)?;
        positive("roc_trials", self.roc_trials)?;
        positive("roc_gamma_points", self.roc_gamma_points)?;
        positive("pattern_points", self.pattern_points)?;
        positive("sensing_beams", self.sensing_beams)?;
        positive("kmeans_iterations", self.kmeans_iterations)?;
        if self.k < 2 {
            return Err(("k", format!("k must be at least 2, got {}", self.k)));
        }
        if !(1..=8).contains(&self.r) {
            return Err(("r", format!("r must be in [1, 8], got {}", self.r)));
        }
        if !(self.antenna_spacing > 0.0) {
            return Err(("antenna_spacing", "antenna_spacing must be positive".into()));
        }
        if !(self.bs_distance > 0.0) {
            return Err(("bs_distance", "bs_distance must be positive".into()));
        }
        if !self.bs_offset_y.is_finite() {
            return Err(("bs_offset_y", "bs_offset_y must be finite".into()));
        }
        if !(self.grid_x_min <= self.grid_x_max) {
            return Err(("grid_x_max", "grid_x_max must not be below grid_x_min".into()));
        }
        if !(self.grid_y_min <= self.grid_y_max) {
            return Err(("grid_y_max", "grid_y_max must not be below grid_y_min".into()));
        }
        if !(self.measurement_noise >= 0.0) {
            return Err(("measurement_noise", "measurement_noise must be nonnegative".into()));
        }
        for (key, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err((key, format!("{key} must be in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(("epsilon_decay_fraction", "epsilon_decay_fraction must be in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(("discount", "discount must be in [0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(("learning_rate", "learning_rate must be positive".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(("gamma", "gamma must be positive".into()));
        }
        let users = self.grid_rows * self.grid_cols;
        if users < self.n * self.k {
            return Err(("n", format!("{users} grid users cannot fill {} beams at {} BSs", self.n, self.k)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| Error::Config { line: None, msg })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| Error::Config { line: e.span().map(|s| line_of_offset(text, s.start)), msg: e.message().to_string() })?;
        cfg.check().map_err(|(key, msg)| Error::Config { line: line_of_key(text, key), msg })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_toml_str(&text)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).map(|rest| rest.trim_start().starts_with('=')).unwrap_or(false)
        })
        .map(|i| i + 1)
}
