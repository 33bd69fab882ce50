//! Evaluation: achievable rates, SIR maps, ROC curves of the ratio test,
//! and beam-pattern exports.

pub mod pattern;
pub mod rate;
pub mod roc;
pub mod sir;

pub use pattern::{angle_grid, beam_patterns, export_patterns, PatternAnnotation, PatternRow};
pub use rate::{objective_value, user_rate, RateResult, UserRate};
pub use roc::{gamma_grid, roc_curve, RocCurve, RocPoint};
pub use sir::{sir_map, sir_map_two_bs, SirReport, SirRow};
