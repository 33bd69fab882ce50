//! Multi-BS coordination: how interferers pick beams, the per-BS
//! measurement cache, and the round-robin learning loop.

pub mod cache;
pub mod environment;
pub mod policy;
pub mod run;

pub use cache::{cache_append, cache_lookup, CrossBsAudit, MeasurementCache};
pub use environment::{MeasuredEnvironment, MeasurementPlan};
pub use policy::{draw_interferer_beam, random_beam, InterfererPolicy};
pub use run::{cluster_all, run_decentralized_learning, LearningOutcome, OrchestrationSchedule, Role};
