//! Per-beam reinforcement learning: clustering users onto beams, the
//! phase-step action space, the binary reward, and the training loop.

pub mod agent;
pub mod cluster;
pub mod train;
pub mod value;

pub use agent::{
    agent_step, apply_action, compute_reward, AgentConfig, BeamAgent, BeamEnvironment, BeamEstimate, BestRecord, RewardRecord, StepRecord,
};
pub use cluster::{cluster_users, UserCluster};
pub use train::{initial_beam, train_beam, TrainedBeam, TrainingLogRow};
