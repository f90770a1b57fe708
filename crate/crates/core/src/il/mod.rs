//! Imitation-learning procedures: behavioral cloning, max-entropy IRL on a
//! discretized abstraction, GAIL, DAgger, and crowd aggregation of paths.
//!
//! Discriminator orientation used throughout: `D(s, a)` is pushed towards 1 on
//! policy pairs and towards 0 on expert pairs, so the discriminator maximizes
//! `E_policy[ln D] + E_expert[ln(1 - D)]` and the policy's per-step cost is
//! `ln D(s, a)`.

mod bc;
mod dagger;
mod dataset;
mod discretize;
mod gail;
mod irl;
mod mdp;
mod stats;
mod woc;

pub use bc::{bc_train, BcConfig, BcResult, LossKind};
pub use dagger::{
    dagger_episode_seed, dagger_initial_policy, dagger_train, DaggerConfig, DaggerResult,
};
pub use dataset::{ExpertDataset, Sample, SourceKind};
pub use discretize::{
    discretize_task, occupancy_estimate, DiscreteTrajectory, Discretizer, OccupancyEstimate,
};
pub use gail::{
    advantages, discriminator_update, gail_episode_seed, gail_train, policy_gradient_step,
    returns_to_go, returns_to_go_with_tail, surrogate, Discriminator, GailConfig, GailIteration,
    GailResult, PgConfig, PgStats, SurrogateSample, LOGIT_CLAMP,
};
pub use irl::{
    expert_feature_expectations, maxent_gradient, maxent_irl, soft_policy, soft_visitation,
    IrlConfig, IrlResult, RewardModel,
};
pub use mdp::{value_iteration, GridMdp, ValueIteration, GRID_ACTIONS};
pub use stats::{evaluate_success, sign_test_one_sided};
pub use woc::{resample_path, woc_aggregate, WocReport};

use alloc::string::String;

use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IlError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("MDP has no reward")]
    MissingReward,
    #[error("transition row (state {state}, action {action}) sums to {sum}")]
    NotStochastic {
        state: usize,
        action: usize,
        sum: f64,
    },
    #[error("trajectory {0} carries no sampling log-probabilities")]
    MissingLogProbs(usize),
    #[error("need at least 2 trajectories, got {0}")]
    TooFewTrajectories(usize),
    #[error("trajectory {0} has zero length")]
    ZeroLength(usize),
    #[error("degenerate grid: every dimension needs at least 2 cells")]
    DegenerateGrid,
    #[error("index {index} out of range for {len} {what}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
}
