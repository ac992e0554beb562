//! Cost-constrained online planning for POMDPs with Monte Carlo tree search.
//!
//! Each history node carries its own Lagrange multiplier and remaining
//! budget, so the search can trade reward against cost differently in
//! different branches of the tree.

// Validation uses `!(x >= 0.0)` so that NaN is rejected along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod envs;
pub mod harness;
pub mod model;
pub mod solver;
pub mod tree;

pub use belief::{BeliefError, BeliefModel, DiscreteBelief, ObservationDensity, ParticleBelief, TabularModel};
pub use model::{CpomdpModel, ModelError, StepRecord, TrajectoryRecord, Transition};
pub use solver::{
    plan, plan_pow, ActionDistribution, AlphaSchedule, CPomcpow, CcPomcp, PlanError, PlanResult, Planner,
    PlannerConfig, RolloutPolicy, WideningConfig,
};
pub use tree::{DualVector, SearchTree};
