//! Lagrangian-guided Monte Carlo tree search for constrained POMDPs.
//!
//! [`CcPomcp`] keys observation children by equality; [`CPomcpow`] adds
//! double progressive widening with weighted beliefs. Both run either with a
//! single global dual vector updated at the root, or with history-local
//! duals updated by recursive ascent (`PlannerConfig::local_duals`).

mod config;
mod policy;
mod search;
mod widening;

pub use config::{AlphaSchedule, PlannerConfig, RolloutPolicy};
pub use policy::{
    exploration_bonus, propagate_budget, scalarized_value, stochastic_policy, ucb_policy, ActionDistribution,
    ChildView,
};
pub use search::{rollout, Branch, Branching, ExactBranching, Planner};
pub use widening::{ObservationWidening, WideningConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefModel, ObservationDensity, StateSampler};
use crate::model::{CpomdpModel, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("budget has {got} entries, model has {expected} cost signals")]
    BudgetLength { expected: usize, got: usize },
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite value estimate at the root")]
    NonFinite,
}

pub type CcPomcp<'m, M> = Planner<'m, M, ExactBranching>;
pub type CPomcpow<'m, M> = Planner<'m, M, ObservationWidening>;

impl<'m, M: CpomdpModel> Planner<'m, M, ExactBranching> {
    pub fn new(model: &'m M, config: PlannerConfig) -> Result<Self, PlanError> {
        Self::with_branching(model, config, ExactBranching)
    }
}

impl<'m, M: ObservationDensity> Planner<'m, M, ObservationWidening> {
    pub fn widening(model: &'m M, config: PlannerConfig, widening: WideningConfig) -> Result<Self, PlanError> {
        widening.validate()?;
        Self::with_branching(model, config, ObservationWidening { config: widening })
    }
}

/// Root statistics of one explored action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootActionStats {
    pub action: usize,
    pub visits: u64,
    pub q_reward: f64,
    pub q_cost: Vec<f64>,
    pub step_cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Stochastic root policy over action indices.
    pub policy: ActionDistribution,
    /// Most probable action of `policy`.
    pub best_action: usize,
    /// Root dual vector after ascent.
    pub lambda: Vec<f64>,
    /// `N(b₀)`.
    pub visits: u64,
    pub actions: Vec<RootActionStats>,
    /// Root λ after every simulation, when recording is enabled.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_trace: Vec<Vec<f64>>,
}

impl PlanResult {
    /// `N(b₀, a) / N(b₀)` indexed by action, over `num_actions` actions.
    pub fn visit_fractions(&self, num_actions: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_actions];
        if self.visits == 0 {
            return out;
        }
        for a in &self.actions {
            out[a.action] = a.visits as f64 / self.visits as f64;
        }
        out
    }

    pub fn stats(&self, action: usize) -> Option<&RootActionStats> {
        self.actions.iter().find(|a| a.action == action)
    }

    /// Single-step cost estimate `c̄(b₀, a)`; zero for unexplored actions.
    pub fn step_cost(&self, action: usize, num_costs: usize) -> Vec<f64> {
        self.stats(action)
            .map(|s| s.step_cost.clone())
            .unwrap_or_else(|| vec![0.0; num_costs])
    }
}

/// One planning call with global or local duals and exact observation
/// branching.
pub fn plan<M, B, R>(
    model: &M,
    belief: &B,
    budget: &[f64],
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult, PlanError>
where
    M: CpomdpModel,
    B: StateSampler<M::State>,
    R: Rng + ?Sized,
{
    CcPomcp::new(model, config.clone())?.plan(belief, budget, rng)
}

/// One planning call with observation widening.
pub fn plan_pow<M, B, R>(
    model: &M,
    belief: &B,
    budget: &[f64],
    config: &PlannerConfig,
    widening: &WideningConfig,
    rng: &mut R,
) -> Result<PlanResult, PlanError>
where
    M: ObservationDensity,
    B: StateSampler<M::State>,
    R: Rng + ?Sized,
{
    CPomcpow::widening(model, config.clone(), *widening)?.plan(belief, budget, rng)
}

/// Between-step update after executing `action` and observing `obs`: the
/// belief goes through the model's updater and the budget through
/// `(ĉ − c̄(b₀, a)) / γ` with the planner's learned step-cost estimate.
#[allow(clippy::too_many_arguments)]
pub fn step_episode<M, R>(
    model: &M,
    belief: &M::Belief,
    budget: &[f64],
    plan: &PlanResult,
    action: usize,
    obs: &M::Obs,
    n_particles: usize,
    rng: &mut R,
) -> Result<(M::Belief, Vec<f64>), PlanError>
where
    M: BeliefModel,
    R: Rng + ?Sized,
{
    let next = model.update_belief(belief, &model.actions()[action], obs, n_particles, rng)?;
    let step_cost = plan.step_cost(action, budget.len());
    Ok((next, propagate_budget(budget, &step_cost, model.discount())))
}
