//! The shared Lagrangian-guided search engine.
//!
//! One engine serves both the unwidened planners (children keyed by exact
//! observation equality) and the widening planners; the difference is
//! isolated in [`Branching`]. Dual bookkeeping (initialization from the
//! parent, recursive local ascent, budget recursion) is the same code for
//! both.

use rand::Rng;

use super::config::{PlannerConfig, RolloutPolicy};
use super::policy::{propagate_budget, ucb_policy, ActionDistribution, ChildView};
use super::{PlanError, PlanResult, RootActionStats};
use crate::belief::StateSampler;
use crate::model::{validate_model, CpomdpModel};
use crate::tree::{ActionId, DualVector, HistoryId, NodeInit, SearchTree};

/// Where a simulation continues after sampling `(s′, o)` below an action.
#[derive(Debug)]
pub enum Branch<S> {
    /// Recurse into an existing history with the given state.
    Existing(HistoryId, S),
    /// A history was just created; evaluate it by rollout from `s′`.
    New(HistoryId),
}

/// Observation (and action) branching rule of a planner.
pub trait Branching<M: CpomdpModel> {
    /// Whether in-tree beliefs store weighted particles.
    fn weighted_beliefs(&self) -> bool;

    /// Makes sure `h` holds the action children it is entitled to on this
    /// visit.
    fn widen_actions<R: Rng + ?Sized>(
        &self,
        tree: &mut SearchTree<M::State, M::Obs>,
        h: HistoryId,
        num_actions: usize,
        init: &NodeInit,
        rng: &mut R,
    );

    #[allow(clippy::too_many_arguments)]
    fn branch<R: Rng + ?Sized>(
        &self,
        model: &M,
        tree: &mut SearchTree<M::State, M::Obs>,
        action: ActionId,
        next: &M::State,
        obs: &M::Obs,
        budget: Vec<f64>,
        rng: &mut R,
    ) -> Branch<M::State>;
}

/// Children keyed by exact observation equality with no cap; every action
/// is expanded when a history is created.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactBranching;

impl<M: CpomdpModel> Branching<M> for ExactBranching {
    fn weighted_beliefs(&self) -> bool {
        false
    }

    fn widen_actions<R: Rng + ?Sized>(
        &self,
        tree: &mut SearchTree<M::State, M::Obs>,
        h: HistoryId,
        num_actions: usize,
        init: &NodeInit,
        _rng: &mut R,
    ) {
        if tree.history(h).children.is_empty() {
            tree.expand_actions(h, num_actions, init);
        }
    }

    fn branch<R: Rng + ?Sized>(
        &self,
        _model: &M,
        tree: &mut SearchTree<M::State, M::Obs>,
        action: ActionId,
        next: &M::State,
        obs: &M::Obs,
        budget: Vec<f64>,
        _rng: &mut R,
    ) -> Branch<M::State> {
        match tree.find_child(action, obs) {
            Some(child) => {
                tree.history_mut(child).belief.push(next.clone(), 1.0);
                Branch::Existing(child, next.clone())
            }
            None => {
                let child = tree.push_child(action, obs.clone(), budget);
                tree.history_mut(child).belief.push(next.clone(), 1.0);
                Branch::New(child)
            }
        }
    }
}

/// A planner over model `M` using branching rule `B`.
///
/// Holds the tree of the most recent [`plan`](Planner::plan) call so it can
/// be inspected or exported, and optionally re-rooted for reuse.
pub struct Planner<'m, M: CpomdpModel, B = ExactBranching> {
    model: &'m M,
    config: PlannerConfig,
    branching: B,
    tree: Option<SearchTree<M::State, M::Obs>>,
    carried: Option<SearchTree<M::State, M::Obs>>,
}

impl<'m, M, B> Planner<'m, M, B>
where
    M: CpomdpModel,
    B: Branching<M>,
{
    pub fn with_branching(model: &'m M, config: PlannerConfig, branching: B) -> Result<Self, PlanError> {
        config.validate()?;
        validate_model(model)?;
        let k = model.num_costs();
        if config.initial_lambda.len() != 1 && config.initial_lambda.len() != k {
            return Err(PlanError::InvalidConfig(format!(
                "initial lambda has {} entries for {k} cost signals",
                config.initial_lambda.len()
            )));
        }
        Ok(Self { model, config, branching, tree: None, carried: None })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    /// Tree built by the most recent planning call.
    pub fn tree(&self) -> Option<&SearchTree<M::State, M::Obs>> {
        self.tree.as_ref()
    }

    fn initial_lambda(&self) -> DualVector {
        let k = self.model.num_costs();
        let values = if self.config.initial_lambda.len() == k {
            self.config.initial_lambda.clone()
        } else {
            vec![self.config.initial_lambda[0]; k]
        };
        DualVector::new(values, self.config.lambda_max)
    }

    /// Informs the planner of the executed action and received observation.
    /// With tree reuse enabled the matching subtree seeds the next search.
    pub fn advance(&mut self, action: usize, obs: &M::Obs) {
        self.carried = None;
        if !self.config.reuse_tree {
            return;
        }
        let Some(tree) = &self.tree else { return };
        let root = tree.root();
        let Some(&a_id) = root.children.iter().find(|&&a| tree.action(a).action == action) else {
            return;
        };
        if let Some(h) = tree.find_child(a_id, obs) {
            self.carried = Some(tree.reroot(h));
        }
    }

    /// Runs `n` simulations from `belief` with root budget `budget`,
    /// interleaving root dual ascent, and returns the stochastic root policy.
    pub fn plan<Bel, R>(&mut self, belief: &Bel, budget: &[f64], rng: &mut R) -> Result<PlanResult, PlanError>
    where
        Bel: StateSampler<M::State>,
        R: Rng + ?Sized,
    {
        let k = self.model.num_costs();
        if budget.len() != k {
            return Err(PlanError::BudgetLength { expected: k, got: budget.len() });
        }
        let lambda0 = self.initial_lambda();
        let mut tree = match self.carried.take() {
            Some(mut t) => {
                t.history_mut(SearchTree::<M::State, M::Obs>::ROOT).lambda = lambda0;
                t
            }
            None => SearchTree::new(
                lambda0,
                budget.to_vec(),
                self.config.local_duals,
                self.branching.weighted_beliefs(),
            ),
        };
        let root = SearchTree::<M::State, M::Obs>::ROOT;
        tree.history_mut(root).remaining_budget = budget.to_vec();
        let n_actions = self.model.actions().len();
        let mut trace = Vec::new();

        for i in 1..=self.config.simulations {
            let s = belief.sample_state(rng)?;
            tree.history_mut(root).belief.push(s.clone(), 1.0);
            self.simulate(&mut tree, s, root, budget, self.config.max_depth, rng);

            self.branching
                .widen_actions(&mut tree, root, n_actions, &self.config.node_init, rng);
            let greedy = select(&tree, root, 0.0, 0.0, budget).sample(rng);
            let q_cost = tree.action(greedy).q_cost.clone();
            let step = self.config.alpha.step(i as u64);
            tree.history_mut(root).lambda.ascend(step, &q_cost, budget);
            if self.config.record_lambda_trace {
                trace.push(tree.root().lambda.values().to_vec());
            }
        }

        let result = self.result(&tree, budget, trace)?;
        debug_assert!(tree.check_count_conservation().is_ok());
        self.tree = Some(tree);
        Ok(result)
    }

    fn result(
        &self,
        tree: &SearchTree<M::State, M::Obs>,
        budget: &[f64],
        lambda_trace: Vec<Vec<f64>>,
    ) -> Result<PlanResult, PlanError> {
        let root = tree.root();
        let actions: Vec<RootActionStats> = root
            .children
            .iter()
            .map(|&a| {
                let n = tree.action(a);
                RootActionStats {
                    action: n.action,
                    visits: n.visits,
                    q_reward: n.q_reward,
                    q_cost: n.q_cost.clone(),
                    step_cost: n.step_cost.clone(),
                }
            })
            .collect();
        let finite = actions.iter().all(|a| {
            a.q_reward.is_finite() && a.q_cost.iter().chain(&a.step_cost).all(|x| x.is_finite())
        });
        if !finite {
            return Err(PlanError::NonFinite);
        }
        let children = &root.children;
        let policy = select_positions(tree, SearchTree::<M::State, M::Obs>::ROOT, 0.0, self.config.tolerance, budget)
            .map(|pos| tree.action(children[pos]).action);
        Ok(PlanResult {
            best_action: policy.argmax(),
            policy,
            lambda: root.lambda.values().to_vec(),
            visits: root.visits,
            actions,
            lambda_trace,
        })
    }

    fn simulate<R: Rng + ?Sized>(
        &self,
        tree: &mut SearchTree<M::State, M::Obs>,
        state: M::State,
        h: HistoryId,
        budget: &[f64],
        depth: usize,
        rng: &mut R,
    ) -> (f64, Vec<f64>) {
        let k = self.model.num_costs();
        if depth == 0 || self.model.is_terminal(&state) {
            return (0.0, vec![0.0; k]);
        }
        let n_actions = self.model.actions().len();
        tree.history_mut(h).remaining_budget = budget.to_vec();
        self.branching
            .widen_actions(tree, h, n_actions, &self.config.node_init, rng);

        let a_id = select(tree, h, self.config.exploration, self.config.tolerance, budget).sample(rng);
        let action = &self.model.actions()[tree.action(a_id).action];
        let tr = self.model.step(&state, action, rng);
        let gamma = self.model.discount();

        let (child_return, child_cost) = if depth == 1 || self.model.is_terminal(&tr.state) {
            (0.0, vec![0.0; k])
        } else {
            let child_budget = propagate_budget(budget, &tree.action(a_id).step_cost, gamma);
            match self.branching.branch(self.model, tree, a_id, &tr.state, &tr.obs, child_budget.clone(), rng) {
                Branch::Existing(child, s) => self.simulate(tree, s, child, &child_budget, depth - 1, rng),
                Branch::New(child) => {
                    self.branching
                        .widen_actions(tree, child, n_actions, &self.config.node_init, rng);
                    self.rollout(tr.state.clone(), depth - 1, rng)
                }
            }
        };

        let ret = tr.reward + gamma * child_return;
        let cost: Vec<f64> = tr.cost.iter().zip(&child_cost).map(|(c, f)| c + gamma * f).collect();
        tree.visit(a_id);
        tree.backup(a_id, ret, &cost, &tr.cost);
        if self.config.local_duals {
            let n_h = tree.history(h).visits;
            let step = self.config.alpha.step(n_h);
            let q_cost = tree.action(a_id).q_cost.clone();
            tree.history_mut(h).lambda.ascend(step, &q_cost, budget);
        }
        (ret, cost)
    }

    /// Default-policy simulation to depth `depth` or a terminal state.
    pub fn rollout<R: Rng + ?Sized>(&self, state: M::State, depth: usize, rng: &mut R) -> (f64, Vec<f64>) {
        rollout(self.model, &self.config.rollout, state, depth, rng)
    }
}

/// Discounted return and cost of the rollout policy from `state`.
pub fn rollout<M: CpomdpModel, R: Rng + ?Sized>(
    model: &M,
    policy: &RolloutPolicy,
    mut state: M::State,
    depth: usize,
    rng: &mut R,
) -> (f64, Vec<f64>) {
    let gamma = model.discount();
    let actions = model.actions();
    let mut ret = 0.0;
    let mut cost = vec![0.0; model.num_costs()];
    let mut weight = 1.0;
    for _ in 0..depth {
        if model.is_terminal(&state) {
            break;
        }
        let a = match policy {
            RolloutPolicy::Uniform => rng.random_range(0..actions.len()),
            RolloutPolicy::Fixed(i) => *i,
        };
        let tr = model.step(&state, &actions[a], rng);
        ret += weight * tr.reward;
        for (acc, c) in cost.iter_mut().zip(&tr.cost) {
            *acc += weight * c;
        }
        weight *= gamma;
        state = tr.state;
    }
    (ret, cost)
}

fn select_positions<S, O>(
    tree: &SearchTree<S, O>,
    h: HistoryId,
    kappa: f64,
    nu: f64,
    budget: &[f64],
) -> ActionDistribution {
    let node = tree.history(h);
    let views: Vec<ChildView> = node
        .children
        .iter()
        .map(|&a| {
            let n = tree.action(a);
            ChildView { visits: n.visits, q_reward: n.q_reward, q_cost: &n.q_cost }
        })
        .collect();
    ucb_policy(&views, node.visits, tree.lambda_at(h), kappa, nu, budget)
}

/// Selection distribution over the action-node ids of `h`.
fn select<S, O>(tree: &SearchTree<S, O>, h: HistoryId, kappa: f64, nu: f64, budget: &[f64]) -> SelectDist {
    let children = tree.history(h).children.clone();
    SelectDist { dist: select_positions(tree, h, kappa, nu, budget), children }
}

struct SelectDist {
    dist: ActionDistribution,
    children: Vec<ActionId>,
}

impl SelectDist {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionId {
        self.children[self.dist.sample(rng)]
    }
}
