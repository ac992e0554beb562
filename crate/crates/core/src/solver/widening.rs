//! Double progressive widening with weighted in-tree beliefs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::search::{Branch, Branching};
use super::PlanError;
use crate::belief::{ObservationDensity, StateSampler};
use crate::tree::{ActionId, HistoryId, NodeInit, SearchTree};

/// Children of an action node are capped at `k_obs · N(h,a)^α_obs`; action
/// children of a history at `k_act · N(h)^α_act` when action widening is on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WideningConfig {
    pub k_obs: f64,
    pub alpha_obs: f64,
    pub k_act: f64,
    pub alpha_act: f64,
    pub enable_action_widening: bool,
}

impl Default for WideningConfig {
    fn default() -> Self {
        Self { k_obs: 4.0, alpha_obs: 0.1, k_act: 2.0, alpha_act: 0.25, enable_action_widening: false }
    }
}

impl WideningConfig {
    /// No cap on observation children: every novel observation branches.
    pub fn unbounded() -> Self {
        Self { k_obs: f64::INFINITY, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = |k: f64, a: f64| k >= 1.0 && (0.0..1.0).contains(&a);
        if !ok(self.k_obs, self.alpha_obs) {
            return Err(PlanError::InvalidConfig("observation widening needs k >= 1, alpha in [0,1)".into()));
        }
        if self.enable_action_widening && !ok(self.k_act, self.alpha_act) {
            return Err(PlanError::InvalidConfig("action widening needs k >= 1, alpha in [0,1)".into()));
        }
        Ok(())
    }

    /// Maximum number of observation children after `visits` traversals.
    pub fn obs_cap(&self, visits: u64) -> f64 {
        self.k_obs * (visits as f64).powf(self.alpha_obs)
    }

    pub fn action_cap(&self, visits: u64) -> f64 {
        self.k_act * (visits as f64).powf(self.alpha_act)
    }
}

/// Branching rule of the widening planners.
///
/// A sampled observation that already keys a child continues there with the
/// simulated state. Otherwise a new child is opened while the cap allows it;
/// once the cap is reached the simulation is funnelled into an existing child
/// chosen in proportion to its visits, the simulated state is appended to
/// that child's weighted belief, and the continuation state is redrawn from
/// it.
#[derive(Debug, Clone, Copy)]
pub struct ObservationWidening {
    pub config: WideningConfig,
}

impl<M: ObservationDensity> Branching<M> for ObservationWidening {
    fn weighted_beliefs(&self) -> bool {
        true
    }

    fn widen_actions<R: Rng + ?Sized>(
        &self,
        tree: &mut SearchTree<M::State, M::Obs>,
        h: HistoryId,
        num_actions: usize,
        init: &NodeInit,
        rng: &mut R,
    ) {
        if !self.config.enable_action_widening {
            if tree.history(h).children.is_empty() {
                tree.expand_actions(h, num_actions, init);
            }
            return;
        }
        let cap = self.config.action_cap(tree.history(h).visits + 1);
        while (tree.history(h).children.len() as f64) < cap && tree.history(h).children.len() < num_actions {
            let taken: Vec<usize> = tree
                .history(h)
                .children
                .iter()
                .map(|&a| tree.action(a).action)
                .collect();
            let untried: Vec<usize> = (0..num_actions).filter(|a| !taken.contains(a)).collect();
            let pick = untried[rng.random_range(0..untried.len())];
            tree.add_action(h, pick, init);
        }
    }

    fn branch<R: Rng + ?Sized>(
        &self,
        model: &M,
        tree: &mut SearchTree<M::State, M::Obs>,
        action: ActionId,
        next: &M::State,
        obs: &M::Obs,
        budget: Vec<f64>,
        rng: &mut R,
    ) -> Branch<M::State> {
        let a = &model.actions()[tree.action(action).action];
        if let Some(child) = tree.find_child(action, obs) {
            let w = model.obs_density(a, next, obs);
            tree.history_mut(child).belief.push(next.clone(), w);
            return Branch::Existing(child, next.clone());
        }
        let n_children = tree.action(action).children.len();
        let cap = self.config.obs_cap(tree.action(action).visits + 1);
        if (n_children as f64) < cap {
            let w = model.obs_density(a, next, obs);
            let child = tree.push_child(action, obs.clone(), budget);
            tree.history_mut(child).belief.push(next.clone(), w);
            return Branch::New(child);
        }

        let child = pick_by_visits(tree, action, rng);
        let child_obs = tree.history(child).obs.clone().expect("observation child has a key");
        let w = model.obs_density(a, next, &child_obs);
        let node = tree.history_mut(child);
        node.belief.push(next.clone(), w);
        let state = node.belief.sample_state(rng).unwrap_or_else(|_| next.clone());
        Branch::Existing(child, state)
    }
}

fn pick_by_visits<S, O, R: Rng + ?Sized>(tree: &SearchTree<S, O>, action: ActionId, rng: &mut R) -> HistoryId {
    let children = &tree.action(action).children;
    let total: u64 = children.iter().map(|&h| tree.history(h).visits).sum();
    if total == 0 {
        return children[rng.random_range(0..children.len())];
    }
    let mut target = rng.random_range(0..total);
    for &h in children {
        let v = tree.history(h).visits;
        if target < v {
            return h;
        }
        target -= v;
    }
    children[children.len() - 1]
}
