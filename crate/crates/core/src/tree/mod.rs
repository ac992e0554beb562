//! Arena-allocated search tree of alternating history and action nodes.
//!
//! History nodes carry the visit count `N(h)`, the dual vector `λ(h)`, the
//! latest remaining-budget estimate and a particle bucket. Action nodes carry
//! `N(h,a)`, the running means `Q_R`, `Q_C` and the single-step cost mean `c̄`.

mod snapshot;

pub use snapshot::{dump_tree, to_dot, ActionRecord, HistoryRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::ParticleBelief;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("history node already has a child for this observation")]
    DuplicateChild,
    #[error("count conservation broken at history {id}: N(h)={node} but sum of N(h,a)={children}")]
    CountMismatch { id: usize, node: u64, children: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub usize);

/// Nonnegative Lagrange multipliers clamped to `[0, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    values: Vec<f64>,
    max: f64,
}

impl DualVector {
    /// Builds a dual vector, projecting `values` into `[0, max]`.
    pub fn new(values: Vec<f64>, max: f64) -> Self {
        let mut v = Self { values, max };
        v.project();
        v
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ ← Π[0, max](λ + step · (observed − target))`.
    pub fn ascend(&mut self, step: f64, observed: &[f64], target: &[f64]) {
        for ((l, c), b) in self.values.iter_mut().zip(observed).zip(target) {
            *l += step * (c - b);
        }
        self.project();
    }

    /// `λᵀ x`.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.values.iter().zip(x).map(|(l, c)| l * c).sum()
    }

    fn project(&mut self) {
        for l in &mut self.values {
            *l = if l.is_nan() { 0.0 } else { l.clamp(0.0, self.max) };
        }
    }
}

/// Prior applied to freshly created action nodes: `(N_init, Q_R,init,
/// Q_C,init, c̄_init)`. Cost priors apply to every cost component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeInit {
    pub visits: u64,
    pub q_reward: f64,
    pub q_cost: f64,
    pub step_cost: f64,
}

impl Default for NodeInit {
    fn default() -> Self {
        Self { visits: 0, q_reward: 0.0, q_cost: 0.0, step_cost: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct HistoryNode<S, O> {
    pub parent: Option<ActionId>,
    /// Observation that led here; `None` at the root.
    pub obs: Option<O>,
    pub depth: usize,
    pub visits: u64,
    pub lambda: DualVector,
    /// Remaining budget passed in on the most recent visit.
    pub remaining_budget: Vec<f64>,
    pub children: Vec<ActionId>,
    pub belief: ParticleBelief<S>,
}

#[derive(Debug, Clone)]
pub struct ActionNode {
    pub parent: HistoryId,
    /// Index into the model's action list.
    pub action: usize,
    pub visits: u64,
    pub q_reward: f64,
    pub q_cost: Vec<f64>,
    pub step_cost: Vec<f64>,
    pub children: Vec<HistoryId>,
}

#[derive(Debug, Clone)]
pub struct SearchTree<S, O> {
    histories: Vec<HistoryNode<S, O>>,
    actions: Vec<ActionNode>,
    local_duals: bool,
    weighted_beliefs: bool,
}

impl<S, O> SearchTree<S, O> {
    /// Creates a tree holding only a root history with dual vector `lambda`.
    ///
    /// With `local_duals = false` every history reads the root's dual vector,
    /// which then acts as the single global multiplier.
    pub fn new(lambda: DualVector, budget: Vec<f64>, local_duals: bool, weighted_beliefs: bool) -> Self {
        let root = HistoryNode {
            parent: None,
            obs: None,
            depth: 0,
            visits: 0,
            lambda,
            remaining_budget: budget,
            children: Vec::new(),
            belief: ParticleBelief::empty(weighted_beliefs),
        };
        Self { histories: vec![root], actions: Vec::new(), local_duals, weighted_beliefs }
    }

    pub const ROOT: HistoryId = HistoryId(0);

    pub fn root(&self) -> &HistoryNode<S, O> {
        &self.histories[0]
    }

    pub fn history(&self, id: HistoryId) -> &HistoryNode<S, O> {
        &self.histories[id.0]
    }

    pub fn history_mut(&mut self, id: HistoryId) -> &mut HistoryNode<S, O> {
        &mut self.histories[id.0]
    }

    pub fn action(&self, id: ActionId) -> &ActionNode {
        &self.actions[id.0]
    }

    pub fn action_mut(&mut self, id: ActionId) -> &mut ActionNode {
        &mut self.actions[id.0]
    }

    pub fn num_histories(&self) -> usize {
        self.histories.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn history_ids(&self) -> impl Iterator<Item = HistoryId> {
        (0..self.histories.len()).map(HistoryId)
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len()).map(ActionId)
    }

    pub fn local_duals(&self) -> bool {
        self.local_duals
    }

    /// Dual vector that guides action selection at `id`.
    pub fn lambda_at(&self, id: HistoryId) -> &DualVector {
        if self.local_duals {
            &self.histories[id.0].lambda
        } else {
            &self.histories[0].lambda
        }
    }

    pub fn lambda_at_mut(&mut self, id: HistoryId) -> &mut DualVector {
        if self.local_duals {
            &mut self.histories[id.0].lambda
        } else {
            &mut self.histories[0].lambda
        }
    }

    /// Adds an action child to `h` with the given prior. `N(h)` absorbs the
    /// prior visit count so count conservation holds from creation.
    pub fn add_action(&mut self, h: HistoryId, action: usize, init: &NodeInit) -> ActionId {
        let k = self.histories[h.0].lambda.len();
        let id = ActionId(self.actions.len());
        self.actions.push(ActionNode {
            parent: h,
            action,
            visits: init.visits,
            q_reward: init.q_reward,
            q_cost: vec![init.q_cost; k],
            step_cost: vec![init.step_cost; k],
            children: Vec::new(),
        });
        let node = &mut self.histories[h.0];
        node.children.push(id);
        node.visits += init.visits;
        id
    }

    /// Adds one action child per model action.
    pub fn expand_actions(&mut self, h: HistoryId, num_actions: usize, init: &NodeInit) {
        for a in 0..num_actions {
            self.add_action(h, a, init);
        }
    }

    /// Increments `N(h)` and `N(h,a)` for one traversal of `a`.
    pub fn visit(&mut self, a: ActionId) {
        let parent = self.actions[a.0].parent;
        self.actions[a.0].visits += 1;
        self.histories[parent.0].visits += 1;
    }

    /// Incremental-mean updates of `Q_R`, `Q_C` and `c̄`, dividing by the
    /// already-incremented `N(h,a)`.
    pub fn backup(&mut self, a: ActionId, sampled_return: f64, sampled_cost: &[f64], step_cost: &[f64]) {
        let node = &mut self.actions[a.0];
        let n = node.visits.max(1) as f64;
        node.q_reward += (sampled_return - node.q_reward) / n;
        for (q, c) in node.q_cost.iter_mut().zip(sampled_cost) {
            *q += (c - *q) / n;
        }
        for (q, c) in node.step_cost.iter_mut().zip(step_cost) {
            *q += (c - *q) / n;
        }
    }

    /// Checks `N(h) = Σₐ N(h,a)` at every history with children.
    pub fn check_count_conservation(&self) -> Result<(), TreeError> {
        for (i, h) in self.histories.iter().enumerate() {
            if h.children.is_empty() {
                continue;
            }
            let sum: u64 = h.children.iter().map(|a| self.actions[a.0].visits).sum();
            if sum != h.visits {
                return Err(TreeError::CountMismatch { id: i, node: h.visits, children: sum });
            }
        }
        Ok(())
    }
}

impl<S, O: PartialEq> SearchTree<S, O> {
    pub fn find_child(&self, a: ActionId, obs: &O) -> Option<HistoryId> {
        self.actions[a.0]
            .children
            .iter()
            .copied()
            .find(|h| self.histories[h.0].obs.as_ref() == Some(obs))
    }

    /// Creates the history `h a⁻ o⁻` below action node `parent`, copying the
    /// parent history's dual vector. Action children are not created here.
    pub fn expand_leaf(&mut self, parent: ActionId, obs: O, budget: Vec<f64>) -> Result<HistoryId, TreeError> {
        if self.find_child(parent, &obs).is_some() {
            return Err(TreeError::DuplicateChild);
        }
        Ok(self.push_child(parent, obs, budget))
    }

    /// Like [`expand_leaf`](Self::expand_leaf) but skips the duplicate check;
    /// widening solvers key children per insertion, not per observation value.
    pub(crate) fn push_child(&mut self, parent: ActionId, obs: O, budget: Vec<f64>) -> HistoryId {
        let grand = self.actions[parent.0].parent;
        let lambda = self.histories[grand.0].lambda.clone();
        let depth = self.histories[grand.0].depth + 1;
        let id = HistoryId(self.histories.len());
        self.histories.push(HistoryNode {
            parent: Some(parent),
            obs: Some(obs),
            depth,
            visits: 0,
            lambda,
            remaining_budget: budget,
            children: Vec::new(),
            belief: ParticleBelief::empty(self.weighted_beliefs),
        });
        self.actions[parent.0].children.push(id);
        id
    }
}

impl<S: Clone, O: Clone> SearchTree<S, O> {
    /// Copies the subtree rooted at `new_root` into a fresh arena. The new
    /// root keeps its statistics but loses its parent link.
    pub fn reroot(&self, new_root: HistoryId) -> Self {
        let mut out = Self {
            histories: Vec::new(),
            actions: Vec::new(),
            local_duals: self.local_duals,
            weighted_beliefs: self.weighted_beliefs,
        };
        let mut root = self.histories[new_root.0].clone();
        root.parent = None;
        root.obs = None;
        root.children.clear();
        out.histories.push(root);
        let mut stack = vec![(new_root, HistoryId(0))];
        while let Some((old_h, new_h)) = stack.pop() {
            let depth = out.histories[new_h.0].depth;
            for &old_a in &self.histories[old_h.0].children {
                let mut a = self.actions[old_a.0].clone();
                a.parent = new_h;
                a.children.clear();
                let new_a = ActionId(out.actions.len());
                out.actions.push(a);
                out.histories[new_h.0].children.push(new_a);
                for &old_child in &self.actions[old_a.0].children {
                    let mut child = self.histories[old_child.0].clone();
                    child.parent = Some(new_a);
                    child.children.clear();
                    child.depth = depth + 1;
                    let new_child = HistoryId(out.histories.len());
                    out.histories.push(child);
                    out.actions[new_a.0].children.push(new_child);
                    stack.push((old_child, new_child));
                }
            }
        }
        out.histories[0].depth = 0;
        out
    }
}
