//! Brute-force oracles for small tabular problems.
//!
//! Policies are enumerated as trees over (action, observation) histories on
//! exact beliefs. Only the Pareto front of (value, cost) pairs is kept at
//! every node; a dominated subtree can never be part of a best feasible
//! policy because values and costs combine additively.

use std::rc::Rc;

use serde::Serialize;

use super::EnvError;
use crate::belief::{exact_update, DiscreteBelief, TabularModel};

/// Upper bound on candidate policies held at one node.
const MAX_CANDIDATES: usize = 200_000;
const FEASIBILITY_TOL: f64 = 1e-9;

/// Accumulated value, cost and chosen subtree per observation branch.
type PartialPlan = (f64, Vec<f64>, Vec<Option<Rc<Node>>>);

/// Deterministic conditional plan. `branches[i]` continues after the model's
/// `i`-th observation; `None` if that observation is impossible or the
/// horizon is exhausted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyTree {
    pub action: usize,
    pub branches: Vec<Option<PolicyTree>>,
}

impl PolicyTree {
    /// Actions along the first possible observation at every level.
    pub fn first_path(&self) -> Vec<usize> {
        let mut out = vec![self.action];
        let mut node = self;
        while let Some(next) = node.branches.iter().flatten().next() {
            out.push(next.action);
            node = next;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSolution {
    pub value: f64,
    pub cost: Vec<f64>,
    pub policy: PolicyTree,
}

#[derive(Debug)]
struct Node {
    action: usize,
    branches: Vec<Option<Rc<Node>>>,
}

impl Node {
    fn to_tree(&self) -> PolicyTree {
        PolicyTree {
            action: self.action,
            branches: self.branches.iter().map(|b| b.as_ref().map(|n| n.to_tree())).collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    cost: Vec<f64>,
    node: Option<Rc<Node>>,
}

/// Immediate expected reward and cost, and per-observation probabilities
/// and posteriors, of taking `action` in `belief`.
struct Expansion<S> {
    reward: f64,
    cost: Vec<f64>,
    branches: Vec<Option<(f64, DiscreteBelief<S>)>>,
}

fn expand<M: TabularModel>(
    model: &M,
    belief: &DiscreteBelief<M::State>,
    action: usize,
) -> Result<Expansion<M::State>, EnvError> {
    let a = &model.actions()[action];
    let k = model.num_costs();
    let mut reward = 0.0;
    let mut cost = vec![0.0; k];
    let observations = model.observations();
    let mut obs_prob = vec![0.0; observations.len()];
    for (s, p) in belief.iter() {
        if p == 0.0 {
            continue;
        }
        for out in model.outcomes(s, a) {
            let w = p * out.prob;
            reward += w * out.reward;
            for (acc, c) in cost.iter_mut().zip(&out.cost) {
                *acc += w * c;
            }
            for (j, o) in observations.iter().enumerate() {
                obs_prob[j] += w * model.obs_density(a, &out.next, o);
            }
        }
    }
    let mut branches = Vec::with_capacity(observations.len());
    for (o, p) in observations.iter().zip(&obs_prob) {
        if *p > 0.0 {
            let post = exact_update(belief, a, o, model).map_err(|e| EnvError::InvalidSpec(e.to_string()))?;
            branches.push(Some((*p, post)));
        } else {
            branches.push(None);
        }
    }
    Ok(Expansion { reward, cost, branches })
}

fn pareto(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut front: Vec<Candidate> = Vec::new();
    for c in cands {
        let dominated = front
            .iter()
            .any(|f| f.cost.iter().zip(&c.cost).all(|(fc, cc)| fc <= cc));
        if !dominated {
            front.push(c);
        }
    }
    front
}

fn candidates<M: TabularModel>(
    model: &M,
    belief: &DiscreteBelief<M::State>,
    horizon: usize,
) -> Result<Vec<Candidate>, EnvError> {
    let k = model.num_costs();
    if horizon == 0 {
        return Ok(vec![Candidate { value: 0.0, cost: vec![0.0; k], node: None }]);
    }
    let gamma = model.discount();
    let mut all = Vec::new();
    for action in 0..model.actions().len() {
        let exp = expand(model, belief, action)?;
        let n_obs = exp.branches.len();
        let mut partial: Vec<PartialPlan> = vec![(exp.reward, exp.cost.clone(), vec![None; n_obs])];
        for (j, branch) in exp.branches.iter().enumerate() {
            let Some((p, post)) = branch else { continue };
            let children = candidates(model, post, horizon - 1)?;
            if partial.len().saturating_mul(children.len()) > MAX_CANDIDATES {
                return Err(EnvError::TooLarge);
            }
            let mut next = Vec::with_capacity(partial.len() * children.len());
            for (v, c, nodes) in &partial {
                for child in &children {
                    let mut nodes = nodes.clone();
                    nodes[j] = child.node.clone();
                    let cost = c.iter().zip(&child.cost).map(|(a, b)| a + gamma * p * b).collect();
                    next.push((v + gamma * p * child.value, cost, nodes));
                }
            }
            // Prune between observations to keep the product small.
            let pruned = pareto(
                next.into_iter()
                    .map(|(value, cost, nodes)| Candidate {
                        value,
                        cost,
                        node: Some(Rc::new(Node { action, branches: nodes })),
                    })
                    .collect(),
            );
            partial = pruned
                .into_iter()
                .map(|c| {
                    let node = c.node.expect("partial plans carry a node");
                    let branches = Rc::try_unwrap(node).map(|n| n.branches).unwrap_or_else(|n| n.branches.clone());
                    (c.value, c.cost, branches)
                })
                .collect();
        }
        for (value, cost, branches) in partial {
            all.push(Candidate { value, cost, node: Some(Rc::new(Node { action, branches })) });
        }
        if all.len() > MAX_CANDIDATES {
            return Err(EnvError::TooLarge);
        }
    }
    Ok(pareto(all))
}

/// Best deterministic policy over `horizon` steps whose expected discounted
/// cost meets the model's budget.
pub fn exact_solve_small<M: TabularModel>(model: &M, horizon: usize) -> Result<ExactSolution, EnvError> {
    exact_solve_with_budget(model, horizon, model.budget())
}

pub fn exact_solve_with_budget<M: TabularModel>(
    model: &M,
    horizon: usize,
    budget: &[f64],
) -> Result<ExactSolution, EnvError> {
    if horizon == 0 {
        return Err(EnvError::InvalidSpec("horizon must be >= 1".into()));
    }
    if model.states().len() > 64 {
        return Err(EnvError::TooLarge);
    }
    let front = candidates(model, &model.initial_distribution(), horizon)?;
    front
        .into_iter()
        .filter(|c| c.cost.iter().zip(budget).all(|(c, b)| *c <= b + FEASIBILITY_TOL))
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|c| ExactSolution {
            value: c.value,
            cost: c.cost,
            policy: c.node.expect("horizon >= 1").to_tree(),
        })
        .ok_or(EnvError::Infeasible)
}

/// Exact expected discounted reward and cost of following `policy` from
/// `belief`.
pub fn evaluate_policy<M: TabularModel>(
    model: &M,
    belief: &DiscreteBelief<M::State>,
    policy: &PolicyTree,
) -> Result<(f64, Vec<f64>), EnvError> {
    let gamma = model.discount();
    let exp = expand(model, belief, policy.action)?;
    let mut value = exp.reward;
    let mut cost = exp.cost;
    for (branch, sub) in exp.branches.iter().zip(&policy.branches) {
        if let (Some((p, post)), Some(sub)) = (branch, sub) {
            let (v, c) = evaluate_policy(model, post, sub)?;
            value += gamma * p * v;
            for (acc, ci) in cost.iter_mut().zip(c) {
                *acc += gamma * p * ci;
            }
        }
    }
    Ok((value, cost))
}

/// Optimal policy for the scalarized reward `r − λᵀc` with a fixed `λ`,
/// by exact dynamic programming over beliefs. Ties go to the lower action
/// index. Returns the policy with its unscalarized value and cost.
pub fn lambda_greedy_policy<M: TabularModel>(
    model: &M,
    horizon: usize,
    lambda: &[f64],
) -> Result<ExactSolution, EnvError> {
    fn solve<M: TabularModel>(
        model: &M,
        belief: &DiscreteBelief<M::State>,
        horizon: usize,
        lambda: &[f64],
    ) -> Result<(f64, f64, Vec<f64>, PolicyTree), EnvError> {
        let gamma = model.discount();
        let mut best: Option<(f64, f64, Vec<f64>, PolicyTree)> = None;
        for action in 0..model.actions().len() {
            let exp = expand(model, belief, action)?;
            let mut scalar = exp.reward - lambda.iter().zip(&exp.cost).map(|(l, c)| l * c).sum::<f64>();
            let mut value = exp.reward;
            let mut cost = exp.cost.clone();
            let mut branches = Vec::with_capacity(exp.branches.len());
            for branch in &exp.branches {
                match branch {
                    Some((p, post)) if horizon > 1 => {
                        let (s, v, c, tree) = solve(model, post, horizon - 1, lambda)?;
                        scalar += gamma * p * s;
                        value += gamma * p * v;
                        for (acc, ci) in cost.iter_mut().zip(&c) {
                            *acc += gamma * p * ci;
                        }
                        branches.push(Some(tree));
                    }
                    _ => branches.push(None),
                }
            }
            if best.as_ref().is_none_or(|b| scalar > b.0) {
                best = Some((scalar, value, cost, PolicyTree { action, branches }));
            }
        }
        Ok(best.expect("at least one action"))
    }
    if horizon == 0 {
        return Err(EnvError::InvalidSpec("horizon must be >= 1".into()));
    }
    let (_, value, cost, policy) = solve(model, &model.initial_distribution(), horizon, lambda)?;
    Ok(ExactSolution { value, cost, policy })
}

/// Exact optimum of the one-step constrained bandit linear program
/// `max Σ pᵢ rᵢ  s.t.  Σ pᵢ cᵢ ≤ ĉ,  Σ pᵢ = 1,  p ≥ 0`.
///
/// Basic feasible solutions have at most two nonzero entries, so the optimum
/// is found by enumerating single arms and budget-tight pairs. Returns `None`
/// when even the cheapest arm exceeds the budget.
pub fn solve_bandit_lp(arms: &[(f64, f64)], budget: f64) -> Option<Vec<f64>> {
    let n = arms.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |value: f64, probs: Vec<f64>| {
        if best.as_ref().is_none_or(|(v, _)| value > *v + 1e-12) {
            best = Some((value, probs));
        }
    };
    for i in 0..n {
        if arms[i].1 <= budget {
            let mut p = vec![0.0; n];
            p[i] = 1.0;
            consider(arms[i].0, p);
        }
    }
    for lo in 0..n {
        for hi in 0..n {
            let (r_lo, c_lo) = arms[lo];
            let (r_hi, c_hi) = arms[hi];
            if c_lo <= budget && budget < c_hi {
                let q = (budget - c_lo) / (c_hi - c_lo);
                let mut p = vec![0.0; n];
                p[hi] = q;
                p[lo] = 1.0 - q;
                consider(q * r_hi + (1.0 - q) * r_lo, p);
            }
        }
    }
    best.map(|(_, p)| p)
}
