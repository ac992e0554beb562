//! Lagrangian action selection: scalarized UCB values, the cost-mixing
//! stochastic policy over near-best actions, and budget propagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tree::DualVector;

/// Probability distribution over action indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    entries: Vec<(usize, f64)>,
}

impl ActionDistribution {
    pub fn deterministic(action: usize) -> Self {
        Self { entries: vec![(action, 1.0)] }
    }

    /// Mixture taking `high` with probability `p_high` and `low` otherwise.
    pub fn mixture(high: usize, low: usize, p_high: f64) -> Self {
        if high == low || p_high >= 1.0 {
            return Self::deterministic(high);
        }
        if p_high <= 0.0 {
            return Self::deterministic(low);
        }
        Self { entries: vec![(high, p_high), (low, 1.0 - p_high)] }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.entries.iter().filter(|(a, _)| *a == action).map(|(_, p)| p).sum()
    }

    /// Most probable action; the first listed wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = self.entries[0];
        for &e in &self.entries[1..] {
            if e.1 > best.1 {
                best = e;
            }
        }
        best.0
    }

    /// Draws an action. Single-entry distributions do not touch the rng.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.entries.len() == 1 {
            return self.entries[0].0;
        }
        let mut u = rng.random::<f64>();
        for &(a, p) in &self.entries {
            if u < p {
                return a;
            }
            u -= p;
        }
        self.entries[self.entries.len() - 1].0
    }

    /// Relabels entries through `map` (positions to action indices).
    pub fn map(self, map: impl Fn(usize) -> usize) -> Self {
        Self { entries: self.entries.into_iter().map(|(a, p)| (map(a), p)).collect() }
    }
}

/// Statistics of one action child as seen by the selection rule.
#[derive(Debug, Clone, Copy)]
pub struct ChildView<'a> {
    pub visits: u64,
    pub q_reward: f64,
    pub q_cost: &'a [f64],
}

/// `κ √(ln N(h) / N(h,a))`.
pub fn exploration_bonus(kappa: f64, parent_visits: f64, child_visits: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    kappa * (parent_visits.max(1.0).ln() / child_visits).sqrt()
}

/// `Q_R − λᵀ Q_C + κ √(ln N(h) / N(h,a))` for a visited child.
pub fn scalarized_value(child: &ChildView<'_>, parent_visits: u64, lambda: &DualVector, kappa: f64) -> f64 {
    child.q_reward - lambda.dot(child.q_cost)
        + exploration_bonus(kappa, parent_visits as f64, child.visits as f64)
}

/// Selection distribution at a history node, over positions in `children`.
///
/// With `kappa > 0` an unvisited child is taken first (lowest position wins).
/// With `kappa == 0` only visited children compete, unless none are visited.
pub fn ucb_policy(
    children: &[ChildView<'_>],
    parent_visits: u64,
    lambda: &DualVector,
    kappa: f64,
    nu: f64,
    remaining_budget: &[f64],
) -> ActionDistribution {
    debug_assert!(!children.is_empty());
    if let Some(first_unvisited) = children.iter().position(|c| c.visits == 0) {
        if kappa > 0.0 || children.iter().all(|c| c.visits == 0) {
            return ActionDistribution::deterministic(first_unvisited);
        }
    }
    let values: Vec<Option<f64>> = children
        .iter()
        .map(|c| (c.visits > 0).then(|| scalarized_value(c, parent_visits, lambda, kappa)))
        .collect();
    let costs: Vec<&[f64]> = children.iter().map(|c| c.q_cost).collect();
    stochastic_policy(&values, &costs, remaining_budget, nu)
}

/// Mixes the cheapest and costliest near-best actions so the expected cost
/// meets the remaining budget.
///
/// `values[i] = None` marks a child excluded from the best set. The best set
/// is `{a : Q⊕(a) ≥ max − ν}`. For more than one cost signal the rule falls
/// back to the deterministic λ-greedy choice.
pub fn stochastic_policy(
    values: &[Option<f64>],
    q_cost: &[&[f64]],
    remaining_budget: &[f64],
    nu: f64,
) -> ActionDistribution {
    let max = values
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let best: Vec<usize> = (0..values.len())
        .filter(|&i| values[i].is_some_and(|v| v >= max - nu))
        .collect();
    let greedy = argmax_by(&best, |i| values[i].unwrap_or(f64::NEG_INFINITY));
    if remaining_budget.len() != 1 || best.len() == 1 {
        return ActionDistribution::deterministic(greedy);
    }

    let value = |i: usize| values[i].unwrap_or(f64::NEG_INFINITY);
    let cost = |i: usize| q_cost[i][0];
    let mut low = best[0];
    let mut high = best[0];
    for &i in &best[1..] {
        if cost(i) < cost(low) || (cost(i) == cost(low) && value(i) > value(low)) {
            low = i;
        }
        if cost(i) > cost(high) || (cost(i) == cost(high) && value(i) > value(high)) {
            high = i;
        }
    }
    let budget = remaining_budget[0];
    let (c_low, c_high) = (cost(low), cost(high));
    if budget <= c_low {
        ActionDistribution::deterministic(low)
    } else if budget >= c_high {
        ActionDistribution::deterministic(high)
    } else {
        let p = (budget - c_low) / (c_high - c_low);
        ActionDistribution::mixture(high, low, p)
    }
}

fn argmax_by(indices: &[usize], key: impl Fn(usize) -> f64) -> usize {
    let mut best = indices[0];
    for &i in &indices[1..] {
        if key(i) > key(best) {
            best = i;
        }
    }
    best
}

/// Remaining budget of a child history, `(ĉ_rem − c̄(ha)) / γ`. Not clamped:
/// a negative remainder keeps pushing the child's duals upward.
pub fn propagate_budget(remaining: &[f64], step_cost: &[f64], discount: f64) -> Vec<f64> {
    remaining
        .iter()
        .zip(step_cost)
        .map(|(c, s)| (c - s) / discount)
        .collect()
}
