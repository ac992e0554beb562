//! The constrained POMDP abstraction shared by solvers and environments,
//! plus discounted trajectory bookkeeping.

use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("cost vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// One draw from the generative model `G(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S, O> {
    pub state: S,
    pub obs: O,
    pub reward: f64,
    pub cost: Vec<f64>,
}

/// Generative access to a constrained POMDP.
///
/// Transition and observation distributions live inside [`CpomdpModel::step`];
/// solvers only ever sample from them. Implementations must be usable from
/// several episode workers at once, so all randomness comes from the
/// caller-provided rng.
pub trait CpomdpModel: Send + Sync {
    type State: Clone + Debug + Send + Sync;
    type Action: Clone + Debug + PartialEq + Send + Sync;
    type Obs: Clone + Debug + PartialEq + Send + Sync;

    /// Finite, ordered action set. Action indices used by the solvers refer
    /// to positions in this slice.
    fn actions(&self) -> &[Self::Action];

    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut R,
    ) -> Transition<Self::State, Self::Obs>;

    fn discount(&self) -> f64;

    /// Cost budget `ĉ`, one entry per cost signal.
    fn budget(&self) -> &[f64];

    /// Draw a state from the initial belief `b₀`.
    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Whether observations are continuous. Solvers that key children by
    /// observation equality cannot branch usefully on these.
    fn continuous_observations(&self) -> bool {
        false
    }

    fn num_costs(&self) -> usize {
        self.budget().len()
    }
}

/// Checks the structural invariants every model must satisfy.
///
/// The discount may be exactly 1 for short fixed-horizon problems such as the
/// toy chain; infinite-horizon models should use a discount below 1.
pub fn validate_model<M: CpomdpModel>(model: &M) -> Result<(), ModelError> {
    let gamma = model.discount();
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ModelError::Invalid(format!(
            "discount must lie in (0, 1], got {gamma}"
        )));
    }
    if model.budget().is_empty() {
        return Err(ModelError::Invalid("at least one cost signal required".into()));
    }
    if model.budget().iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(ModelError::Invalid("budgets must be finite and >= 0".into()));
    }
    if model.actions().is_empty() {
        return Err(ModelError::Invalid("action set is empty".into()));
    }
    Ok(())
}

/// A single executed step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<S, A, O> {
    pub state: S,
    pub action: A,
    pub obs: O,
    pub reward: f64,
    pub cost: Vec<f64>,
}

/// Steps of one episode together with their discounted aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<S, A, O> {
    pub steps: Vec<StepRecord<S, A, O>>,
    pub discounted_reward: f64,
    pub discounted_cost: Vec<f64>,
    discount: f64,
    num_costs: usize,
}

impl<S, A, O> TrajectoryRecord<S, A, O> {
    pub fn new(discount: f64, num_costs: usize) -> Self {
        Self {
            steps: Vec::new(),
            discounted_reward: 0.0,
            discounted_cost: vec![0.0; num_costs],
            discount,
            num_costs,
        }
    }

    pub fn push(&mut self, step: StepRecord<S, A, O>) -> Result<(), ModelError> {
        if step.cost.len() != self.num_costs {
            return Err(ModelError::LengthMismatch {
                expected: self.num_costs,
                got: step.cost.len(),
            });
        }
        let weight = self.discount.powi(self.steps.len() as i32);
        self.discounted_reward += weight * step.reward;
        for (acc, c) in self.discounted_cost.iter_mut().zip(&step.cost) {
            *acc += weight * c;
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn num_costs(&self) -> usize {
        self.num_costs
    }

    /// Recomputes the discounted sums from the raw steps.
    pub fn recompute(&self) -> (f64, Vec<f64>) {
        discounted_sums(
            self.steps.iter().map(|s| (s.reward, s.cost.as_slice())),
            self.discount,
            self.num_costs,
        )
    }
}

/// `(Σ γᵗ rₜ, Σ γᵗ cₜ)` with `t` starting at zero.
pub fn discounted_sums<'a, I>(steps: I, discount: f64, num_costs: usize) -> (f64, Vec<f64>)
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut reward = 0.0;
    let mut cost = vec![0.0; num_costs];
    let mut weight = 1.0;
    for (r, c) in steps {
        reward += weight * r;
        for (acc, ci) in cost.iter_mut().zip(c) {
            *acc += weight * ci;
        }
        weight *= discount;
    }
    (reward, cost)
}

/// True iff any component of `discounted_cost` strictly exceeds its budget.
/// A realized cost equal to the budget, including zero against a zero
/// budget, is feasible.
pub fn violates_budget(discounted_cost: &[f64], budget: &[f64]) -> Result<bool, ModelError> {
    if discounted_cost.len() != budget.len() {
        return Err(ModelError::LengthMismatch {
            expected: budget.len(),
            got: discounted_cost.len(),
        });
    }
    Ok(discounted_cost.iter().zip(budget).any(|(c, b)| c > b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_trajectory_sums_to_zero() {
        let (r, c) = discounted_sums(std::iter::empty(), 0.95, 2);
        assert_eq!(r, 0.0);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn geometric_sums() {
        let costs = [[1.0], [1.0]];
        let (r, c) = discounted_sums(
            [(1.0, &costs[0][..]), (1.0, &costs[1][..])],
            0.5,
            1,
        );
        assert_eq!(r, 1.5);
        assert_eq!(c, vec![1.5]);
    }

    #[test]
    fn violation_is_strict() {
        assert!(!violates_budget(&[0.66], &[0.9]).unwrap());
        assert!(violates_budget(&[1.0], &[0.9]).unwrap());
        assert!(!violates_budget(&[0.0], &[0.0]).unwrap());
        assert!(!violates_budget(&[0.9], &[0.9]).unwrap());
    }

    #[test]
    fn violation_length_mismatch() {
        assert_eq!(
            violates_budget(&[0.1, 0.2], &[0.9]),
            Err(ModelError::LengthMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn push_rejects_wrong_cost_length() {
        let mut t: TrajectoryRecord<(), (), ()> = TrajectoryRecord::new(0.9, 1);
        let step = StepRecord { state: (), action: (), obs: (), reward: 1.0, cost: vec![] };
        assert!(t.push(step).is_err());
    }

    proptest! {
        #[test]
        fn stored_aggregates_match_recomputation(
            gamma in 0.01f64..1.0,
            steps in prop::collection::vec((-100.0f64..100.0, 0.0f64..5.0, 0.0f64..5.0), 0..60),
        ) {
            let mut t: TrajectoryRecord<(), (), ()> = TrajectoryRecord::new(gamma, 2);
            for (r, c0, c1) in &steps {
                t.push(StepRecord { state: (), action: (), obs: (), reward: *r, cost: vec![*c0, *c1] }).unwrap();
            }
            let (r, c) = t.recompute();
            let tol = |x: f64| 1e-12 * x.abs().max(1.0);
            prop_assert!((r - t.discounted_reward).abs() <= tol(r));
            for (a, b) in c.iter().zip(&t.discounted_cost) {
                prop_assert!((a - b).abs() <= tol(*a));
            }
        }

        #[test]
        fn violation_is_monotone(
            cost in prop::collection::vec(0.0f64..2.0, 1..4),
            bump in 0.0f64..1.0,
            idx in 0usize..4,
        ) {
            let budget = vec![1.0; cost.len()];
            let before = violates_budget(&cost, &budget).unwrap();
            let mut raised = cost.clone();
            let i = idx % raised.len();
            raised[i] += bump;
            let after = violates_budget(&raised, &budget).unwrap();
            prop_assert!(!before || after);
        }
    }
}
