//! Two-step deterministic chain where no single global multiplier leads the
//! search to the best feasible path.
//!
//! ```text
//!          a2                a1
//!   b0 ---------> b2   b0 ------> b1 --a1--> b3  (high reward, over budget)
//!                                    --a2--> b4  (best feasible)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::belief::{
    particle_filter_update, BeliefError, BeliefModel, DiscreteBelief, ObservationDensity, Outcome, ParticleBelief,
    TabularModel,
};
use crate::model::{CpomdpModel, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyState {
    B0,
    B1,
    B2,
    B3,
    B4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyAction {
    A1,
    A2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyChainSpec {
    /// Reward on reaching the cautious terminal `b2`.
    pub reward_b2: f64,
    /// Reward on reaching the over-budget terminal `b3`.
    pub reward_b3: f64,
    /// Reward on reaching the best feasible terminal `b4`.
    pub reward_b4: f64,
    pub cost_b2: f64,
    pub cost_b3: f64,
    pub cost_b4: f64,
    pub budget: f64,
    pub discount: f64,
}

impl Default for ToyChainSpec {
    fn default() -> Self {
        Self {
            reward_b2: 1.0,
            reward_b3: 10.0,
            reward_b4: 5.0,
            cost_b2: 0.0,
            cost_b3: 2.0,
            cost_b4: 1.0,
            budget: 1.0,
            discount: 1.0,
        }
    }
}

impl ToyChainSpec {
    /// The ordering that makes the chain a myopia trap:
    /// `R(b3) > R(b4) > R(b2)` and `cost(b3) > ĉ ≥ cost(b4) ≥ cost(b2)`.
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.reward_b3 > self.reward_b4 && self.reward_b4 > self.reward_b2) {
            return Err(EnvError::InvalidSpec("toy chain needs R(b3) > R(b4) > R(b2)".into()));
        }
        if !(self.cost_b3 > self.budget && self.budget >= self.cost_b4 && self.cost_b4 >= self.cost_b2) {
            return Err(EnvError::InvalidSpec(
                "toy chain needs cost(b3) > budget >= cost(b4) >= cost(b2)".into(),
            ));
        }
        if self.cost_b2 < 0.0 {
            return Err(EnvError::InvalidSpec("costs must be >= 0".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(EnvError::InvalidSpec("discount must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ToyChain {
    spec: ToyChainSpec,
    budget: [f64; 1],
}

const TOY_ACTIONS: [ToyAction; 2] = [ToyAction::A1, ToyAction::A2];

impl ToyChain {
    pub fn new(spec: ToyChainSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let budget = [spec.budget];
        Ok(Self { spec, budget })
    }

    pub fn spec(&self) -> &ToyChainSpec {
        &self.spec
    }

    fn transition(&self, s: ToyState, a: ToyAction) -> (ToyState, f64, f64) {
        use ToyAction::*;
        use ToyState::*;
        match (s, a) {
            (B0, A1) => (B1, 0.0, 0.0),
            (B0, A2) => (B2, self.spec.reward_b2, self.spec.cost_b2),
            (B1, A1) => (B3, self.spec.reward_b3, self.spec.cost_b3),
            (B1, A2) => (B4, self.spec.reward_b4, self.spec.cost_b4),
            (terminal, _) => (terminal, 0.0, 0.0),
        }
    }
}

impl CpomdpModel for ToyChain {
    type State = ToyState;
    type Action = ToyAction;
    type Obs = ();

    fn actions(&self) -> &[ToyAction] {
        &TOY_ACTIONS
    }

    fn step<R: Rng + ?Sized>(&self, state: &ToyState, action: &ToyAction, _rng: &mut R) -> Transition<ToyState, ()> {
        let (next, reward, cost) = self.transition(*state, *action);
        Transition { state: next, obs: (), reward, cost: vec![cost] }
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn budget(&self) -> &[f64] {
        &self.budget
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> ToyState {
        ToyState::B0
    }

    fn is_terminal(&self, state: &ToyState) -> bool {
        matches!(state, ToyState::B2 | ToyState::B3 | ToyState::B4)
    }
}

impl ObservationDensity for ToyChain {
    fn obs_density(&self, _action: &ToyAction, _next: &ToyState, _obs: &()) -> f64 {
        1.0
    }
}

impl TabularModel for ToyChain {
    fn states(&self) -> Vec<ToyState> {
        vec![ToyState::B0, ToyState::B1, ToyState::B2, ToyState::B3, ToyState::B4]
    }

    fn state_index(&self, state: &ToyState) -> usize {
        *state as usize
    }

    fn observations(&self) -> Vec<()> {
        vec![()]
    }

    fn outcomes(&self, state: &ToyState, action: &ToyAction) -> Vec<Outcome<ToyState>> {
        let (next, reward, cost) = self.transition(*state, *action);
        vec![Outcome { next, prob: 1.0, reward, cost: vec![cost] }]
    }

    fn initial_distribution(&self) -> DiscreteBelief<ToyState> {
        DiscreteBelief::new(self.states(), vec![1.0, 0.0, 0.0, 0.0, 0.0]).expect("valid point mass")
    }
}

impl BeliefModel for ToyChain {
    type Belief = ParticleBelief<ToyState>;

    fn initial_belief<R: Rng + ?Sized>(&self, n_particles: usize, _rng: &mut R) -> Self::Belief {
        ParticleBelief::unweighted(vec![ToyState::B0; n_particles.max(1)])
    }

    fn update_belief<R: Rng + ?Sized>(
        &self,
        belief: &Self::Belief,
        action: &ToyAction,
        obs: &(),
        n_particles: usize,
        rng: &mut R,
    ) -> Result<Self::Belief, BeliefError> {
        particle_filter_update(belief, action, obs, self, n_particles, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        ToyChain::new(ToyChainSpec::default()).unwrap();
    }

    #[test]
    fn ordering_enforced() {
        let bad = ToyChainSpec { reward_b4: 11.0, ..Default::default() };
        assert!(ToyChain::new(bad).is_err());
        let bad = ToyChainSpec { cost_b4: 1.5, ..Default::default() };
        assert!(ToyChain::new(bad).is_err());
    }

    #[test]
    fn dynamics() {
        let m = ToyChain::new(ToyChainSpec::default()).unwrap();
        let mut rng = rand::rng();
        let t = m.step(&ToyState::B1, &ToyAction::A2, &mut rng);
        assert_eq!((t.state, t.reward, t.cost.clone()), (ToyState::B4, 5.0, vec![1.0]));
        assert!(m.is_terminal(&t.state));
        assert!(!m.is_terminal(&ToyState::B1));
    }
}
