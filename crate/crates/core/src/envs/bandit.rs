//! One-step constrained bandit with deterministic arms.

use rand::Rng;

use super::EnvError;
use crate::belief::{DiscreteBelief, ObservationDensity, Outcome, TabularModel};
use crate::model::{CpomdpModel, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BanditState {
    Ready,
    Done,
}

#[derive(Debug, Clone)]
pub struct ConstrainedBandit {
    /// `(reward, cost)` per arm.
    arms: Vec<(f64, f64)>,
    indices: Vec<usize>,
    budget: [f64; 1],
    discount: f64,
}

impl ConstrainedBandit {
    pub fn new(arms: Vec<(f64, f64)>, budget: f64) -> Result<Self, EnvError> {
        if arms.is_empty() {
            return Err(EnvError::InvalidSpec("bandit needs at least one arm".into()));
        }
        if arms.iter().any(|(_, c)| !(*c >= 0.0)) || !(budget >= 0.0) {
            return Err(EnvError::InvalidSpec("costs and budget must be >= 0".into()));
        }
        let indices = (0..arms.len()).collect();
        Ok(Self { arms, indices, budget: [budget], discount: 0.95 })
    }

    pub fn arms(&self) -> &[(f64, f64)] {
        &self.arms
    }
}

impl CpomdpModel for ConstrainedBandit {
    type State = BanditState;
    type Action = usize;
    type Obs = ();

    fn actions(&self) -> &[usize] {
        &self.indices
    }

    fn step<R: Rng + ?Sized>(&self, state: &BanditState, action: &usize, _rng: &mut R) -> Transition<BanditState, ()> {
        match state {
            BanditState::Ready => {
                let (r, c) = self.arms[*action];
                Transition { state: BanditState::Done, obs: (), reward: r, cost: vec![c] }
            }
            BanditState::Done => Transition { state: BanditState::Done, obs: (), reward: 0.0, cost: vec![0.0] },
        }
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn budget(&self) -> &[f64] {
        &self.budget
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> BanditState {
        BanditState::Ready
    }

    fn is_terminal(&self, state: &BanditState) -> bool {
        *state == BanditState::Done
    }
}

impl ObservationDensity for ConstrainedBandit {
    fn obs_density(&self, _a: &usize, _s: &BanditState, _o: &()) -> f64 {
        1.0
    }
}

impl TabularModel for ConstrainedBandit {
    fn states(&self) -> Vec<BanditState> {
        vec![BanditState::Ready, BanditState::Done]
    }

    fn state_index(&self, state: &BanditState) -> usize {
        *state as usize
    }

    fn observations(&self) -> Vec<()> {
        vec![()]
    }

    fn outcomes(&self, state: &BanditState, action: &usize) -> Vec<Outcome<BanditState>> {
        let t = self.step(state, action, &mut rand::rng());
        vec![Outcome { next: t.state, prob: 1.0, reward: t.reward, cost: t.cost }]
    }

    fn initial_distribution(&self) -> DiscreteBelief<BanditState> {
        DiscreteBelief::new(self.states(), vec![1.0, 0.0]).expect("point mass")
    }
}
