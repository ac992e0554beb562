//! Constrained Tiger: listening is cheap and noisy, opening a door pays off
//! but opening the tiger's door costs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::belief::{exact_update, BeliefError, BeliefModel, DiscreteBelief, ObservationDensity, Outcome, TabularModel};
use crate::model::{CpomdpModel, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TigerState {
    Left,
    Right,
    /// Absorbing state after a door is opened when resets are disabled.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TigerAction {
    Listen,
    OpenLeft,
    OpenRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TigerObs {
    HearLeft,
    HearRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TigerSpec {
    pub listen_accuracy: f64,
    /// Reward for opening the door without the tiger.
    pub reward_correct: f64,
    /// Reward for opening the tiger's door.
    pub reward_wrong: f64,
    pub reward_listen: f64,
    /// Cost of opening the tiger's door.
    pub cost_wrong: f64,
    /// Cost of opening the safe door.
    pub cost_correct: f64,
    pub cost_listen: f64,
    pub discount: f64,
    pub budget: f64,
    /// Re-place the tiger uniformly after a door is opened. When false,
    /// opening a door ends the episode.
    pub reset_after_open: bool,
}

impl Default for TigerSpec {
    fn default() -> Self {
        Self {
            listen_accuracy: 0.85,
            reward_correct: 10.0,
            reward_wrong: -100.0,
            reward_listen: -1.0,
            cost_wrong: 1.0,
            cost_correct: 0.0,
            cost_listen: 0.0,
            discount: 0.95,
            budget: 0.9,
            reset_after_open: true,
        }
    }
}

impl TigerSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.5..=1.0).contains(&self.listen_accuracy) {
            return Err(EnvError::InvalidSpec("listen accuracy must lie in [0.5, 1]".into()));
        }
        if [self.cost_wrong, self.cost_correct, self.cost_listen, self.budget]
            .iter()
            .any(|c| !(*c >= 0.0))
        {
            return Err(EnvError::InvalidSpec("costs and budget must be >= 0".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(EnvError::InvalidSpec("discount must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Tiger {
    spec: TigerSpec,
    budget: [f64; 1],
}

const TIGER_ACTIONS: [TigerAction; 3] = [TigerAction::Listen, TigerAction::OpenLeft, TigerAction::OpenRight];

impl Tiger {
    pub fn new(spec: TigerSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let budget = [spec.budget];
        Ok(Self { spec, budget })
    }

    pub fn spec(&self) -> &TigerSpec {
        &self.spec
    }

    fn open_outcome(&self, tiger: TigerState, action: TigerAction) -> (f64, f64) {
        let opened_tiger = matches!(
            (tiger, action),
            (TigerState::Left, TigerAction::OpenLeft) | (TigerState::Right, TigerAction::OpenRight)
        );
        if opened_tiger {
            (self.spec.reward_wrong, self.spec.cost_wrong)
        } else {
            (self.spec.reward_correct, self.spec.cost_correct)
        }
    }
}

impl CpomdpModel for Tiger {
    type State = TigerState;
    type Action = TigerAction;
    type Obs = TigerObs;

    fn actions(&self) -> &[TigerAction] {
        &TIGER_ACTIONS
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &TigerState,
        action: &TigerAction,
        rng: &mut R,
    ) -> Transition<TigerState, TigerObs> {
        let random_obs = |rng: &mut R| {
            if rng.random::<bool>() {
                TigerObs::HearLeft
            } else {
                TigerObs::HearRight
            }
        };
        if *state == TigerState::Done {
            return Transition { state: TigerState::Done, obs: random_obs(rng), reward: 0.0, cost: vec![0.0] };
        }
        match action {
            TigerAction::Listen => {
                let correct = rng.random::<f64>() < self.spec.listen_accuracy;
                let obs = match (state, correct) {
                    (TigerState::Left, true) | (TigerState::Right, false) => TigerObs::HearLeft,
                    _ => TigerObs::HearRight,
                };
                Transition {
                    state: *state,
                    obs,
                    reward: self.spec.reward_listen,
                    cost: vec![self.spec.cost_listen],
                }
            }
            open => {
                let (reward, cost) = self.open_outcome(*state, *open);
                let next = if !self.spec.reset_after_open {
                    TigerState::Done
                } else if rng.random::<bool>() {
                    TigerState::Left
                } else {
                    TigerState::Right
                };
                Transition { state: next, obs: random_obs(rng), reward, cost: vec![cost] }
            }
        }
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn budget(&self) -> &[f64] {
        &self.budget
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> TigerState {
        if rng.random::<bool>() {
            TigerState::Left
        } else {
            TigerState::Right
        }
    }

    fn is_terminal(&self, state: &TigerState) -> bool {
        *state == TigerState::Done
    }
}

impl ObservationDensity for Tiger {
    fn obs_density(&self, action: &TigerAction, next: &TigerState, obs: &TigerObs) -> f64 {
        match (action, next) {
            (TigerAction::Listen, TigerState::Left | TigerState::Right) => {
                let heard_correctly = matches!(
                    (next, obs),
                    (TigerState::Left, TigerObs::HearLeft) | (TigerState::Right, TigerObs::HearRight)
                );
                if heard_correctly {
                    self.spec.listen_accuracy
                } else {
                    1.0 - self.spec.listen_accuracy
                }
            }
            _ => 0.5,
        }
    }
}

impl TabularModel for Tiger {
    fn states(&self) -> Vec<TigerState> {
        if self.spec.reset_after_open {
            vec![TigerState::Left, TigerState::Right]
        } else {
            vec![TigerState::Left, TigerState::Right, TigerState::Done]
        }
    }

    fn state_index(&self, state: &TigerState) -> usize {
        *state as usize
    }

    fn observations(&self) -> Vec<TigerObs> {
        vec![TigerObs::HearLeft, TigerObs::HearRight]
    }

    fn outcomes(&self, state: &TigerState, action: &TigerAction) -> Vec<Outcome<TigerState>> {
        if *state == TigerState::Done {
            return vec![Outcome { next: TigerState::Done, prob: 1.0, reward: 0.0, cost: vec![0.0] }];
        }
        match action {
            TigerAction::Listen => vec![Outcome {
                next: *state,
                prob: 1.0,
                reward: self.spec.reward_listen,
                cost: vec![self.spec.cost_listen],
            }],
            open => {
                let (reward, cost) = self.open_outcome(*state, *open);
                if self.spec.reset_after_open {
                    [TigerState::Left, TigerState::Right]
                        .into_iter()
                        .map(|next| Outcome { next, prob: 0.5, reward, cost: vec![cost] })
                        .collect()
                } else {
                    vec![Outcome { next: TigerState::Done, prob: 1.0, reward, cost: vec![cost] }]
                }
            }
        }
    }

    fn initial_distribution(&self) -> DiscreteBelief<TigerState> {
        let mut probs = vec![0.5, 0.5];
        if !self.spec.reset_after_open {
            probs.push(0.0);
        }
        DiscreteBelief::new(self.states(), probs).expect("uniform tiger prior")
    }
}

impl BeliefModel for Tiger {
    type Belief = DiscreteBelief<TigerState>;

    fn initial_belief<R: Rng + ?Sized>(&self, _n_particles: usize, _rng: &mut R) -> Self::Belief {
        self.initial_distribution()
    }

    fn update_belief<R: Rng + ?Sized>(
        &self,
        belief: &Self::Belief,
        action: &TigerAction,
        obs: &TigerObs,
        _n_particles: usize,
        _rng: &mut R,
    ) -> Result<Self::Belief, BeliefError> {
        exact_update(belief, action, obs, self)
    }
}
