//! Constrained LightDark: a 1-D agent with an uncertain start must localize
//! near the light before stopping at the origin, while every step spent
//! above the cost threshold is charged.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::belief::{particle_filter_update, BeliefError, BeliefModel, ObservationDensity, ParticleBelief};
use crate::model::{CpomdpModel, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightDarkState {
    pub pos: f64,
    pub done: bool,
}

impl LightDarkState {
    pub fn at(pos: f64) -> Self {
        Self { pos, done: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LightDarkSpec {
    pub initial_mean: f64,
    pub initial_std: f64,
    /// Position of the light; observation noise grows with distance from it.
    pub light: f64,
    pub sigma_min: f64,
    /// Signed step sizes; a step of zero stops the episode.
    pub actions: Vec<f64>,
    pub goal_reward: f64,
    pub miss_penalty: f64,
    pub step_penalty: f64,
    /// Stopping within this distance of the origin counts as reaching the goal.
    pub goal_radius: f64,
    /// Positions strictly above this are in the cost region.
    pub cost_threshold: f64,
    pub region_cost: f64,
    pub discount: f64,
    pub budget: f64,
    /// Jitter scales tried, in order, when a belief update degenerates.
    pub rejuvenation_scales: Vec<f64>,
}

impl Default for LightDarkSpec {
    fn default() -> Self {
        Self {
            initial_mean: 2.0,
            initial_std: 2.0,
            light: 10.0,
            sigma_min: 0.01,
            actions: vec![-10.0, -5.0, -1.0, 0.0, 1.0, 5.0, 10.0],
            goal_reward: 100.0,
            miss_penalty: -100.0,
            step_penalty: -1.0,
            goal_radius: 1.0,
            cost_threshold: 12.0,
            region_cost: 1.0,
            discount: 0.95,
            budget: 0.1,
            rejuvenation_scales: vec![0.1, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

impl LightDarkSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.initial_std > 0.0 && self.sigma_min > 0.0) {
            return Err(EnvError::InvalidSpec("standard deviations must be > 0".into()));
        }
        if self.actions.is_empty() || !self.actions.contains(&0.0) {
            return Err(EnvError::InvalidSpec("action set must contain the stop action 0".into()));
        }
        if !(self.region_cost >= 0.0 && self.budget >= 0.0) {
            return Err(EnvError::InvalidSpec("costs and budget must be >= 0".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(EnvError::InvalidSpec("discount must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LightDark {
    spec: LightDarkSpec,
    budget: [f64; 1],
    initial: Normal<f64>,
}

impl LightDark {
    pub fn new(spec: LightDarkSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let initial = Normal::new(spec.initial_mean, spec.initial_std)
            .map_err(|e| EnvError::InvalidSpec(e.to_string()))?;
        let budget = [spec.budget];
        Ok(Self { spec, budget, initial })
    }

    pub fn spec(&self) -> &LightDarkSpec {
        &self.spec
    }

    /// Observation noise standard deviation at a position.
    pub fn obs_std(&self, pos: f64) -> f64 {
        (pos - self.spec.light).abs() + self.spec.sigma_min
    }

    /// Immediate cost of ending a step at `pos`.
    pub fn region_cost(&self, pos: f64) -> f64 {
        if pos > self.spec.cost_threshold {
            self.spec.region_cost
        } else {
            0.0
        }
    }

    pub fn action_index(&self, step: f64) -> Option<usize> {
        self.spec.actions.iter().position(|a| *a == step)
    }
}

impl CpomdpModel for LightDark {
    type State = LightDarkState;
    type Action = f64;
    type Obs = f64;

    fn actions(&self) -> &[f64] {
        &self.spec.actions
    }

    fn step<R: Rng + ?Sized>(&self, state: &LightDarkState, action: &f64, rng: &mut R) -> Transition<LightDarkState, f64> {
        if state.done {
            return Transition { state: *state, obs: state.pos, reward: 0.0, cost: vec![0.0] };
        }
        let (next, reward) = if *action == 0.0 {
            let reward = if state.pos.abs() <= self.spec.goal_radius {
                self.spec.goal_reward
            } else {
                self.spec.miss_penalty
            };
            (LightDarkState { pos: state.pos, done: true }, reward)
        } else {
            (LightDarkState::at(state.pos + action), self.spec.step_penalty)
        };
        let noise = Normal::new(0.0, self.obs_std(next.pos)).expect("positive std");
        let obs = next.pos + noise.sample(rng);
        Transition { state: next, obs, reward, cost: vec![self.region_cost(next.pos)] }
    }

    fn discount(&self) -> f64 {
        self.spec.discount
    }

    fn budget(&self) -> &[f64] {
        &self.budget
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> LightDarkState {
        LightDarkState::at(self.initial.sample(rng))
    }

    fn is_terminal(&self, state: &LightDarkState) -> bool {
        state.done
    }

    fn continuous_observations(&self) -> bool {
        true
    }
}

impl ObservationDensity for LightDark {
    fn obs_density(&self, _action: &f64, next: &LightDarkState, obs: &f64) -> f64 {
        let sd = self.obs_std(next.pos);
        let z = (obs - next.pos) / sd;
        (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    }
}

impl BeliefModel for LightDark {
    type Belief = ParticleBelief<LightDarkState>;

    fn initial_belief<R: Rng + ?Sized>(&self, n_particles: usize, rng: &mut R) -> Self::Belief {
        ParticleBelief::unweighted((0..n_particles.max(1)).map(|_| self.sample_initial_state(rng)).collect())
    }

    /// Bootstrap filter; if every particle is ruled out the prior particles
    /// are jittered at increasing scales and the update retried.
    fn update_belief<R: Rng + ?Sized>(
        &self,
        belief: &Self::Belief,
        action: &f64,
        obs: &f64,
        n_particles: usize,
        rng: &mut R,
    ) -> Result<Self::Belief, BeliefError> {
        match particle_filter_update(belief, action, obs, self, n_particles, rng) {
            Err(BeliefError::ImpossibleObservation) => {}
            other => return other,
        }
        for &scale in &self.spec.rejuvenation_scales {
            let jitter = Normal::new(0.0, scale).map_err(|e| BeliefError::InvalidDistribution(e.to_string()))?;
            let jittered = ParticleBelief::unweighted(
                belief
                    .particles()
                    .iter()
                    .map(|s| LightDarkState { pos: s.pos + jitter.sample(rng), done: s.done })
                    .collect(),
            );
            if let Ok(b) = particle_filter_update(&jittered, action, obs, self, n_particles, rng) {
                return Ok(b);
            }
        }
        Err(BeliefError::ImpossibleObservation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ld() -> LightDark {
        LightDark::new(LightDarkSpec::default()).unwrap()
    }

    #[test]
    fn noise_is_minimal_at_the_light() {
        assert_eq!(ld().obs_std(10.0), 0.01);
        assert_eq!(ld().obs_std(7.0), 3.01);
    }

    #[test]
    fn stop_rewards() {
        let m = ld();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = m.step(&LightDarkState::at(0.5), &0.0, &mut rng);
        assert!(t.state.done);
        assert_eq!(t.reward, 100.0);
        let t = m.step(&LightDarkState::at(3.0), &0.0, &mut rng);
        assert_eq!(t.reward, -100.0);
        let t = m.step(&LightDarkState::at(8.0), &5.0, &mut rng);
        assert_eq!((t.state.pos, t.reward, t.cost[0]), (13.0, -1.0, 1.0));
    }

    #[test]
    fn density_integrates_to_one() {
        let m = ld();
        let s = LightDarkState::at(6.0);
        let sd = m.obs_std(6.0);
        let (lo, hi, n) = (6.0 - 10.0 * sd, 6.0 + 10.0 * sd, 20_000);
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..n).map(|i| m.obs_density(&1.0, &s, &(lo + (i as f64 + 0.5) * h)) * h).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn filter_sharpens_near_light() {
        let m = ld();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prior = m.initial_belief(20_000, &mut rng);
        let post = m.update_belief(&prior, &5.0, &7.0, 20_000, &mut rng).unwrap();
        let std = |b: &ParticleBelief<LightDarkState>| {
            let n = b.len() as f64;
            let mean = b.particles().iter().map(|s| s.pos).sum::<f64>() / n;
            (b.particles().iter().map(|s| (s.pos - mean).powi(2)).sum::<f64>() / n).sqrt()
        };
        assert!(std(&post) < std(&prior));
        assert_eq!(post.len(), 20_000);
    }
}
