//! Belief representations and updaters.
//!
//! Three flavours are provided: exact discrete beliefs for small tabular
//! problems, unweighted particle sets for root beliefs, and weighted particle
//! sets for the observation nodes of widening solvers.

use std::fmt::Debug;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::model::CpomdpModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("cannot sample from an empty belief (particle deprivation)")]
    Empty,
    #[error("observation has zero likelihood under the current belief")]
    ImpossibleObservation,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// Anything a planner can draw root states from.
pub trait StateSampler<S> {
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<S, BeliefError>;
}

/// Observation likelihood hook `z(o | a, s′)`.
///
/// Needed by weighted particle beliefs and the bootstrap filter. For discrete
/// observations this is a probability mass, for continuous ones a density.
pub trait ObservationDensity: CpomdpModel {
    fn obs_density(&self, action: &Self::Action, next: &Self::State, obs: &Self::Obs) -> f64;
}

/// One branch of an explicit transition distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<S> {
    pub next: S,
    pub prob: f64,
    pub reward: f64,
    pub cost: Vec<f64>,
}

/// Explicit tables for small discrete problems: exact Bayes filtering and
/// the brute-force oracles use these.
pub trait TabularModel: ObservationDensity {
    fn states(&self) -> Vec<Self::State>;
    fn state_index(&self, state: &Self::State) -> usize;
    fn observations(&self) -> Vec<Self::Obs>;
    /// Outcomes of taking `action` in `state`. Probabilities sum to one.
    fn outcomes(&self, state: &Self::State, action: &Self::Action) -> Vec<Outcome<Self::State>>;
    fn initial_distribution(&self) -> DiscreteBelief<Self::State>;
}

/// Environment-appropriate root belief tracking between planning steps.
pub trait BeliefModel: ObservationDensity {
    type Belief: StateSampler<Self::State> + Clone + Debug + Send + Sync;

    fn initial_belief<R: Rng + ?Sized>(&self, n_particles: usize, rng: &mut R) -> Self::Belief;

    fn update_belief<R: Rng + ?Sized>(
        &self,
        belief: &Self::Belief,
        action: &Self::Action,
        obs: &Self::Obs,
        n_particles: usize,
        rng: &mut R,
    ) -> Result<Self::Belief, BeliefError>;
}

/// Probability vector over an enumerated state set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief<S> {
    states: Vec<S>,
    probs: Vec<f64>,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl<S: Clone> DiscreteBelief<S> {
    pub fn new(states: Vec<S>, probs: Vec<f64>) -> Result<Self, BeliefError> {
        if states.len() != probs.len() {
            return Err(BeliefError::InvalidDistribution(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(BeliefError::InvalidDistribution("negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BeliefError::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { states, probs })
    }

    pub fn uniform(states: Vec<S>) -> Self {
        let p = 1.0 / states.len() as f64;
        let probs = vec![p; states.len()];
        Self { states, probs }
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(states: Vec<S>, weights: Vec<f64>) -> Result<Self, BeliefError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(BeliefError::ImpossibleObservation);
        }
        Self::new(states, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }
}

impl<S: Clone> StateSampler<S> for DiscreteBelief<S> {
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<S, BeliefError> {
        let dist = WeightedIndex::new(&self.probs).map_err(|_| BeliefError::Empty)?;
        Ok(self.states[dist.sample(rng)].clone())
    }
}

/// Bayes filter `b′(s′) ∝ z(o | a, s′) Σₛ T(s′ | s, a) b(s)`.
pub fn exact_update<M: TabularModel>(
    belief: &DiscreteBelief<M::State>,
    action: &M::Action,
    obs: &M::Obs,
    model: &M,
) -> Result<DiscreteBelief<M::State>, BeliefError> {
    let states = model.states();
    let mut predicted = vec![0.0; states.len()];
    for (s, p) in belief.iter() {
        if p == 0.0 {
            continue;
        }
        for outcome in model.outcomes(s, action) {
            predicted[model.state_index(&outcome.next)] += p * outcome.prob;
        }
    }
    let weights: Vec<f64> = states
        .iter()
        .zip(&predicted)
        .map(|(s, p)| p * model.obs_density(action, s, obs))
        .collect();
    DiscreteBelief::from_weights(states, weights)
}

/// A set of (state, weight) particles. Unweighted sets keep unit weights and
/// sample uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    weights: Vec<f64>,
    total_weight: f64,
    weighted: bool,
}

impl<S> Default for ParticleBelief<S> {
    fn default() -> Self {
        Self::empty(false)
    }
}

impl<S> ParticleBelief<S> {
    pub fn empty(weighted: bool) -> Self {
        Self { particles: Vec::new(), weights: Vec::new(), total_weight: 0.0, weighted }
    }

    pub fn unweighted(particles: Vec<S>) -> Self {
        let n = particles.len();
        Self { particles, weights: vec![1.0; n], total_weight: n as f64, weighted: false }
    }

    pub fn weighted(pairs: Vec<(S, f64)>) -> Self {
        let mut belief = Self::empty(true);
        for (s, w) in pairs {
            belief.push(s, w);
        }
        belief
    }

    /// Appends a particle. Unweighted beliefs ignore `weight`.
    pub fn push(&mut self, state: S, weight: f64) {
        let w = if self.weighted { weight.max(0.0) } else { 1.0 };
        self.particles.push(state);
        self.weights.push(w);
        self.total_weight += w;
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.particles.iter().zip(self.weights.iter().copied())
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, BeliefError> {
        if self.particles.is_empty() || !(self.total_weight > 0.0) {
            return Err(BeliefError::Empty);
        }
        if !self.weighted {
            return Ok(rng.random_range(0..self.particles.len()));
        }
        let mut target = rng.random::<f64>() * self.total_weight;
        for (i, w) in self.weights.iter().enumerate() {
            if target < *w {
                return Ok(i);
            }
            target -= w;
        }
        // Rounding can leave a sliver past the last positive weight.
        Ok(self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
    }
}

impl<S: Clone> StateSampler<S> for ParticleBelief<S> {
    fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<S, BeliefError> {
        self.sample_index(rng).map(|i| self.particles[i].clone())
    }
}

/// Bootstrap particle filter: propagate `n_particles` draws through the
/// generative model, weight by `z(o | a, s′)`, and resample to an unweighted
/// set of exactly `n_particles`.
pub fn particle_filter_update<M, B, R>(
    belief: &B,
    action: &M::Action,
    obs: &M::Obs,
    model: &M,
    n_particles: usize,
    rng: &mut R,
) -> Result<ParticleBelief<M::State>, BeliefError>
where
    M: ObservationDensity,
    B: StateSampler<M::State>,
    R: Rng + ?Sized,
{
    if n_particles == 0 {
        return Err(BeliefError::Empty);
    }
    let mut propagated = Vec::with_capacity(n_particles);
    let mut weights = Vec::with_capacity(n_particles);
    for _ in 0..n_particles {
        let s = belief.sample_state(rng)?;
        let next = model.step(&s, action, rng).state;
        weights.push(model.obs_density(action, &next, obs));
        propagated.push(next);
    }
    resample(&propagated, &weights, n_particles, rng)
}

/// Multinomial resampling into an unweighted set.
pub fn resample<S: Clone, R: Rng + ?Sized>(
    particles: &[S],
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<ParticleBelief<S>, BeliefError> {
    let dist = WeightedIndex::new(weights).map_err(|_| BeliefError::ImpossibleObservation)?;
    let out = (0..n).map(|_| particles[dist.sample(rng)].clone()).collect();
    Ok(ParticleBelief::unweighted(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_discrete_always_same_state() {
        let b = DiscreteBelief::new(vec![0u8, 1], vec![1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(b.sample_state(&mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn uniform_frequencies() {
        let b = DiscreteBelief::uniform(vec![0u8, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let ones = (0..n).filter(|_| b.sample_state(&mut rng).unwrap() == 1).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
        // Chi-square with one degree of freedom, 99.9% quantile 10.83.
        let expected = n as f64 / 2.0;
        let chi2 = (ones as f64 - expected).powi(2) / expected
            + ((n - ones) as f64 - expected).powi(2) / expected;
        assert!(chi2 < 10.83, "chi2 {chi2}");
    }

    #[test]
    fn zero_weight_particle_never_drawn() {
        let b = ParticleBelief::weighted(vec![("s1", 0.0), ("s2", 3.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(b.sample_state(&mut rng).unwrap(), "s2");
        }
    }

    #[test]
    fn empty_particles_error() {
        let b: ParticleBelief<u8> = ParticleBelief::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(b.sample_state(&mut rng), Err(BeliefError::Empty));
        let zero = ParticleBelief::weighted(vec![(1u8, 0.0)]);
        assert_eq!(zero.sample_state(&mut rng), Err(BeliefError::Empty));
    }

    #[test]
    fn invalid_discrete_rejected() {
        assert!(DiscreteBelief::new(vec![0, 1], vec![0.7, 0.7]).is_err());
        assert!(DiscreteBelief::new(vec![0, 1], vec![1.5, -0.5]).is_err());
        assert!(DiscreteBelief::new(vec![0], vec![0.5, 0.5]).is_err());
    }

    /// Deterministic shift with a Dirac observation equal to a fixed value.
    struct Shift;

    impl CpomdpModel for Shift {
        type State = i32;
        type Action = i32;
        type Obs = ();

        fn actions(&self) -> &[i32] {
            &[1]
        }
        fn step<R: Rng + ?Sized>(&self, s: &i32, a: &i32, _rng: &mut R) -> Transition<i32, ()> {
            Transition { state: s + a, obs: (), reward: 0.0, cost: vec![0.0] }
        }
        fn discount(&self) -> f64 {
            0.9
        }
        fn budget(&self) -> &[f64] {
            &[1.0]
        }
        fn sample_initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> i32 {
            0
        }
        fn is_terminal(&self, _s: &i32) -> bool {
            false
        }
    }

    impl ObservationDensity for Shift {
        fn obs_density(&self, _a: &i32, _s: &i32, _o: &()) -> f64 {
            1.0
        }
    }

    #[test]
    fn deterministic_filter_preserves_support() {
        let b = ParticleBelief::unweighted(vec![1, 2, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let out = particle_filter_update(&b, &1, &(), &Shift, 500, &mut rng).unwrap();
        assert_eq!(out.len(), 500);
        assert!(!out.is_weighted());
        assert!(out.particles().iter().all(|s| (2..=4).contains(s)));
        for v in 2..=4 {
            assert!(out.particles().contains(&v));
        }
    }
}
