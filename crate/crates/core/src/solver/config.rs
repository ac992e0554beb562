use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::tree::NodeInit;

/// Dual ascent step sizes `αᵢ = scale / i^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        Self { scale: 1.0, exponent: 0.5 }
    }
}

impl AlphaSchedule {
    /// A schedule that never moves the duals.
    pub fn frozen() -> Self {
        Self { scale: 0.0, exponent: 0.0 }
    }

    pub fn step(&self, i: u64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale / (i.max(1) as f64).powf(self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "action")]
pub enum RolloutPolicy {
    /// Uniformly random actions.
    Uniform,
    /// Always the action with this index.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Simulations per planning call.
    pub simulations: usize,
    pub max_depth: usize,
    /// UCB exploration constant κ.
    pub exploration: f64,
    /// Best-action tolerance ν of the stochastic policy.
    pub tolerance: f64,
    /// λ₀; a single entry is broadcast to every cost signal.
    pub initial_lambda: Vec<f64>,
    pub alpha: AlphaSchedule,
    pub lambda_max: f64,
    /// History-dependent duals with recursive ascent (the `+` variants).
    pub local_duals: bool,
    pub rollout: RolloutPolicy,
    pub node_init: NodeInit,
    /// Carry the matching subtree over to the next planning call.
    pub reuse_tree: bool,
    pub record_lambda_trace: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            simulations: 100,
            max_depth: 20,
            exploration: 1.0,
            tolerance: 0.0,
            initial_lambda: vec![1.0],
            alpha: AlphaSchedule::default(),
            lambda_max: 100.0,
            local_duals: true,
            rollout: RolloutPolicy::Uniform,
            node_init: NodeInit::default(),
            reuse_tree: false,
            record_lambda_trace: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let fail = |msg: &str| Err(PlanError::InvalidConfig(msg.to_string()));
        if self.simulations == 0 {
            return fail("simulations must be >= 1");
        }
        if self.max_depth == 0 {
            return fail("max_depth must be >= 1");
        }
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return fail("exploration must be finite and >= 0");
        }
        if !(self.tolerance >= 0.0) {
            return fail("tolerance must be >= 0");
        }
        if self.initial_lambda.is_empty() || self.initial_lambda.iter().any(|l| !(*l >= 0.0)) {
            return fail("initial lambda must be nonempty and >= 0");
        }
        if !(self.lambda_max > 0.0) {
            return fail("lambda_max must be > 0");
        }
        if !(self.alpha.scale >= 0.0 && self.alpha.exponent >= 0.0) {
            return fail("alpha schedule must be nonnegative and nonincreasing");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_schedule_values() {
        let a = AlphaSchedule::default();
        assert_eq!(a.step(1), 1.0);
        assert_eq!(a.step(4), 0.5);
        assert_eq!(AlphaSchedule::frozen().step(10), 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(PlannerConfig::default().validate().is_ok());
        for bad in [
            PlannerConfig { simulations: 0, ..Default::default() },
            PlannerConfig { max_depth: 0, ..Default::default() },
            PlannerConfig { exploration: -1.0, ..Default::default() },
            PlannerConfig { initial_lambda: vec![], ..Default::default() },
            PlannerConfig { lambda_max: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn serde_defaults_fill_missing_fields() {
        let c: PlannerConfig = serde_json::from_str(r#"{"simulations": 7}"#).unwrap();
        assert_eq!(c.simulations, 7);
        assert_eq!(c.lambda_max, 100.0);
    }
}
