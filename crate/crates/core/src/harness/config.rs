use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::envs::{LightDarkSpec, TigerSpec, ToyChainSpec};
use crate::solver::{PlannerConfig, WideningConfig};

/// Environment id plus spec overrides. In JSON: `{"id": "tiger", ...fields}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum EnvConfig {
    Toy(ToyChainSpec),
    Tiger(TigerSpec),
    #[serde(rename = "lightdark")]
    LightDark(LightDarkSpec),
}

impl EnvConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EnvConfig::Toy(_) => "toy",
            EnvConfig::Tiger(_) => "tiger",
            EnvConfig::LightDark(_) => "lightdark",
        }
    }

    pub fn continuous_observations(&self) -> bool {
        matches!(self, EnvConfig::LightDark(_))
    }

    /// Default spec for an environment id.
    pub fn from_id(id: &str) -> Result<Self, HarnessError> {
        match id {
            "toy" => Ok(EnvConfig::Toy(ToyChainSpec::default())),
            "tiger" => Ok(EnvConfig::Tiger(TigerSpec::default())),
            "lightdark" => Ok(EnvConfig::LightDark(LightDarkSpec::default())),
            other => Err(HarnessError::Config(format!(
                "unknown environment {other:?} (expected toy, tiger or lightdark)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "ccpomcp")]
    CcPomcp,
    #[serde(rename = "ccpomcp+")]
    CcPomcpPlus,
    #[serde(rename = "cpomcpow")]
    CPomcpow,
    #[serde(rename = "cpomcpow+")]
    CPomcpowPlus,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] =
        [SolverKind::CcPomcp, SolverKind::CcPomcpPlus, SolverKind::CPomcpow, SolverKind::CPomcpowPlus];

    pub fn local_duals(self) -> bool {
        matches!(self, SolverKind::CcPomcpPlus | SolverKind::CPomcpowPlus)
    }

    pub fn widening(self) -> bool {
        matches!(self, SolverKind::CPomcpow | SolverKind::CPomcpowPlus)
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::CcPomcp => "ccpomcp",
            SolverKind::CcPomcpPlus => "ccpomcp+",
            SolverKind::CPomcpow => "cpomcpow",
            SolverKind::CPomcpowPlus => "cpomcpow+",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown solver {s:?}")))
    }
}

/// One experiment: a single solver on a single environment over many
/// seeded episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub solver: SolverKind,
    /// Applied on top of the solver's own choice of local or global duals.
    pub planner: PlannerConfig,
    pub widening: WideningConfig,
    pub episodes: usize,
    pub max_steps: usize,
    pub base_seed: u64,
    /// Particle count of the between-step belief filter.
    pub n_particles: usize,
    /// Execute the most probable root action instead of sampling the policy.
    pub greedy_execution: bool,
    /// Directory receiving `episodes.csv` and `summary.json`.
    pub out_dir: Option<PathBuf>,
    /// Depth of the first-step tree snapshot of episode 0, if any.
    pub dump_tree: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::Tiger(TigerSpec::default()),
            solver: SolverKind::CcPomcpPlus,
            planner: PlannerConfig::default(),
            widening: WideningConfig::default(),
            episodes: 100,
            max_steps: 20,
            base_seed: 0,
            n_particles: 10_000,
            greedy_execution: false,
            out_dir: None,
            dump_tree: None,
        }
    }
}

impl ExperimentConfig {
    /// Copy of this config running `solver`, with the planner's dual mode
    /// set to match so the serialized form shows what actually runs.
    pub fn for_solver(&self, solver: SolverKind) -> Self {
        let mut cfg = Self { solver, ..self.clone() };
        cfg.planner.local_duals = solver.local_duals();
        cfg
    }

    /// Planner settings with the dual mode implied by the solver.
    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig { local_duals: self.solver.local_duals(), ..self.planner.clone() }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(HarnessError::Config("max_steps must be >= 1".into()));
        }
        if self.n_particles == 0 {
            return Err(HarnessError::Config("n_particles must be >= 1".into()));
        }
        if self.env.continuous_observations() && !self.solver.widening() {
            return Err(HarnessError::Config(format!(
                "{} has continuous observations and needs a widening solver (cpomcpow or cpomcpow+), not {}",
                self.env.id(),
                self.solver
            )));
        }
        self.planner.validate()?;
        self.widening.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
