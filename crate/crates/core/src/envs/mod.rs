//! Benchmark environments and exact oracles for the small ones.

mod bandit;
pub mod exact;
mod lightdark;
mod tiger;
mod toy;

pub use bandit::{BanditState, ConstrainedBandit};
pub use exact::{
    evaluate_policy, exact_solve_small, exact_solve_with_budget, lambda_greedy_policy, solve_bandit_lp,
    ExactSolution, PolicyTree,
};
pub use lightdark::{LightDark, LightDarkSpec, LightDarkState};
pub use tiger::{Tiger, TigerAction, TigerObs, TigerSpec, TigerState};
pub use toy::{ToyAction, ToyChain, ToyChainSpec, ToyState};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("problem too large for exact enumeration")]
    TooLarge,
    #[error("no policy satisfies the budget")]
    Infeasible,
}
