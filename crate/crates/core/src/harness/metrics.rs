use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EpisodeLog;

/// Aggregated statistics of one solver on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub env: String,
    pub solver: String,
    /// Episodes that completed without a solver or belief error.
    pub episodes: usize,
    pub failed: usize,
    pub budget: Vec<f64>,
    pub reward_mean: f64,
    /// Sample standard deviation over √episodes.
    pub reward_se: f64,
    pub cost_mean: Vec<f64>,
    pub cost_se: Vec<f64>,
    /// Mean discounted cost minus budget, per cost signal.
    pub cost_minus_budget: Vec<f64>,
    pub violations: usize,
    /// Percentage of episodes whose discounted cost exceeded the budget.
    pub violation_pct: f64,
    pub mean_steps: f64,
    pub action_labels: Vec<String>,
    /// Mean first-step `N(b₀,a)/N(b₀)` per action.
    pub root_visit_fractions: Vec<f64>,
    /// Frequency of each action as the executed first action.
    pub first_action_freq: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn row(&self, solver: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.solver == solver)
    }

    /// Plain-text rendering for terminals.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<10} {:<11} {:>6} {:>20} {:>18} {:>8}  {}\n",
            "env", "solver", "eps", "reward", "cost", "viol%", "first-step visit fractions"
        );
        for r in &self.rows {
            let fractions: Vec<String> = r
                .action_labels
                .iter()
                .zip(&r.root_visit_fractions)
                .map(|(l, f)| format!("{l}:{f:.2}"))
                .collect();
            out.push_str(&format!(
                "{:<10} {:<11} {:>6} {:>20} {:>18} {:>8.1}  {}\n",
                r.env,
                r.solver,
                r.episodes,
                format!("{:.3} ± {:.3}", r.reward_mean, r.reward_se),
                format!("{:.3} ± {:.3}", r.cost_mean.first().unwrap_or(&0.0), r.cost_se.first().unwrap_or(&0.0)),
                r.violation_pct,
                fractions.join(" ")
            ));
        }
        out
    }
}

/// Sample mean and standard error (`std / √n`, with `n − 1` in the variance).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationStats {
    pub mean_visit_fraction: Vec<f64>,
    pub executed_freq: Vec<f64>,
}

/// Per-action mean root visit fraction and executed-action frequency across
/// runs. Fractions of one run may sum to less than one when some actions
/// were never expanded.
pub fn exploration_stats(fractions: &[Vec<f64>], executed: &[usize], num_actions: usize) -> ExplorationStats {
    let mut mean = vec![0.0; num_actions];
    for f in fractions {
        for (m, x) in mean.iter_mut().zip(f) {
            *m += x;
        }
    }
    if !fractions.is_empty() {
        mean.iter_mut().for_each(|m| *m /= fractions.len() as f64);
    }
    let mut freq = vec![0.0; num_actions];
    for &a in executed {
        freq[a] += 1.0;
    }
    if !executed.is_empty() {
        freq.iter_mut().for_each(|f| *f /= executed.len() as f64);
    }
    ExplorationStats { mean_visit_fraction: mean, executed_freq: freq }
}

impl MetricsRow {
    pub fn from_episodes(
        env: &str,
        solver: &str,
        budget: &[f64],
        action_labels: Vec<String>,
        logs: &[EpisodeLog],
    ) -> Self {
        let ok: Vec<&EpisodeLog> = logs.iter().filter(|l| l.error.is_none()).collect();
        let k = budget.len();
        let rewards: Vec<f64> = ok.iter().map(|l| l.reward).collect();
        let (reward_mean, reward_se) = mean_se(&rewards);
        let mut cost_mean = Vec::with_capacity(k);
        let mut cost_se = Vec::with_capacity(k);
        for j in 0..k {
            let xs: Vec<f64> = ok.iter().map(|l| l.cost[j]).collect();
            let (m, s) = mean_se(&xs);
            cost_mean.push(m);
            cost_se.push(s);
        }
        let violations = ok.iter().filter(|l| l.violated).count();
        let n = ok.len();
        let fractions: Vec<Vec<f64>> = ok
            .iter()
            .filter(|l| !l.root_visit_fractions.is_empty())
            .map(|l| l.root_visit_fractions.clone())
            .collect();
        let executed: Vec<usize> = ok.iter().filter_map(|l| l.first_action).collect();
        let stats = exploration_stats(&fractions, &executed, action_labels.len());
        Self {
            env: env.to_string(),
            solver: solver.to_string(),
            episodes: n,
            failed: logs.len() - n,
            budget: budget.to_vec(),
            reward_mean,
            reward_se,
            cost_minus_budget: cost_mean.iter().zip(budget).map(|(c, b)| c - b).collect(),
            cost_mean,
            cost_se,
            violations,
            violation_pct: if n == 0 { 0.0 } else { 100.0 * violations as f64 / n as f64 },
            mean_steps: if n == 0 { 0.0 } else { ok.iter().map(|l| l.steps as f64).sum::<f64>() / n as f64 },
            action_labels,
            root_visit_fractions: stats.mean_visit_fraction,
            first_action_freq: stats.executed_freq,
        }
    }
}

/// Pooled two-proportion z-test of `x1/n1` against `x2/n2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    /// `(p̂₁ − p̂₂) / se`.
    pub z: f64,
    /// One-sided p-value for the alternative `p₁ < p₂`.
    pub p_less: f64,
    pub p_two_sided: f64,
}

pub fn two_proportion_z_test(x1: usize, n1: usize, x2: usize, n2: usize) -> ZTest {
    assert!(n1 > 0 && n2 > 0, "both samples must be nonempty");
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = if se == 0.0 { 0.0 } else { (p1 - p2) / se };
    let normal = Normal::standard();
    let p_less = normal.cdf(z);
    ZTest { z, p_less, p_two_sided: 2.0 * normal.cdf(-z.abs()) }
}
