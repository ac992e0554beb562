use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{EpisodeLog, HarnessError};
use crate::tree::{to_dot, HistoryRecord};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Header of the episode CSV for `num_costs` cost signals.
pub fn episode_csv_header(num_costs: usize) -> Vec<String> {
    let mut h: Vec<String> = ["episode", "seed", "steps", "reward"].iter().map(|s| s.to_string()).collect();
    h.extend((0..num_costs).map(|j| format!("cost_{j}")));
    h.extend(
        ["violated", "first_action", "budget_residual", "estimation_error", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// One row per episode. `budget_residual` and `estimation_error` refer to the
/// first cost signal.
pub fn write_episodes_csv(path: &Path, logs: &[EpisodeLog], num_costs: usize) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(episode_csv_header(num_costs)).map_err(csv_err)?;
    for l in logs {
        let mut rec = vec![l.index.to_string(), l.seed.to_string(), l.steps.to_string(), l.reward.to_string()];
        rec.extend((0..num_costs).map(|j| l.cost.get(j).map_or(String::new(), f64::to_string)));
        rec.push(l.violated.to_string());
        rec.push(l.first_action.map_or(String::new(), |a| a.to_string()));
        rec.push(l.budget_residual.first().map_or(String::new(), f64::to_string));
        rec.push(l.estimation_error.first().map_or(String::new(), f64::to_string));
        rec.push(l.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    fs::write(path, text).map_err(io_err(path))
}

/// Writes `<stem>.json` and `<stem>.dot` into `dir`; returns both paths.
pub fn write_tree(dir: &Path, stem: &str, tree: &HistoryRecord) -> Result<(PathBuf, PathBuf), HarnessError> {
    let json = dir.join(format!("{stem}.json"));
    let dot = dir.join(format!("{stem}.dot"));
    write_json(&json, tree)?;
    fs::write(&dot, to_dot(tree)).map_err(io_err(&dot))?;
    Ok((json, dot))
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}
