use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use cpomcp::harness::{
    ensure_dir, run_experiment, two_proportion_z_test, write_episodes_csv, write_json, write_tree, EnvConfig,
    ExperimentConfig, MetricsTable, SolverKind,
};

/// Run seeded episodes of constrained POMDP planners and report reward,
/// cost and budget-violation statistics.
#[derive(Debug, Parser)]
#[command(name = "cpomcp", version)]
struct Args {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment: toy, tiger or lightdark.
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated solvers: ccpomcp, ccpomcp+, cpomcpow, cpomcpow+.
    #[arg(long, value_delimiter = ',')]
    solver: Vec<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Simulations per planning step.
    #[arg(long)]
    sims: Option<usize>,
    /// Base seed; episode i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Output directory for episode CSVs, summary JSON and tree dumps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the first-step tree of episode 0 down to this depth (needs --out).
    #[arg(long)]
    dump_tree: Option<usize>,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn base_config(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(id) = &args.env {
        if id != cfg.env.id() {
            cfg.env = EnvConfig::from_id(id)?;
        }
    }
    if let Some(n) = args.episodes {
        cfg.episodes = n;
    }
    if let Some(n) = args.sims {
        cfg.planner.simulations = n;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(n) = args.max_steps {
        cfg.max_steps = n;
    }
    if args.out.is_some() {
        cfg.out_dir = args.out.clone();
    }
    if args.dump_tree.is_some() {
        cfg.dump_tree = args.dump_tree;
    }
    Ok(cfg)
}

fn solvers(args: &Args, cfg: &ExperimentConfig) -> Result<Vec<SolverKind>> {
    if !args.solver.is_empty() {
        return args.solver.iter().map(|s| Ok(s.parse::<SolverKind>()?)).collect();
    }
    if args.config.is_some() {
        return Ok(vec![cfg.solver]);
    }
    Ok(if cfg.env.continuous_observations() {
        vec![SolverKind::CPomcpow, SolverKind::CPomcpowPlus]
    } else {
        vec![SolverKind::CcPomcp, SolverKind::CcPomcpPlus]
    })
}

fn run(args: Args) -> Result<()> {
    let base = base_config(&args)?;
    let kinds = solvers(&args, &base)?;
    if base.dump_tree.is_some() && base.out_dir.is_none() {
        bail!("--dump-tree needs an output directory (--out)");
    }
    if args.print_config {
        for solver in &kinds {
            let cfg = base.for_solver(*solver);
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
        return Ok(());
    }

    let mut table = MetricsTable::default();
    for solver in kinds {
        let cfg = base.for_solver(solver);
        let out = run_experiment(&cfg).with_context(|| format!("running {solver} on {}", cfg.env.id()))?;
        if let Some(dir) = &cfg.out_dir {
            let sub = dir.join(solver.name());
            ensure_dir(&sub)?;
            write_episodes_csv(&sub.join("episodes.csv"), &out.episodes, out.summary.budget.len())?;
            write_json(&sub.join("config.json"), &cfg)?;
            if let Some(tree) = &out.tree {
                write_tree(&sub, "tree", tree)?;
            }
        }
        for log in out.episodes.iter().filter(|l| l.error.is_some()) {
            eprintln!("{solver}: episode {} failed: {}", log.index, log.error.as_deref().unwrap_or(""));
        }
        table.rows.push(out.summary);
    }

    print!("{}", table.render());
    if let [a, b] = &table.rows[..] {
        if a.episodes > 0 && b.episodes > 0 {
            let t = two_proportion_z_test(b.violations, b.episodes, a.violations, a.episodes);
            println!(
                "violation rate {} vs {}: z = {:.3}, one-sided p = {:.3e}",
                b.solver, a.solver, t.z, t.p_less
            );
        }
    }
    if let Some(dir) = &base.out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("summary.json"), &table)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
