use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddsopt::experiment::{recompute_profiles, run_batch, run_single, BudgetKind, BudgetRule, ExperimentConfig, SingleRun};
use ddsopt::problems::problem_by_name;
use ddsopt::solvers::Protocol;

#[derive(Parser)]
#[command(name = "ddsopt", about = "Decentralized derivative-free optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered problems with their dimension and agent count.
    ListProblems,
    /// Run one (problem, solver, seed) cell and write its trace.
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        solver: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Penalty parameter for the Lyapunov-decrease solvers.
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Toy instances n in {5, 10, 15}, all solvers, gamma in {1, 10, 100}.
    ToySweep(Batch),
    /// Every registered least-squares problem with all solvers.
    Suite(Batch),
    /// Recompute profiles from the traces stored in an output directory.
    Profiles {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the evaluation cap.
    #[arg(long)]
    budget_evals: Option<u64>,
    /// Override the iteration cap.
    #[arg(long)]
    max_iters: Option<u64>,
    /// Exit with a nonzero status if any run fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct Batch {
    /// Configuration file; defaults to the built-in protocol.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Restrict to these problems (comma-separated).
    #[arg(long, value_delimiter = ',')]
    problems: Option<Vec<String>>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> ddsopt::Result<ExitCode> {
    match cli.command {
        Command::ListProblems => {
            println!("{:<22} {:>4} {:>4}", "problem", "n", "m");
            let mut names: Vec<String> = vec!["toy-<n>".into()];
            names.extend(ddsopt::problems::residual_problem_names().into_iter().map(String::from));
            for name in names {
                if name == "toy-<n>" {
                    println!("{:<22} {:>4} {:>4}", name, "n", "n");
                    continue;
                }
                let p = problem_by_name(&name, 0)?;
                println!("{:<22} {:>4} {:>4}", name, p.dim(), p.agents());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            problem,
            solver,
            seed,
            gamma,
            common,
        } => {
            let mut spec = SingleRun {
                problem,
                solver,
                seed,
                gamma,
                budget: None,
                protocol: Protocol::default(),
            };
            if common.budget_evals.is_some() || common.max_iters.is_some() {
                let base = spec.default_budget();
                spec.budget = Some(BudgetRule {
                    rule: base.rule,
                    max_evals: common.budget_evals,
                    max_iters: common.max_iters,
                });
            }
            let (trace, mt, path) = run_single(&spec, &common.out)?;
            println!("trace: {}", path.display());
            println!(
                "iterations {} evals {} complete {}",
                trace.iterations(),
                trace.last().cum_evals,
                trace.complete
            );
            println!("f_iterates {:.16e}", mt.f_at_iterates);
            println!("f_mean     {:.16e}", mt.f_at_mean);
            println!("consensus  {:.16e}", mt.consensus);
            if let Some(f) = &trace.failure {
                eprintln!("run failed: {f}");
            }
            Ok(if common.strict && !trace.complete {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::ToySweep(b) => batch(b, ExperimentConfig::toy_sweep),
        Command::Suite(b) => batch(b, ExperimentConfig::suite),
        Command::Profiles { out } => {
            for p in recompute_profiles(&out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn batch(b: Batch, preset: fn(Vec<u64>) -> ExperimentConfig) -> ddsopt::Result<ExitCode> {
    let mut config = match &b.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => preset(vec![1]),
    };
    if let Some(seeds) = b.seeds {
        config.seeds = seeds;
    }
    if let Some(problems) = b.problems {
        config.problems = problems;
    }
    if b.common.budget_evals.is_some() {
        config.budget.max_evals = b.common.budget_evals;
    }
    if b.common.max_iters.is_some() {
        config.budget.max_iters = b.common.max_iters;
    }
    if config.budget.rule == BudgetKind::Fixed && config.budget.max_evals.is_none() && config.budget.max_iters.is_none() {
        config.budget.max_iters = Some(500);
    }
    let out = if b.config.is_some() && !std::env::args().any(|a| a == "--out") {
        config.output_dir.clone().unwrap_or(b.common.out)
    } else {
        b.common.out
    };
    let report = run_batch(&config, &out)?;
    let runs: usize = report.cells.iter().map(|c| c.runs.len()).sum();
    println!(
        "{}: {} cells, {} runs, {} profile files -> {}",
        config.name,
        report.cells.len(),
        runs,
        report.profiles.len(),
        out.display()
    );
    let failed = report.failed_cells();
    for c in &failed {
        let reason = c.error.clone().unwrap_or_else(|| {
            c.runs
                .iter()
                .find_map(|r| match &r.result {
                    Err(e) => Some(format!("{}: {e}", r.spec.label())),
                    Ok(t) => t.failure.as_ref().map(|f| format!("{}: {f}", r.spec.label())),
                })
                .unwrap_or_default()
        });
        eprintln!("failed cell {} seed {}: {reason}", c.problem, c.seed);
    }
    Ok(if b.common.strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
