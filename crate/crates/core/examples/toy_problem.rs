//! Runs all six solver variants on the separable toy problem and prints the
//! final metrics of each run.
//!
//! ```bash
//! cargo run --example toy_problem -- 10 3
//! ```
//!
//! Arguments: dimension `n` (also the number of agents, default 5) and seed
//! (default 1).

use ddsopt::network::{build_mixing_matrix, generate_graph};
use ddsopt::problems::toy_problem;
use ddsopt::solvers::{defaults, run, Budget, SolverVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(5), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;

    let problem = toy_problem(n, seed)?;
    let w = build_mixing_matrix(&generate_graph(n, defaults::EDGE_PROBABILITY, seed)?)?;
    println!("toy-{n}, seed {seed}, zeta = {:.4}, budget = {} evaluations", w.zeta(), 100 * n);
    println!(
        "{:<18} {:>6} {:>14} {:>14} {:>12} {:>8}",
        "solver", "gamma", "f(iterates)", "f(mean)", "consensus", "evals"
    );
    for variant in SolverVariant::ALL {
        let gammas: &[f64] = if variant.uses_gamma() { &[1.0, 10.0, 100.0] } else { &[f64::NAN] };
        for &gamma in gammas {
            let cfg = variant.config(problem.x0(), gamma.is_finite().then_some(gamma), Budget::toy(n))?;
            let trace = run(&problem.fresh_copy(), &w, &cfg)?;
            let last = trace.last();
            println!(
                "{:<18} {:>6} {:>14.6e} {:>14.6e} {:>12.4e} {:>8}",
                variant.id(),
                if gamma.is_finite() { gamma.to_string() } else { "-".into() },
                last.f_iterates,
                last.f_mean,
                last.consensus,
                last.cum_evals
            );
        }
    }
    Ok(())
}
