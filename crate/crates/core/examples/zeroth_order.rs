//! Zeroth-order decentralized gradient descent with the two gradient
//! estimators: centered finite differences and a sliding-window affine
//! model. Compares their evaluation cost on one least-squares problem.
//!
//! ```bash
//! cargo run --example zeroth_order -- rosenbrock 2
//! ```

use ddsopt::experiment::cell_setup;
use ddsopt::solvers::{run, Budget, Protocol, SolverVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "extended-rosenbrock".into());
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;

    let (problem, w, _) = cell_setup(&name, seed, &Protocol::default())?;
    let budget = Budget::suite(problem.dim(), problem.agents());
    println!("{name}: n = {}, m = {}, zeta = {:.4}", problem.dim(), problem.agents(), w.zeta());

    for variant in [SolverVariant::ZoDgdFd, SolverVariant::ZoDgdLm] {
        let cfg = variant.config(problem.x0(), None, budget)?;
        let t = run(&problem.fresh_copy(), &w, &cfg)?;
        let per_iter = t.total_evals() as f64 / t.iterations().max(1) as f64;
        println!(
            "{:<10} {:>4} iterations, {:>6.1} evaluations per iteration, f(mean) {:.4e} -> {:.4e}, consensus {:.3e}",
            variant.id(),
            t.iterations(),
            per_iter,
            t.rows[0].f_mean,
            t.last().f_mean,
            t.last().consensus
        );
        if let Some(f) = &t.failure {
            println!("  stopped early: {f}");
        }
    }
    Ok(())
}
