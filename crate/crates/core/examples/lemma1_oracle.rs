//! Re-checks every unsuccessful poll of an instrumented Lyapunov-decrease
//! run against the gradient bound it certifies:
//! `|∇L_i| <= (M_i alpha / 2 + rho(alpha) / alpha) / kappa`.
//!
//! ```bash
//! cargo run --example lemma1_oracle
//! ```

use ddsopt::network::{Graph, MixingMatrix};
use ddsopt::penalty::PenaltyParams;
use ddsopt::problems::DiagonalQuadratic;
use ddsopt::searchcore::PollSet;
use ddsopt::solvers::{lemma1_oracle, run, Budget, SolverVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = DiagonalQuadratic::new(vec![vec![1.0, 2.0], vec![3.0, 0.5]], vec![vec![1.0, -1.0], vec![-2.0, 0.5]])?;
    let lipschitz = [q.lipschitz(0), q.lipschitz(1)];
    let problem = q.into_problem("two-quadratics", vec![0.5, -0.5])?;
    let w = MixingMatrix::metropolis(&Graph::complete(2))?;
    let kappa = PollSet::canonical(2).kappa();

    for variant in [SolverVariant::DdsLVanishing, SolverVariant::DdsLAdaptive] {
        for gamma in [1.0, 10.0] {
            let cfg = variant.config(problem.x0(), Some(gamma), Budget::iterations(200))?.instrumented();
            let trace = run(&problem.fresh_copy(), &w, &cfg)?;
            let r = lemma1_oracle(&trace, &problem, &w, PenaltyParams::new(gamma)?, kappa, &lipschitz)?;
            println!(
                "{:<16} gamma {:>3}: {:>4} unsuccessful polls checked, {} violations, {} within rounding, min slack {:.3e}",
                variant.id(),
                gamma,
                r.checked,
                r.violations.len(),
                r.within_rounding.len(),
                r.min_slack
            );
        }
    }
    Ok(())
}
