//! Two agents that reach consensus without reaching the minimizer when the
//! local-decrease solver polls in an adversarial order.
//!
//! ```bash
//! cargo run --example counterexample
//! ```

use ddsopt::scenarios::counterexample;
use ddsopt::searchcore::StepsizeSchedule;
use ddsopt::solvers::{run, Budget, SolverConfig, SolverVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ce = counterexample()?;
    let cfg = SolverConfig::dds_f(StepsizeSchedule::vanishing(0.1, 0.6)?)
        .with_poll_sets(ce.poll_sets.clone())
        .with_budget(Budget::iterations(100))
        .instrumented();
    let t = run(&ce.problem, &ce.mixing, &cfg)?;
    let snaps = &t.instrumentation.as_ref().expect("instrumented").snapshots;

    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "k", "mean_1", "mean_2", "f(mean)", "consensus");
    for (row, x) in t.rows.iter().zip(snaps).step_by(10) {
        let mean = x.mean_block();
        println!("{:>4} {:>10.6} {:>10.6} {:>10.6} {:>10.3e}", row.k, mean[0], mean[1], row.f_mean, row.consensus);
    }
    let mean = t.final_iterate.mean_block();
    println!("final mean = [{:.6}, {:.6}], minimizer of the sum = [1, 0]", mean[0], mean[1]);
    println!("every poll succeeded: {}", t.success_sets.iter().all(|s| s.len() == 2));

    // The same instance with the Lyapunov-decrease solver, which sees the
    // disagreement through the penalty term.
    let cfg = SolverVariant::DdsLVanishing
        .config(ce.problem.x0(), Some(1.0), Budget::iterations(100))?
        .with_poll_sets(ce.poll_sets.clone());
    let t = run(&ce.problem.fresh_copy(), &ce.mixing, &cfg)?;
    let mean = t.final_iterate.mean_block();
    println!("Lyapunov decrease, gamma = 1: mean = [{:.4}, {:.4}], f(mean) = {:.4}", mean[0], mean[1], t.last().f_mean);
    Ok(())
}
