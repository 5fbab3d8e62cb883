//! Lists the registered least-squares problems, evaluates each at its
//! standard starting point and checks the analytic Jacobian there.
//!
//! ```bash
//! cargo run --example residual_registry
//! ```

use ddsopt::problems::{gradient_check, register_residual_problems};

fn main() {
    println!("{:<22} {:>3} {:>3} {:>16} {:>10}", "problem", "n", "m", "sum r_i(x0)^2", "grad err");
    for vp in register_residual_problems() {
        let x0 = vp.start();
        let r = vp.residual_vector(&x0);
        let f0: f64 = r.iter().map(|v| v * v).sum();
        let p = vp.to_problem();
        let err = (0..p.agents())
            .map(|i| gradient_check(|y| p.monitor_eval(i, y).unwrap(), &p.gradient(i, &x0), &x0))
            .fold(0.0, f64::max);
        println!("{:<22} {:>3} {:>3} {:>16.8e} {:>10.2e}", vp.name(), vp.dim(), vp.residuals(), f0, err);
    }
}
