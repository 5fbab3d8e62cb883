//! Runs a small benchmark batch (a subset of the least-squares suite plus
//! one toy instance), then reads back the performance and data profiles.
//!
//! ```bash
//! cargo run --release --example benchmark -- out/bench
//! ```
//!
//! The output directory holds `config.toml`, `manifest.json`, `summary.csv`,
//! the graphs, one trace CSV per run and the profiles.

use std::path::PathBuf;

use ddsopt::experiment::{run_batch, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/bench".into()).into();

    let mut config = ExperimentConfig::suite(vec![1, 2]);
    config.name = "bench-demo".into();
    config.problems = ["rosenbrock", "helical-valley", "powell-singular", "bard", "brown-almost-linear", "toy-5"]
        .map(String::from)
        .to_vec();
    let report = run_batch(&config, &out)?;
    println!("{} cells written to {}", report.cells.len(), out.display());
    for c in report.failed_cells() {
        println!("  cell {} seed {} had a failing run", c.problem, c.seed);
    }

    for set in &report.profiles {
        let curves = &set.curves;
        // Value of each solver's curve at the right end of the axis.
        let end = curves.breakpoints().last().copied().unwrap_or(1.0);
        let tails: Vec<String> = curves
            .solvers
            .iter()
            .enumerate()
            .map(|(s, name)| format!("{name} {:.2}", curves.value(s, end)))
            .collect();
        println!("{:<36} {}", set.file_name(), tails.join(", "));
    }
    Ok(())
}
