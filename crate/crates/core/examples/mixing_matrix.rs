//! Draws a connected random graph, builds its Metropolis mixing matrix and
//! prints the spectrum and how fast repeated mixing reaches the average.
//!
//! ```bash
//! cargo run --example mixing_matrix -- 8 42
//! ```

use ddsopt::network::{average_project, build_mixing_matrix, generate_graph};
use ddsopt::Stacked;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map_or(Ok(6), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;

    let graph = generate_graph(m, 0.5, seed)?;
    println!("{m} agents, {} edges", graph.edges().len());
    for i in 0..m {
        println!("  agent {i}: neighbors {:?}", graph.neighbors(i));
    }

    let w = build_mixing_matrix(&graph)?;
    let report = w.spectral_report();
    println!("eigenvalues: {:.4?}", report.eigenvalues);
    println!("zeta = {:.6}, lambda_m <= 0: {}", w.zeta(), report.smallest_nonpositive);

    // Mixing drives every copy to the block average at rate zeta.
    let blocks: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64, (i * i) as f64]).collect();
    let mut x = Stacked::from_blocks(&blocks)?;
    let mean = average_project(&x);
    let gap = |x: &Stacked| -> f64 {
        x.as_flat().iter().zip(mean.as_flat()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let gap0 = gap(&x);
    for k in 0..=30 {
        if k % 5 == 0 {
            println!("k = {k:>2}: |X - mean| = {:.3e}, zeta^k |X0 - mean| = {:.3e}", gap(&x), w.zeta().powi(k) * gap0);
        }
        x = w.mix(&x)?;
    }
    Ok(())
}
