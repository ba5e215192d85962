//! Three-mode Kraichnan-Orszag system with three uniform random initial
//! conditions, on a 2x2x2 partition.
//!
//! Run with `cargo run --release --example kraichnan_orszag`.

use mefsc::aggregate::{run_me_fsc, MeFscConfig};
use mefsc::element::SolverSettings;
use mefsc::measures::Distribution;
use mefsc::problems::KraichnanOrszag;

fn main() -> mefsc::Result<()> {
    let run = run_me_fsc(
        &KraichnanOrszag,
        &MeFscConfig {
            distributions: vec![Distribution::uniform(-1.0, 1.0)?; 3],
            elements: vec![2, 2, 2],
            solver: SolverSettings {
                basis: 6,
                dt: 5e-3,
                warm_start: None,
                diagnostics: true,
            },
            duration: 5.0,
            workers: 4,
            keep_local: false,
        },
    )?;
    let s = &run.series;
    for i in (0..s.len()).step_by(200) {
        let row: Vec<String> = (0..s.components.len())
            .map(|l| format!("E[{}]={:+.4} Var={:.4}", s.components[l], s.mean[l][i], s.variance[l][i]))
            .collect();
        println!("t={:4.1}  {}", s.times[i], row.join("  "));
    }
    println!(
        "max orthogonality residual {:.2e}",
        run.diagnostics.max_orthogonality_residual
    );
    Ok(())
}
