//! Random-stiffness oscillator against its closed-form moments.
//!
//! Run with `cargo run --release --example oscillator`.

use mefsc::aggregate::{run_me_fsc, MeFscConfig};
use mefsc::element::{SolverSettings, WarmStart};
use mefsc::measures::Distribution;
use mefsc::problems::Oscillator;
use mefsc::reference::{error_metrics, exact_problem1_moments};

fn main() -> mefsc::Result<()> {
    let model = Oscillator::benchmark();
    let law = Distribution::uniform(340.0, 460.0)?;
    let dt = 1e-3;
    for elements in [1usize, 2, 4, 8] {
        let config = MeFscConfig {
            distributions: vec![law.clone()],
            elements: vec![elements],
            solver: SolverSettings {
                basis: 4,
                dt,
                warm_start: Some(WarmStart {
                    degree: 7,
                    duration: 1.0,
                }),
                diagnostics: false,
            },
            duration: 10.0,
            workers: 1,
            keep_local: false,
        };
        let run = run_me_fsc(&model, &config)?;
        let exact = exact_problem1_moments(&model, &law, &run.series.times)?;
        let err = error_metrics(&run.series, &exact)?;
        println!(
            "E={elements:<2} eps_G mean {:.3e}  eps_G variance {:.3e}",
            err.mean_global[0], err.variance_global[0]
        );
    }
    Ok(())
}
