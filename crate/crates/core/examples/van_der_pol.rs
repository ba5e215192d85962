//! Van der Pol oscillator with two random parameters against a small Monte
//! Carlo reference.
//!
//! Run with `cargo run --release --example van_der_pol`.

use mefsc::aggregate::{run_me_fsc, MeFscConfig};
use mefsc::element::{step_count, SolverSettings, WarmStart};
use mefsc::problems::{Preset, ProblemId, VanDerPol};
use mefsc::reference::{monte_carlo_moments, MonteCarloConfig};
use mefsc::reference::error_metrics;

fn main() -> mefsc::Result<()> {
    let model = VanDerPol::benchmark();
    let laws = Preset::distributions(ProblemId::VanDerPol, "uniform-beta")?;
    let (dt, duration) = (5e-3, 10.0);
    let run = run_me_fsc(
        &model,
        &MeFscConfig {
            distributions: laws.solver.clone(),
            elements: vec![4, 4],
            solver: SolverSettings {
                basis: 4,
                dt,
                warm_start: Some(WarmStart {
                    degree: 9,
                    duration: 1.0,
                }),
                diagnostics: false,
            },
            duration,
            workers: 4,
            keep_local: false,
        },
    )?;
    let reference = monte_carlo_moments(
        &model,
        &laws.reference,
        &MonteCarloConfig {
            samples: 20_000,
            dt,
            steps: step_count(dt, duration)?,
            seed: 1,
            workers: 4,
        },
    )?;
    let err = error_metrics(&run.series, &reference)?;
    let last = run.series.len() - 1;
    println!(
        "t={:.1}: E[u]={:.5} (MC {:.5})  Var[u]={:.5e} (MC {:.5e})",
        run.series.times[last],
        run.series.mean[0][last],
        reference.mean[0][last],
        run.series.variance[0][last],
        reference.variance[0][last]
    );
    println!(
        "eps_G mean {:.3e}  eps_G variance {:.3e} (Monte Carlo noise included)",
        err.mean_global[0], err.variance_global[0]
    );
    Ok(())
}
