//! Third-order system with a Beta-distributed coefficient, checked against
//! the quasi-exact per-node reference.
//!
//! Run with `cargo run --release --example third_order`.

use mefsc::aggregate::{run_me_fsc, MeFscConfig};
use mefsc::element::{step_count, SolverSettings, WarmStart};
use mefsc::measures::Distribution;
use mefsc::problems::ThirdOrder;
use mefsc::reference::{error_metrics, quasi_exact_moments, QUASI_EXACT_REFINEMENT, REFERENCE_POINTS};

fn main() -> mefsc::Result<()> {
    let model = ThirdOrder::benchmark();
    let laws = vec![Distribution::beta(2.0, 5.0, 2.0, 3.0)?];
    let (dt, duration) = (1e-3, 10.0);
    let config = MeFscConfig {
        distributions: laws.clone(),
        elements: vec![8],
        solver: SolverSettings {
            basis: 5,
            dt,
            warm_start: Some(WarmStart {
                degree: 7,
                duration: 1.0,
            }),
            diagnostics: true,
        },
        duration,
        workers: 1,
        keep_local: false,
    };
    let run = run_me_fsc(&model, &config)?;
    let steps = step_count(dt, duration)?;
    let reference = quasi_exact_moments(&model, &laws, dt, steps, REFERENCE_POINTS, QUASI_EXACT_REFINEMENT)?;
    let err = error_metrics(&run.series, &reference)?;
    for (l, name) in err.components.iter().enumerate() {
        println!(
            "{name}: eps_G mean {:.3e}  eps_G variance {:.3e}",
            err.mean_global[l], err.variance_global[l]
        );
    }
    println!(
        "{} rebuilds, {} projection fallbacks",
        run.diagnostics.rebuilds, run.diagnostics.projection_fallbacks
    );
    Ok(())
}
