//! Monte Carlo moments of the oscillator and their convergence towards the
//! closed form. Results depend only on the seed, not on the worker count.
//!
//! Run with `cargo run --release --example monte_carlo`.

use mefsc::measures::Distribution;
use mefsc::problems::Oscillator;
use mefsc::reference::{monte_carlo_moments, MonteCarloConfig};
use mefsc::reference::{error_metrics, exact_problem1_moments};

fn main() -> mefsc::Result<()> {
    let model = Oscillator::benchmark();
    let law = vec![Distribution::uniform(340.0, 460.0)?];
    let (dt, steps) = (1e-3, 2000);
    let mut previous = None;
    for samples in [1_000usize, 4_000, 16_000] {
        let cfg = MonteCarloConfig {
            samples,
            dt,
            steps,
            seed: 42,
            workers: 4,
        };
        let mc = monte_carlo_moments(&model, &law, &cfg)?;
        let exact = exact_problem1_moments(&model, &law[0], &mc.times)?;
        let err = error_metrics(&mc, &exact)?;
        println!(
            "n={samples:<6} eps_G mean {:.3e}  eps_G variance {:.3e}",
            err.mean_global[0], err.variance_global[0]
        );
        previous = Some(mc);
    }
    let single = monte_carlo_moments(
        &model,
        &law,
        &MonteCarloConfig {
            samples: 16_000,
            dt,
            steps,
            seed: 42,
            workers: 1,
        },
    )?;
    println!("1 worker reproduces 4 workers bit for bit: {}", Some(single) == previous);
    Ok(())
}
