//! Combining element-local moments into global ones.
//!
//! Run with `cargo run --example total_variance`.

use mefsc::aggregate::{total_expectation, total_variance};
use mefsc::measures::{build_quadrature, partition_random_domain, Distribution};

fn main() -> mefsc::Result<()> {
    // f(xi) = xi^2 under Beta(2, 5) on [0, 1], split into 5 elements
    let law = vec![Distribution::beta(2.0, 5.0, 0.0, 1.0)?];
    let partition = partition_random_domain(&law, &[5])?;
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for element in partition.elements() {
        let grid = build_quadrature(element, &law, 10)?;
        let f = grid.map(|xi| xi[0] * xi[0]);
        let m = grid.integrate(&f);
        let m2 = grid.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>());
        means.push(m);
        vars.push(m2 - m * m);
    }
    let mean = total_expectation(&means, partition.masses())?;
    let var = total_variance(&means, &vars, partition.masses())?;

    // raw moments of Beta(2, 5): E[x^2] = 3/28, E[x^4] = 1/42
    let exact_mean = 3.0 / 28.0;
    let exact_var = 1.0 / 42.0 - exact_mean * exact_mean;
    println!("masses {:?}", partition.masses());
    println!("E[f]   {mean:.15} (exact {exact_mean:.15})");
    println!("Var[f] {var:.15} (exact {exact_var:.15})");
    Ok(())
}
