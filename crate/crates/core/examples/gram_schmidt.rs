//! Orthogonal basis on one element of a Beta-distributed axis, and the
//! projection of a function onto it.
//!
//! Run with `cargo run --example gram_schmidt`.

use mefsc::basis::{evaluate, gram_schmidt, max_orthogonality_residual, project};
use mefsc::measures::{build_quadrature, partition_random_domain, Distribution};

fn main() -> mefsc::Result<()> {
    let law = vec![Distribution::beta(2.0, 5.0, 0.0, 1.0)?];
    let partition = partition_random_domain(&law, &[4])?;
    let element = &partition.elements()[1];
    let grid = build_quadrature(element, &law, 10)?;
    println!(
        "element [{:.2}, {:.2}] carries mass {:.6}",
        element.lower[0],
        element.upper[0],
        partition.masses()[1]
    );

    // 1, x, x^2, x^3 plus a duplicate of x, which Gram-Schmidt must drop
    let x = grid.map(|xi| xi[0]);
    let mut candidates: Vec<Vec<f64>> = (0..4).map(|k| x.iter().map(|v| v.powi(k)).collect()).collect();
    candidates.push(x.clone());
    let basis = gram_schmidt(&candidates, &grid);
    println!("kept flags {:?}, {} vectors", basis.kept_flags(), basis.len());
    println!("squared norms {:?}", basis.squared_norms());
    println!("max orthogonality residual {:.2e}", max_orthogonality_residual(&basis, &grid));

    let f: Vec<f64> = x.iter().map(|v| (3.0 * v).sin()).collect();
    let modes = project(&f, &basis, &grid)?;
    let approx = evaluate(&modes, &basis)?;
    let worst = f.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("modes of sin(3x): {modes:?}");
    println!("max nodal error of the cubic projection {worst:.2e}");
    Ok(())
}
