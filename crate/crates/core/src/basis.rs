//! Orthogonal random bases on one element.
//!
//! A basis is carried only through its values at the element quadrature
//! nodes and its squared norms; every inner product is the quadrature sum.

use crate::measures::{weighted_dot, QuadratureGrid};
use crate::{Error, Result};

/// Relative squared-norm threshold below which an orthogonalized candidate is
/// treated as linearly dependent and dropped.
pub const DROP_TOLERANCE: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    values: Vec<Vec<f64>>,
    squared_norms: Vec<f64>,
    kept: Vec<bool>,
}

impl BasisSet {
    /// Number of basis vectors (P + 1).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn squared_norms(&self) -> &[f64] {
        &self.squared_norms
    }

    /// One flag per candidate handed to [`gram_schmidt`]; `false` marks a
    /// dropped candidate.
    pub fn kept_flags(&self) -> &[bool] {
        &self.kept
    }

    pub fn node_count(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Classical Gram-Schmidt with one re-orthogonalization pass.
///
/// The first candidate must be identically one. Candidates whose squared norm
/// after orthogonalization falls below `DROP_TOLERANCE` times their original
/// squared norm are dropped and flagged.
pub fn gram_schmidt<V: AsRef<[f64]>>(candidates: &[V], grid: &QuadratureGrid) -> BasisSet {
    let w = grid.weights();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    let mut norms: Vec<f64> = Vec::with_capacity(candidates.len());
    let mut kept = Vec::with_capacity(candidates.len());
    let mut coeffs = Vec::with_capacity(candidates.len());

    for c in candidates {
        let c = c.as_ref();
        debug_assert_eq!(c.len(), w.len());
        let before = weighted_dot(c, c, w);
        let mut v = c.to_vec();
        for _pass in 0..2 {
            coeffs.clear();
            coeffs.extend(values.iter().zip(&norms).map(|(psi, n)| weighted_dot(&v, psi, w) / n));
            for (psi, a) in values.iter().zip(&coeffs) {
                for (vq, pq) in v.iter_mut().zip(psi) {
                    *vq -= a * pq;
                }
            }
        }
        let after = weighted_dot(&v, &v, w);
        if before > 0.0 && after > DROP_TOLERANCE * before && after.is_finite() {
            values.push(v);
            norms.push(after);
            kept.push(true);
        } else {
            kept.push(false);
        }
    }
    BasisSet {
        values,
        squared_norms: norms,
        kept,
    }
}

/// Exponent tuples of all monomials in `dim` variables with total degree at
/// most `degree`, graded by degree and lexicographically decreasing within a
/// degree.
pub fn total_degree_exponents(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn fill(dim: usize, deg: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=deg).rev() {
            prefix.push(first);
            fill(dim, deg - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        out.push(Vec::new());
        return out;
    }
    for deg in 0..=degree {
        fill(dim, deg, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// Element-local polynomial chaos basis: Gram-Schmidt over the monomials of
/// total degree at most `degree`, evaluated in element-local coordinates.
pub fn warmstart_basis(grid: &QuadratureGrid, degree: usize) -> BasisSet {
    let candidates: Vec<Vec<f64>> = total_degree_exponents(grid.dim(), degree)
        .iter()
        .map(|exps| {
            (0..grid.len())
                .map(|q| {
                    grid.local_node(q)
                        .iter()
                        .zip(exps)
                        .map(|(x, &e)| x.powi(e as i32))
                        .product()
                })
                .collect()
        })
        .collect();
    gram_schmidt(&candidates, grid)
}

/// Spectral modes of node values: `<psi_j, f> / <psi_j, psi_j>`.
pub fn project(f: &[f64], basis: &BasisSet, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: f.len(),
        });
    }
    Ok(project_unchecked(f, basis, grid.weights()))
}

pub(crate) fn project_unchecked(f: &[f64], basis: &BasisSet, w: &[f64]) -> Vec<f64> {
    basis
        .values
        .iter()
        .zip(&basis.squared_norms)
        .map(|(psi, n)| weighted_dot(f, psi, w) / n)
        .collect()
}

/// Node values of the expansion with the given modes.
pub fn evaluate(modes: &[f64], basis: &BasisSet) -> Result<Vec<f64>> {
    if modes.len() != basis.len() {
        return Err(Error::LengthMismatch {
            expected: basis.len(),
            got: modes.len(),
        });
    }
    let mut out = vec![0.0; basis.node_count()];
    evaluate_into(modes, basis, &mut out);
    Ok(out)
}

pub(crate) fn evaluate_into(modes: &[f64], basis: &BasisSet, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (m, psi) in modes.iter().zip(&basis.values) {
        if *m == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(psi) {
            *o += m * p;
        }
    }
}

/// Largest normalized off-diagonal inner product,
/// `|<psi_i, psi_j>| / sqrt(<psi_i, psi_i> <psi_j, psi_j>)`.
pub fn max_orthogonality_residual(basis: &BasisSet, grid: &QuadratureGrid) -> f64 {
    let w = grid.weights();
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in 0..i {
            let ip = weighted_dot(&basis.values[i], &basis.values[j], w);
            let r = ip.abs() / (basis.squared_norms[i] * basis.squared_norms[j]).sqrt();
            worst = worst.max(r);
        }
    }
    worst
}
