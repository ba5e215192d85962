//! Probability laws, partitions of the random domain, and the per-element
//! quadrature that realizes the conditional measure of each element.

mod distribution;
pub mod gauss;

pub use distribution::{Distribution, DistributionKind, REFERENCE_TAIL};

use crate::{Error, Result};

/// Solver quadrature size per random axis and element.
pub const DEFAULT_POINTS_PER_AXIS: usize = 10;

/// Axis-aligned box in the random domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ElementBox {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }
}

/// Decomposition of the random domain into disjoint boxes with their
/// probability masses.
#[derive(Debug, Clone)]
pub struct RandomSpacePartition {
    distributions: Vec<Distribution>,
    counts: Vec<usize>,
    elements: Vec<ElementBox>,
    masses: Vec<f64>,
}

impl RandomSpacePartition {
    pub fn dim(&self) -> usize {
        self.distributions.len()
    }

    pub fn distributions(&self) -> &[Distribution] {
        &self.distributions
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn elements(&self) -> &[ElementBox] {
        &self.elements
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Split every axis into `counts[axis]` equal-width intervals and take their
/// Cartesian product. Elements are ordered with the first axis varying
/// slowest.
pub fn partition_random_domain(
    distributions: &[Distribution],
    counts: &[usize],
) -> Result<RandomSpacePartition> {
    if distributions.is_empty() {
        return Err(Error::InvalidPartition("no random axes".into()));
    }
    if distributions.len() != counts.len() {
        return Err(Error::InvalidPartition(format!(
            "{} axes but {} element counts",
            distributions.len(),
            counts.len()
        )));
    }
    if let Some(axis) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidPartition(format!("element count on axis {axis} is zero")));
    }

    // per-axis breakpoints and interval masses
    let mut breaks = Vec::with_capacity(counts.len());
    let mut axis_masses = Vec::with_capacity(counts.len());
    for (d, &c) in distributions.iter().zip(counts) {
        let (a, b) = d.support();
        let w = (b - a) / c as f64;
        let pts: Vec<f64> = (0..=c).map(|i| if i == c { b } else { a + i as f64 * w }).collect();
        let cdfs: Vec<f64> = pts.iter().map(|&x| d.cdf(x)).collect();
        let m: Vec<f64> = cdfs.windows(2).map(|p| p[1] - p[0]).collect();
        if let Some(i) = m.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::InvalidPartition(format!(
                "interval {i} of an axis carries no probability mass"
            )));
        }
        breaks.push(pts);
        axis_masses.push(m);
    }

    let total: usize = counts.iter().product();
    let mut elements = Vec::with_capacity(total);
    let mut masses = Vec::with_capacity(total);
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        let lower = idx.iter().enumerate().map(|(a, &i)| breaks[a][i]).collect();
        let upper = idx.iter().enumerate().map(|(a, &i)| breaks[a][i + 1]).collect();
        masses.push(idx.iter().enumerate().map(|(a, &i)| axis_masses[a][i]).product());
        elements.push(ElementBox { lower, upper });
        for a in (0..counts.len()).rev() {
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(RandomSpacePartition {
        distributions: distributions.to_vec(),
        counts: counts.to_vec(),
        elements,
        masses,
    })
}

/// Probability mass of a box: the product of per-axis CDF differences.
pub fn element_measure(distributions: &[Distribution], element: &ElementBox) -> Result<f64> {
    if distributions.len() != element.dim() {
        return Err(Error::LengthMismatch {
            expected: distributions.len(),
            got: element.dim(),
        });
    }
    let mut mass = 1.0;
    for (axis, d) in distributions.iter().enumerate() {
        let (a, b) = d.support();
        let (lo, hi) = (element.lower[axis], element.upper[axis]);
        if lo < a || hi > b || lo >= hi {
            return Err(Error::OutsideSupport {
                axis,
                lower: lo,
                upper: hi,
                a,
                b,
            });
        }
        mass *= d.interval_mass(lo, hi);
    }
    if mass > 0.0 {
        Ok(mass)
    } else {
        Err(Error::InvalidPartition("element carries no probability mass".into()))
    }
}

/// Tensor-product quadrature realizing the normalized measure of one element.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    dim: usize,
    /// Node coordinates, `dim` per node.
    nodes: Vec<f64>,
    /// Node coordinates mapped affinely onto [-1, 1]^dim.
    local: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    /// Node `q` in element-local coordinates on [-1, 1]^dim.
    pub fn local_node(&self, q: usize) -> &[f64] {
        &self.local[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node values of a function of the random input.
    pub fn map<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Vec<f64> {
        (0..self.len()).map(|q| f(self.node(q))).collect()
    }

    /// Quadrature of node values against the element measure.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, f)| w * f).sum()
    }
}

/// Mapped Gauss-Legendre tensor rule on `element`, with the density folded
/// into the weights and the weights normalized to sum to one.
pub fn build_quadrature(
    element: &ElementBox,
    distributions: &[Distribution],
    points_per_axis: usize,
) -> Result<QuadratureGrid> {
    let mass = element_measure(distributions, element)?;
    let dim = distributions.len();
    let (gx, gw) = gauss::gauss_legendre(points_per_axis);

    let mut axis_nodes = Vec::with_capacity(dim);
    let mut axis_weights = Vec::with_capacity(dim);
    for (axis, d) in distributions.iter().enumerate() {
        let (lo, hi) = (element.lower[axis], element.upper[axis]);
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let xs: Vec<f64> = gx.iter().map(|x| c + h * x).collect();
        let ws: Vec<f64> = xs.iter().zip(&gw).map(|(x, w)| w * h * d.density(*x)).collect();
        axis_nodes.push(xs);
        axis_weights.push(ws);
    }

    let count = points_per_axis.pow(dim as u32);
    let mut nodes = Vec::with_capacity(count * dim);
    let mut local = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; dim];
    for _ in 0..count {
        let mut w = 1.0 / mass;
        for a in 0..dim {
            nodes.push(axis_nodes[a][idx[a]]);
            local.push(gx[idx[a]]);
            w *= axis_weights[a][idx[a]];
        }
        weights.push(w);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < points_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(QuadratureGrid {
        dim,
        nodes,
        local,
        weights,
    })
}

/// Element inner product of two node-value arrays.
pub fn inner_product(f: &[f64], g: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    for v in [f, g] {
        if v.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: v.len(),
            });
        }
    }
    Ok(weighted_dot(f, g, grid.weights()))
}

#[inline]
pub(crate) fn weighted_dot(f: &[f64], g: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for q in 0..w.len() {
        s += w[q] * f[q] * g[q];
    }
    s
}
