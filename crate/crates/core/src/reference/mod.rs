//! Independent oracles and error metrics.
//!
//! None of these share code with the spectral solver beyond the model
//! definitions and the quadrature builder.

mod monte_carlo;

use std::fmt;
use std::str::FromStr;

use crate::aggregate::MomentSeries;
use crate::flowmap::Model;
use crate::measures::{build_quadrature, Distribution, ElementBox};
use crate::problems::Oscillator;
use crate::{Error, Result};

pub use monte_carlo::{monte_carlo_moments, MonteCarloConfig, MC_BLOCK};

/// Gauss-Legendre points per axis of the deterministic references.
pub const REFERENCE_POINTS: usize = 200;

/// Substeps per output step of the quasi-exact reference.
pub const QUASI_EXACT_REFINEMENT: usize = 10;

/// Which oracle a run is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    QuasiExact,
    MonteCarlo,
}

impl ReferenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceKind::ClosedForm => "closed_form",
            ReferenceKind::QuasiExact => "quasi_exact",
            ReferenceKind::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed_form" => Ok(ReferenceKind::ClosedForm),
            "quasi_exact" => Ok(ReferenceKind::QuasiExact),
            "monte_carlo" => Ok(ReferenceKind::MonteCarlo),
            other => Err(Error::Config(format!(
                "unknown reference `{other}`, expected closed_form, quasi_exact or monte_carlo"
            ))),
        }
    }
}

/// Uniform output grid `i dt` for `i in 0..=steps`.
pub fn time_grid(dt: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 * dt).collect()
}

fn full_support_grid(distributions: &[Distribution], points: usize) -> Result<crate::measures::QuadratureGrid> {
    let (lower, upper) = distributions.iter().map(|d| d.support()).unzip();
    build_quadrature(&ElementBox { lower, upper }, distributions, points)
}

/// Weighted mean and central second moment of node values (two-pass).
fn weighted_moments(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| w * v).sum();
    let var: f64 = values.iter().zip(weights).map(|(v, w)| w * (v - mean) * (v - mean)).sum();
    (mean, var)
}

/// Moments of the oscillator from its closed-form solution, integrated with
/// a 200-point Gauss rule against `distribution`.
pub fn exact_problem1_moments(model: &Oscillator, distribution: &Distribution, times: &[f64]) -> Result<MomentSeries> {
    let grid = full_support_grid(std::slice::from_ref(distribution), REFERENCE_POINTS)?;
    let mut series = MomentSeries::new(model.component_names());
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    for &t in times {
        for q in 0..grid.len() {
            (u[q], v[q]) = model.exact(grid.node(q)[0], t);
        }
        let (mu, vu) = weighted_moments(&u, grid.weights());
        let (mv, vv) = weighted_moments(&v, grid.weights());
        series.push(t, &[mu, mv], &[vu, vv]);
    }
    Ok(series)
}

/// Classical RK4 for one realization with reusable stage buffers.
pub(crate) struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        }
    }

    pub(crate) fn step(&mut self, model: &dyn Model, t: f64, xi: &[f64], s: &mut [f64], h: f64) {
        let n = s.len();
        let [k1, k2, k3, k4] = &mut self.k;
        model.rhs(t, xi, s, k1);
        for l in 0..n {
            self.tmp[l] = s[l] + 0.5 * h * k1[l];
        }
        model.rhs(t + 0.5 * h, xi, &self.tmp, k2);
        for l in 0..n {
            self.tmp[l] = s[l] + 0.5 * h * k2[l];
        }
        model.rhs(t + 0.5 * h, xi, &self.tmp, k3);
        for l in 0..n {
            self.tmp[l] = s[l] + h * k3[l];
        }
        model.rhs(t + h, xi, &self.tmp, k4);
        for l in 0..n {
            s[l] += h / 6.0 * (k1[l] + 2.0 * k2[l] + 2.0 * k3[l] + k4[l]);
        }
    }
}

/// Moments from per-node RK4 at `dt / refinement` on a tensor Gauss grid of
/// `points` per axis, sampled at `i dt` for `i in 0..=steps`.
pub fn quasi_exact_moments(
    model: &dyn Model,
    distributions: &[Distribution],
    dt: f64,
    steps: usize,
    points: usize,
    refinement: usize,
) -> Result<MomentSeries> {
    if distributions.len() != model.param_dim() {
        return Err(Error::LengthMismatch {
            expected: model.param_dim(),
            got: distributions.len(),
        });
    }
    let grid = full_support_grid(distributions, points)?;
    let n = model.state_dim();
    let q_count = grid.len();
    let mut states = vec![0.0; q_count * n];
    for q in 0..q_count {
        model.initial_state(grid.node(q), &mut states[q * n..(q + 1) * n]);
    }
    let h = dt / refinement as f64;
    let mut rk = Rk4::new(n);
    let mut series = MomentSeries::new(model.component_names());
    let mut column = vec![0.0; q_count];
    let mut record = |states: &[f64], t: f64, series: &mut MomentSeries| -> Result<()> {
        let mut mean = Vec::with_capacity(n);
        let mut var = Vec::with_capacity(n);
        for l in 0..n {
            for q in 0..q_count {
                column[q] = states[q * n + l];
            }
            if column.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t, element: 0 });
            }
            let (m, v) = weighted_moments(&column, grid.weights());
            mean.push(m);
            var.push(v);
        }
        series.push(t, &mean, &var);
        Ok(())
    };
    record(&states, 0.0, &mut series)?;
    for i in 0..steps {
        let t0 = i as f64 * dt;
        for q in 0..q_count {
            let s = &mut states[q * n..(q + 1) * n];
            for k in 0..refinement {
                rk.step(model, t0 + k as f64 * h, grid.node(q), s, h);
            }
        }
        record(&states, (i + 1) as f64 * dt, &mut series)?;
    }
    Ok(series)
}

/// Local and global errors of every moment.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub components: Vec<String>,
    pub times: Vec<f64>,
    /// `|f(t_i) - f_ref(t_i)|`, indexed `[component][step]`.
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
    /// `(dt / T) sum_{i=0}^{N} |f(t_i) - f_ref(t_i)|` per component.
    pub mean_global: Vec<f64>,
    pub variance_global: Vec<f64>,
}

fn global_error(local: &[f64]) -> f64 {
    let sum: f64 = local.iter().sum();
    // dt / T = 1 / N on a uniform grid; a single sample is its own average
    match local.len() {
        0 => 0.0,
        1 => sum,
        len => sum / (len - 1) as f64,
    }
}

/// Pointwise and time-averaged absolute errors of `series` against
/// `reference` on identical time grids.
pub fn error_metrics(series: &MomentSeries, reference: &MomentSeries) -> Result<ErrorSeries> {
    if series.times.len() != reference.times.len()
        || series.components.len() != reference.components.len()
        || series
            .times
            .iter()
            .zip(&reference.times)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch);
    }
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| (a - b).abs()).collect() };
    let mean: Vec<Vec<f64>> = (0..series.components.len())
        .map(|l| diff(&series.mean[l], &reference.mean[l]))
        .collect();
    let variance: Vec<Vec<f64>> = (0..series.components.len())
        .map(|l| diff(&series.variance[l], &reference.variance[l]))
        .collect();
    Ok(ErrorSeries {
        components: series.components.clone(),
        times: series.times.clone(),
        mean_global: mean.iter().map(|e| global_error(e)).collect(),
        variance_global: variance.iter().map(|e| global_error(e)).collect(),
        mean,
        variance,
    })
}
