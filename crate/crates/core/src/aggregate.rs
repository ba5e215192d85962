//! Element loop and global moments from per-element conditional moments.

use rayon::prelude::*;

use crate::element::{clamp_variance, step_count, ElementDiagnostics, ElementSolver, MomentSample, SolverSettings};
use crate::flowmap::Model;
use crate::measures::{build_quadrature, partition_random_domain, Distribution, DEFAULT_POINTS_PER_AXIS};
use crate::{Error, Result};

/// Allowed deviation of the element masses from a unit total.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Sum by recursive halving; the split points depend only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn check_masses(masses: &[f64], others: &[usize]) -> Result<()> {
    for &len in others {
        if len != masses.len() {
            return Err(Error::LengthMismatch {
                expected: masses.len(),
                got: len,
            });
        }
    }
    let total = pairwise_sum(masses);
    if !((total - 1.0).abs() <= MASS_TOLERANCE) {
        return Err(Error::MassMismatch(total));
    }
    Ok(())
}

/// Law of total expectation: `sum_e mu_e E_e`.
pub fn total_expectation(local_means: &[f64], masses: &[f64]) -> Result<f64> {
    check_masses(masses, &[local_means.len()])?;
    let terms: Vec<f64> = masses.iter().zip(local_means).map(|(m, e)| m * e).collect();
    Ok(pairwise_sum(&terms))
}

/// Law of total variance in its expanded form
/// `sum mu_e Var_e + sum mu_e (1 - mu_e) E_e^2 - 2 sum_{e1 < e2} mu_e1 mu_e2 E_e1 E_e2`,
/// clamped to zero within round-off.
pub fn total_variance(local_means: &[f64], local_vars: &[f64], masses: &[f64]) -> Result<f64> {
    check_masses(masses, &[local_means.len(), local_vars.len()])?;
    let within: Vec<f64> = masses.iter().zip(local_vars).map(|(m, v)| m * v).collect();
    let spread: Vec<f64> = masses
        .iter()
        .zip(local_means)
        .map(|(m, e)| m * (1.0 - m) * e * e)
        .collect();
    // cross term via running prefix sums of mu_e E_e
    let weighted: Vec<f64> = masses.iter().zip(local_means).map(|(m, e)| m * e).collect();
    let mut cross = Vec::with_capacity(weighted.len());
    let mut prefix = 0.0;
    for w in &weighted {
        cross.push(w * prefix);
        prefix += w;
    }
    let v = pairwise_sum(&within) + pairwise_sum(&spread) - 2.0 * pairwise_sum(&cross);
    Ok(clamp_variance(v))
}

/// Global moment time series, indexed `[component][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub components: Vec<String>,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
}

impl MomentSeries {
    pub fn new(components: Vec<String>) -> Self {
        let n = components.len();
        Self {
            components,
            times: Vec::new(),
            mean: vec![Vec::new(); n],
            variance: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, mean: &[f64], variance: &[f64]) {
        self.times.push(t);
        for l in 0..self.components.len() {
            self.mean[l].push(mean[l]);
            self.variance[l].push(variance[l]);
        }
    }
}

/// Everything `run_me_fsc` needs besides the model.
#[derive(Debug, Clone)]
pub struct MeFscConfig {
    /// Law of each random axis.
    pub distributions: Vec<Distribution>,
    /// Element count per axis.
    pub elements: Vec<usize>,
    pub solver: SolverSettings,
    pub duration: f64,
    pub workers: usize,
    /// Keep every element's local series in the result.
    pub keep_local: bool,
}

#[derive(Debug, Clone)]
pub struct MeFscRun {
    pub series: MomentSeries,
    pub masses: Vec<f64>,
    /// Merged over all elements.
    pub diagnostics: ElementDiagnostics,
    /// `local[e][i]` when requested.
    pub local: Option<Vec<Vec<MomentSample>>>,
}

fn aggregate_step(samples: &[MomentSample], masses: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut mean = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for l in 0..n {
        let m: Vec<f64> = samples.iter().map(|s| s.mean[l]).collect();
        let v: Vec<f64> = samples.iter().map(|s| s.variance[l]).collect();
        mean.push(total_expectation(&m, masses)?);
        var.push(total_variance(&m, &v, masses)?);
    }
    Ok((mean, var))
}

/// Multi-element solve: partition the random domain, step all elements in
/// lockstep and aggregate at every step in element-index order, so the
/// result does not depend on the worker count.
pub fn run_me_fsc(model: &dyn Model, config: &MeFscConfig) -> Result<MeFscRun> {
    if config.distributions.len() != model.param_dim() {
        return Err(Error::Config(format!(
            "{} needs {} random axes, got {}",
            model.name(),
            model.param_dim(),
            config.distributions.len()
        )));
    }
    let steps = step_count(config.solver.dt, config.duration)?;
    let partition = partition_random_domain(&config.distributions, &config.elements)?;
    check_masses(partition.masses(), &[])?;
    let total = pairwise_sum(partition.masses());
    let masses: Vec<f64> = partition.masses().iter().map(|m| m / total).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut solvers = pool.install(|| {
        partition
            .elements()
            .par_iter()
            .enumerate()
            .map(|(e, b)| {
                let grid = build_quadrature(b, &config.distributions, DEFAULT_POINTS_PER_AXIS)?;
                ElementSolver::new(model, grid, e, config.solver.clone())
            })
            .collect::<Vec<Result<ElementSolver>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n = model.state_dim();
    let mut series = MomentSeries::new(model.component_names());
    let mut local = config.keep_local.then(|| vec![Vec::with_capacity(steps + 1); solvers.len()]);
    let mut record = |samples: Vec<MomentSample>, t: f64, series: &mut MomentSeries| -> Result<()> {
        let (mean, var) = aggregate_step(&samples, &masses, n)?;
        series.push(t, &mean, &var);
        if let Some(local) = local.as_mut() {
            for (e, s) in samples.into_iter().enumerate() {
                local[e].push(s);
            }
        }
        Ok(())
    };

    record(solvers.iter().map(|s| s.moments()).collect(), 0.0, &mut series)?;
    for i in 1..=steps {
        let results: Vec<Result<MomentSample>> = pool.install(|| {
            solvers
                .par_iter_mut()
                .map(|s| s.advance().map(|_| s.moments()))
                .collect()
        });
        // first failure by element index
        let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
        record(samples, i as f64 * config.solver.dt, &mut series)?;
    }

    let mut diagnostics = ElementDiagnostics::default();
    for (e, s) in solvers.iter().enumerate() {
        if e == 0 {
            diagnostics = s.diagnostics().clone();
        } else {
            diagnostics.merge(s.diagnostics());
        }
    }
    Ok(MeFscRun {
        series,
        masses,
        diagnostics,
        local,
    })
}
