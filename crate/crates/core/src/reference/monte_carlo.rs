use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Rk4;
use crate::aggregate::MomentSeries;
use crate::flowmap::Model;
use crate::measures::Distribution;
use crate::{Error, Result};

/// Samples per accumulation block. Blocks are merged in index order, so the
/// result does not depend on how blocks are spread over workers.
pub const MC_BLOCK: usize = 1024;

/// Blocks evaluated per merge round; bounds memory for long runs.
const BLOCKS_PER_ROUND: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Streaming moments of every (time, component) cell.
struct Accumulator {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Accumulator {
    fn new(cells: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; cells],
            m2: vec![0.0; cells],
        }
    }

    /// Pairwise combination of two disjoint sample sets.
    fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            self.count = other.count;
            self.mean.clone_from(&other.mean);
            self.m2.clone_from(&other.m2);
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for c in 0..self.mean.len() {
            let delta = other.mean[c] - self.mean[c];
            self.mean[c] += delta * nb / n;
            self.m2[c] += other.m2[c] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }
}

/// Input sample `index` of the stream `seed`, by inverse-CDF transform of
/// counter-addressed uniforms.
pub(crate) fn draw_sample(distributions: &[Distribution], seed: u64, index: u64, xi: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    for (x, d) in xi.iter_mut().zip(distributions) {
        *x = d.quantile(rng.gen::<f64>());
    }
}

fn run_block(model: &dyn Model, distributions: &[Distribution], cfg: &MonteCarloConfig, block: usize) -> Accumulator {
    let n = model.state_dim();
    let cells = (cfg.steps + 1) * n;
    let mut acc = Accumulator::new(cells);
    let mut xi = vec![0.0; distributions.len()];
    let mut s = vec![0.0; n];
    let mut rk = Rk4::new(n);
    let start = block * MC_BLOCK;
    let end = (start + MC_BLOCK).min(cfg.samples);
    for index in start..end {
        draw_sample(distributions, cfg.seed, index as u64, &mut xi);
        model.initial_state(&xi, &mut s);
        acc.count += 1;
        let k = acc.count as f64;
        for i in 0..=cfg.steps {
            if i > 0 {
                rk.step(model, (i - 1) as f64 * cfg.dt, &xi, &mut s, cfg.dt);
            }
            for l in 0..n {
                let c = i * n + l;
                let delta = s[l] - acc.mean[c];
                acc.mean[c] += delta / k;
                acc.m2[c] += delta * (s[l] - acc.mean[c]);
            }
        }
    }
    acc
}

/// Sample mean and unbiased sample variance from `samples` RK4 realizations
/// at `i dt` for `i in 0..=steps`.
pub fn monte_carlo_moments(
    model: &dyn Model,
    distributions: &[Distribution],
    cfg: &MonteCarloConfig,
) -> Result<MomentSeries> {
    if cfg.samples == 0 {
        return Err(Error::Config("Monte Carlo needs at least one sample".into()));
    }
    if distributions.len() != model.param_dim() {
        return Err(Error::LengthMismatch {
            expected: model.param_dim(),
            got: distributions.len(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let n = model.state_dim();
    let blocks = cfg.samples.div_ceil(MC_BLOCK);
    let mut total = Accumulator::new((cfg.steps + 1) * n);
    let mut first = 0;
    while first < blocks {
        let last = (first + BLOCKS_PER_ROUND).min(blocks);
        let round: Vec<Accumulator> = pool.install(|| {
            (first..last)
                .into_par_iter()
                .map(|b| run_block(model, distributions, cfg, b))
                .collect()
        });
        for acc in &round {
            total.merge(acc);
        }
        first = last;
    }

    let mut series = MomentSeries::new(model.component_names());
    let denom = (total.count as f64 - 1.0).max(1.0);
    let mut mean = vec![0.0; n];
    let mut var = vec![0.0; n];
    for i in 0..=cfg.steps {
        let t = i as f64 * cfg.dt;
        for l in 0..n {
            let c = i * n + l;
            mean[l] = total.mean[c];
            var[l] = if total.count > 1 { total.m2[c] / denom } else { 0.0 };
            if !mean[l].is_finite() || !var[l].is_finite() {
                return Err(Error::NonFinite { t, element: 0 });
            }
        }
        series.push(t, &mean, &var);
    }
    Ok(series)
}
