//! Single-element flow-driven spectral chaos solver.
//!
//! Each step regenerates the element basis from the current state and its
//! time derivatives, re-expresses the state modes in the new basis, and
//! advances the pseudo-spectral Galerkin system with one RK4 step on the
//! frozen basis.

use crate::basis::{
    evaluate_into, gram_schmidt, max_orthogonality_residual, project_unchecked, warmstart_basis, BasisSet,
};
use crate::flowmap::{enriched_germs, Model, StateLayout};
use crate::measures::{build_quadrature, Distribution, ElementBox, QuadratureGrid, DEFAULT_POINTS_PER_AXIS};
use crate::{Error, Result};

/// Relative determinant threshold for the covariance matrices of the
/// transfer formula.
pub const SINGULAR_TOLERANCE: f64 = 1e-28;

/// Variance values above `-VARIANCE_CLAMP` are rounded up to zero.
pub const VARIANCE_CLAMP: f64 = 1e-14;

/// Fixed polynomial-chaos basis used over an initial interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmStart {
    /// Total polynomial degree.
    pub degree: usize,
    /// Length of the interval in seconds.
    pub duration: f64,
}

/// Solution on one element at one time: basis plus modes of every state
/// component (`modes[l][j]`).
#[derive(Debug, Clone)]
pub struct ElementState {
    pub element: usize,
    pub t: f64,
    pub basis: BasisSet,
    pub modes: Vec<Vec<f64>>,
}

impl ElementState {
    /// Node values of every state component.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let q = self.basis.node_count();
        self.modes
            .iter()
            .map(|m| {
                let mut v = vec![0.0; q];
                evaluate_into(m, &self.basis, &mut v);
                v
            })
            .collect()
    }
}

/// Local (conditional) moments of every state component.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Outcome of moving the modes onto a new basis.
#[derive(Debug, Clone)]
pub struct Transfer {
    pub modes: Vec<Vec<f64>>,
    /// True when the covariance-determinant formula was not applicable and
    /// the modes were obtained by direct projection.
    pub used_projection: bool,
}

/// Basis regenerated from the current state: enriched germs with the
/// constant prepended, orthogonalized.
pub fn rebuild_basis(state: &ElementState, model: &dyn Model, grid: &QuadratureGrid, p: usize) -> Result<BasisSet> {
    basis_from_nodes(model, state.t, &state.reconstruct(), grid, p)
}

fn basis_from_nodes(
    model: &dyn Model,
    t: f64,
    state_nodes: &[Vec<f64>],
    grid: &QuadratureGrid,
    p: usize,
) -> Result<BasisSet> {
    let germs = enriched_germs(model, t, state_nodes, grid, p)?;
    let mut candidates = Vec::with_capacity(germs.len() + 1);
    candidates.push(vec![1.0; grid.len()]);
    candidates.extend(germs.values);
    Ok(gram_schmidt(&candidates, grid))
}

/// Modes of the old state in `new_basis`, which must have been built from
/// germs whose first entries are the old state components.
pub fn transfer_modes(old_state: &ElementState, new_basis: &BasisSet, grid: &QuadratureGrid) -> Transfer {
    transfer_from_nodes(&old_state.reconstruct(), new_basis, grid)
}

fn project_nodes(state_nodes: &[Vec<f64>], basis: &BasisSet, grid: &QuadratureGrid) -> Vec<Vec<f64>> {
    state_nodes
        .iter()
        .map(|s| project_unchecked(s, basis, grid.weights()))
        .collect()
}

/// Covariance-determinant transfer: for component l (1-based) the mode of
/// basis vector j is `E[Phi_l]` for j = 0, `det T_j(l) / det S_j` for
/// 0 < j < l, 1 for j = l and 0 beyond, where `S_j` is the leading j x j
/// germ covariance matrix and `T_j(l)` is `S_j` with its last row replaced
/// by the covariances of `Phi_l`.
fn transfer_from_nodes(state_nodes: &[Vec<f64>], basis: &BasisSet, grid: &QuadratureGrid) -> Transfer {
    let n = state_nodes.len();
    let flags = basis.kept_flags();
    let aligned = basis.len() > n && flags.len() > n && flags[..=n].iter().all(|&k| k);
    if !aligned {
        return Transfer {
            modes: project_nodes(state_nodes, basis, grid),
            used_projection: true,
        };
    }
    let w = grid.weights();
    let means: Vec<f64> = state_nodes.iter().map(|s| grid.integrate(s)).collect();
    let centered: Vec<Vec<f64>> = state_nodes
        .iter()
        .zip(&means)
        .map(|(s, m)| s.iter().map(|v| v - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..=a {
            let c = crate::measures::weighted_dot(&centered[a], &centered[b], w);
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }

    // leading determinants, checked against the diagonal product
    let mut lead = Vec::with_capacity(n);
    let mut diag = 1.0;
    for j in 1..n {
        diag *= cov[j - 1][j - 1];
        let d = determinant((0..j).map(|r| cov[r][..j].to_vec()).collect());
        if !(d > SINGULAR_TOLERANCE * diag) {
            return Transfer {
                modes: project_nodes(state_nodes, basis, grid),
                used_projection: true,
            };
        }
        lead.push(d);
    }

    let mut modes = vec![vec![0.0; basis.len()]; n];
    for l in 1..=n {
        let row = &mut modes[l - 1];
        row[0] = means[l - 1];
        for j in 1..l {
            let mut m: Vec<Vec<f64>> = (0..j).map(|r| cov[r][..j].to_vec()).collect();
            m[j - 1].copy_from_slice(&cov[l - 1][..j]);
            row[j] = determinant(m) / lead[j - 1];
        }
        row[l] = 1.0;
    }
    Transfer {
        modes,
        used_projection: false,
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

/// Time derivative of the modes: reconstruct the state at the nodes, apply
/// the model pointwise and project back. For companion layouts the leading
/// rows are copies of the next row.
pub fn galerkin_rhs(
    t: f64,
    modes: &[Vec<f64>],
    basis: &BasisSet,
    model: &dyn Model,
    grid: &QuadratureGrid,
    element: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = model.state_dim();
    let q_count = grid.len();
    let mut nodes = vec![vec![0.0; q_count]; n];
    for (m, v) in modes.iter().zip(nodes.iter_mut()) {
        evaluate_into(m, basis, v);
    }
    let companion = model.layout() == StateLayout::Companion;
    let mut out_nodes = vec![vec![0.0; q_count]; if companion { 1 } else { n }];
    let mut s = vec![0.0; n];
    let mut ds = vec![0.0; n];
    for q in 0..q_count {
        for l in 0..n {
            s[l] = nodes[l][q];
        }
        model.rhs(t, grid.node(q), &s, &mut ds);
        if companion {
            out_nodes[0][q] = ds[n - 1];
        } else {
            for l in 0..n {
                out_nodes[l][q] = ds[l];
            }
        }
    }
    if out_nodes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t, element });
    }
    let w = grid.weights();
    if companion {
        let mut out: Vec<Vec<f64>> = modes[1..].to_vec();
        out.push(project_unchecked(&out_nodes[0], basis, w));
        Ok(out)
    } else {
        Ok(out_nodes.iter().map(|f| project_unchecked(f, basis, w)).collect())
    }
}

/// One classical RK4 step of the mode system on the frozen basis.
pub fn rk4_step(state: &ElementState, model: &dyn Model, grid: &QuadratureGrid, dt: f64) -> Result<ElementState> {
    let t = state.t;
    let rhs = |t: f64, m: &[Vec<f64>]| galerkin_rhs(t, m, &state.basis, model, grid, state.element);
    let axpy = |base: &[Vec<f64>], k: &[Vec<f64>], h: f64| -> Vec<Vec<f64>> {
        base.iter()
            .zip(k)
            .map(|(b, k)| b.iter().zip(k).map(|(b, k)| b + h * k).collect())
            .collect()
    };
    let k1 = rhs(t, &state.modes)?;
    let k2 = rhs(t + 0.5 * dt, &axpy(&state.modes, &k1, 0.5 * dt))?;
    let k3 = rhs(t + 0.5 * dt, &axpy(&state.modes, &k2, 0.5 * dt))?;
    let k4 = rhs(t + dt, &axpy(&state.modes, &k3, dt))?;
    let sixth = dt / 6.0;
    let modes: Vec<Vec<f64>> = (0..state.modes.len())
        .map(|l| {
            (0..state.modes[l].len())
                .map(|j| state.modes[l][j] + sixth * (k1[l][j] + 2.0 * k2[l][j] + 2.0 * k3[l][j] + k4[l][j]))
                .collect()
        })
        .collect();
    if modes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            t: t + dt,
            element: state.element,
        });
    }
    Ok(ElementState {
        element: state.element,
        t: t + dt,
        basis: state.basis.clone(),
        modes,
    })
}

/// Local mean (mode 0) and variance (norm-weighted sum of squared higher
/// modes) of every state component.
pub fn local_moments(state: &ElementState) -> MomentSample {
    let norms = state.basis.squared_norms();
    let mut mean = Vec::with_capacity(state.modes.len());
    let mut variance = Vec::with_capacity(state.modes.len());
    for m in &state.modes {
        mean.push(m[0]);
        let v: f64 = m.iter().zip(norms).skip(1).map(|(c, n)| n * c * c).sum();
        variance.push(clamp_variance(v));
    }
    MomentSample { t: state.t, mean, variance }
}

pub(crate) fn clamp_variance(v: f64) -> f64 {
    if v < 0.0 && v >= -VARIANCE_CLAMP {
        0.0
    } else {
        v
    }
}

/// Settings shared by every element of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Number of germs P; the basis has at most P + 1 vectors.
    pub basis: usize,
    pub dt: f64,
    pub warm_start: Option<WarmStart>,
    /// Track orthogonality and transfer checks at every rebuild.
    pub diagnostics: bool,
}

/// Checks gathered over a run when diagnostics are enabled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElementDiagnostics {
    pub rebuilds: usize,
    pub projection_fallbacks: usize,
    pub max_orthogonality_residual: f64,
    /// Largest |determinant-formula mode - projected mode|.
    pub max_transfer_discrepancy: f64,
    /// Largest |difference| * ||Psi_j|| / rms(component), the same comparison
    /// with each basis vector normalized.
    pub max_scaled_transfer_discrepancy: f64,
    /// Largest relative change of a local mean or variance across a rebuild.
    pub max_moment_jump: f64,
    pub min_basis_len: usize,
}

impl ElementDiagnostics {
    pub fn merge(&mut self, other: &ElementDiagnostics) {
        self.rebuilds += other.rebuilds;
        self.projection_fallbacks += other.projection_fallbacks;
        self.max_orthogonality_residual = self.max_orthogonality_residual.max(other.max_orthogonality_residual);
        self.max_transfer_discrepancy = self.max_transfer_discrepancy.max(other.max_transfer_discrepancy);
        self.max_scaled_transfer_discrepancy =
            self.max_scaled_transfer_discrepancy.max(other.max_scaled_transfer_discrepancy);
        self.max_moment_jump = self.max_moment_jump.max(other.max_moment_jump);
        self.min_basis_len = if self.rebuilds == other.rebuilds {
            other.min_basis_len
        } else if other.rebuilds == 0 {
            self.min_basis_len
        } else {
            self.min_basis_len.min(other.min_basis_len)
        };
    }
}

fn relative_change(before: f64, after: f64) -> f64 {
    let scale = before.abs().max(after.abs());
    if scale == 0.0 {
        0.0
    } else {
        (after - before).abs() / scale
    }
}

/// Stepper for one element: warm start on a fixed polynomial basis, then
/// rebuild + transfer + RK4 at every step.
pub struct ElementSolver<'a> {
    model: &'a dyn Model,
    grid: QuadratureGrid,
    settings: SolverSettings,
    state: ElementState,
    step: usize,
    warm_steps: usize,
    diagnostics: ElementDiagnostics,
}

impl<'a> ElementSolver<'a> {
    pub fn new(model: &'a dyn Model, grid: QuadratureGrid, element: usize, settings: SolverSettings) -> Result<Self> {
        let n = model.state_dim();
        let mut s = vec![0.0; n];
        let mut initial = vec![vec![0.0; grid.len()]; n];
        for q in 0..grid.len() {
            model.initial_state(grid.node(q), &mut s);
            for l in 0..n {
                initial[l][q] = s[l];
            }
        }
        let warm_steps = match settings.warm_start {
            Some(ws) if ws.duration > 0.0 => (ws.duration / settings.dt).round() as usize,
            _ => 0,
        };
        let (basis, modes) = if warm_steps > 0 {
            let basis = warmstart_basis(&grid, settings.warm_start.unwrap().degree);
            let modes = project_nodes(&initial, &basis, &grid);
            (basis, modes)
        } else {
            let basis = basis_from_nodes(model, 0.0, &initial, &grid, settings.basis)?;
            let modes = transfer_from_nodes(&initial, &basis, &grid).modes;
            (basis, modes)
        };
        let min_basis_len = basis.len();
        Ok(Self {
            model,
            grid,
            settings,
            state: ElementState {
                element,
                t: 0.0,
                basis,
                modes,
            },
            step: 0,
            warm_steps,
            diagnostics: ElementDiagnostics {
                min_basis_len,
                ..Default::default()
            },
        })
    }

    pub fn state(&self) -> &ElementState {
        &self.state
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn diagnostics(&self) -> &ElementDiagnostics {
        &self.diagnostics
    }

    pub fn moments(&self) -> MomentSample {
        local_moments(&self.state)
    }

    pub fn in_warm_start(&self) -> bool {
        self.step < self.warm_steps
    }

    /// Advance by one time step.
    pub fn advance(&mut self) -> Result<()> {
        if self.step >= self.warm_steps {
            self.rebuild_and_transfer()?;
        }
        let mut next = rk4_step(&self.state, self.model, &self.grid, self.settings.dt)?;
        self.step += 1;
        next.t = self.step as f64 * self.settings.dt;
        self.state = next;
        Ok(())
    }

    fn rebuild_and_transfer(&mut self) -> Result<()> {
        let nodes = self.state.reconstruct();
        let basis = basis_from_nodes(self.model, self.state.t, &nodes, &self.grid, self.settings.basis)?;
        if basis.len() == 1 {
            let before = local_moments(&self.state);
            let var: f64 = before.variance.iter().sum();
            let second: f64 = before.mean.iter().map(|m| m * m).sum::<f64>() + var;
            if second > 0.0 && var > 1e-20 * second {
                return Err(Error::DegenerateBasis {
                    t: self.state.t,
                    element: self.state.element,
                });
            }
        }
        let transfer = transfer_from_nodes(&nodes, &basis, &self.grid);
        let d = &mut self.diagnostics;
        d.rebuilds += 1;
        d.min_basis_len = d.min_basis_len.min(basis.len());
        if transfer.used_projection {
            d.projection_fallbacks += 1;
        }
        let next = ElementState {
            element: self.state.element,
            t: self.state.t,
            basis,
            modes: transfer.modes,
        };
        if self.settings.diagnostics {
            d.max_orthogonality_residual = d
                .max_orthogonality_residual
                .max(max_orthogonality_residual(&next.basis, &self.grid));
            if !transfer.used_projection {
                let projected = project_nodes(&nodes, &next.basis, &self.grid);
                for (a, b) in projected.iter().flatten().zip(next.modes.iter().flatten()) {
                    d.max_transfer_discrepancy = d.max_transfer_discrepancy.max((a - b).abs());
                }
                // same difference measured in function space, relative to the
                // rms of the component; insensitive to near-null basis vectors
                let norms = next.basis.squared_norms();
                for (p, m) in projected.iter().zip(&next.modes) {
                    let rms = m.iter().zip(norms).map(|(a, n)| a * a * n).sum::<f64>().sqrt();
                    for ((a, b), n) in p.iter().zip(m).zip(norms) {
                        let scaled = (a - b).abs() * n.sqrt() / rms.max(f64::MIN_POSITIVE);
                        d.max_scaled_transfer_discrepancy = d.max_scaled_transfer_discrepancy.max(scaled);
                    }
                }
            }
            let before = local_moments(&self.state);
            let after = local_moments(&next);
            for l in 0..before.mean.len() {
                d.max_moment_jump = d
                    .max_moment_jump
                    .max(relative_change(before.mean[l], after.mean[l]))
                    .max(relative_change(before.variance[l], after.variance[l]));
            }
        }
        self.state = next;
        Ok(())
    }
}

/// Result of [`run_element`].
#[derive(Debug, Clone)]
pub struct ElementRun {
    pub samples: Vec<MomentSample>,
    pub final_state: ElementState,
    pub diagnostics: ElementDiagnostics,
}

/// Solve one element over [0, duration], emitting local moments at every
/// step including t = 0.
pub fn run_element(
    element: &ElementBox,
    distributions: &[Distribution],
    model: &dyn Model,
    settings: SolverSettings,
    duration: f64,
) -> Result<ElementRun> {
    let grid = build_quadrature(element, distributions, DEFAULT_POINTS_PER_AXIS)?;
    let steps = step_count(settings.dt, duration)?;
    let mut solver = ElementSolver::new(model, grid, 0, settings)?;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(solver.moments());
    for _ in 0..steps {
        solver.advance()?;
        samples.push(solver.moments());
    }
    Ok(ElementRun {
        samples,
        final_state: solver.state.clone(),
        diagnostics: solver.diagnostics.clone(),
    })
}

/// Number of steps N with N dt = duration.
pub fn step_count(dt: f64, duration: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Config(format!("duration must be non-negative, got {duration}")));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 * duration.max(dt) {
        return Err(Error::Config(format!(
            "duration {duration} is not a whole number of steps of {dt}"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::project;
    use crate::measures::{inner_product, Distribution};
    use crate::problems::{KraichnanOrszag, Oscillator};

    fn line_grid(a: f64, b: f64) -> QuadratureGrid {
        let d = Distribution::uniform(a, b).unwrap();
        build_quadrature(
            &ElementBox {
                lower: vec![a],
                upper: vec![b],
            },
            &[d],
            10,
        )
        .unwrap()
    }

    fn poly_basis(grid: &QuadratureGrid, degree: i32) -> BasisSet {
        let c: Vec<Vec<f64>> = (0..=degree).map(|k| grid.map(|x| x[0].powi(k))).collect();
        gram_schmidt(&c, grid)
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = vec![vec![2.0, -1.0, 0.5], vec![0.3, 4.0, 1.0], vec![-1.0, 0.2, 3.0]];
        let cof = 2.0 * (4.0 * 3.0 - 1.0 * 0.2) + 1.0 * (0.3 * 3.0 - 1.0 * -1.0) + 0.5 * (0.3 * 0.2 - 4.0 * -1.0);
        assert!((determinant(m) - cof).abs() < 1e-12);
    }

    #[test]
    fn transfer_structure_and_projection_oracle() {
        let grid = line_grid(340.0, 460.0);
        let model = Oscillator::benchmark();
        // a random-looking state
        let nodes = vec![
            grid.map(|x| 0.05 * (x[0] / 100.0).sqrt().cos()),
            grid.map(|x| 0.2 * (x[0] / 150.0).sin()),
        ];
        let basis = basis_from_nodes(&model, 1.0, &nodes, &grid, 4).unwrap();
        let tr = transfer_from_nodes(&nodes, &basis, &grid);
        assert!(!tr.used_projection);
        for l in 0..2 {
            assert!((tr.modes[l][0] - grid.integrate(&nodes[l])).abs() < 1e-15);
            assert_eq!(tr.modes[l][l + 1], 1.0);
            assert!(tr.modes[l][l + 2..].iter().all(|&m| m == 0.0));
        }
        let projected = project_nodes(&nodes, &basis, &grid);
        for (a, b) in projected.iter().flatten().zip(tr.modes.iter().flatten()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn degenerate_transfer_falls_back_to_projection() {
        let grid = line_grid(340.0, 460.0);
        let model = Oscillator::benchmark();
        let nodes = vec![vec![0.05; grid.len()], vec![0.2; grid.len()]];
        let basis = basis_from_nodes(&model, 0.0, &nodes, &grid, 4).unwrap();
        assert_eq!(basis.len(), 2); // constant and k u
        let tr = transfer_from_nodes(&nodes, &basis, &grid);
        assert!(tr.used_projection);
        assert!((tr.modes[0][0] - 0.05).abs() < 1e-16 && tr.modes[0][1].abs() < 1e-14);
    }

    #[test]
    fn deterministic_state_collapses_basis() {
        let grid = line_grid(-1.0, 1.0);
        let basis = basis_from_nodes(&KraichnanOrszag, 0.0, &vec![vec![0.5; grid.len()]; 3], &grid, 6).unwrap();
        assert_eq!(basis.len(), 1);
    }

    #[test]
    fn rebuild_is_pure() {
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        let e = ElementBox {
            lower: vec![-1.0, -1.0, -1.0],
            upper: vec![-0.5, -0.5, -0.5],
        };
        let grid = build_quadrature(&e, &[d.clone(), d.clone(), d], 10).unwrap();
        let settings = SolverSettings {
            basis: 6,
            dt: 5e-3,
            warm_start: None,
            diagnostics: false,
        };
        let solver = ElementSolver::new(&KraichnanOrszag, grid.clone(), 0, settings).unwrap();
        let a = rebuild_basis(solver.state(), &KraichnanOrszag, &grid, 6).unwrap();
        let b = rebuild_basis(solver.state(), &KraichnanOrszag, &grid, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert!(max_orthogonality_residual(&a, &grid) <= 1e-10);
    }

    #[test]
    fn galerkin_rhs_examples() {
        let model = Oscillator::benchmark();
        let grid = line_grid(400.0, 400.0 + 1e-9);
        let basis = poly_basis(&grid, 0);
        let d = galerkin_rhs(0.0, &[vec![0.05], vec![0.0]], &basis, &model, &grid, 0).unwrap();
        assert_eq!(d[0], vec![0.0]);
        assert!((d[1][0] + 0.2).abs() < 1e-12);

        let grid3 = {
            let u = Distribution::uniform(-1.0, 1.0).unwrap();
            let e = ElementBox {
                lower: vec![-1.0; 3],
                upper: vec![1.0; 3],
            };
            build_quadrature(&e, &[u.clone(), u.clone(), u], 4).unwrap()
        };
        let b3 = poly_basis(&grid3, 0);
        let d = galerkin_rhs(0.0, &vec![vec![0.0]; 3], &b3, &KraichnanOrszag, &grid3, 0).unwrap();
        assert!(d.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn galerkin_projection_of_linear_stiffness() {
        // k = xi on [340,460], basis {1, xi - 400}, u = 0.05 constant:
        // -(xi/m) u = -(400/m) 0.05 - (0.05/m)(xi - 400)
        let model = Oscillator::benchmark();
        let grid = line_grid(340.0, 460.0);
        let basis = gram_schmidt(&[vec![1.0; 10], grid.map(|x| x[0])], &grid);
        let d = galerkin_rhs(0.0, &[vec![0.05, 0.0], vec![0.0, 0.0]], &basis, &model, &grid, 0).unwrap();
        assert!((d[1][0] + 0.2).abs() < 1e-15);
        assert!((d[1][1] + 0.05 / 100.0).abs() < 1e-17);
    }

    #[test]
    fn rk4_single_step_on_deterministic_oscillator() {
        let model = Oscillator::benchmark();
        let grid = line_grid(400.0, 400.0 + 1e-12);
        let state = ElementState {
            element: 0,
            t: 0.0,
            basis: poly_basis(&grid, 0),
            modes: vec![vec![0.05], vec![0.2]],
        };
        let dt = 1e-3;
        let next = rk4_step(&state, &model, &grid, dt).unwrap();
        let exact = 0.05 * (2.0 * dt).cos() + 0.1 * (2.0 * dt).sin();
        assert!((next.modes[0][0] - exact).abs() < 1e-13);
        assert_eq!(next.t, dt);

        let zero = ElementState {
            modes: vec![vec![0.0], vec![0.0]],
            ..state.clone()
        };
        let mut s = zero;
        for _ in 0..100 {
            s = rk4_step(&s, &model, &grid, dt).unwrap();
        }
        assert!(s.modes.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let model = Oscillator::benchmark();
        let grid = line_grid(400.0, 400.0 + 1e-12);
        let period = std::f64::consts::PI; // omega = 2
        let err = |steps: usize| {
            let dt = period / steps as f64;
            let mut s = ElementState {
                element: 0,
                t: 0.0,
                basis: poly_basis(&grid, 0),
                modes: vec![vec![0.05], vec![0.2]],
            };
            for _ in 0..steps {
                s = rk4_step(&s, &model, &grid, dt).unwrap();
            }
            (s.modes[0][0] - 0.05).abs()
        };
        let (e1, e2) = (err(100), err(200));
        let slope = (e1 / e2).log2();
        assert!((slope - 4.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn rk4_detects_blow_up() {
        let model = Oscillator::benchmark();
        let grid = line_grid(400.0, 401.0);
        let state = ElementState {
            element: 3,
            t: 0.0,
            basis: poly_basis(&grid, 0),
            modes: vec![vec![f64::MAX], vec![f64::MAX]],
        };
        assert!(matches!(
            rk4_step(&state, &model, &grid, 1.0),
            Err(Error::NonFinite { element: 3, .. })
        ));
    }

    #[test]
    fn local_moment_examples() {
        let grid = line_grid(-1.0, 1.0);
        let basis = poly_basis(&grid, 2);
        let mut state = ElementState {
            element: 0,
            t: 0.0,
            basis,
            modes: vec![vec![1.5, 0.0, 0.0]],
        };
        let m = local_moments(&state);
        assert_eq!((m.mean[0], m.variance[0]), (1.5, 0.0));
        state.modes[0] = vec![0.0, 1.0, 0.0];
        let m = local_moments(&state);
        assert!((m.variance[0] - 1.0 / 3.0).abs() < 1e-15);

        state.modes[0] = vec![0.3, -0.7, 2.1];
        let m = local_moments(&state);
        let z = state.reconstruct().remove(0);
        let c: Vec<f64> = z.iter().map(|v| v - m.mean[0]).collect();
        assert!((inner_product(&c, &c, &grid).unwrap() - m.variance[0]).abs() < 1e-12);
    }

    #[test]
    fn problem1_single_element_matches_closed_form() {
        let model = Oscillator::benchmark();
        let d = Distribution::uniform(340.0, 460.0).unwrap();
        let e = ElementBox {
            lower: vec![340.0],
            upper: vec![460.0],
        };
        let settings = SolverSettings {
            basis: 4,
            dt: 1e-3,
            warm_start: Some(WarmStart { degree: 7, duration: 1.0 }),
            diagnostics: false,
        };
        let run = run_element(&e, std::slice::from_ref(&d), &model, settings, 10.0).unwrap();
        assert_eq!(run.samples.len(), 10_001);
        let (x, w) = crate::measures::gauss::gauss_legendre(200);
        let mut err_mean = 0.0;
        let mut err_var = 0.0;
        for s in &run.samples {
            let vals: Vec<f64> = x.iter().map(|x| model.exact(400.0 + 60.0 * x, s.t).0).collect();
            let mean: f64 = vals.iter().zip(&w).map(|(v, w)| 0.5 * w * v).sum();
            let var: f64 = vals.iter().zip(&w).map(|(v, w)| 0.5 * w * (v - mean).powi(2)).sum();
            err_mean += (s.mean[0] - mean).abs();
            err_var += (s.variance[0] - var).abs();
        }
        let scale = 1e-3 / 10.0;
        assert!(err_mean * scale <= 1e-6, "eps_G mean {}", err_mean * scale);
        assert!(err_var * scale <= 1e-6, "eps_G var {}", err_var * scale);
    }

    #[test]
    fn warm_start_over_whole_run_never_rebuilds() {
        let model = Oscillator::benchmark();
        let d = Distribution::uniform(340.0, 460.0).unwrap();
        let e = ElementBox {
            lower: vec![340.0],
            upper: vec![460.0],
        };
        let settings = SolverSettings {
            basis: 4,
            dt: 1e-2,
            warm_start: Some(WarmStart { degree: 5, duration: 2.0 }),
            diagnostics: false,
        };
        let run = run_element(&e, &[d], &model, settings, 2.0).unwrap();
        assert_eq!(run.diagnostics.rebuilds, 0);
        assert_eq!(run.final_state.basis.len(), 6);
    }

    #[test]
    fn kraichnan_orszag_initial_variance() {
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        let e = ElementBox {
            lower: vec![0.0, -1.0, -0.5],
            upper: vec![0.5, -0.5, 0.0],
        };
        let settings = SolverSettings {
            basis: 6,
            dt: 5e-3,
            warm_start: None,
            diagnostics: false,
        };
        let run = run_element(&e, &[d.clone(), d.clone(), d], &KraichnanOrszag, settings, 0.0).unwrap();
        let s = &run.samples[0];
        // uniform on a width-0.5 interval
        assert!((s.variance[0] - 0.25 / 12.0).abs() < 1e-14);
        assert!((s.mean[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn projection_round_trip_within_span() {
        let grid = line_grid(-1.0, 1.0);
        let basis = poly_basis(&grid, 3);
        let f = grid.map(|x| 1.0 - 2.0 * x[0] + 0.5 * x[0].powi(3));
        let back = crate::basis::evaluate(&project(&f, &basis, &grid).unwrap(), &basis).unwrap();
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * 3.5);
        }
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(1e-3, 150.0).unwrap(), 150_000);
        assert_eq!(step_count(5e-3, 0.0).unwrap(), 0);
        assert!(step_count(0.0, 1.0).is_err());
        assert!(step_count(0.3, 1.0).is_err());
    }
}
