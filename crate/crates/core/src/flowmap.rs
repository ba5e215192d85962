//! Random ODE models and the flow maps that supply basis germs.

use crate::measures::QuadratureGrid;
use crate::{Error, Result};

/// How the state tuple relates to the unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLayout {
    /// State is `(u, u', ..., u^(n-1))` for a single scalar unknown of order
    /// n; the dynamics only supply the highest derivative.
    Companion,
    /// State is `n` independent first-order unknowns.
    FirstOrderSystem,
}

/// A system of random ODEs `ds/dt = F(t, xi, s)`.
///
/// Implementations must be pure: identical arguments give bit-identical
/// results.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    /// Length n of the state tuple.
    fn state_dim(&self) -> usize;

    /// Number of random inputs d.
    fn param_dim(&self) -> usize;

    fn layout(&self) -> StateLayout;

    /// Largest number of enrichment germs (time derivatives beyond the state)
    /// the derivative chain can supply.
    fn max_enrichment(&self) -> usize {
        8
    }

    fn component_names(&self) -> Vec<String> {
        (1..=self.state_dim()).map(|i| format!("s{i}")).collect()
    }

    fn initial_state(&self, xi: &[f64], state: &mut [f64]);

    /// Time derivative of the whole state.
    fn rhs(&self, t: f64, xi: &[f64], state: &[f64], out: &mut [f64]);

    /// Successive time derivatives of the dynamics, `D_t^j F` for
    /// `j in 0..orders`, flattened order-major into `out`.
    ///
    /// For [`StateLayout::Companion`] each order contributes one value, the
    /// `(n + j)`-th time derivative of the unknown. For
    /// [`StateLayout::FirstOrderSystem`] each order contributes `n` values,
    /// the `(j + 1)`-th time derivative of every component.
    fn derivative_chain(&self, t: f64, xi: &[f64], state: &[f64], orders: usize, out: &mut Vec<f64>);
}

/// Number of values one derivative order contributes to the chain.
pub fn chain_width(model: &dyn Model) -> usize {
    match model.layout() {
        StateLayout::Companion => 1,
        StateLayout::FirstOrderSystem => model.state_dim(),
    }
}

/// What a germ is: the `order`-th time derivative of state component
/// `component` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GermLabel {
    pub component: usize,
    pub order: usize,
}

/// Germ functions `Phi_1..Phi_P` at the quadrature nodes; the constant germ
/// is added by the basis builder.
#[derive(Debug, Clone)]
pub struct GermSet {
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<GermLabel>,
}

impl GermSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Admissible germ counts `n + 1 ..= n + M` for a model.
pub fn germ_range(model: &dyn Model) -> (usize, usize) {
    let n = model.state_dim();
    (n + 1, n + model.max_enrichment())
}

fn germ_labels(model: &dyn Model, p: usize) -> Vec<GermLabel> {
    let n = model.state_dim();
    let mut labels: Vec<GermLabel> = (0..n).map(|l| GermLabel { component: l, order: 0 }).collect();
    let mut j = 0;
    while labels.len() < p {
        match model.layout() {
            StateLayout::Companion => labels.push(GermLabel {
                component: 0,
                order: n + j,
            }),
            StateLayout::FirstOrderSystem => {
                for l in 0..n {
                    if labels.len() < p {
                        labels.push(GermLabel {
                            component: l,
                            order: j + 1,
                        });
                    }
                }
            }
        }
        j += 1;
    }
    labels
}

/// Enriched germ set at time `t` from the state node values: the state
/// components followed by successive time derivatives, derivative-major,
/// truncated to `p` germs.
pub fn enriched_germs(
    model: &dyn Model,
    t: f64,
    state_nodes: &[Vec<f64>],
    grid: &QuadratureGrid,
    p: usize,
) -> Result<GermSet> {
    let n = model.state_dim();
    let (min, max) = germ_range(model);
    if p < min || p > max {
        return Err(Error::GermCount { p, min, max });
    }
    if state_nodes.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: state_nodes.len(),
        });
    }
    let q_count = grid.len();
    for s in state_nodes {
        if s.len() != q_count {
            return Err(Error::LengthMismatch {
                expected: q_count,
                got: s.len(),
            });
        }
    }
    let extra = p - n;
    let width = chain_width(model);
    let orders = extra.div_ceil(width);

    let mut values: Vec<Vec<f64>> = state_nodes.to_vec();
    let mut enriched = vec![vec![0.0; q_count]; extra];
    let mut state = vec![0.0; n];
    let mut chain = Vec::with_capacity(orders * width);
    for q in 0..q_count {
        for l in 0..n {
            state[l] = state_nodes[l][q];
        }
        chain.clear();
        model.derivative_chain(t, grid.node(q), &state, orders, &mut chain);
        for (k, g) in enriched.iter_mut().enumerate() {
            g[q] = chain[k];
        }
    }
    values.extend(enriched);
    Ok(GermSet {
        values,
        labels: germ_labels(model, p),
    })
}

/// Time derivatives `d^k s / dt^k` for `k in 0..=max_order` at one node.
pub fn state_derivatives(model: &dyn Model, t: f64, xi: &[f64], state: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = model.state_dim();
    let mut chain = Vec::new();
    model.derivative_chain(t, xi, state, max_order, &mut chain);
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(state.to_vec());
    for k in 1..=max_order {
        let d = match model.layout() {
            // component l of d^k s is the (k + l)-th derivative of the unknown
            StateLayout::Companion => (0..n)
                .map(|l| {
                    let order = k + l;
                    if order < n {
                        state[order]
                    } else {
                        chain[order - n]
                    }
                })
                .collect(),
            StateLayout::FirstOrderSystem => chain[(k - 1) * n..k * n].to_vec(),
        };
        out.push(d);
    }
    out
}

/// Order-`m` stochastic flow map: per-node truncated Taylor expansion of the
/// state over a time increment `h`.
pub fn taylor_propagate(
    model: &dyn Model,
    t: f64,
    state_nodes: &[Vec<f64>],
    grid: &QuadratureGrid,
    h: f64,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = model.state_dim();
    if state_nodes.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: state_nodes.len(),
        });
    }
    let mut out = vec![vec![0.0; grid.len()]; n];
    let mut state = vec![0.0; n];
    for q in 0..grid.len() {
        for l in 0..n {
            state[l] = state_nodes[l][q];
        }
        let derivs = state_derivatives(model, t, grid.node(q), &state, m);
        for l in 0..n {
            let mut acc = 0.0;
            let mut factor = 1.0;
            for (k, d) in derivs.iter().enumerate() {
                if k > 0 {
                    factor *= h / k as f64;
                }
                acc += factor * d[l];
            }
            out[l][q] = acc;
        }
    }
    Ok(out)
}
