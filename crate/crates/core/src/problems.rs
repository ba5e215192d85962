//! The four benchmark systems and their parameter presets.
//!
//! 1. Undamped oscillator `m u'' + k u = 0` with random stiffness.
//! 2. Third-order linear system `u''' + u''/2 + k u' + u = 0`.
//! 3. Van der Pol oscillator `m u'' - (1 - rho u^2) c u' + k u = 0` with
//!    random damping and stiffness.
//! 4. Kraichnan-Orszag three-mode problem with random initial conditions.

use std::fmt;
use std::str::FromStr;

use crate::element::WarmStart;
use crate::flowmap::{Model, StateLayout};
use crate::measures::Distribution;
use crate::reference::ReferenceKind;
use crate::{Error, Result};

/// Binomial coefficients C(j, 0..=j).
fn binomial_row(j: usize) -> Vec<f64> {
    let mut row = vec![1.0; j + 1];
    for i in 1..j {
        row[i] = row[i - 1] * (j - i + 1) as f64 / i as f64;
    }
    row
}

/// Undamped free oscillator `m u'' + k u = 0` with `k = xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator {
    pub mass: f64,
    pub initial_displacement: f64,
    pub initial_velocity: f64,
}

impl Oscillator {
    pub fn benchmark() -> Self {
        Self {
            mass: 100.0,
            initial_displacement: 0.05,
            initial_velocity: 0.20,
        }
    }

    /// Closed-form displacement and velocity at stiffness `k`.
    pub fn exact(&self, k: f64, t: f64) -> (f64, f64) {
        let w = (k / self.mass).sqrt();
        let (s, c) = (w * t).sin_cos();
        let u = self.initial_displacement * c + self.initial_velocity / w * s;
        let v = -self.initial_displacement * w * s + self.initial_velocity * c;
        (u, v)
    }
}

impl Model for Oscillator {
    fn name(&self) -> &str {
        "oscillator"
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn layout(&self) -> StateLayout {
        StateLayout::Companion
    }
    fn component_names(&self) -> Vec<String> {
        vec!["u".into(), "du".into()]
    }
    fn initial_state(&self, _xi: &[f64], state: &mut [f64]) {
        state[0] = self.initial_displacement;
        state[1] = self.initial_velocity;
    }
    fn rhs(&self, _t: f64, xi: &[f64], s: &[f64], out: &mut [f64]) {
        out[0] = s[1];
        out[1] = -(xi[0] / self.mass) * s[0];
    }
    fn derivative_chain(&self, _t: f64, xi: &[f64], s: &[f64], orders: usize, out: &mut Vec<f64>) {
        let kbar = xi[0] / self.mass;
        let mut d = Vec::with_capacity(orders + 2);
        d.extend_from_slice(&s[..2]);
        for j in 0..orders {
            let next = -kbar * d[j];
            d.push(next);
            out.push(next);
        }
    }
}

/// Third-order system `u''' + u''/2 + k u' + u = 0` with `k = xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdOrder {
    pub acceleration_damping: f64,
    pub initial: [f64; 3],
}

impl ThirdOrder {
    pub fn benchmark() -> Self {
        Self {
            acceleration_damping: 0.5,
            initial: [1.0, -1.0, 2.0],
        }
    }
}

impl Model for ThirdOrder {
    fn name(&self) -> &str {
        "third-order"
    }
    fn state_dim(&self) -> usize {
        3
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn layout(&self) -> StateLayout {
        StateLayout::Companion
    }
    fn component_names(&self) -> Vec<String> {
        vec!["u".into(), "du".into(), "ddu".into()]
    }
    fn initial_state(&self, _xi: &[f64], state: &mut [f64]) {
        state.copy_from_slice(&self.initial);
    }
    fn rhs(&self, _t: f64, xi: &[f64], s: &[f64], out: &mut [f64]) {
        out[0] = s[1];
        out[1] = s[2];
        out[2] = -self.acceleration_damping * s[2] - xi[0] * s[1] - s[0];
    }
    fn derivative_chain(&self, _t: f64, xi: &[f64], s: &[f64], orders: usize, out: &mut Vec<f64>) {
        let k = xi[0];
        let mut d = Vec::with_capacity(orders + 3);
        d.extend_from_slice(&s[..3]);
        for j in 0..orders {
            let next = -self.acceleration_damping * d[j + 2] - k * d[j + 1] - d[j];
            d.push(next);
            out.push(next);
        }
    }
}

/// Van der Pol oscillator `m u'' - (1 - rho u^2) c u' + k u = 0` with
/// `c = xi_1`, `k = xi_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VanDerPol {
    pub mass: f64,
    pub rho: f64,
    pub initial_displacement: f64,
    pub initial_velocity: f64,
}

impl VanDerPol {
    pub fn benchmark() -> Self {
        Self {
            mass: 100.0,
            rho: 150.0,
            initial_displacement: 0.20,
            initial_velocity: 0.30,
        }
    }
}

impl Model for VanDerPol {
    fn name(&self) -> &str {
        "van-der-pol"
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn layout(&self) -> StateLayout {
        StateLayout::Companion
    }
    fn component_names(&self) -> Vec<String> {
        vec!["u".into(), "du".into()]
    }
    fn initial_state(&self, _xi: &[f64], state: &mut [f64]) {
        state[0] = self.initial_displacement;
        state[1] = self.initial_velocity;
    }
    fn rhs(&self, _t: f64, xi: &[f64], s: &[f64], out: &mut [f64]) {
        let (c, k) = (xi[0], xi[1]);
        out[0] = s[1];
        out[1] = ((1.0 - self.rho * s[0] * s[0]) * c * s[1] - k * s[0]) / self.mass;
    }
    fn derivative_chain(&self, _t: f64, xi: &[f64], s: &[f64], orders: usize, out: &mut Vec<f64>) {
        let cbar = xi[0] / self.mass;
        let kbar = xi[1] / self.mass;
        // d[i] = i-th derivative of u, sq[i] = i-th derivative of u^2
        let mut d = Vec::with_capacity(orders + 2);
        d.extend_from_slice(&s[..2]);
        let mut sq = Vec::with_capacity(orders);
        for j in 0..orders {
            let row = binomial_row(j);
            sq.push((0..=j).map(|a| row[a] * d[a] * d[j - a]).sum::<f64>());
            let cubic: f64 = (0..=j).map(|b| row[b] * sq[b] * d[j - b + 1]).sum();
            let next = cbar * (d[j + 1] - self.rho * cubic) - kbar * d[j];
            d.push(next);
            out.push(next);
        }
    }
}

/// Kraichnan-Orszag three-mode problem with `u_i(0) = xi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KraichnanOrszag;

impl Model for KraichnanOrszag {
    fn name(&self) -> &str {
        "kraichnan-orszag"
    }
    fn state_dim(&self) -> usize {
        3
    }
    fn param_dim(&self) -> usize {
        3
    }
    fn layout(&self) -> StateLayout {
        StateLayout::FirstOrderSystem
    }
    fn component_names(&self) -> Vec<String> {
        vec!["u1".into(), "u2".into(), "u3".into()]
    }
    fn initial_state(&self, xi: &[f64], state: &mut [f64]) {
        state.copy_from_slice(&xi[..3]);
    }
    fn rhs(&self, _t: f64, _xi: &[f64], s: &[f64], out: &mut [f64]) {
        out[0] = s[0] * s[2];
        out[1] = -s[1] * s[2];
        out[2] = -s[0] * s[0] + s[1] * s[1];
    }
    fn derivative_chain(&self, _t: f64, _xi: &[f64], s: &[f64], orders: usize, out: &mut Vec<f64>) {
        // x[i] = i-th derivative of the state
        let mut x: Vec<[f64; 3]> = Vec::with_capacity(orders + 1);
        x.push([s[0], s[1], s[2]]);
        for j in 0..orders {
            let row = binomial_row(j);
            let mut next = [0.0; 3];
            for a in 0..=j {
                let (p, q) = (&x[a], &x[j - a]);
                next[0] += row[a] * p[0] * q[2];
                next[1] -= row[a] * p[1] * q[2];
                next[2] += row[a] * (p[1] * q[1] - p[0] * q[0]);
            }
            out.extend_from_slice(&next);
            x.push(next);
        }
    }
}

/// Benchmark problem number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Oscillator = 1,
    ThirdOrder = 2,
    VanDerPol = 3,
    KraichnanOrszag = 4,
}

impl ProblemId {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn model(self) -> Box<dyn Model> {
        match self {
            ProblemId::Oscillator => Box::new(Oscillator::benchmark()),
            ProblemId::ThirdOrder => Box::new(ThirdOrder::benchmark()),
            ProblemId::VanDerPol => Box::new(VanDerPol::benchmark()),
            ProblemId::KraichnanOrszag => Box::new(KraichnanOrszag),
        }
    }

    /// Names accepted by [`Preset::distributions`], default first.
    pub fn distribution_names(self) -> &'static [&'static str] {
        match self {
            ProblemId::Oscillator => &["uniform", "beta", "gamma"],
            ProblemId::ThirdOrder => &["uniform", "beta", "normal"],
            ProblemId::VanDerPol => &["uniform-beta"],
            ProblemId::KraichnanOrszag => &["uniform", "beta"],
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(ProblemId::Oscillator),
            "2" => Ok(ProblemId::ThirdOrder),
            "3" => Ok(ProblemId::VanDerPol),
            "4" => Ok(ProblemId::KraichnanOrszag),
            other => Err(Error::Config(format!("unknown problem `{other}`, expected 1, 2, 3 or 4"))),
        }
    }
}

/// Laws for one run: what the solver and Monte Carlo sample from, and what
/// the deterministic references integrate against (the untruncated law for
/// gamma and normal inputs).
#[derive(Debug, Clone)]
pub struct LawSet {
    pub solver: Vec<Distribution>,
    pub reference: Vec<Distribution>,
}

/// Default run parameters of a benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub problem: ProblemId,
    pub distribution: &'static str,
    pub basis: usize,
    pub elements: Vec<usize>,
    pub dt: f64,
    pub duration: f64,
    pub warm_start: Option<WarmStart>,
    pub reference: ReferenceKind,
    pub mc_samples: usize,
}

impl Preset {
    pub fn for_problem(problem: ProblemId) -> Self {
        match problem {
            ProblemId::Oscillator => Self {
                problem,
                distribution: "uniform",
                basis: 6,
                elements: vec![8],
                dt: 1e-3,
                duration: 150.0,
                warm_start: Some(WarmStart {
                    degree: 7,
                    duration: 1.0,
                }),
                reference: ReferenceKind::ClosedForm,
                mc_samples: 1_000_000,
            },
            ProblemId::ThirdOrder => Self {
                problem,
                distribution: "uniform",
                basis: 7,
                elements: vec![8],
                dt: 1e-3,
                duration: 150.0,
                warm_start: Some(WarmStart {
                    degree: 7,
                    duration: 1.0,
                }),
                reference: ReferenceKind::QuasiExact,
                mc_samples: 1_000_000,
            },
            ProblemId::VanDerPol => Self {
                problem,
                distribution: "uniform-beta",
                basis: 4,
                elements: vec![8, 8],
                dt: 5e-3,
                duration: 150.0,
                warm_start: Some(WarmStart {
                    degree: 9,
                    duration: 1.0,
                }),
                reference: ReferenceKind::MonteCarlo,
                mc_samples: 1_000_000,
            },
            ProblemId::KraichnanOrszag => Self {
                problem,
                distribution: "uniform",
                basis: 6,
                elements: vec![8, 8, 8],
                dt: 5e-3,
                duration: 50.0,
                warm_start: None,
                reference: ReferenceKind::MonteCarlo,
                mc_samples: 1_000_000,
            },
        }
    }

    /// Solver and reference laws for a named distribution choice.
    pub fn distributions(problem: ProblemId, name: &str) -> Result<LawSet> {
        let unknown = || {
            Error::Config(format!(
                "distribution `{name}` is not available for problem {problem}; choose one of {:?}",
                problem.distribution_names()
            ))
        };
        let same = |v: Vec<Distribution>| LawSet {
            reference: v.clone(),
            solver: v,
        };
        Ok(match (problem, name) {
            (ProblemId::Oscillator, "uniform") => same(vec![Distribution::uniform(340.0, 460.0)?]),
            (ProblemId::Oscillator, "beta") => same(vec![Distribution::beta(2.0, 5.0, 340.0, 460.0)?]),
            (ProblemId::Oscillator, "gamma") => LawSet {
                solver: vec![Distribution::truncated_gamma(10.0, 0.1, 340.0, 920.0)?],
                reference: vec![Distribution::gamma_reference(10.0, 0.1, 340.0)?],
            },
            (ProblemId::ThirdOrder, "uniform") => same(vec![Distribution::uniform(2.0, 3.0)?]),
            (ProblemId::ThirdOrder, "beta") => same(vec![Distribution::beta(2.0, 5.0, 2.0, 3.0)?]),
            (ProblemId::ThirdOrder, "normal") => LawSet {
                solver: vec![Distribution::truncated_normal(2.5, 0.125, 1.4, 3.6)?],
                reference: vec![Distribution::normal_reference(2.5, 0.125)?],
            },
            (ProblemId::VanDerPol, "uniform-beta") => same(vec![
                Distribution::uniform(150.0, 450.0)?,
                Distribution::beta(2.0, 5.0, 340.0, 460.0)?,
            ]),
            (ProblemId::KraichnanOrszag, "uniform") => same(vec![Distribution::uniform(-1.0, 1.0)?; 3]),
            (ProblemId::KraichnanOrszag, "beta") => same(vec![Distribution::beta(2.0, 5.0, -1.0, 1.0)?; 3]),
            _ => return Err(unknown()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::state_derivatives;
    use crate::measures::DistributionKind;

    /// Central differences in time of the (k-1)-th derivative along the exact
    /// trajectory, integrated with a tiny RK4 step.
    fn fd_check(model: &dyn Model, xi: &[f64], t0: f64, orders: usize) {
        let n = model.state_dim();
        let mut s = vec![0.0; n];
        model.initial_state(xi, &mut s);
        let step = |s: &[f64], h: f64| -> Vec<f64> {
            let mut k = vec![vec![0.0; n]; 4];
            let mut tmp = vec![0.0; n];
            model.rhs(0.0, xi, s, &mut k[0]);
            for l in 0..n {
                tmp[l] = s[l] + 0.5 * h * k[0][l];
            }
            model.rhs(0.0, xi, &tmp, &mut k[1]);
            for l in 0..n {
                tmp[l] = s[l] + 0.5 * h * k[1][l];
            }
            model.rhs(0.0, xi, &tmp, &mut k[2]);
            for l in 0..n {
                tmp[l] = s[l] + h * k[2][l];
            }
            model.rhs(0.0, xi, &tmp, &mut k[3]);
            (0..n).map(|l| s[l] + h / 6.0 * (k[0][l] + 2.0 * k[1][l] + 2.0 * k[2][l] + k[3][l])).collect()
        };
        let h = 1e-3;
        let steps = (t0 / h).round() as usize;
        for _ in 0..steps {
            s = step(&s, h);
        }
        let fd = 1e-6;
        let plus = step(&s, fd);
        let minus = step(&s, -fd);
        let d0 = state_derivatives(model, 0.0, xi, &s, orders + 1);
        let dp = state_derivatives(model, 0.0, xi, &plus, orders + 1);
        let dm = state_derivatives(model, 0.0, xi, &minus, orders + 1);
        for k in 0..=orders {
            for l in 0..n {
                let numeric = (dp[k][l] - dm[k][l]) / (2.0 * fd);
                let analytic = d0[k + 1][l];
                let scale = analytic.abs().max(d0[k][l].abs()).max(1e-3);
                assert!(
                    (numeric - analytic).abs() <= 1e-6 * scale,
                    "{} order {k} comp {l}: {numeric} vs {analytic}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn derivative_chains_match_finite_differences() {
        fd_check(&Oscillator::benchmark(), &[400.0], 0.7, 4);
        fd_check(&ThirdOrder::benchmark(), &[2.4], 0.7, 4);
        fd_check(&VanDerPol::benchmark(), &[300.0, 400.0], 0.7, 4);
        fd_check(&KraichnanOrszag, &[0.3, -0.6, 0.8], 0.7, 4);
    }

    #[test]
    fn chain_order_zero_is_rhs() {
        let models: Vec<(Box<dyn Model>, Vec<f64>)> = vec![
            (Box::new(Oscillator::benchmark()), vec![380.0]),
            (Box::new(ThirdOrder::benchmark()), vec![2.2]),
            (Box::new(VanDerPol::benchmark()), vec![200.0, 420.0]),
            (Box::new(KraichnanOrszag), vec![0.1, 0.2, 0.3]),
        ];
        for (m, xi) in models {
            let n = m.state_dim();
            let s: Vec<f64> = (0..n).map(|i| 0.1 + 0.07 * i as f64).collect();
            let mut r = vec![0.0; n];
            m.rhs(0.3, &xi, &s, &mut r);
            let mut chain = Vec::new();
            m.derivative_chain(0.3, &xi, &s, 1, &mut chain);
            let expect = match m.layout() {
                StateLayout::Companion => vec![r[n - 1]],
                StateLayout::FirstOrderSystem => r,
            };
            for (a, b) in chain.iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-3), "{}: {a} vs {b}", m.name());
            }
            // purity
            let mut again = Vec::new();
            m.derivative_chain(0.3, &xi, &s, 1, &mut again);
            assert_eq!(chain, again);
        }
    }

    #[test]
    fn presets_carry_published_constants() {
        assert_eq!(Oscillator::benchmark(), Oscillator { mass: 100.0, initial_displacement: 0.05, initial_velocity: 0.20 });
        assert_eq!(ThirdOrder::benchmark().initial, [1.0, -1.0, 2.0]);
        assert_eq!(ThirdOrder::benchmark().acceleration_damping, 0.5);
        let v = VanDerPol::benchmark();
        assert_eq!((v.mass, v.rho, v.initial_displacement, v.initial_velocity), (100.0, 150.0, 0.20, 0.30));

        let p1 = Preset::for_problem(ProblemId::Oscillator);
        assert_eq!((p1.dt, p1.duration), (1e-3, 150.0));
        assert_eq!(p1.warm_start, Some(WarmStart { degree: 7, duration: 1.0 }));
        let p2 = Preset::for_problem(ProblemId::ThirdOrder);
        assert_eq!((p2.dt, p2.duration), (1e-3, 150.0));
        assert_eq!(p2.warm_start.unwrap().degree, 7);
        let p3 = Preset::for_problem(ProblemId::VanDerPol);
        assert_eq!((p3.dt, p3.duration, p3.basis, p3.elements.clone()), (5e-3, 150.0, 4, vec![8, 8]));
        assert_eq!(p3.warm_start.unwrap().degree, 9);
        let p4 = Preset::for_problem(ProblemId::KraichnanOrszag);
        assert_eq!((p4.dt, p4.duration, p4.basis), (5e-3, 50.0, 6));
        assert_eq!(p4.elements.iter().product::<usize>(), 512);
        assert!(p4.warm_start.is_none());

        let laws = Preset::distributions(ProblemId::Oscillator, "uniform").unwrap();
        assert_eq!(laws.solver[0].support(), (340.0, 460.0));
        let laws = Preset::distributions(ProblemId::Oscillator, "beta").unwrap();
        assert_eq!(laws.solver[0].kind(), DistributionKind::Beta { alpha: 2.0, beta: 5.0 });
        let laws = Preset::distributions(ProblemId::Oscillator, "gamma").unwrap();
        assert_eq!(laws.solver[0].support(), (340.0, 920.0));
        assert_eq!(laws.solver[0].kind(), DistributionKind::Gamma { shape: 10.0, rate: 0.1 });
        let laws = Preset::distributions(ProblemId::ThirdOrder, "normal").unwrap();
        assert_eq!(laws.solver[0].support(), (1.4, 3.6));
        assert_eq!(laws.solver[0].kind(), DistributionKind::Normal { mean: 2.5, std_dev: 0.125 });
        let laws = Preset::distributions(ProblemId::ThirdOrder, "uniform").unwrap();
        assert_eq!(laws.solver[0].support(), (2.0, 3.0));
        let laws = Preset::distributions(ProblemId::VanDerPol, "uniform-beta").unwrap();
        assert_eq!(laws.solver[0].support(), (150.0, 450.0));
        assert_eq!(laws.solver[1].support(), (340.0, 460.0));
        let laws = Preset::distributions(ProblemId::KraichnanOrszag, "beta").unwrap();
        assert_eq!(laws.solver.len(), 3);
        assert_eq!(laws.solver[2].support(), (-1.0, 1.0));
        assert!(Preset::distributions(ProblemId::VanDerPol, "gamma").is_err());
    }
}
