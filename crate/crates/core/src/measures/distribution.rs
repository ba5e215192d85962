use crate::measures::gauss::integrate_adaptive;
use crate::{Error, Result};

const CDF_PANELS: usize = 64;
const CDF_TOL: f64 = 1e-12;
/// Tail mass left outside the computational window of an untruncated law.
pub const REFERENCE_TAIL: f64 = 1e-12;

/// Shape of a one-dimensional probability law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionKind {
    Uniform,
    /// Beta law stretched onto the support interval.
    Beta { alpha: f64, beta: f64 },
    /// Gamma law located at the lower end of the support, `rate` is the
    /// inverse scale.
    Gamma { shape: f64, rate: f64 },
    Normal { mean: f64, std_dev: f64 },
}

/// A probability law on a closed interval with density and CDF.
///
/// Densities are normalized numerically. Truncated laws are renormalized over
/// their window; laws built with the `*_reference` constructors keep the
/// normalization of the untruncated law, so their window carries a mass of
/// `1 - REFERENCE_TAIL` (or `1 - 2 REFERENCE_TAIL` for the normal law).
#[derive(Debug, Clone)]
pub struct Distribution {
    kind: DistributionKind,
    lower: f64,
    upper: f64,
    /// Offset subtracted from the log density to keep values O(1).
    log_offset: f64,
    /// Inverse of the total unnormalized mass.
    scale: f64,
    cumulative: Vec<f64>,
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        Ok(Self::assemble(DistributionKind::Uniform, a, b, 0.0, None))
    }

    /// Beta(alpha, beta) on [a, b]. Shape parameters below one give
    /// unbounded densities and are rejected.
    pub fn beta(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        if !(alpha >= 1.0 && beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "beta shape parameters must be finite and >= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::assemble(DistributionKind::Beta { alpha, beta }, a, b, 0.0, None))
    }

    /// Gamma(shape, rate) shifted to start at `a`, truncated to [a, upper] and
    /// renormalized there.
    pub fn truncated_gamma(shape: f64, rate: f64, a: f64, upper: f64) -> Result<Self> {
        check_interval(a, upper)?;
        check_gamma(shape, rate)?;
        let kind = DistributionKind::Gamma { shape, rate };
        Ok(Self::assemble(kind, a, upper, gamma_log_offset(shape, rate), None))
    }

    /// Normal(mean, std_dev^2) truncated to [c, d] and renormalized there.
    pub fn truncated_normal(mean: f64, std_dev: f64, c: f64, d: f64) -> Result<Self> {
        check_interval(c, d)?;
        check_normal(mean, std_dev)?;
        Ok(Self::assemble(DistributionKind::Normal { mean, std_dev }, c, d, 0.0, None))
    }

    /// Untruncated Gamma(shape, rate) located at `a`, restricted for
    /// computation to [a, q] with q its `1 - REFERENCE_TAIL` quantile.
    pub fn gamma_reference(shape: f64, rate: f64, a: f64) -> Result<Self> {
        check_gamma(shape, rate)?;
        let kind = DistributionKind::Gamma { shape, rate };
        let log_offset = gamma_log_offset(shape, rate);
        let far = a + 2.0 * (shape + 40.0 + 10.0 * shape.sqrt()) / rate;
        let g = |x: f64| unnormalized(kind, a, far, log_offset, x);
        let total = integrate_adaptive(g, a, far, 1e-15);
        // bisection on the upper tail mass
        let (mut lo, mut hi) = (a, far);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let tail = integrate_adaptive(g, mid, far, 1e-18) / total;
            if tail > REFERENCE_TAIL {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        Ok(Self::assemble(kind, a, hi, log_offset, Some(total)))
    }

    /// Untruncated Normal(mean, std_dev^2) restricted for computation to the
    /// central window leaving `REFERENCE_TAIL` in each tail.
    pub fn normal_reference(mean: f64, std_dev: f64) -> Result<Self> {
        check_normal(mean, std_dev)?;
        let kind = DistributionKind::Normal { mean, std_dev };
        let total = std_dev * (2.0 * std::f64::consts::PI).sqrt();
        let far = mean + 12.0 * std_dev;
        let g = |x: f64| unnormalized(kind, mean, far, 0.0, x);
        let (mut lo, mut hi) = (mean, far);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let tail = integrate_adaptive(g, mid, far, 1e-18) / total;
            if tail > REFERENCE_TAIL {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        let half = hi - mean;
        Ok(Self::assemble(kind, mean - half, mean + half, 0.0, Some(total)))
    }

    fn assemble(
        kind: DistributionKind,
        lower: f64,
        upper: f64,
        log_offset: f64,
        full_mass: Option<f64>,
    ) -> Self {
        let width = (upper - lower) / CDF_PANELS as f64;
        let g = |x: f64| unnormalized(kind, lower, upper, log_offset, x);
        let mut panels = Vec::with_capacity(CDF_PANELS);
        let edge = |i: usize| if i == CDF_PANELS { upper } else { lower + i as f64 * width };
        for i in 0..CDF_PANELS {
            let (a, b) = (edge(i), edge(i + 1));
            panels.push(match kind {
                DistributionKind::Uniform => b - a,
                _ => integrate_adaptive(g, a, b, CDF_TOL * 1e-3),
            });
        }
        let window_mass = match kind {
            DistributionKind::Uniform => upper - lower,
            _ => panels.iter().sum(),
        };
        let total = full_mass.unwrap_or(window_mass);
        let scale = 1.0 / total;
        let mut cumulative = Vec::with_capacity(CDF_PANELS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in &panels {
            acc += p;
            cumulative.push(acc * scale);
        }
        if full_mass.is_none() {
            *cumulative.last_mut().unwrap() = 1.0;
        }
        Self {
            kind,
            lower,
            upper,
            log_offset,
            scale,
            cumulative,
        }
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Computational support [lower, upper].
    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Probability mass carried by the whole support (1 for proper laws).
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        self.scale * unnormalized(self.kind, self.lower, self.upper, self.log_offset, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return self.total_mass();
        }
        if self.kind == DistributionKind::Uniform {
            return (x - self.lower) * self.scale;
        }
        let width = (self.upper - self.lower) / CDF_PANELS as f64;
        let i = (((x - self.lower) / width) as usize).min(CDF_PANELS - 1);
        let start = self.lower + i as f64 * width;
        let g = |y: f64| unnormalized(self.kind, self.lower, self.upper, self.log_offset, y);
        self.cumulative[i] + self.scale * integrate_adaptive(g, start, x, CDF_TOL * 1e-3)
    }

    /// Mass of the sub-interval [a, b].
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    /// Inverse CDF for `p` in [0, 1], relative to the mass of the support.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p.clamp(0.0, 1.0) * self.total_mass();
        if target <= 0.0 {
            return self.lower;
        }
        if target >= self.total_mass() {
            return self.upper;
        }
        if self.kind == DistributionKind::Uniform {
            return (self.lower + target * (self.upper - self.lower)).min(self.upper);
        }
        let width = (self.upper - self.lower) / CDF_PANELS as f64;
        let i = self.cumulative.partition_point(|&c| c <= target).clamp(1, CDF_PANELS) - 1;
        let mut lo = self.lower + i as f64 * width;
        let mut hi = if i + 1 == CDF_PANELS { self.upper } else { lo + width };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.cdf(x) - target;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.density(x);
            let newton = if d > 0.0 { x - f / d } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * hi.abs() {
                return next;
            }
            x = next;
        }
        x
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "support must be a bounded interval with a < b, got [{a}, {b}]"
        )))
    }
}

fn check_gamma(shape: f64, rate: f64) -> Result<()> {
    if shape >= 1.0 && rate > 0.0 && shape.is_finite() && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "gamma needs shape >= 1 and rate > 0, got ({shape}, {rate})"
        )))
    }
}

fn check_normal(mean: f64, std_dev: f64) -> Result<()> {
    if mean.is_finite() && std_dev > 0.0 && std_dev.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "normal needs finite mean and positive std_dev, got ({mean}, {std_dev})"
        )))
    }
}

fn gamma_log_offset(shape: f64, rate: f64) -> f64 {
    if shape > 1.0 {
        let mode = (shape - 1.0) / rate;
        (shape - 1.0) * mode.ln() - rate * mode
    } else {
        0.0
    }
}

fn unnormalized(kind: DistributionKind, lower: f64, upper: f64, log_offset: f64, x: f64) -> f64 {
    match kind {
        DistributionKind::Uniform => 1.0,
        DistributionKind::Beta { alpha, beta } => {
            let t = ((x - lower) / (upper - lower)).clamp(0.0, 1.0);
            t.powf(alpha - 1.0) * (1.0 - t).powf(beta - 1.0)
        }
        DistributionKind::Gamma { shape, rate } => {
            let y = x - lower;
            if y <= 0.0 {
                return if shape == 1.0 { (-log_offset).exp() } else { 0.0 };
            }
            ((shape - 1.0) * y.ln() - rate * y - log_offset).exp()
        }
        DistributionKind::Normal { mean, std_dev } => {
            let z = (x - mean) / std_dev;
            (-0.5 * z * z).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn riemann_mass(d: &Distribution, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| d.density(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn densities_integrate_to_one() {
        let laws = [
            Distribution::uniform(340.0, 460.0).unwrap(),
            Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap(),
            Distribution::truncated_gamma(10.0, 0.1, 340.0, 920.0).unwrap(),
            Distribution::truncated_normal(2.5, 0.125, 1.4, 3.6).unwrap(),
        ];
        for d in &laws {
            let (a, b) = d.support();
            let m = integrate_adaptive(|x| d.density(x), a, b, 1e-15);
            assert!((m - 1.0).abs() < 1e-12, "{:?}: {m}", d.kind());
            assert!((d.cdf(b) - 1.0).abs() < 1e-12);
            assert_eq!(d.cdf(a), 0.0);
        }
    }

    #[test]
    fn beta_density_matches_closed_form() {
        // Beta(2,5) on [0,1]: 30 t (1-t)^4
        let d = Distribution::beta(2.0, 5.0, 0.0, 1.0).unwrap();
        for t in [0.05, 0.2, 0.5, 0.9] {
            let exact = 30.0 * t * (1.0_f64 - t).powi(4);
            assert!((d.density(t) - exact).abs() < 1e-13);
        }
        // closed-form CDF of Beta(2,5)
        let cdf = |t: f64| 1.0 - (1.0 - t).powi(6) - 6.0 * t * (1.0 - t).powi(5);
        for t in [0.1, 0.3, 0.5, 0.77] {
            assert!((d.cdf(t) - cdf(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_midpoint_mass_matches_riemann_oracle() {
        let d = Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap();
        let oracle = riemann_mass(&d, 340.0, 400.0, 1_000_000);
        assert!((d.cdf(400.0) - oracle).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let laws = [
            Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap(),
            Distribution::truncated_gamma(10.0, 0.1, 340.0, 920.0).unwrap(),
            Distribution::truncated_normal(2.5, 0.125, 1.4, 3.6).unwrap(),
        ];
        for d in &laws {
            for p in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999] {
                let x = d.quantile(p);
                assert!((d.cdf(x) - p).abs() < 1e-12, "{:?} p={p}", d.kind());
            }
        }
    }

    #[test]
    fn gamma_reference_window_leaves_tiny_tail() {
        let d = Distribution::gamma_reference(10.0, 0.1, 340.0).unwrap();
        let (a, q) = d.support();
        assert_eq!(a, 340.0);
        assert!((d.total_mass() - (1.0 - REFERENCE_TAIL)).abs() < 1e-14);
        // the truncation at 920 used by the solver sits beyond the window
        assert!(q < 920.0 && q > 700.0, "q = {q}");
        let mean = integrate_adaptive(|x| x * d.density(x), a, q, 1e-12);
        assert!((mean - (340.0 + 100.0)).abs() < 1e-8);
    }

    #[test]
    fn normal_reference_window_is_symmetric() {
        let d = Distribution::normal_reference(2.5, 0.125).unwrap();
        let (c, e) = d.support();
        assert!((c + e - 5.0).abs() < 1e-12);
        assert!((d.total_mass() - (1.0 - 2.0 * REFERENCE_TAIL)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::uniform(0.0, f64::INFINITY).is_err());
        assert!(Distribution::beta(0.5, 2.0, 0.0, 1.0).is_err());
        assert!(Distribution::truncated_gamma(10.0, -1.0, 0.0, 1.0).is_err());
        assert!(Distribution::truncated_normal(0.0, 0.0, -1.0, 1.0).is_err());
    }
}
