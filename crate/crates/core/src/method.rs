//! The truncation method and its parameter-choice rule.
//!
//! Given perturbed coefficients `<f^delta, phi_k phi_j>`, the approximation of
//! `f^(r,r)` is the finite sum
//!
//! ```text
//! D_n f^delta(t, tau) = sum_{(k,j) in Omega_n} <f^delta, phi_k phi_j> phi_k^(r)(t) phi_j^(r)(tau)
//! ```
//!
//! over the hyperbolic cross (or the full square) of size `n`. The sum is
//! re-expanded in the Legendre basis so it can be evaluated and measured
//! like any other series.

use crate::coeffs::CoeffField;
use crate::derivative::{differentiate_axis, Axis};
use crate::error::{Error, Result};
use crate::index::IndexDomain;
use crate::series::LegendreSeries2D;

/// Shape of the information domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainShape {
    /// Hyperbolic cross `k j <= r n - 1`, `r <= k, j <= n - 1`.
    Cross,
    /// Full square `[r, n] x [r, n]`.
    Square,
}

impl DomainShape {
    pub fn domain(self, r: usize, n: usize) -> Result<IndexDomain> {
        match self {
            Self::Cross => IndexDomain::cross(r, n),
            Self::Square => IndexDomain::square(r, n),
        }
    }
}

impl std::str::FromStr for DomainShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cross" | "hyperbolic" => Ok(Self::Cross),
            "box" | "square" => Ok(Self::Square),
            other => Err(Error::Config(format!("unknown domain shape {other:?}"))),
        }
    }
}

/// Everything needed to run the method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    /// Derivative order in each variable.
    pub r: usize,
    /// Smoothness index of the class.
    pub mu: f64,
    /// Summability exponent of the class, `1 <= s < inf`.
    pub s: f64,
    /// Exponent of the noise norm, `1 <= p <= inf`.
    pub p: f64,
    /// Noise level.
    pub delta: f64,
    /// Fixed truncation size; bypasses [`choose_n`] when set.
    pub n_override: Option<usize>,
    /// Multiplier in the a priori rule for `n`.
    pub rule_constant: f64,
    pub shape: DomainShape,
}

impl MethodConfig {
    /// Defaults: `s = p = 2`, rule constant 1, hyperbolic cross.
    pub fn new(r: usize, mu: f64, delta: f64) -> Self {
        Self {
            r,
            mu,
            s: 2.0,
            p: 2.0,
            delta,
            n_override: None,
            rule_constant: 1.0,
            shape: DomainShape::Cross,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n_override = Some(n);
        self
    }

    pub fn with_shape(mut self, shape: DomainShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_exponents(mut self, s: f64, p: f64) -> Self {
        self.s = s;
        self.p = p;
        self
    }

    pub fn with_rule_constant(mut self, c: f64) -> Self {
        self.rule_constant = c;
        self
    }

    /// Smallest admissible smoothness for the `L2` error bound, `2r - 1/s + 1/2`.
    pub fn l2_threshold(&self) -> f64 {
        2.0 * self.r as f64 - 1.0 / self.s + 0.5
    }

    /// Smallest admissible smoothness for the uniform error bound, `2r - 1/s + 3/2`.
    pub fn uniform_threshold(&self) -> f64 {
        self.l2_threshold() + 1.0
    }

    /// Whether the uniform-norm error bound applies to this configuration.
    pub fn supports_uniform_bound(&self) -> bool {
        self.mu > self.uniform_threshold()
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Config("derivative order r must be >= 1".into()));
        }
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return Err(Error::Config(format!("s = {} must satisfy 1 <= s < inf", self.s)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Config(format!("p = {} must satisfy 1 <= p <= inf", self.p)));
        }
        if !(self.mu > self.l2_threshold()) {
            return Err(Error::Config(format!(
                "smoothness mu = {} must exceed 2r - 1/s + 1/2 = {}",
                self.mu,
                self.l2_threshold()
            )));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta = {} must lie in [0, 1)", self.delta)));
        }
        if !(self.rule_constant > 0.0 && self.rule_constant.is_finite()) {
            return Err(Error::Config(format!(
                "rule constant {} must be positive",
                self.rule_constant
            )));
        }
        if let Some(n) = self.n_override {
            if n <= self.r {
                return Err(Error::Config(format!(
                    "n = {n} must exceed r = {}",
                    self.r
                )));
            }
        }
        Ok(())
    }

    /// The truncation size: `n_override`, or the a priori rule.
    pub fn resolve_n(&self) -> Result<usize> {
        match self.n_override {
            Some(n) => Ok(n),
            None => choose_n(self.delta, self.mu, self.p, self.s, self.rule_constant, self.r),
        }
    }

    pub fn domain(&self) -> Result<IndexDomain> {
        self.shape.domain(self.r, self.resolve_n()?)
    }
}

/// A priori truncation size
/// `n = ceil(c (delta^-1 ln^(1/p - 1/s)(1/delta))^(1 / (mu - 1/p + 1/s)))`,
/// never below `r + 2`.
pub fn choose_n(delta: f64, mu: f64, p: f64, s: f64, rule_constant: f64, r: usize) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("noise level {delta} must lie in (0, 1)")));
    }
    if !(p >= 1.0 && s >= 1.0) {
        return Err(Error::Domain(format!("exponents p = {p}, s = {s} must be >= 1")));
    }
    if !(rule_constant > 0.0 && rule_constant.is_finite()) {
        return Err(Error::Domain(format!("rule constant {rule_constant} must be positive")));
    }
    let (inv_p, inv_s) = (1.0 / p, 1.0 / s);
    let rate = mu - inv_p + inv_s;
    if !(rate > 0.0) {
        return Err(Error::Domain(format!(
            "mu - 1/p + 1/s = {rate} must be positive"
        )));
    }
    let log_factor = (1.0 / delta).ln().powf(inv_p - inv_s);
    let raw = rule_constant * (log_factor / delta).powf(1.0 / rate);
    // Absorb round-off so that e.g. 1.1 * 10 lands on 11, not 12.
    let n = (raw * (1.0 - 1e-12)).ceil();
    if !n.is_finite() || n > u32::MAX as f64 {
        return Err(Error::Domain(format!("truncation size {raw} is not representable")));
    }
    Ok((n as usize).max(r + 2))
}

/// Output of [`run`]: the re-expanded derivative approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxDerivative {
    pub series: LegendreSeries2D,
    pub config: MethodConfig,
    /// Truncation size actually used.
    pub n: usize,
    /// Number of coefficients the method read.
    pub information_count: usize,
}

impl ApproxDerivative {
    pub fn evaluate(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        self.series.evaluate(points)
    }

    pub fn evaluate_tensor(&self, ts: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        self.series.evaluate_tensor(ts, taus)
    }
}

impl AsRef<LegendreSeries2D> for ApproxDerivative {
    fn as_ref(&self) -> &LegendreSeries2D {
        &self.series
    }
}

impl AsRef<LegendreSeries2D> for LegendreSeries2D {
    fn as_ref(&self) -> &LegendreSeries2D {
        self
    }
}

/// Runs the truncation method on perturbed coefficients.
///
/// Entries outside the domain are ignored; entries missing inside it count
/// as zero. Differentiation is applied along `t` first, then `tau`.
pub fn run(field: &CoeffField, config: &MethodConfig) -> Result<ApproxDerivative> {
    config.validate()?;
    let n = config.resolve_n()?;
    let domain = config.shape.domain(config.r, n)?;
    let information_count = domain.cardinality();
    if information_count == 0 {
        return Err(Error::Domain(format!(
            "information domain for r = {}, n = {n} is empty",
            config.r
        )));
    }
    let masked = field.restrict_to(&domain);
    let d_t = differentiate_axis(&masked, Axis::T, config.r)?;
    let d_tt = differentiate_axis(&d_t, Axis::Tau, config.r)?;
    Ok(ApproxDerivative {
        series: LegendreSeries2D::from_field(&d_tt),
        config: *config,
        n,
        information_count,
    })
}

/// Plain evaluation helper for callers holding an [`ApproxDerivative`].
pub fn evaluate(approx: &ApproxDerivative, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    approx.evaluate(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::exact_coeffs;
    use crate::basis::phi_row;
    use approx::assert_abs_diff_eq;

    #[test]
    fn choose_n_examples() {
        assert_eq!(choose_n(1e-6, 6.0, 2.0, 2.0, 1.1, 2).unwrap(), 11);
        assert_eq!(choose_n(1e-6, 6.0, 2.0, 2.0, 1.0, 2).unwrap(), 10);
        // p = s: n depends on delta only through delta^(-1/mu)
        let n = choose_n(1e-12, 4.0, 3.0, 3.0, 1.0, 1).unwrap();
        assert_eq!(n, 1000);
    }

    #[test]
    fn choose_n_log_factor_and_floor() {
        // p < s: factor ln(1/delta)^(1/p - 1/s) > 1 pushes n up.
        let with_log = choose_n(1e-6, 6.0, 1.0, 2.0, 1.0, 2).unwrap();
        let raw = (((1e6f64).ln()).powf(0.5) * 1e6).powf(1.0 / 5.5);
        assert_eq!(with_log, raw.ceil() as usize);
        // never below r + 2
        assert_eq!(choose_n(0.5, 40.0, 2.0, 2.0, 1.0, 3).unwrap(), 5);
        // p = inf is accepted
        assert!(choose_n(1e-6, 6.0, f64::INFINITY, 2.0, 1.0, 2).is_ok());
    }

    #[test]
    fn choose_n_rejects_bad_input() {
        assert!(choose_n(0.0, 6.0, 2.0, 2.0, 1.0, 2).is_err());
        assert!(choose_n(1.0, 6.0, 2.0, 2.0, 1.0, 2).is_err());
        assert!(choose_n(1e-3, 0.2, 1.0, 2.0, 1.0, 2).is_err());
        assert!(choose_n(1e-3, 6.0, 2.0, 2.0, 0.0, 2).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MethodConfig::new(2, 4.0, 1e-6).validate().is_err());
        assert!(MethodConfig::new(2, 4.01, 1e-6).validate().is_ok());
        assert!(MethodConfig::new(0, 4.0, 1e-6).validate().is_err());
        assert!(MethodConfig::new(2, 6.0, 1e-6).with_n(2).validate().is_err());
        assert!(MethodConfig::new(2, 6.0, 1.5).validate().is_err());
        let c = MethodConfig::new(2, 5.5, 1e-6);
        assert!(c.supports_uniform_bound());
        assert!(!MethodConfig::new(2, 4.5, 1e-6).supports_uniform_bound());
    }

    #[test]
    fn phi2_phi2_gives_constant() {
        let field = CoeffField::from_entries([((2, 2), 1.0)]);
        let cfg = MethodConfig::new(2, 6.0, 0.0)
            .with_n(3)
            .with_shape(DomainShape::Square);
        let approx = run(&field, &cfg).unwrap();
        assert_eq!(approx.information_count, 4);
        let v = approx.evaluate(&[(0.3, -0.7), (1.0, 1.0), (-1.0, 0.2)]).unwrap();
        for x in v {
            assert_abs_diff_eq!(x, 22.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_field_gives_zero() {
        let cfg = MethodConfig::new(2, 6.0, 1e-6).with_n(8);
        let approx = run(&CoeffField::zeros(10, 10), &cfg).unwrap();
        for v in approx.evaluate(&[(0.1, 0.9), (-1.0, 1.0)]).unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn output_degrees_follow_shape() {
        let field = CoeffField::from_dense(30, 30, &vec![1e-3; 31 * 31]);
        for (shape, n, expect) in [(DomainShape::Cross, 11, 8), (DomainShape::Square, 11, 9)] {
            let cfg = MethodConfig::new(2, 6.0, 1e-6).with_n(n).with_shape(shape);
            let approx = run(&field, &cfg).unwrap();
            let (kt, ktau) = approx.series.degree_bounds();
            assert!(kt <= expect && ktau <= expect, "{shape:?}: {kt},{ktau}");
            assert_eq!(kt, expect);
        }
    }

    #[test]
    fn entries_outside_domain_are_ignored() {
        let f = |t: f64, tau: f64| (t + 2.0 * tau).sin() * 0.01;
        let base = exact_coeffs(&f, 20, 20, 48).unwrap();
        let cfg = MethodConfig::new(2, 6.0, 1e-6).with_n(9);
        let domain = cfg.domain().unwrap();
        let mut tampered = base.clone();
        for k in 0..=20 {
            for j in 0..=20 {
                if !domain.contains(k, j) {
                    tampered.insert(k, j, 1e3 * (k + j) as f64);
                }
            }
        }
        let a = run(&base, &cfg).unwrap();
        let b = run(&tampered, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sum_definition_matches_reexpansion() {
        // Direct evaluation of sum c_kj phi_k''(t) phi_j''(tau) via the basis
        // derivative computed by finite differences of the recurrence-based
        // phi row (step 1e-3, fourth-order stencil).
        let field = CoeffField::from_entries([((2, 3), 0.7), ((4, 2), -0.2), ((3, 3), 0.1)]);
        let cfg = MethodConfig::new(2, 6.0, 0.0).with_n(6).with_shape(DomainShape::Square);
        let approx = run(&field, &cfg).unwrap();
        let d2 = |k: usize, x: f64| {
            let h = 1e-3;
            let v = |y: f64| phi_row(k, y)[k];
            (-v(x + 2.0 * h) + 16.0 * v(x + h) - 30.0 * v(x) + 16.0 * v(x - h) - v(x - 2.0 * h))
                / (12.0 * h * h)
        };
        for &(t, tau) in &[(0.2, -0.4), (0.75, 0.1)] {
            let direct: f64 = field.iter().map(|((k, j), c)| c * d2(k, t) * d2(j, tau)).sum();
            let got = approx.evaluate(&[(t, tau)]).unwrap()[0];
            assert!((got - direct).abs() < 1e-5 * direct.abs().max(1.0));
        }
    }
}
