//! Orthonormal Legendre polynomials on `[-1,1]` and Gauss–Legendre rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Slack allowed on `|t| <= 1` before a point is rejected.
pub const DOMAIN_TOL: f64 = 1e-12;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Values `P_0(t)..P_{k_max}(t)` of the classical Legendre polynomials.
pub fn legendre_row(k_max: usize, t: f64) -> Vec<f64> {
    let mut row = Vec::with_capacity(k_max + 1);
    row.push(1.0);
    if k_max == 0 {
        return row;
    }
    row.push(t);
    for k in 1..k_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * row[k] - kf * row[k - 1]) / (kf + 1.0);
        row.push(next);
    }
    row
}

/// Normalization factor `sqrt(k + 1/2)` taking `P_k` to `phi_k`.
#[inline]
pub fn norm_factor(k: usize) -> f64 {
    (k as f64 + 0.5).sqrt()
}

/// Values `phi_0(t)..phi_{k_max}(t)` of the orthonormal Legendre polynomials
/// `phi_k = sqrt(k + 1/2) P_k`.
pub fn eval_phi_row(k_max: usize, t: f64) -> Result<Vec<f64>> {
    check_point(t)?;
    Ok(phi_row(k_max, t.clamp(-1.0, 1.0)))
}

/// Unchecked variant of [`eval_phi_row`] for callers that already validated `t`.
pub(crate) fn phi_row(k_max: usize, t: f64) -> Vec<f64> {
    let mut row = legendre_row(k_max, t);
    for (k, v) in row.iter_mut().enumerate() {
        *v *= norm_factor(k);
    }
    row
}

pub(crate) fn check_point(t: f64) -> Result<()> {
    if !(t.abs() <= 1.0 + DOMAIN_TOL) {
        return Err(Error::Domain(format!("point {t} lies outside [-1, 1]")));
    }
    Ok(())
}

/// A quadrature rule on `[-1,1]` (or a sub-interval, after [`QuadratureRule::mapped`]).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `G`-point Gauss–Legendre rule on `[-1,1]`.
    pub fn gauss(points: usize) -> Result<Self> {
        gauss_rule(points)
    }

    /// Gauss rule with `points` nodes on each panel `[breaks[i], breaks[i+1]]`.
    /// `breaks` must be strictly increasing.
    pub fn composite_gauss(breaks: &[f64], points: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "panel breaks must be strictly increasing with at least two entries".into(),
            ));
        }
        let base = gauss_rule(points)?;
        let mut nodes = Vec::with_capacity(points * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let panel = base.mapped(w[0], w[1]);
            nodes.extend(panel.nodes);
            weights.extend(panel.weights);
        }
        Ok(Self { nodes, weights })
    }

    /// Affine image of this rule on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `P_n(x)` and `P_{n-1}(x)` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `G`-point Gauss–Legendre rule on `[-1,1]`, nodes ascending.
///
/// Nodes are the roots of `P_G`, located by Newton iteration from the
/// Chebyshev-angle guesses `cos(pi (i + 3/4) / (G + 1/2))`. Only the
/// non-negative half is computed; the rest follows by symmetry.
pub fn gauss_rule(points: usize) -> Result<QuadratureRule> {
    if points == 0 {
        return Err(Error::Domain("a Gauss rule needs at least one node".into()));
    }
    if points == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let n = points;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre_pair(n, x);
            let dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!(
                "Gauss node {i} of a {n}-point rule"
            )));
        }
        // Odd rules have an exact zero in the middle.
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (p, p_prev) = legendre_pair(n, x);
        let dp = nf * (x * p - p_prev) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}
