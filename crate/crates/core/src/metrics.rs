//! Error of an approximation against a reference function on `Q`.

use crate::basis::QuadratureRule;
use crate::coeffs::BivariateFunction;
use crate::error::{Error, Result};
use crate::par;
use crate::series::LegendreSeries2D;

/// Default resolution of the uniform grid used for sup errors.
pub const DEFAULT_SUP_GRID: usize = 201;

/// Errors and bookkeeping for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub sup_error: f64,
    pub n_used: usize,
    pub information_count: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl ErrorReport {
    /// `||g||_L2(Q) <= 2 ||g||_C` since `Q` has area 4. The grid sup can only
    /// under-estimate, so a small relative slack is allowed.
    pub fn is_consistent(&self) -> bool {
        self.l2_error <= 2.0 * self.sup_error * (1.0 + 1e-9) + 1e-300
    }
}

/// Smallest admissible Gauss order for an approximant of the given degree.
pub fn min_l2_order(series: &LegendreSeries2D) -> usize {
    let (kt, ktau) = series.degree_bounds();
    2 * kt.max(ktau) + 8
}

/// Default Gauss order for [`l2_error`].
pub fn default_l2_order(series: &LegendreSeries2D) -> usize {
    (min_l2_order(series) + 8).max(64)
}

fn axis_rule(interior: &[f64], points: usize) -> Result<QuadratureRule> {
    let mut breaks = vec![-1.0];
    let mut inner: Vec<f64> = interior.iter().copied().filter(|x| x.abs() < 1.0).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    breaks.extend(inner);
    breaks.push(1.0);
    QuadratureRule::composite_gauss(&breaks, points)
}

/// `||approx - reference||_L2(Q)` by tensor Gauss–Legendre quadrature with
/// `points` nodes per panel. Each axis is split at `0` and at the reference's
/// breakpoints, so piecewise references are integrated accurately.
pub fn l2_error<A, F>(approx: &A, reference: &F, points: usize) -> Result<f64>
where
    A: AsRef<LegendreSeries2D>,
    F: BivariateFunction + ?Sized,
{
    let series = approx.as_ref();
    let needed = min_l2_order(series);
    if points < needed {
        return Err(Error::Precondition(format!(
            "L2 quadrature order {points} is below 2 * degree + 8 = {needed}"
        )));
    }
    let (mut bt, mut btau) = reference.breakpoints();
    bt.push(0.0);
    btau.push(0.0);
    let t_rule = axis_rule(&bt, points)?;
    let tau_rule = axis_rule(&btau, points)?;
    let values = series.evaluate_tensor(&t_rule.nodes, &tau_rule.nodes)?;
    let cols = tau_rule.len();
    let row_sums: Vec<f64> = par::map_range(t_rule.len(), |i| {
        let t = t_rule.nodes[i];
        tau_rule
            .nodes
            .iter()
            .zip(&tau_rule.weights)
            .zip(&values[i * cols..(i + 1) * cols])
            .map(|((&tau, &w), &v)| {
                let d = v - reference.eval(t, tau);
                w * d * d
            })
            .sum::<f64>()
            * t_rule.weights[i]
    });
    let total: f64 = row_sums.iter().sum();
    Ok(total.max(0.0).sqrt())
}

/// Uniform grid of `m` points on `[-1,1]` including both ends (`[0]` for `m = 1`).
pub fn uniform_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m)
            .map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64)
            .collect(),
    }
}

/// `max |approx - reference|` over the uniform `m x m` grid (boundary
/// included). `m` must be odd and at least 3 so that `0` and `+-1` are nodes.
pub fn sup_error<A, F>(approx: &A, reference: &F, m: usize) -> Result<f64>
where
    A: AsRef<LegendreSeries2D>,
    F: BivariateFunction + ?Sized,
{
    if m < 3 || m % 2 == 0 {
        return Err(Error::Precondition(format!(
            "sup grid size {m} must be odd and >= 3"
        )));
    }
    let grid = uniform_grid(m);
    let values = approx.as_ref().evaluate_tensor(&grid, &grid)?;
    let row_max: Vec<f64> = par::map_range(m, |i| {
        let t = grid[i];
        grid.iter()
            .zip(&values[i * m..(i + 1) * m])
            .map(|(&tau, &v)| (v - reference.eval(t, tau)).abs())
            .fold(0.0, f64::max)
    });
    Ok(row_max.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoeffField;
    use approx::assert_abs_diff_eq;

    fn sample_series() -> LegendreSeries2D {
        LegendreSeries2D::from_field(&CoeffField::from_entries([
            ((0, 0), 0.3),
            ((2, 1), -1.1),
            ((5, 4), 0.25),
        ]))
    }

    #[test]
    fn identical_inputs_give_zero() {
        let s = sample_series();
        assert!(l2_error(&s, &s, 64).unwrap() < 1e-14);
        assert_eq!(sup_error(&s, &s, 201).unwrap(), 0.0);
    }

    #[test]
    fn zero_against_constant() {
        let zero = LegendreSeries2D::zero();
        let c = |_: f64, _: f64| -1.75;
        assert_abs_diff_eq!(l2_error(&zero, &c, 16).unwrap(), 3.5, epsilon = 1e-13);
        assert_abs_diff_eq!(sup_error(&zero, &c, 5).unwrap(), 1.75);
    }

    #[test]
    fn preconditions() {
        let s = sample_series();
        assert!(matches!(l2_error(&s, &s, 10), Err(Error::Precondition(_))));
        assert!(sup_error(&s, &s, 4).is_err());
        assert!(sup_error(&s, &s, 1).is_err());
    }

    #[test]
    fn boundary_is_on_grid() {
        let zero = LegendreSeries2D::zero();
        let spike = |t: f64, tau: f64| if t == 1.0 && tau == 1.0 { 5.0 } else { 0.0 };
        assert_eq!(sup_error(&zero, &spike, 3).unwrap(), 5.0);
        let g = uniform_grid(7);
        assert_eq!(g[3], 0.0);
    }

    #[test]
    fn order_stability() {
        let s = sample_series();
        let reference = |t: f64, tau: f64| (t * tau).cos() + t.abs();
        let a = l2_error(&s, &reference, 64).unwrap();
        let b = l2_error(&s, &reference, 80).unwrap();
        assert!((a - b).abs() / a < 1e-10);
    }
}
