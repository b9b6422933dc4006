//! Exact differentiation of Legendre expansions.
//!
//! The derivative of an orthonormal Legendre polynomial is again a finite
//! combination of lower-degree ones:
//!
//! ```text
//! phi_k'(t) = 2 sqrt(k + 1/2) * sum_{l < k, k + l odd} sqrt(l + 1/2) phi_l(t)
//! ```
//!
//! so differentiating a coefficient vector is a strictly lower-triangular
//! linear map in degree. It is applied implicitly, never materialized.

use crate::basis::norm_factor;
use crate::coeffs::CoeffField;
use crate::error::{Error, Result};
use crate::par;

/// Entry of the single-step derivative map: the coefficient of `phi_l` in
/// `phi_k'`.
pub fn step_coefficient(k: usize, l: usize) -> f64 {
    if l < k && (k + l) % 2 == 1 {
        2.0 * norm_factor(k) * norm_factor(l)
    } else {
        0.0
    }
}

/// Differentiates `sum_k a_k phi_k`, returning the coefficients `b_0..b_{K-1}`
/// of its derivative.
///
/// Uses running parity-split suffix sums, so the cost is linear in `K`.
pub fn mueller_step(a: &[f64]) -> Result<Vec<f64>> {
    if a.len() < 2 {
        if a.iter().any(|&v| v != 0.0) {
            return Err(Error::Domain(
                "derivative step needs coefficients up to degree >= 1".into(),
            ));
        }
        return Ok(Vec::new());
    }
    let top = a.len() - 1;
    let mut b = vec![0.0; top];
    // suffix[p] = sum over k > l with k % 2 == p of sqrt(k + 1/2) a_k
    let mut suffix = [0.0f64; 2];
    for l in (0..top).rev() {
        let k = l + 1;
        suffix[k % 2] += norm_factor(k) * a[k];
        b[l] = 2.0 * norm_factor(l) * suffix[(l + 1) % 2];
    }
    Ok(b)
}

/// The `r`-fold derivative map on expansions of degree at most `max_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivativeExpansion {
    pub order: usize,
    pub max_degree: usize,
}

impl DerivativeExpansion {
    pub fn new(order: usize, max_degree: usize) -> Self {
        Self { order, max_degree }
    }

    /// Coefficients (degrees `0..=max_degree - order`) of the `order`-th
    /// derivative of `sum a_k phi_k`. Returns an empty vector when every
    /// input degree is below the order.
    pub fn apply(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.max_degree + 1 {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                self.max_degree + 1,
                a.len()
            )));
        }
        apply_steps(a, self.order)
    }
}

fn apply_steps(a: &[f64], r: usize) -> Result<Vec<f64>> {
    if a.len() <= r {
        return Ok(Vec::new());
    }
    let mut cur = a.to_vec();
    for _ in 0..r {
        cur = mueller_step(&cur)?;
    }
    Ok(cur)
}

/// Coordinate direction of a bivariate expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// First variable, the `k` index.
    T,
    /// Second variable, the `j` index.
    Tau,
}

/// Dense row-major array with `rows x cols` entries.
pub(crate) fn differentiate_dense(
    data: &[f64],
    rows: usize,
    cols: usize,
    axis: Axis,
    r: usize,
) -> Result<(Vec<f64>, usize, usize)> {
    match axis {
        Axis::Tau => {
            if cols <= r {
                return Ok((Vec::new(), rows, 0));
            }
            let out_cols = cols - r;
            let lines: Vec<Result<Vec<f64>>> =
                par::map_range(rows, |k| apply_steps(&data[k * cols..(k + 1) * cols], r));
            let mut out = Vec::with_capacity(rows * out_cols);
            for line in lines {
                out.extend(line?);
            }
            Ok((out, rows, out_cols))
        }
        Axis::T => {
            if rows <= r {
                return Ok((Vec::new(), 0, cols));
            }
            let out_rows = rows - r;
            let lines: Vec<Result<Vec<f64>>> = par::map_range(cols, |j| {
                let column: Vec<f64> = (0..rows).map(|k| data[k * cols + j]).collect();
                apply_steps(&column, r)
            });
            let mut out = vec![0.0; out_rows * cols];
            for (j, line) in lines.into_iter().enumerate() {
                for (k, v) in line?.into_iter().enumerate() {
                    out[k * cols + j] = v;
                }
            }
            Ok((out, out_rows, cols))
        }
    }
}

/// Applies the derivative map `r` times along one axis of a coefficient field.
///
/// The degree bound along `axis` shrinks by `r`. If every stored degree along
/// `axis` is below `r` the derivative vanishes identically and an empty field
/// of degree zero along that axis is returned.
pub fn differentiate_axis(field: &CoeffField, axis: Axis, r: usize) -> Result<CoeffField> {
    if !field.is_finite() {
        return Err(Error::Domain("coefficient field contains non-finite values".into()));
    }
    let (rows, cols) = (field.k_max() + 1, field.j_max() + 1);
    let (data, out_rows, out_cols) = differentiate_dense(&field.to_dense(), rows, cols, axis, r)?;
    if out_rows == 0 || out_cols == 0 {
        let (k_max, j_max) = match axis {
            Axis::T => (0, field.j_max()),
            Axis::Tau => (field.k_max(), 0),
        };
        return Ok(CoeffField::zeros(k_max, j_max));
    }
    Ok(CoeffField::from_dense(out_rows - 1, out_cols - 1, &data))
}
