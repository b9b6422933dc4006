use crate::basis::{check_point, phi_row};
use crate::coeffs::{BivariateFunction, CoeffField};
use crate::error::Result;
use crate::par;

/// A finite expansion `sum c_kj phi_k(t) phi_j(tau)` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSeries2D {
    coeffs: Vec<f64>,
    k_max: usize,
    j_max: usize,
}

impl LegendreSeries2D {
    pub fn from_field(field: &CoeffField) -> Self {
        Self {
            coeffs: field.to_dense(),
            k_max: field.k_max(),
            j_max: field.j_max(),
        }
    }

    pub fn zero() -> Self {
        Self {
            coeffs: vec![0.0],
            k_max: 0,
            j_max: 0,
        }
    }

    pub fn to_field(&self) -> CoeffField {
        CoeffField::from_dense(self.k_max, self.j_max, &self.coeffs)
    }

    pub fn degree_bounds(&self) -> (usize, usize) {
        (self.k_max, self.j_max)
    }

    pub fn coefficient(&self, k: usize, j: usize) -> f64 {
        if k > self.k_max || j > self.j_max {
            return 0.0;
        }
        self.coeffs[k * (self.j_max + 1) + j]
    }

    /// `sum_k phi_k(t) c_kj` for every `j`.
    fn contract_t(&self, row_t: &[f64]) -> Vec<f64> {
        let cols = self.j_max + 1;
        let mut out = vec![0.0; cols];
        for (k, pk) in row_t.iter().enumerate() {
            for (acc, c) in out.iter_mut().zip(&self.coeffs[k * cols..(k + 1) * cols]) {
                *acc += pk * c;
            }
        }
        out
    }

    fn value_unchecked(&self, t: f64, tau: f64) -> f64 {
        let partial = self.contract_t(&phi_row(self.k_max, t));
        let row_tau = phi_row(self.j_max, tau);
        partial.iter().zip(&row_tau).map(|(a, b)| a * b).sum()
    }

    pub fn value(&self, t: f64, tau: f64) -> Result<f64> {
        check_point(t)?;
        check_point(tau)?;
        Ok(self.value_unchecked(t.clamp(-1.0, 1.0), tau.clamp(-1.0, 1.0)))
    }

    /// Values at scattered points, in order.
    pub fn evaluate(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        for &(t, tau) in points {
            check_point(t)?;
            check_point(tau)?;
        }
        Ok(par::map_slice(points, |&(t, tau)| {
            self.value_unchecked(t.clamp(-1.0, 1.0), tau.clamp(-1.0, 1.0))
        }))
    }

    /// Values on the tensor grid `ts x taus`, row-major with `t` as the slow
    /// index. Basis rows are computed once per abscissa.
    pub fn evaluate_tensor(&self, ts: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        for &x in ts.iter().chain(taus) {
            check_point(x)?;
        }
        let tau_rows: Vec<Vec<f64>> =
            taus.iter().map(|&x| phi_row(self.j_max, x.clamp(-1.0, 1.0))).collect();
        let rows: Vec<Vec<f64>> = par::map_slice(ts, |&t| {
            let partial = self.contract_t(&phi_row(self.k_max, t.clamp(-1.0, 1.0)));
            tau_rows
                .iter()
                .map(|row| partial.iter().zip(row).map(|(a, b)| a * b).sum())
                .collect()
        });
        Ok(rows.into_iter().flatten().collect())
    }
}

impl BivariateFunction for LegendreSeries2D {
    /// Points outside `Q` are clamped onto it.
    fn eval(&self, t: f64, tau: f64) -> f64 {
        self.value_unchecked(t.clamp(-1.0, 1.0), tau.clamp(-1.0, 1.0))
    }
}
