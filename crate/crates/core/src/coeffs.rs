//! Fourier–Legendre coefficient fields and the quadratures that produce them.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::basis::{phi_row, QuadratureRule};
use crate::error::{Error, Result};
use crate::index::IndexDomain;
use crate::par;

/// A real function on `Q = [-1,1]²`.
///
/// Implementations must be reentrant: projections evaluate them from many
/// threads at once.
pub trait BivariateFunction: Sync {
    fn eval(&self, t: f64, tau: f64) -> f64;

    /// Interior points where the function (or a low derivative) has a kink,
    /// per axis. Gauss projections split their panels there.
    fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        (Vec::new(), Vec::new())
    }

    /// For a rank-one function `f(t,tau) = a(t) b(tau)`, the samples of the
    /// two factors on the given abscissae. Projections use this to replace a
    /// tensor sum by a product of two one-dimensional sums.
    fn factor_samples(&self, _ts: &[f64], _taus: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// The exact mixed derivative `f^(r,r)(t,tau)`, when known.
    fn mixed_derivative(&self, _r: usize, _t: f64, _tau: f64) -> Option<f64> {
        None
    }
}

impl<F> BivariateFunction for F
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn eval(&self, t: f64, tau: f64) -> f64 {
        self(t, tau)
    }
}

/// Adapter exposing the known `(r,r)` derivative of `F` as a function.
///
/// Evaluates to `NaN` where the derivative is unknown.
pub struct MixedDerivative<'a, F: ?Sized> {
    pub function: &'a F,
    pub r: usize,
}

impl<F: BivariateFunction + ?Sized> BivariateFunction for MixedDerivative<'_, F> {
    fn eval(&self, t: f64, tau: f64) -> f64 {
        self.function
            .mixed_derivative(self.r, t, tau)
            .unwrap_or(f64::NAN)
    }

    fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        self.function.breakpoints()
    }
}

/// Sparse map `(k, j) -> <f, phi_k phi_j>`. Absent entries are zero.
///
/// `k_max`/`j_max` bound every stored index; they may exceed the largest
/// stored index (e.g. after masking).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoeffField {
    entries: BTreeMap<(usize, usize), f64>,
    k_max: usize,
    j_max: usize,
}

impl CoeffField {
    /// Empty field with the given degree bounds.
    pub fn zeros(k_max: usize, j_max: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            k_max,
            j_max,
        }
    }

    /// Field whose bounds are the largest indices present.
    pub fn from_entries<I: IntoIterator<Item = ((usize, usize), f64)>>(entries: I) -> Self {
        let mut field = Self::default();
        for ((k, j), v) in entries {
            field.insert(k, j, v);
        }
        field
    }

    /// Row-major dense array `data[k * (j_max + 1) + j]`.
    pub fn from_dense(k_max: usize, j_max: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), (k_max + 1) * (j_max + 1));
        let cols = j_max + 1;
        let entries = data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| ((i / cols, i % cols), *v))
            .collect();
        Self {
            entries,
            k_max,
            j_max,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let cols = self.j_max + 1;
        let mut data = vec![0.0; (self.k_max + 1) * cols];
        for (&(k, j), &v) in &self.entries {
            data[k * cols + j] = v;
        }
        data
    }

    /// Stores `value` at `(k, j)`, widening the bounds if needed. Returns the
    /// previous value.
    pub fn insert(&mut self, k: usize, j: usize, value: f64) -> Option<f64> {
        self.k_max = self.k_max.max(k);
        self.j_max = self.j_max.max(j);
        self.entries.insert((k, j), value)
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.entries.get(&(k, j)).copied().unwrap_or(0.0)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored entries in lexicographic `(k, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&kj, &v)| (kj, v))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.values().copied()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.entries.values_mut()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.values().all(|v| v.is_finite())
    }

    /// One entry (possibly zero) for every member of `domain`, nothing else.
    /// Bounds become the domain's degree bounds.
    pub fn restrict_to(&self, domain: &IndexDomain) -> Self {
        let (k_max, j_max) = domain.degree_bounds();
        let mut out = Self::zeros(k_max, j_max);
        for (k, j) in domain.members() {
            out.insert(k, j, self.get(k, j));
        }
        out
    }

    /// Sum of squared entries (the squared `L2(Q)` norm of the series).
    pub fn squared_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Writes `k,j,value` lines with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,j,value")?;
        for (&(k, j), &v) in &self.entries {
            writeln!(out, "{k},{j},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)?;
        buf.flush()?;
        Ok(())
    }

    /// Parses `k,j,value` lines. A first line whose first field is not
    /// numeric is a header; blank lines are skipped.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut field = Self::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if lineno == 1 && fields[0].parse::<f64>().is_err() {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: lineno, msg };
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            }
            let k: usize = fields[0]
                .parse()
                .map_err(|e| bad(format!("bad index {:?}: {e}", fields[0])))?;
            let j: usize = fields[1]
                .parse()
                .map_err(|e| bad(format!("bad index {:?}: {e}", fields[1])))?;
            let v: f64 = fields[2]
                .parse()
                .map_err(|e| bad(format!("bad value {:?}: {e}", fields[2])))?;
            if field.insert(k, j, v).is_some() {
                return Err(bad(format!("duplicate entry ({k},{j})")));
            }
        }
        Ok(field)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

const ROW_CHUNKS: usize = 256;

/// Tensor-product projection `sum_i sum_l wt_i wtau_l f(t_i,tau_l) phi_k(t_i) phi_j(tau_l)`.
///
/// Rows `t_i` are processed independently; the final sum over rows runs in
/// index order so the result does not depend on the thread count.
fn project<F: BivariateFunction + ?Sized>(
    f: &F,
    t_rule: &QuadratureRule,
    tau_rule: &QuadratureRule,
    k_max: usize,
    j_max: usize,
) -> CoeffField {
    let (kc, jc) = (k_max + 1, j_max + 1);
    let phi_table = |rule: &QuadratureRule, deg: usize| -> Vec<Vec<f64>> {
        par::map_slice(&rule.nodes, |&x| phi_row(deg, x))
    };
    let phi_t = phi_table(t_rule, k_max);
    let phi_tau = phi_table(tau_rule, j_max);

    if let Some((a, b)) = f.factor_samples(&t_rule.nodes, &tau_rule.nodes) {
        let moments = |samples: &[f64], rule: &QuadratureRule, table: &[Vec<f64>], deg: usize| {
            let mut m = vec![0.0; deg];
            for ((s, w), row) in samples.iter().zip(&rule.weights).zip(table) {
                let sw = s * w;
                for (acc, p) in m.iter_mut().zip(row) {
                    *acc += sw * p;
                }
            }
            m
        };
        let mt = moments(&a, t_rule, &phi_t, kc);
        let mtau = moments(&b, tau_rule, &phi_tau, jc);
        let data: Vec<f64> = mt
            .iter()
            .flat_map(|x| mtau.iter().map(move |y| x * y))
            .collect();
        return dense_field(k_max, j_max, data);
    }

    // Rows are grouped into a fixed number of contiguous chunks (independent of
    // the thread count); each chunk accumulates sequentially.
    let rows = t_rule.len();
    let chunk = rows.div_ceil(ROW_CHUNKS).max(1);
    let chunk_blocks: Vec<Vec<f64>> = par::map_range(rows.div_ceil(chunk), |c| {
        let mut block = vec![0.0; kc * jc];
        let mut partial = vec![0.0; jc];
        for i in c * chunk..((c + 1) * chunk).min(rows) {
            let t = t_rule.nodes[i];
            partial.iter_mut().for_each(|p| *p = 0.0);
            for ((&tau, &w), row) in tau_rule.nodes.iter().zip(&tau_rule.weights).zip(&phi_tau) {
                let fw = f.eval(t, tau) * w;
                for (acc, p) in partial.iter_mut().zip(row) {
                    *acc += fw * p;
                }
            }
            let wt = t_rule.weights[i];
            for (k, pk) in phi_t[i].iter().enumerate() {
                let scale = wt * pk;
                for (dst, src) in block[k * jc..(k + 1) * jc].iter_mut().zip(&partial) {
                    *dst += scale * src;
                }
            }
        }
        block
    });
    let mut data = vec![0.0; kc * jc];
    for block in &chunk_blocks {
        for (acc, v) in data.iter_mut().zip(block) {
            *acc += v;
        }
    }
    dense_field(k_max, j_max, data)
}

/// Dense field that keeps every entry, including exact zeros.
fn dense_field(k_max: usize, j_max: usize, data: Vec<f64>) -> CoeffField {
    let cols = j_max + 1;
    let entries = data
        .into_iter()
        .enumerate()
        .map(|(i, v)| ((i / cols, i % cols), v))
        .collect();
    CoeffField {
        entries,
        k_max,
        j_max,
    }
}

fn panel_breaks(interior: &[f64]) -> Vec<f64> {
    let mut breaks = vec![-1.0];
    let mut inner: Vec<f64> = interior
        .iter()
        .copied()
        .filter(|x| x.abs() < 1.0)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    breaks.extend(inner);
    breaks.push(1.0);
    breaks
}

/// Reference coefficients `<f, phi_k phi_j>` for `k <= k_max`, `j <= j_max` by
/// tensor Gauss–Legendre quadrature with `points` nodes per panel, panels
/// split at the function's breakpoints.
pub fn exact_coeffs<F: BivariateFunction + ?Sized>(
    f: &F,
    k_max: usize,
    j_max: usize,
    points: usize,
) -> Result<CoeffField> {
    let needed = k_max.max(j_max) + 1;
    if points < needed {
        return Err(Error::Precondition(format!(
            "quadrature order {points} is below max degree + 1 = {needed}"
        )));
    }
    let (bt, btau) = f.breakpoints();
    let t_rule = QuadratureRule::composite_gauss(&panel_breaks(&bt), points)?;
    let tau_rule = QuadratureRule::composite_gauss(&panel_breaks(&btau), points)?;
    Ok(project(f, &t_rule, &tau_rule, k_max, j_max))
}

/// Recommended Gauss order for [`exact_coeffs`] at a given maximal degree.
pub fn reference_order(max_degree: usize) -> usize {
    2 * max_degree + 16
}

/// Composite trapezoid rule on `[-1,1]` with `steps` equal sub-intervals.
pub fn trapezoid_rule(steps: usize) -> QuadratureRule {
    let h = 2.0 / steps as f64;
    let nodes = (0..=steps)
        .map(|i| -1.0 + 2.0 * i as f64 / steps as f64)
        .collect();
    let weights = (0..=steps)
        .map(|i| if i == 0 || i == steps { 0.5 * h } else { h })
        .collect();
    QuadratureRule { nodes, weights }
}

/// Number of trapezoid steps for grid spacing `h`, if `h` tiles `[-1,1]`.
pub fn conforming_steps(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::Domain(format!(
            "trapezoid step {h} must lie in (0, 0.1]"
        )));
    }
    let ratio = 2.0 / h;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio {
        return Err(Error::Domain(format!(
            "trapezoid step {h} does not divide [-1, 1] into whole steps"
        )));
    }
    Ok(steps as usize)
}

/// Coefficients approximated by the composite tensor trapezoid rule on the
/// uniform grid of spacing `h`.
pub fn trapezoid_coeffs<F: BivariateFunction + ?Sized>(
    f: &F,
    h: f64,
    k_max: usize,
    j_max: usize,
) -> Result<CoeffField> {
    let rule = trapezoid_rule(conforming_steps(h)?);
    Ok(project(f, &rule, &rule, k_max, j_max))
}

/// Truncated class norm `(sum (kbar jbar)^(s mu) |c_kj|^s)^(1/s)` over the
/// stored entries, with `kbar = max(1, k)`.
pub fn smoothness_norm(field: &CoeffField, s: f64, mu: f64) -> Result<f64> {
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::Config(format!("norm exponent s = {s} must be >= 1")));
    }
    let total: f64 = field
        .iter()
        .map(|((k, j), v)| {
            let weight = (k.max(1) as f64 * j.max(1) as f64).powf(s * mu);
            weight * v.abs().powf(s)
        })
        .sum();
    Ok(total.powf(1.0 / s))
}
