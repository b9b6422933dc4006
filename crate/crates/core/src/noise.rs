//! Seeded perturbation of coefficient fields.
//!
//! Normal variates come from a ChaCha8 stream (a 64-bit-seeded,
//! counter-based generator) through the Box–Muller transform, consumed in
//! lexicographic `(k, j)` order of the stored entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::CoeffField;
use crate::error::{Error, Result};

/// How coefficients are perturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Independent `N(0, delta^2)` draws added to every stored entry.
    GaussianRaw { delta: f64, seed: u64 },
    /// A Gaussian vector rescaled so its `l_p` norm over the stored entries
    /// equals `delta` exactly. `p = f64::INFINITY` selects the max norm.
    ProjectedLp { delta: f64, p: f64, seed: u64 },
}

impl NoiseSpec {
    pub fn delta(&self) -> Option<f64> {
        match self {
            Self::None => None,
            Self::GaussianRaw { delta, .. } | Self::ProjectedLp { delta, .. } => Some(*delta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(delta) = self.delta() {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Domain(format!(
                    "noise level {delta} must lie in (0, 1)"
                )));
            }
        }
        if let Self::ProjectedLp { p, .. } = self {
            if !(*p >= 1.0) {
                return Err(Error::Domain(format!("norm exponent p = {p} must be >= 1")));
            }
        }
        Ok(())
    }
}

/// Standard normal stream: Box–Muller on ChaCha8 uniforms.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn take(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_normal()).collect()
    }
}

/// `l_p` norm of a sequence; `p = inf` gives the max norm.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Perturbation vector `xi` that [`perturb`] would add, in entry order.
pub fn noise_vector(len: usize, spec: &NoiseSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    match *spec {
        NoiseSpec::None => Ok(vec![0.0; len]),
        NoiseSpec::GaussianRaw { delta, seed } => Ok(NormalStream::new(seed)
            .take(len)
            .into_iter()
            .map(|z| delta * z)
            .collect()),
        NoiseSpec::ProjectedLp { delta, p, seed } => {
            let xi = NormalStream::new(seed).take(len);
            let norm = lp_norm(&xi, p);
            if len == 0 || norm == 0.0 {
                return Ok(vec![0.0; len]);
            }
            let scale = delta / norm;
            Ok(xi.into_iter().map(|z| z * scale).collect())
        }
    }
}

/// Adds seeded noise to every stored entry of `field`.
pub fn perturb(field: &CoeffField, spec: &NoiseSpec) -> Result<CoeffField> {
    if !field.is_finite() {
        return Err(Error::Domain("coefficient field contains non-finite values".into()));
    }
    let xi = noise_vector(field.len(), spec)?;
    let mut out = field.clone();
    for (v, e) in out.values_mut().zip(xi) {
        *v += e;
    }
    Ok(out)
}
