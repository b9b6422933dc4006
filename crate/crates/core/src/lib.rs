//! Stable numerical differentiation of bivariate functions from noisy
//! Fourier–Legendre coefficients.
//!
//! The mixed derivative `f^(r,r)` on `[-1,1]²` is recovered by truncating the
//! Legendre expansion of the perturbed data to a hyperbolic cross (or, for
//! comparison, a full square) of indices and differentiating the resulting
//! finite sum exactly. The truncation level is the regularization parameter
//! and is chosen from the noise level and the smoothness of `f`.
//!
//! Module map:
//! - [`basis`]: orthonormal Legendre polynomials and Gauss–Legendre rules.
//! - [`derivative`]: exact differentiation of Legendre coefficient vectors.
//! - [`index`]: hyperbolic-cross, square and explicit index domains.
//! - [`coeffs`]: coefficient fields, quadrature projections, class norm, CSV.
//! - [`noise`]: seeded perturbation of coefficient fields.
//! - [`method`]: the truncation method and its parameter-choice rule.
//! - [`metrics`]: `L2(Q)` and uniform error measurement.
//! - [`experiments`]: built-in test functions, table presets, rate sweeps.

// `!(x >= y)` guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod coeffs;
pub mod derivative;
pub mod error;
pub mod experiments;
pub mod index;
pub mod method;
pub mod metrics;
pub mod noise;
pub mod par;
pub mod series;

pub use crate::basis::{eval_phi_row, gauss_rule, QuadratureRule};
pub use crate::coeffs::{BivariateFunction, CoeffField};
pub use crate::derivative::{differentiate_axis, mueller_step, Axis, DerivativeExpansion};
pub use crate::error::{Error, Result};
pub use crate::index::IndexDomain;
pub use crate::method::{choose_n, ApproxDerivative, DomainShape, MethodConfig};
pub use crate::metrics::{l2_error, sup_error, ErrorReport};
pub use crate::noise::{perturb, NoiseSpec};
pub use crate::series::LegendreSeries2D;
