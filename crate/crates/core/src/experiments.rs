//! Built-in test functions, table presets and convergence sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use crate::coeffs::{
    exact_coeffs, reference_order, trapezoid_coeffs, BivariateFunction, CoeffField, MixedDerivative,
};
use crate::error::{Error, Result};
use crate::method::{self, ApproxDerivative, DomainShape, MethodConfig};
use crate::metrics::{self, ErrorReport, DEFAULT_SUP_GRID};
use crate::noise::{perturb, NoiseSpec};
use crate::par;

/// Header shared by every table and sweep CSV.
pub const CSV_HEADER: &str = "delta,n,card,l2_error,sup_error,seed";

// ---------------------------------------------------------------------------
// Test functions

/// Normalizing constant of the spline example.
pub const SPLINE_SCALE: f64 = 754.0;
/// Normalizing constant of the analytic example.
pub const WAVE_SCALE: f64 = 43_940_129.0;

/// Monomial coefficients (degree 0..=8) of the spline on `[-1, 0)`.
const SPLINE_LEFT: [f64; 9] = [
    0.0,
    0.0,
    -1.0 / 8.0,
    0.0,
    1.0 / 12.0,
    -1.0 / 20.0,
    0.0,
    1.0 / 42.0,
    -3.0 / 224.0,
];
/// Monomial coefficients (degree 0..=8) of the spline on `[0, 1]`.
const SPLINE_RIGHT: [f64; 9] = [
    0.0,
    0.0,
    -1.0 / 8.0,
    0.0,
    1.0 / 12.0,
    -1.0 / 20.0,
    0.0,
    1.0 / 45.0,
    -3.0 / 240.0,
];

/// `d^r/dt^r` of `sum c_i t^i` at `t`.
fn poly_derivative_at(coeffs: &[f64], r: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for i in (r..coeffs.len()).rev() {
        let falling: f64 = ((i - r + 1)..=i).map(|m| m as f64).product();
        acc = acc * t + coeffs[i] * falling;
    }
    acc
}

/// The one-dimensional spline factor (unnormalized), or its `r`-th derivative.
pub fn spline_1d(t: f64, r: usize) -> f64 {
    let coeffs = if t < 0.0 { &SPLINE_LEFT } else { &SPLINE_RIGHT };
    poly_derivative_at(coeffs, r, t)
}

/// `g(t) = (2 - (2t - 1)^2)^2` expanded in monomials.
const WAVE_POLY: [f64; 5] = {
    // u = 2t - 1, 2 - u^2 = 1 + 4t - 4t^2, squared:
    // 1 + 8t + 8t^2 - 32t^3 + 16t^4
    [1.0, 8.0, 8.0, -32.0, 16.0]
};

/// `g(t) = (2 - (2t - 1)^2)^2` or its `r`-th derivative.
pub fn wave_poly(t: f64, r: usize) -> f64 {
    poly_derivative_at(&WAVE_POLY, r, t)
}

/// `cos(4 tau)` or its `r`-th derivative.
pub fn wave_cos(tau: f64, r: usize) -> f64 {
    4f64.powi(r as i32) * (4.0 * tau + r as f64 * std::f64::consts::FRAC_PI_2).cos()
}

/// Spline example `F1(t, tau) = f(t) f(tau) / 754`.
pub fn f1(t: f64, tau: f64) -> f64 {
    spline_1d(t, 0) * spline_1d(tau, 0) / SPLINE_SCALE
}

/// `F1^(2,2)`.
pub fn f1_d22(t: f64, tau: f64) -> f64 {
    spline_1d(t, 2) * spline_1d(tau, 2) / SPLINE_SCALE
}

/// Analytic example `F2(t, tau) = (2 - (2t-1)^2)^2 cos(4 tau) / 43940129`.
pub fn f2(t: f64, tau: f64) -> f64 {
    wave_poly(t, 0) * wave_cos(tau, 0) / WAVE_SCALE
}

/// `F2^(2,2)`.
pub fn f2_d22(t: f64, tau: f64) -> f64 {
    wave_poly(t, 2) * wave_cos(tau, 2) / WAVE_SCALE
}

/// Piecewise-polynomial tensor spline with a breakpoint at 0 in each variable.
#[derive(Debug, Clone, Copy, Default)]
pub struct SplineProduct;

impl BivariateFunction for SplineProduct {
    fn eval(&self, t: f64, tau: f64) -> f64 {
        f1(t, tau)
    }

    fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0], vec![0.0])
    }

    fn factor_samples(&self, ts: &[f64], taus: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((
            ts.iter().map(|&t| spline_1d(t, 0) / SPLINE_SCALE).collect(),
            taus.iter().map(|&x| spline_1d(x, 0)).collect(),
        ))
    }

    fn mixed_derivative(&self, r: usize, t: f64, tau: f64) -> Option<f64> {
        Some(spline_1d(t, r) * spline_1d(tau, r) / SPLINE_SCALE)
    }
}

/// Polynomial-times-cosine analytic function.
#[derive(Debug, Clone, Copy, Default)]
pub struct WaveProduct;

impl BivariateFunction for WaveProduct {
    fn eval(&self, t: f64, tau: f64) -> f64 {
        f2(t, tau)
    }

    fn factor_samples(&self, ts: &[f64], taus: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((
            ts.iter().map(|&t| wave_poly(t, 0) / WAVE_SCALE).collect(),
            taus.iter().map(|&x| wave_cos(x, 0)).collect(),
        ))
    }

    fn mixed_derivative(&self, r: usize, t: f64, tau: f64) -> Option<f64> {
        Some(wave_poly(t, r) * wave_cos(tau, r) / WAVE_SCALE)
    }
}

/// Named built-in test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    F1,
    F2,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
        }
    }

    pub fn function(self) -> &'static (dyn BivariateFunction + Send) {
        match self {
            Self::F1 => &SplineProduct,
            Self::F2 => &WaveProduct,
        }
    }

    /// Smoothness index for which the class norm of the function is about 1.
    pub fn smoothness(self) -> f64 {
        match self {
            Self::F1 => 5.5,
            Self::F2 => 6.0,
        }
    }
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            other => Err(Error::Config(format!("unknown builtin function {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline

/// Where the input coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffSource {
    /// Gauss quadrature of order `2 * degree + 16` (effectively exact).
    Exact,
    /// Composite trapezoid rule with step `h`.
    Trapezoid { h: f64 },
}

/// Coefficients of `f` on `0..=k_max x 0..=j_max`.
pub fn source_coeffs<F: BivariateFunction + ?Sized>(
    f: &F,
    source: CoeffSource,
    k_max: usize,
    j_max: usize,
) -> Result<CoeffField> {
    match source {
        CoeffSource::Exact => exact_coeffs(f, k_max, j_max, reference_order(k_max.max(j_max))),
        CoeffSource::Trapezoid { h } => trapezoid_coeffs(f, h, k_max, j_max),
    }
}

/// Restricts `coeffs` to the domain of `config`, perturbs, runs the method
/// and measures the result against `reference`.
pub fn evaluate_cell<F: BivariateFunction + ?Sized>(
    coeffs: &CoeffField,
    config: &MethodConfig,
    noise: &NoiseSpec,
    reference: &F,
    sup_grid: usize,
) -> Result<(ApproxDerivative, ErrorReport)> {
    let start = Instant::now();
    let domain = config.domain()?;
    let data = perturb(&coeffs.restrict_to(&domain), noise)?;
    let approx = method::run(&data, config)?;
    let order = metrics::default_l2_order(&approx.series);
    let l2_error = metrics::l2_error(&approx, reference, order)?;
    let sup_error = metrics::sup_error(&approx, reference, sup_grid)?;
    let report = ErrorReport {
        l2_error,
        sup_error,
        n_used: approx.n,
        information_count: approx.information_count,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((approx, report))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

// ---------------------------------------------------------------------------
// Presets

/// Values a preset row is expected to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetValues {
    pub l2_error: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRow {
    pub delta: f64,
    pub n: usize,
    /// Trapezoid step; `None` for exact coefficients.
    pub h: Option<f64>,
    pub target: Option<TargetValues>,
    /// True for rows not taken from a published table.
    pub synthetic: bool,
}

/// How noise enters a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetNoise {
    /// Exact coefficients plus `delta * N(0,1)` per coefficient.
    Gaussian,
    /// Trapezoid-rule coefficients; the quadrature error is the noise.
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub function: Builtin,
    pub noise: PresetNoise,
    pub r: usize,
    pub mu: f64,
    pub shape: DomainShape,
    pub rows: Vec<PresetRow>,
    /// Seeds for stochastic presets; ignored otherwise.
    pub seeds: Vec<u64>,
    pub sup_grid: usize,
}

/// Trapezoid step closest to `h` that tiles `[-1, 1]`.
pub fn conforming_step(h: f64) -> f64 {
    2.0 / (2.0 / h).round()
}

fn row(delta: f64, n: usize, h: Option<f64>, l2: f64, sup: f64) -> PresetRow {
    PresetRow {
        delta,
        n,
        h,
        target: Some(TargetValues {
            l2_error: l2,
            sup_error: sup,
        }),
        synthetic: false,
    }
}

impl ExperimentPreset {
    /// Spline example with Gaussian coefficient noise, `seeds` seeds `1..=seeds`.
    pub fn table1(seeds: usize) -> Self {
        Self {
            name: "table1".into(),
            function: Builtin::F1,
            noise: PresetNoise::Gaussian,
            r: 2,
            mu: 5.5,
            shape: DomainShape::Cross,
            rows: vec![
                row(1e-6, 19, None, 1.1e-4, 1.2e-3),
                row(1e-7, 24, None, 2.73e-5, 3.4e-4),
                row(1e-8, 31, None, 6.7e-6, 5e-5),
            ],
            seeds: (1..=seeds as u64).collect(),
            sup_grid: DEFAULT_SUP_GRID,
        }
    }

    /// Spline example with trapezoid-rule coefficients.
    pub fn table2() -> Self {
        Self {
            name: "table2".into(),
            function: Builtin::F1,
            noise: PresetNoise::Trapezoid,
            r: 2,
            mu: 5.5,
            shape: DomainShape::Cross,
            rows: vec![
                // 1.16e-4 does not tile [-1,1]; 2/17241 is the nearest step that does.
                row(1e-6, 19, Some(conforming_step(1.16e-4)), 4.8e-5, 7.53e-4),
                row(1e-7, 24, Some(8e-5), 3.2e-5, 4.9e-4),
                row(1e-8, 31, Some(4e-5), 6.6e-6, 2.53e-5),
            ],
            seeds: Vec::new(),
            sup_grid: DEFAULT_SUP_GRID,
        }
    }

    /// Analytic example with trapezoid-rule coefficients.
    pub fn table3() -> Self {
        Self {
            name: "table3".into(),
            function: Builtin::F2,
            noise: PresetNoise::Trapezoid,
            r: 2,
            mu: 6.0,
            shape: DomainShape::Cross,
            rows: vec![
                row(1e-6, 11, Some(4e-4), 3.8e-5, 1.85e-4),
                row(1e-7, 18, Some(1e-4), 1e-6, 6.37e-6),
                row(1e-8, 25, Some(4e-5), 1.53e-7, 8.17e-7),
            ],
            seeds: Vec::new(),
            sup_grid: DEFAULT_SUP_GRID,
        }
    }

    /// Looks up a preset by name; `seeds` applies to stochastic presets.
    pub fn by_name(name: &str, seeds: Option<usize>) -> Result<Self> {
        match name {
            "table1" => Ok(Self::table1(seeds.unwrap_or(20))),
            "table2" => Ok(Self::table2()),
            "table3" => Ok(Self::table3()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected table1, table2 or table3)"
            ))),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.noise == PresetNoise::Gaussian
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !(r.delta > 0.0 && r.delta < 1.0) || r.n <= self.r {
                return Err(Error::Config(format!("invalid preset row {r:?}")));
            }
            if self.noise == PresetNoise::Trapezoid && r.h.is_none() {
                return Err(Error::Config(format!(
                    "trapezoid preset row at delta {} has no step",
                    r.delta
                )));
            }
        }
        if self.is_stochastic() && self.seeds.is_empty() && !self.rows.is_empty() {
            return Err(Error::Config("stochastic preset needs at least one seed".into()));
        }
        Ok(())
    }

    /// Method configuration for one row.
    pub fn config(&self, row: &PresetRow) -> MethodConfig {
        MethodConfig::new(self.r, self.mu, row.delta)
            .with_n(row.n)
            .with_shape(self.shape)
    }
}

/// Label of the last CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedTag {
    /// Deterministic row.
    None,
    Seed(u64),
    /// Median over all seeds of the same `delta`.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub delta: f64,
    pub n: usize,
    pub card: usize,
    pub l2_error: f64,
    pub sup_error: f64,
    pub seed: SeedTag,
}

impl TableRow {
    fn csv_line(&self) -> String {
        let seed = match self.seed {
            SeedTag::None => String::new(),
            SeedTag::Seed(s) => s.to_string(),
            SeedTag::Median => "median".to_string(),
        };
        format!(
            "{:e},{},{},{:.6e},{:.6e},{}",
            self.delta, self.n, self.card, self.l2_error, self.sup_error, seed
        )
    }
}

/// Rows followed by a header-first CSV rendering.
pub fn to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Runs every row of a preset. Stochastic presets yield one row per
/// `(delta, seed)` followed by a median row per `delta`.
pub fn run_table(preset: &ExperimentPreset) -> Result<Vec<TableRow>> {
    preset.validate()?;
    let function = preset.function.function();
    let reference = MixedDerivative {
        function,
        r: preset.r,
    };
    let mut out = Vec::new();
    for row in &preset.rows {
        let config = preset.config(row);
        let (k_max, j_max) = config.domain()?.degree_bounds();
        let source = match (preset.noise, row.h) {
            (PresetNoise::Trapezoid, Some(h)) => CoeffSource::Trapezoid { h },
            _ => CoeffSource::Exact,
        };
        let coeffs = source_coeffs(function, source, k_max, j_max)?;
        if preset.is_stochastic() {
            let cells = par::map_slice(&preset.seeds, |&seed| {
                let noise = NoiseSpec::GaussianRaw {
                    delta: row.delta,
                    seed,
                };
                evaluate_cell(&coeffs, &config, &noise, &reference, preset.sup_grid)
                    .map(|(_, rep)| (seed, rep))
            });
            let mut l2s = Vec::new();
            let mut sups = Vec::new();
            let mut card = 0;
            for cell in cells {
                let (seed, rep) = cell?;
                card = rep.information_count;
                l2s.push(rep.l2_error);
                sups.push(rep.sup_error);
                out.push(TableRow {
                    delta: row.delta,
                    n: rep.n_used,
                    card: rep.information_count,
                    l2_error: rep.l2_error,
                    sup_error: rep.sup_error,
                    seed: SeedTag::Seed(seed),
                });
            }
            out.push(TableRow {
                delta: row.delta,
                n: row.n,
                card,
                l2_error: median(&mut l2s),
                sup_error: median(&mut sups),
                seed: SeedTag::Median,
            });
        } else {
            let (_, rep) =
                evaluate_cell(&coeffs, &config, &NoiseSpec::None, &reference, preset.sup_grid)?;
            out.push(TableRow {
                delta: row.delta,
                n: rep.n_used,
                card: rep.information_count,
                l2_error: rep.l2_error,
                sup_error: rep.sup_error,
                seed: SeedTag::None,
            });
        }
    }
    Ok(out)
}

/// Cross versus full square on the same data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainComparison {
    pub delta: f64,
    pub n: usize,
    pub cross: ErrorReport,
    pub square: ErrorReport,
}

/// Runs every row of a deterministic preset with both domain shapes.
pub fn compare_domains(preset: &ExperimentPreset) -> Result<Vec<DomainComparison>> {
    preset.validate()?;
    if preset.is_stochastic() {
        return Err(Error::Config(
            "domain comparison needs a deterministic preset".into(),
        ));
    }
    let function = preset.function.function();
    let reference = MixedDerivative {
        function,
        r: preset.r,
    };
    let mut out = Vec::new();
    for row in &preset.rows {
        let cross_cfg = preset.config(row).with_shape(DomainShape::Cross);
        let square_cfg = preset.config(row).with_shape(DomainShape::Square);
        let (k_max, j_max) = square_cfg.domain()?.degree_bounds();
        let source = match row.h {
            Some(h) => CoeffSource::Trapezoid { h },
            None => CoeffSource::Exact,
        };
        let coeffs = source_coeffs(function, source, k_max, j_max)?;
        let (_, cross) =
            evaluate_cell(&coeffs, &cross_cfg, &NoiseSpec::None, &reference, preset.sup_grid)?;
        let (_, square) =
            evaluate_cell(&coeffs, &square_cfg, &NoiseSpec::None, &reference, preset.sup_grid)?;
        out.push(DomainComparison {
            delta: row.delta,
            n: row.n,
            cross,
            square,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Convergence sweeps

/// Noise used by a sweep; `delta` comes from the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepNoise {
    None,
    GaussianRaw,
    ProjectedLp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub function: Builtin,
    pub mu: f64,
    pub r: usize,
    pub s: f64,
    pub p: f64,
    pub deltas: Vec<f64>,
    pub noise: SweepNoise,
    pub seeds: Vec<u64>,
    pub rule_constant: f64,
    pub shape: DomainShape,
    pub sup_grid: usize,
}

impl SweepSpec {
    pub fn new(function: Builtin, mu: f64, r: usize, deltas: Vec<f64>, seeds: Vec<u64>) -> Self {
        Self {
            function,
            mu,
            r,
            s: 2.0,
            p: 2.0,
            deltas,
            noise: SweepNoise::ProjectedLp,
            seeds,
            rule_constant: 1.0,
            shape: DomainShape::Cross,
            sup_grid: DEFAULT_SUP_GRID,
        }
    }

    /// Exponent of `delta` in the `L2` error bound, logarithmic factors dropped:
    /// `(mu - 2r + 1/s - 1/2) / (mu - 1/p + 1/s)`.
    pub fn theoretical_exponent(&self) -> f64 {
        l2_rate_exponent(self.mu, self.r, self.s, self.p)
    }
}

/// `(mu - 2r + 1/s - 1/2) / (mu - 1/p + 1/s)`.
pub fn l2_rate_exponent(mu: f64, r: usize, s: f64, p: f64) -> f64 {
    (mu - 2.0 * r as f64 + 1.0 / s - 0.5) / (mu - 1.0 / p + 1.0 / s)
}

/// Median errors at one `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub delta: f64,
    pub n: usize,
    pub card: usize,
    pub median_l2: f64,
    pub median_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One row per `(delta, seed)`, `delta` descending.
    pub rows: Vec<TableRow>,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `ln(median L2 error)` against `ln(delta)`.
    pub slope: f64,
    /// Least-squares slope of `ln(median sup error)` against `ln(delta)`.
    pub sup_slope: f64,
    pub theoretical_exponent: f64,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        to_csv(&self.rows)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `count` values from `start` to `end`, equally spaced in `log10`.
pub fn geometric_range(start: f64, end: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > 0.0) || count == 0 {
        return Err(Error::Config(format!(
            "geometric range needs positive ends and count >= 1 (got {start}:{end}:{count})"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = (start.log10(), end.log10());
    Ok((0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect())
}

/// Runs the full pipeline for every `(delta, seed)` with the a priori `n`
/// and fits the empirical rate.
pub fn convergence_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.deltas.len() < 3 {
        return Err(Error::Config(format!(
            "a sweep needs at least 3 noise levels, got {}",
            spec.deltas.len()
        )));
    }
    let mut deltas = spec.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();
    let seeds: Vec<u64> = match spec.noise {
        SweepNoise::None => vec![0],
        _ if spec.seeds.is_empty() => {
            return Err(Error::Config("a noisy sweep needs at least one seed".into()))
        }
        _ => spec.seeds.clone(),
    };
    let function = spec.function.function();
    let reference = MixedDerivative {
        function,
        r: spec.r,
    };

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &delta in &deltas {
        let config = MethodConfig::new(spec.r, spec.mu, delta)
            .with_exponents(spec.s, spec.p)
            .with_rule_constant(spec.rule_constant)
            .with_shape(spec.shape);
        config.validate()?;
        let (k_max, j_max) = config.domain()?.degree_bounds();
        let coeffs = source_coeffs(function, CoeffSource::Exact, k_max, j_max)?;
        let cells = par::map_slice(&seeds, |&seed| {
            let noise = match spec.noise {
                SweepNoise::None => NoiseSpec::None,
                SweepNoise::GaussianRaw => NoiseSpec::GaussianRaw { delta, seed },
                SweepNoise::ProjectedLp => NoiseSpec::ProjectedLp {
                    delta,
                    p: spec.p,
                    seed,
                },
            };
            evaluate_cell(&coeffs, &config, &noise, &reference, spec.sup_grid)
                .map(|(_, rep)| (seed, rep))
        });
        let mut l2s = Vec::new();
        let mut sups = Vec::new();
        let (mut n, mut card) = (0, 0);
        for cell in cells {
            let (seed, rep) = cell?;
            n = rep.n_used;
            card = rep.information_count;
            l2s.push(rep.l2_error);
            sups.push(rep.sup_error);
            rows.push(TableRow {
                delta,
                n,
                card,
                l2_error: rep.l2_error,
                sup_error: rep.sup_error,
                seed: match spec.noise {
                    SweepNoise::None => SeedTag::None,
                    _ => SeedTag::Seed(seed),
                },
            });
        }
        points.push(SweepPoint {
            delta,
            n,
            card,
            median_l2: median(&mut l2s),
            median_sup: median(&mut sups),
        });
    }
    let log_delta: Vec<f64> = points.iter().map(|p| p.delta.ln()).collect();
    let log_l2: Vec<f64> = points.iter().map(|p| p.median_l2.ln()).collect();
    let log_sup: Vec<f64> = points.iter().map(|p| p.median_sup.ln()).collect();
    Ok(SweepResult {
        rows,
        points,
        slope: fit_slope(&log_delta, &log_l2),
        sup_slope: fit_slope(&log_delta, &log_sup),
        theoretical_exponent: spec.theoretical_exponent(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::smoothness_norm;
    use approx::assert_abs_diff_eq;

    /// Fourth-order central difference of `f` in one variable.
    fn d2_fd<G: Fn(f64) -> f64>(g: G, x: f64, h: f64) -> f64 {
        (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h) - g(x - 2.0 * h))
            / (12.0 * h * h)
    }

    #[test]
    fn f1_values() {
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert_abs_diff_eq!(f1_d22(0.0, 0.0), 1.0 / (16.0 * 754.0), epsilon = 1e-18);
        // hand-derived second derivatives of each branch
        let left = |t: f64| -0.25 + t * t - t.powi(3) + t.powi(5) - 0.75 * t.powi(6);
        let right = |t: f64| -0.25 + t * t - t.powi(3) + 14.0 / 15.0 * t.powi(5) - 0.7 * t.powi(6);
        for &t in &[-0.9, -0.3, 0.2, 0.95] {
            let expected = if t < 0.0 { left(t) } else { right(t) };
            assert_abs_diff_eq!(spline_1d(t, 2), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn f2_values() {
        assert_abs_diff_eq!(f2(0.5, 0.0), 4.0 / WAVE_SCALE, epsilon = 1e-20);
        // g'' = 48 u^2 - 32 with u = 2t - 1
        for &t in &[-1.0, -0.2, 0.5, 0.8] {
            let u = 2.0 * t - 1.0;
            assert_abs_diff_eq!(wave_poly(t, 2), 48.0 * u * u - 32.0, epsilon = 1e-12);
            assert_abs_diff_eq!(wave_poly(t, 0), (2.0 - u * u).powi(2), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(f2_d22(0.5, 0.0), 512.0 / WAVE_SCALE, epsilon = 1e-20);
    }

    /// Both test functions are rank one, `f = A(t) B(tau)`, so
    /// `f^(2,2)(t,tau) = d2_t f(t,tau*) * d2_tau f(t*,tau) / f(t*,tau*)` with
    /// one-dimensional stencils only.
    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-4;
        let pts = [-0.93, -0.51, -0.2, 0.07, 0.33, 0.68, 0.91];
        let (ts, taus) = (0.6, 0.1);
        let cases: [(fn(f64, f64) -> f64, fn(f64, f64) -> f64); 2] = [(f1, f1_d22), (f2, f2_d22)];
        for (func, d22) in cases {
            let scale = pts
                .iter()
                .flat_map(|&t| pts.iter().map(move |&tau| d22(t, tau).abs()))
                .fold(0.0, f64::max);
            for &t in &pts {
                for &tau in &pts {
                    let fd = d2_fd(|x| func(x, taus), t, h) * d2_fd(|y| func(ts, y), tau, h)
                        / func(ts, taus);
                    let exact = d22(t, tau);
                    assert!(
                        (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-2 * scale),
                        "({t},{tau}): {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn class_norms_are_about_one() {
        let c1 = exact_coeffs(&SplineProduct, 40, 40, 96).unwrap();
        let n1 = smoothness_norm(&c1, 2.0, 5.5).unwrap();
        assert!((n1 - 1.0).abs() < 0.2, "spline norm {n1}");
        let c2 = exact_coeffs(&WaveProduct, 30, 30, 64).unwrap();
        let n2 = smoothness_norm(&c2, 2.0, 6.0).unwrap();
        assert!((n2 - 1.0).abs() < 0.2, "wave norm {n2}");
    }

    #[test]
    fn derivative_norms_are_about_1e4() {
        let zero = crate::series::LegendreSeries2D::zero();
        for f in [Builtin::F1, Builtin::F2] {
            let d = MixedDerivative { function: f.function(), r: 2 };
            let norm = metrics::l2_error(&zero, &d, 64).unwrap();
            assert!(norm > 3e-5 && norm < 3e-4, "{f:?}: {norm}");
        }
    }

    #[test]
    fn exponent_examples() {
        assert_abs_diff_eq!(l2_rate_exponent(6.0, 2, 2.0, 2.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l2_rate_exponent(5.5, 2, 2.0, 2.0), 3.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_preset_gives_header_only() {
        let mut p = ExperimentPreset::table3();
        p.rows.clear();
        let rows = run_table(&p).unwrap();
        assert!(rows.is_empty());
        assert_eq!(to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn preset_lookup() {
        assert!(ExperimentPreset::by_name("bogus", None).is_err());
        assert_eq!(ExperimentPreset::by_name("table1", Some(5)).unwrap().seeds.len(), 5);
        let t2 = ExperimentPreset::table2();
        assert_abs_diff_eq!(t2.rows[0].h.unwrap(), 2.0 / 17241.0);
        assert!(crate::coeffs::conforming_steps(t2.rows[0].h.unwrap()).is_ok());
        for p in [ExperimentPreset::table1(3), t2, ExperimentPreset::table3()] {
            assert!(p.validate().is_ok());
            assert!(p.rows.iter().all(|r| !r.synthetic && r.target.is_some()));
        }
    }

    #[test]
    fn geometric_ranges() {
        let g = geometric_range(1e-5, 1e-9, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_abs_diff_eq!(g[2], 1e-7, epsilon = 1e-20);
        assert!(geometric_range(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn sweep_needs_three_levels() {
        let spec = SweepSpec::new(Builtin::F2, 6.0, 2, vec![1e-5, 1e-6], vec![1]);
        assert!(convergence_sweep(&spec).is_err());
    }

    #[test]
    fn noiseless_sweep_improves_with_smaller_delta() {
        let mut spec = SweepSpec::new(Builtin::F2, 6.0, 2, vec![1e-4, 1e-6, 1e-8, 1e-10], vec![]);
        spec.noise = SweepNoise::None;
        spec.sup_grid = 41;
        let res = convergence_sweep(&spec).unwrap();
        let errs: Vec<f64> = res.points.iter().map(|p| p.median_l2).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
        assert!(res.rows.windows(2).all(|w| w[0].delta >= w[1].delta));
    }
}
