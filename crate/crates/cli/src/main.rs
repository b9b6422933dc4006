//! `mixdiff` command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mixdiff::coeffs::{CoeffField, MixedDerivative};
use mixdiff::derivative::DerivativeExpansion;
use mixdiff::experiments::{
    convergence_sweep, geometric_range, run_table, source_coeffs, to_csv, Builtin, CoeffSource,
    ExperimentPreset, SweepNoise, SweepSpec,
};
use mixdiff::method::{self, DomainShape, MethodConfig};
use mixdiff::metrics::{self, uniform_grid, ErrorReport, DEFAULT_SUP_GRID};
use mixdiff::noise::{perturb, NoiseSpec};
use mixdiff::{eval_phi_row, par};

#[derive(Parser)]
#[command(name = "mixdiff", version, about = "Mixed derivatives from noisy Legendre coefficients")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate f^(r,r) and sample it on a grid.
    Differentiate(DifferentiateArgs),
    /// Run a table preset and write its CSV.
    Experiment(ExperimentArgs),
    /// Sweep noise levels and fit the error rate.
    Convergence(ConvergenceArgs),
    /// Sample the r-th derivative of one basis polynomial.
    Basis(BasisArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinArg {
    F1,
    F2,
}

impl From<BuiltinArg> for Builtin {
    fn from(b: BuiltinArg) -> Self {
        match b {
            BuiltinArg::F1 => Builtin::F1,
            BuiltinArg::F2 => Builtin::F2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    #[value(alias = "hyperbolic")]
    Cross,
    #[value(alias = "square")]
    Box,
}

impl From<DomainArg> for DomainShape {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Cross => DomainShape::Cross,
            DomainArg::Box => DomainShape::Square,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    Gaussian,
    Projected,
}

#[derive(Args)]
struct ExponentArgs {
    /// Derivative order in each variable.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Smoothness index of the class.
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Noise norm exponent; `inf` is accepted.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Multiplier in the rule for n.
    #[arg(long = "constant", default_value_t = 1.0)]
    constant: f64,
    #[arg(long, value_enum, default_value_t = DomainArg::Cross)]
    domain: DomainArg,
}

#[derive(Args)]
struct DifferentiateArgs {
    /// Coefficient CSV with header `k,j,value`.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    coeffs: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<BuiltinArg>,
    #[command(flatten)]
    exponents: ExponentArgs,
    /// Noise level; picks n unless `--n` is given.
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed truncation size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trapezoid step for builtin coefficients (exact quadrature otherwise).
    #[arg(long, requires = "builtin")]
    h: Option<f64>,
    /// Output grid size per axis.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    preset: String,
    /// Seeds for stochastic presets.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, value_enum)]
    builtin: BuiltinArg,
    #[command(flatten)]
    exponents: ExponentArgs,
    /// Geometric noise grid `start:end:count`.
    #[arg(long)]
    deltas: String,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Projected)]
    noise: NoiseArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BasisArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

/// Bad flags or configuration; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Config errors from the library are usage errors too.
fn config<T>(r: mixdiff::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| match e {
        mixdiff::Error::Config(msg) => usage(msg),
        other => other.into(),
    })
}

fn open_output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn method_config(e: &ExponentArgs, delta: f64, n: Option<usize>) -> anyhow::Result<MethodConfig> {
    let mut cfg = MethodConfig::new(e.r, e.mu, delta)
        .with_exponents(e.s, e.p)
        .with_rule_constant(e.constant)
        .with_shape(e.domain.into());
    if let Some(n) = n {
        cfg = cfg.with_n(n);
    }
    config(cfg.validate())?;
    Ok(cfg)
}

fn noise_spec(kind: NoiseArg, delta: f64, p: f64, seed: u64) -> anyhow::Result<NoiseSpec> {
    let spec = match kind {
        NoiseArg::None => NoiseSpec::None,
        NoiseArg::Gaussian => NoiseSpec::GaussianRaw { delta, seed },
        NoiseArg::Projected => NoiseSpec::ProjectedLp { delta, p, seed },
    };
    config(spec.validate())?;
    Ok(spec)
}

fn check_grid(m: usize) -> anyhow::Result<()> {
    if m == 0 {
        return Err(usage("--grid must be at least 1"));
    }
    Ok(())
}

fn print_report(report: &ErrorReport) {
    eprintln!("l2_error = {:.6e}", report.l2_error);
    eprintln!("sup_error = {:.6e}", report.sup_error);
    eprintln!("wall_time = {:.3}s", report.wall_time);
}

fn differentiate(args: DifferentiateArgs) -> anyhow::Result<()> {
    check_grid(args.grid)?;
    let delta = match (args.delta, args.n) {
        (Some(d), _) => d,
        (None, Some(_)) => 0.0,
        (None, None) => return Err(usage("either --delta or --n is required")),
    };
    if args.noise != NoiseArg::None && args.delta.is_none() {
        return Err(usage("--noise needs --delta"));
    }
    let cfg = method_config(&args.exponents, delta, args.n)?;
    let noise = noise_spec(args.noise, delta, cfg.p, args.seed)?;
    if let Some(h) = args.h {
        config(mixdiff::coeffs::conforming_steps(h))?;
    }
    let domain = config(cfg.domain())?;
    let n = cfg.resolve_n()?;
    let start = std::time::Instant::now();

    let builtin = args.builtin.map(Builtin::from);
    let coeffs = match (&args.coeffs, builtin) {
        (Some(path), _) => CoeffField::load_csv(path)
            .with_context(|| format!("cannot read coefficients from {}", path.display()))?,
        (None, Some(b)) => {
            let (k, j) = domain.degree_bounds();
            let source = match args.h {
                Some(h) => CoeffSource::Trapezoid { h },
                None => CoeffSource::Exact,
            };
            source_coeffs(b.function(), source, k, j)?
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let data = perturb(&coeffs.restrict_to(&domain), &noise)?;
    let approx = method::run(&data, &cfg)?;
    eprintln!("n = {n}");
    eprintln!("card = {}", approx.information_count);

    let grid = uniform_grid(args.grid);
    let values = approx.evaluate_tensor(&grid, &grid)?;
    let mut out = open_output(args.out.as_ref())?;
    writeln!(out, "t,tau,value")?;
    for (i, t) in grid.iter().enumerate() {
        for (j, tau) in grid.iter().enumerate() {
            writeln!(out, "{t},{tau},{:.16e}", values[i * grid.len() + j])?;
        }
    }
    out.flush()?;

    if let Some(b) = builtin {
        let reference = MixedDerivative {
            function: b.function(),
            r: cfg.r,
        };
        let l2_error =
            metrics::l2_error(&approx, &reference, metrics::default_l2_order(&approx.series))?;
        let sup_error = metrics::sup_error(&approx, &reference, DEFAULT_SUP_GRID)?;
        print_report(&ErrorReport {
            l2_error,
            sup_error,
            n_used: n,
            information_count: approx.information_count,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let preset = config(ExperimentPreset::by_name(&args.preset, args.seeds))?;
    config(preset.validate())?;
    let rows = run_table(&preset)?;
    let mut out = open_output(args.out.as_ref())?;
    out.write_all(to_csv(&rows).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn parse_range(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, count] = parts.as_slice() else {
        return Err(usage(format!("--deltas {spec:?} is not start:end:count")));
    };
    let parse = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("bad number {s:?} in --deltas")));
    let count: usize = count
        .parse()
        .map_err(|_| usage(format!("bad count {count:?} in --deltas")))?;
    config(geometric_range(parse(start)?, parse(end)?, count))
}

fn convergence(args: ConvergenceArgs) -> anyhow::Result<()> {
    let deltas = parse_range(&args.deltas)?;
    let e = &args.exponents;
    for &d in &deltas {
        method_config(e, d, None)?;
    }
    let mut spec = SweepSpec::new(
        args.builtin.into(),
        e.mu,
        e.r,
        deltas,
        (1..=args.seeds).collect(),
    );
    spec.s = e.s;
    spec.p = e.p;
    spec.rule_constant = e.constant;
    spec.shape = e.domain.into();
    spec.noise = match args.noise {
        NoiseArg::None => SweepNoise::None,
        NoiseArg::Gaussian => SweepNoise::GaussianRaw,
        NoiseArg::Projected => SweepNoise::ProjectedLp,
    };
    let result = config(convergence_sweep(&spec))?;
    match &args.out {
        Some(path) => std::fs::write(path, result.to_csv())
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{}", result.to_csv()),
    }
    println!(
        "slope {:.6} theoretical {:.6} sup_slope {:.6}",
        result.slope, result.theoretical_exponent, result.sup_slope
    );
    Ok(())
}

fn basis(args: BasisArgs) -> anyhow::Result<()> {
    check_grid(args.grid)?;
    let mut unit = vec![0.0; args.k + 1];
    unit[args.k] = 1.0;
    let expansion = DerivativeExpansion::new(args.r, args.k).apply(&unit)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "t,value")?;
    for t in uniform_grid(args.grid) {
        let value: f64 = if expansion.is_empty() {
            0.0
        } else {
            let row = eval_phi_row(expansion.len() - 1, t)?;
            expansion.iter().zip(&row).map(|(a, b)| a * b).sum()
        };
        writeln!(out, "{t},{value:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        par::set_threads(k);
    }
    let result = match cli.command {
        Command::Differentiate(a) => differentiate(a),
        Command::Experiment(a) => experiment(a),
        Command::Convergence(a) => convergence(a),
        Command::Basis(a) => basis(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
