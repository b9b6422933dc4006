//! Acceptance suite. Each criterion is its own test and prints one
//! `[PASS]`/`[FAIL]` line; run with `--nocapture` to see them.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixdiff::basis::{gauss_rule, legendre_row, norm_factor};
use mixdiff::coeffs::{exact_coeffs, CoeffField};
use mixdiff::derivative::DerivativeExpansion;
use mixdiff::experiments::{
    compare_domains, convergence_sweep, geometric_range, run_table, Builtin, ExperimentPreset,
    SeedTag, SweepSpec, TableRow,
};
use mixdiff::method::{self, DomainShape, MethodConfig};
use mixdiff::noise::{lp_norm, noise_vector, perturb, NoiseSpec};
use mixdiff::eval_phi_row;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {name} | {detail}");
}

fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value > 0.0 && value <= target * factor && value >= target / factor
}

fn deterministic_rows(rows: &[TableRow]) -> Vec<&TableRow> {
    rows.iter().filter(|r| r.seed == SeedTag::None).collect()
}

#[test]
fn criterion_1_table3_reproduction() {
    let start = Instant::now();
    let preset = ExperimentPreset::table3();
    let rows = run_table(&preset).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rows = deterministic_rows(&rows);
    assert_eq!(rows.len(), 3);
    let mut pass = elapsed < 120.0;
    let mut detail = Vec::new();
    for (row, spec) in rows.iter().zip(&preset.rows) {
        let target = spec.target.unwrap();
        assert_eq!(row.n, spec.n);
        let ok = within_factor(row.l2_error, target.l2_error, 5.0)
            && within_factor(row.sup_error, target.sup_error, 5.0);
        pass &= ok;
        detail.push(format!(
            "delta={:e}: L2 {:.3e} (target {:.3e}), C {:.3e} (target {:.3e})",
            row.delta, row.l2_error, target.l2_error, row.sup_error, target.sup_error
        ));
    }
    detail.push(format!("{elapsed:.2}s"));
    report(1, "analytic example, trapezoid data, factor 5", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_2_table2_reproduction() {
    let start = Instant::now();
    let preset = ExperimentPreset::table2();
    let rows = run_table(&preset).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rows = deterministic_rows(&rows);
    assert_eq!(rows.len(), 3);
    let mut pass = elapsed < 300.0;
    let mut detail = Vec::new();
    for (row, spec) in rows.iter().zip(&preset.rows) {
        let target = spec.target.unwrap();
        let ok = within_factor(row.l2_error, target.l2_error, 10.0)
            && within_factor(row.sup_error, target.sup_error, 10.0);
        pass &= ok;
        detail.push(format!(
            "delta={:e}: L2 {:.3e} (target {:.3e}), C {:.3e} (target {:.3e})",
            row.delta, row.l2_error, target.l2_error, row.sup_error, target.sup_error
        ));
    }
    detail.push(format!("{elapsed:.2}s"));
    report(2, "spline example, trapezoid data, factor 10", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_3_table1_reproduction() {
    let preset = ExperimentPreset::table1(20);
    let rows = run_table(&preset).unwrap();
    let medians: Vec<&TableRow> = rows.iter().filter(|r| r.seed == SeedTag::Median).collect();
    assert_eq!(medians.len(), 3);
    assert_eq!(rows.len(), 63);
    let mut pass = true;
    let mut detail = Vec::new();
    for (row, spec) in medians.iter().zip(&preset.rows) {
        let target = spec.target.unwrap();
        pass &= within_factor(row.l2_error, target.l2_error, 10.0);
        detail.push(format!(
            "delta={:e}: median L2 {:.3e} (target {:.3e})",
            row.delta, row.l2_error, target.l2_error
        ));
    }
    report(3, "spline example, Gaussian coefficient noise, 20 seeds, factor 10", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_4_orthonormality() {
    let start = Instant::now();
    let rule = gauss_rule(64).unwrap();
    let rows: Vec<Vec<f64>> = rule.nodes.iter().map(|&t| eval_phi_row(40, t).unwrap()).collect();
    let mut worst = 0.0f64;
    for k in 0..=40 {
        for l in 0..=40 {
            let inner: f64 = rows
                .iter()
                .zip(&rule.weights)
                .map(|(row, w)| w * row[k] * row[l])
                .sum();
            let expected = if k == l { 1.0 } else { 0.0 };
            worst = worst.max((inner - expected).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-10 && elapsed < 5.0;
    report(4, "orthonormality k,l <= 40, 64-point Gauss", pass, &format!("max deviation {worst:.2e}, {elapsed:.3}s"));
    assert!(pass);
}

fn binomial(n: u64, k: u64) -> i128 {
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// Monomial coefficients of `P_k` from the explicit sum
/// `P_k = 2^-k sum_m (-1)^m C(k,m) C(2k-2m,k) x^(k-2m)`, in exact integers.
fn legendre_monomials(k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let scale = 0.5f64.powi(k as i32);
    for m in 0..=k / 2 {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let c = sign * binomial(k as u64, m as u64) * binomial((2 * k - 2 * m) as u64, k as u64);
        out[k - 2 * m] = c as f64 * scale;
    }
    out
}

#[test]
fn criterion_5_derivative_expansion_oracle() {
    let points: Vec<f64> = (0..33)
        .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / 33.0).cos())
        .collect();
    let mut worst = 0.0f64;
    for k in 0..=20 {
        let mono = legendre_monomials(k);
        // sanity: the integer formula reproduces the recurrence
        assert!((mono.iter().rev().fold(0.0, |a, c| a * 0.5 + c) - legendre_row(k, 0.5)[k]).abs() < 1e-12);
        for r in 1..=3 {
            let mut deriv = mono.clone();
            for _ in 0..r {
                deriv = deriv.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
            }
            let expansion = DerivativeExpansion::new(r, k)
                .apply(&{
                    let mut v = vec![0.0; k + 1];
                    v[k] = 1.0;
                    v
                })
                .unwrap();
            let exact: Vec<f64> = points
                .iter()
                .map(|&t| norm_factor(k) * deriv.iter().rev().fold(0.0, |a, c| a * t + c))
                .collect();
            let got: Vec<f64> = points
                .iter()
                .map(|&t| {
                    if expansion.is_empty() {
                        0.0
                    } else {
                        let row = eval_phi_row(expansion.len() - 1, t).unwrap();
                        expansion.iter().zip(&row).map(|(a, b)| a * b).sum()
                    }
                })
                .collect();
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                assert!(got.iter().all(|v| *v == 0.0));
                continue;
            }
            for (g, e) in got.iter().zip(&exact) {
                worst = worst.max((g - e).abs() / scale);
            }
        }
    }
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut closed_worst = 0.0f64;
    for r in 1..=3 {
        let mut unit = vec![0.0; r + 1];
        unit[r] = 1.0;
        let exp = DerivativeExpansion::new(r, r).apply(&unit).unwrap();
        let closed = norm_factor(r) * 2f64.powf(0.5 - r as f64) * fact(2 * r) / fact(r);
        closed_worst = closed_worst.max((exp[0] - closed).abs());
    }
    let pass = worst < 1e-8 && closed_worst < 1e-12;
    report(
        5,
        "derivative expansion vs symbolic differentiation",
        pass,
        &format!("max relative error {worst:.2e}, closed form deviation {closed_worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_polynomial_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let coeffs: Vec<Vec<f64>> = (0..=8)
        .map(|_| (0..=8).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let poly = |t: f64, tau: f64| -> f64 {
        let mut acc = 0.0;
        for (a, row) in coeffs.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                acc += c * t.powi(a as i32) * tau.powi(b as i32);
            }
        }
        acc
    };
    let d22 = |t: f64, tau: f64| -> f64 {
        let mut acc = 0.0;
        for (a, row) in coeffs.iter().enumerate().skip(2) {
            for (b, c) in row.iter().enumerate().skip(2) {
                let fa = (a * (a - 1)) as f64;
                let fb = (b * (b - 1)) as f64;
                acc += c * fa * fb * t.powi(a as i32 - 2) * tau.powi(b as i32 - 2);
            }
        }
        acc
    };
    let field = exact_coeffs(&poly, 10, 10, 32).unwrap();
    let config = MethodConfig::new(2, 6.0, 0.0)
        .with_n(10)
        .with_shape(DomainShape::Square);
    let approx = method::run(&field, &config).unwrap();
    let points: Vec<(f64, f64)> = (0..25)
        .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    let values = approx.evaluate(&points).unwrap();
    let worst = points
        .iter()
        .zip(&values)
        .map(|(&(t, tau), v)| (v - d22(t, tau)).abs())
        .fold(0.0, f64::max);
    let pass = worst < 1e-8;
    report(6, "polynomial exactness, square domain n=10", pass, &format!("max error {worst:.2e} at 25 points"));
    assert!(pass);
}

#[test]
fn criterion_7_rate_check() {
    let deltas = geometric_range(1e-5, 1e-9, 5).unwrap();
    let spec = SweepSpec::new(Builtin::F2, 6.0, 2, deltas, (1..=10).collect());
    let result = convergence_sweep(&spec).unwrap();
    let target = 1.0 / 3.0;
    assert!((result.theoretical_exponent - target).abs() < 1e-15);
    let pass = (result.slope - target).abs() <= 0.3;
    let medians: Vec<String> = result
        .points
        .iter()
        .map(|p| format!("{:e}->{:.2e} (n={})", p.delta, p.median_l2, p.n))
        .collect();
    report(
        7,
        "L2 rate on analytic example, projected l2 noise, 10 seeds",
        pass,
        &format!("slope {:.4} vs {:.4} +- 0.3; {}", result.slope, target, medians.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_8_information_efficiency() {
    let mut card_ok = true;
    for n in 5..=60 {
        let cross = DomainShape::Cross.domain(2, n).unwrap().cardinality();
        let square = DomainShape::Square.domain(2, n).unwrap().cardinality();
        card_ok &= cross < square;
    }
    let comparisons = compare_domains(&ExperimentPreset::table3()).unwrap();
    let mut pass = card_ok;
    let mut detail = vec![format!("card(cross) < card(square) for n in 5..=60: {card_ok}")];
    for c in &comparisons {
        let ok = c.cross.information_count < c.square.information_count
            && c.cross.l2_error <= 3.0 * c.square.l2_error;
        pass &= ok;
        detail.push(format!(
            "delta={:e} n={}: cross L2 {:.3e} ({} coeffs) vs square L2 {:.3e} ({} coeffs), ratio {:.2}",
            c.delta,
            c.n,
            c.cross.l2_error,
            c.cross.information_count,
            c.square.l2_error,
            c.square.information_count,
            c.cross.l2_error / c.square.l2_error
        ));
    }
    report(8, "cross vs square information efficiency", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_9_noise_model_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let mut exact_add = true;
    for trial in 0..100u64 {
        let len = rng.gen_range(1..300);
        let field = CoeffField::from_entries(
            (0..len).map(|i| ((i / 17, i % 17), rng.gen_range(-1.0..1.0))),
        );
        let delta = 10f64.powf(rng.gen_range(-10.0..-0.5));
        for p in [1.0, 2.0, f64::INFINITY] {
            let spec = NoiseSpec::ProjectedLp { delta, p, seed: trial };
            let xi = noise_vector(field.len(), &spec).unwrap();
            let out = perturb(&field, &spec).unwrap();
            exact_add &= field
                .values()
                .zip(out.values())
                .zip(&xi)
                .all(|((a, b), x)| b == a + x);
            worst = worst.max((lp_norm(&xi, p) - delta).abs() / delta);
        }
    }
    let pass = worst < 1e-12 && exact_add;
    report(9, "projected noise has l_p norm delta, p in {1,2,inf}", pass, &format!("max relative deviation {worst:.2e} over 100 fields"));
    assert!(pass);
}
