use std::collections::BTreeMap;

use fxeq::convexity::{divided_differences, lattice_systems, loggamma_d2, loggamma_d3, loggamma_ref, random_systems};
use fxeq::experiments::{bohr_mollerup_demo, question1_probe, PerturbedSolution};
use fxeq::gammatype::{gamma_type_12, gamma_type_24, gamma_type_25, product_log_limit};
use fxeq::summability::{check_limit_summable, summand_limit};
use fxeq::{FunctionSpec, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

fn spec(t: &str) -> FunctionSpec {
    FunctionSpec::from_text(t)
}

fn geometric(a: f64) -> FunctionSpec {
    let p: BTreeMap<String, f64> = [("a".to_string(), a)].into();
    FunctionSpec::parse("x * a^x", &p).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn reference_log_gamma_agrees_with_an_independent_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let x: f64 = rng.gen_range(0.01..200.0);
        let ours = loggamma_ref(x).unwrap();
        let theirs = ln_gamma(x);
        assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0), "x = {x}: {ours} vs {theirs}");
    }
    assert!((loggamma_ref(0.5).unwrap() - 0.572_364_942_924_700_087_1).abs() < 1e-14);
    assert!((loggamma_ref(3.7).unwrap().exp() - 4.170_651_783_796_604_03).abs() < 1e-13);
}

#[test]
fn polygamma_series_match_constants() {
    let basel = 1.644_934_066_848_226_436_5;
    let zeta3 = 1.202_056_903_159_594_285_4;
    assert!((loggamma_d2(1.0, 10_000).unwrap() - basel).abs() < 1e-8);
    assert!((loggamma_d3(1.0, 10_000).unwrap() + 2.0 * zeta3).abs() < 1e-8);
}

#[test]
fn product_limit_reproduces_gamma() {
    let cfg = RunConfig::default();
    for x in [0.5, 1.5, 2.5, 3.7, 0.1, 9.3] {
        let v = gamma_type_12(&spec("x"), x, &cfg).unwrap();
        assert!(v.converged());
        assert!(rel(v.value, ln_gamma(x).exp()) < 1e-8, "x = {x}: {}", v.value);
        if x < 5.0 {
            assert!(v.core_limit.n_used <= 100_000, "x = {x}: {}", v.core_limit.n_used);
        }
    }
}

#[test]
fn recurrence_residual_of_computed_solutions() {
    let cfg = RunConfig::default();
    let probes = [0.3, 0.5, 1.2, 2.7, 4.1];
    for (g, f1) in [(spec("x"), 1.0), (geometric(2.0), 1.0), (geometric(0.5), 2.0), (spec("x^2 + 1"), 1.0)] {
        for x in probes {
            let here = gamma_type_24(&g, x, f1, &cfg).unwrap();
            let next = gamma_type_24(&g, x + 1.0, f1, &cfg).unwrap();
            assert!(here.converged() && next.converged());
            let g_x = g.evaluate(x).unwrap();
            let residual = (next.value - g_x * here.value).abs() / next.value;
            assert!(residual <= 100.0 * cfg.tol, "{} at {x}: {residual:e}", g.text());
        }
    }
}

#[test]
fn normalization_at_one() {
    let cfg = RunConfig::default();
    for g in ["x", "x^2 + 1", "sqrt(x) + 3", "ln(x + 1)"] {
        let v = gamma_type_12(&spec(g), 1.0, &cfg).unwrap();
        assert!((v.value - 1.0).abs() <= 10.0 * cfg.tol, "{g}: {}", v.value);
    }
}

#[test]
fn cross_formula_consistency() {
    let cfg = RunConfig::default();
    let fixtures = [spec("x"), geometric(0.5), geometric(2.0)];
    for g in &fixtures {
        for x in [0.5, 1.5, 2.5] {
            let t = gamma_type_24(g, x, 1.0, &cfg).unwrap();
            let s = gamma_type_25(g, x - 1.0, 1.0, &cfg).unwrap();
            assert_eq!(s.x, x);
            assert!(t.converged() && s.core_limit.converged);
            assert!(rel(t.value, s.value) <= 100.0 * cfg.tol, "{} at {x}: {} vs {}", g.text(), t.value, s.value);
            // the raw product with the l^{(x²+x)/2} factor
            let raw = product_log_limit(g, x, &cfg).unwrap();
            if raw.converged {
                let l = t.l_used;
                let corrected = (0.5 * (x * x + x) * l.ln() + raw.value).exp();
                assert!(rel(corrected, t.value) <= 100.0 * cfg.tol, "{} at {x}: {corrected} vs {}", g.text(), t.value);
            }
            if t.l_used == 1.0 {
                let d = gamma_type_12(g, x, &cfg).unwrap();
                assert!(rel(d.value, t.value) <= 100.0 * cfg.tol);
            }
        }
    }
}

#[test]
fn closed_form_for_geometric_factor() {
    let cfg = RunConfig::default();
    let expected = [
        (0.5, 1.625_347_347_674_047_692),
        (1.5, 1.149_294_131_323_888_245),
        (2.5, 4.876_042_043_022_143_163),
    ];
    for (x, want) in expected {
        let v = gamma_type_24(&geometric(2.0), x, 1.0, &cfg).unwrap();
        assert!(rel(v.value, want) < 1e-8, "x = {x}: {}", v.value);
    }
}

#[test]
fn scale_equivariance() {
    let cfg = RunConfig::default();
    let (lambda, x) = (3.0, 2.5);
    for g in [spec("x"), spec("x^2 + 1")] {
        let base = gamma_type_12(&g, x, &cfg).unwrap();
        let scaled = gamma_type_12(&g.scaled(lambda), x, &cfg).unwrap();
        assert!(rel(scaled.value, base.value * lambda.powf(x - 1.0)) < 1e-8, "{}", g.text());
    }
}

#[test]
fn summand_recurrence_and_integer_anchors() {
    let cfg = RunConfig::default();
    let probes = [1.5, 2.25, 3.0, 4.75];
    for text in ["ln(x)", "0.5^x + log2(x)", "1/x^2", "ln(x) + 1/x"] {
        let f = spec(text);
        let report = check_limit_summable(&f, &probes, &cfg).unwrap();
        assert!(report.summable, "{text}: {:?}", report.notes);
        assert!(report.max_recurrence_residual.unwrap() <= 10.0 * cfg.tol, "{text}: {:?}", report.max_recurrence_residual);
        let mut direct = 0.0;
        for m in 1..=8 {
            direct += f.evaluate(m as f64).unwrap();
            let s = summand_limit(&f, m as f64, &cfg).unwrap();
            assert!((s.value - direct).abs() <= 10.0 * cfg.tol, "{text} at {m}: {} vs {direct}", s.value);
        }
    }
}

#[test]
fn summand_of_ln_is_log_gamma() {
    let cfg = RunConfig::default();
    for x in [0.5, 1.5, 2.5, 0.05, 7.0] {
        let s = summand_limit(&spec("ln(x)"), x, &cfg).unwrap();
        assert!((s.value - ln_gamma(x + 1.0)).abs() < 1e-9, "x = {x}");
    }
}

#[test]
fn log_gamma_difference_signs_follow_derivatives() {
    let f = spec("gamma_ref(x)");
    let window = (2.0, 50.0);
    assert!(loggamma_d2(2.0, 10_000).unwrap() > 0.0 && loggamma_d3(2.0, 10_000).unwrap() < 0.0);
    for (order, sign) in [(1usize, 1.0), (2, -1.0)] {
        let mut systems = lattice_systems(order, window);
        systems.extend(random_systems(order, window, 200, 7));
        for pts in systems {
            let top = divided_differences(&pts, &f, true).unwrap().top();
            assert!(top * sign > 0.0, "order {order} at {pts:?}: {top}");
        }
    }
}

#[test]
fn perturbed_family_solves_the_equation_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..8 {
        let eps: f64 = rng.gen_range(-2.0..2.0);
        let sol = PerturbedSolution::new(eps);
        assert!(sol.initial_residual().unwrap() <= 1e-12);
        for _ in 0..50 {
            let x: f64 = rng.gen_range(0.01..40.0);
            assert!(sol.recurrence_residual(x).unwrap() <= 1e-10, "eps {eps} at {x}");
        }
    }
}

#[test]
fn perturbations_above_the_gate_break_order_two_concavity() {
    let cfg = RunConfig::default();
    let window = (2.0, 10.0);
    let ceiling = loggamma_d3(window.0, 10_000).unwrap().abs();
    let gate = 2.0 * ceiling / (2.0 * std::f64::consts::PI).powi(3);
    let eps = [0.0, 1.5 * gate, 4.0 * gate, 0.5];
    let report = bohr_mollerup_demo(&eps, window, &cfg, None).unwrap();
    for case in &report.cases[1..] {
        assert!(case.gate_predicts_failure);
        assert!(case.counterexample.is_some(), "eps {} passed the scan", case.epsilon);
    }
}

#[test]
fn liminf_probe_control_matches_product_limit() {
    let cfg = RunConfig::default();
    let xs = [0.5, 1.5, 3.0];
    let report = question1_probe(&spec("x"), &xs, &[], &cfg).unwrap();
    for p in &report.points {
        let direct = gamma_type_12(&spec("x"), p.x, &cfg).unwrap();
        assert!(rel(p.liminf_estimate, direct.value) < 1e-5, "x = {}", p.x);
    }
}
