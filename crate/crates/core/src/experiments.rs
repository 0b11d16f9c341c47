//! Packaged numerical studies: the order-2 log-concave characterization of
//! Γ against a family of perturbed solutions, the closed form for
//! `g(x) = x a^x`, the liminf bound for `g` with only `g(n+1)/g(n) → 1`, and
//! convexity fingerprints over several orders.
//!
//! Reports touching open questions phrase their conclusions as numerical
//! evidence only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convexity::{is_n_convex, loggamma_d3, loggamma_ref, ConvexityReport, ScanParams, Verdict, Witness};
use crate::error::{Error, Result};
use crate::expr::FunctionSpec;
use crate::gammatype::{gamma_type_12, gamma_type_24, ln_positive, ProductLogs};
use crate::report;
use crate::seqlim::{DeltaSquaredTable, RunConfig, TracePoint, AITKEN_DEPTH};

/// Terms used for the polygamma series in the perturbation gate.
const D3_TERMS: usize = 10_000;

/// `f_ε(x) = Γ(x) e^{ε sin 2πx}`, a solution of `f(x+1) = x f(x)`, `f(1) = 1`
/// for every `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSolution {
    pub epsilon: f64,
    pub base: FunctionSpec,
    pub spec: FunctionSpec,
}

impl PerturbedSolution {
    pub fn new(epsilon: f64) -> Self {
        let params: BTreeMap<String, f64> = [("eps".to_string(), epsilon)].into();
        let spec = FunctionSpec::parse("gamma_ref(x) * exp(eps * sin(2 * pi * x))", &params)
            .expect("perturbed solution expression is well formed");
        PerturbedSolution { epsilon, base: FunctionSpec::named("gamma").expect("builtin gamma"), spec }
    }

    pub fn ln_value(&self, x: f64) -> Result<f64> {
        ln_positive(&self.spec, x, "perturbed solution")
    }

    /// `|f(x+1) - x f(x)| / f(x+1)`.
    pub fn recurrence_residual(&self, x: f64) -> Result<f64> {
        let d = self.ln_value(x + 1.0)? - x.ln() - self.ln_value(x)?;
        Ok((-d).exp_m1().abs())
    }

    /// `|f(1) - 1|`.
    pub fn initial_residual(&self) -> Result<f64> {
        Ok(self.ln_value(1.0)?.exp_m1().abs())
    }
}

/// Measurements for one `ε` of [`bohr_mollerup_demo`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonCase {
    pub epsilon: f64,
    pub recurrence_residual_max: f64,
    pub initial_condition_residual: f64,
    /// `|ε| (2π)³`, the amplitude of the perturbation's third derivative.
    pub perturbation_amplitude: f64,
    /// `min` and `max` of `|(ln Γ)'''|` over the window.
    pub d3_floor: f64,
    pub d3_ceiling: f64,
    /// True when the amplitude exceeds twice the ceiling, so the third
    /// derivative of `ln f_ε` must change sign on the window.
    pub gate_predicts_failure: bool,
    pub verdict: Verdict,
    pub counterexample: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub scenario_id: String,
    pub recurrence_residual_max: f64,
    pub initial_condition_residual: f64,
    pub cases: Vec<EpsilonCase>,
    pub convexity_findings: Vec<ConvexityReport>,
    pub verdict_text: String,
    pub artifacts: Vec<PathBuf>,
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if window.0 > 0.0 && window.0 < window.1 && window.1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("window must satisfy 0 < lo < hi, got {window:?}")))
    }
}

/// Seeded probe points in `(0, hi]` for the functional-equation residuals.
fn probe_points(hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50).map(|_| rng.gen_range(0.05..=hi)).collect()
}

/// Runs the order-2 log-concavity scan for `Γ e^{ε sin 2πx}` at each `ε`,
/// alongside the residuals of `f(x+1) = x f(x)` and `f(1) = 1`. Writes
/// `bohr_mollerup.json` and `bohr_mollerup_residuals.csv` into `out_dir` when given.
pub fn bohr_mollerup_demo(
    epsilons: &[f64],
    window: (f64, f64),
    cfg: &RunConfig,
    out_dir: Option<&Path>,
) -> Result<UniquenessReport> {
    check_window(window)?;
    if !epsilons.contains(&0.0) {
        return Err(Error::InvalidArgument("epsilons must include 0".into()));
    }
    let probes = probe_points(window.1, cfg.seed);
    let d3_ceiling = loggamma_d3(window.0, D3_TERMS)?.abs();
    let d3_floor = loggamma_d3(window.1, D3_TERMS)?.abs();
    let mut cases = Vec::with_capacity(epsilons.len());
    let mut findings = Vec::with_capacity(epsilons.len());
    let mut residual_rows = Vec::new();
    for &epsilon in epsilons {
        let sol = PerturbedSolution::new(epsilon);
        let mut recurrence_residual_max = 0.0f64;
        for &x in &probes {
            let r = sol.recurrence_residual(x)?;
            residual_rows.push(vec![epsilon, x, r]);
            recurrence_residual_max = recurrence_residual_max.max(r);
        }
        let scan = is_n_convex(
            &sol.spec,
            ScanParams {
                order: 2,
                window,
                samples: cfg.samples,
                log_domain: true,
                tol_sign: cfg.tol_sign,
                seed: cfg.seed,
            },
        )?;
        let perturbation_amplitude = epsilon.abs() * (2.0 * std::f64::consts::PI).powi(3);
        let counterexample = scan.refutes_concavity().cloned();
        cases.push(EpsilonCase {
            epsilon,
            recurrence_residual_max,
            initial_condition_residual: sol.initial_residual()?,
            perturbation_amplitude,
            d3_floor,
            d3_ceiling,
            gate_predicts_failure: perturbation_amplitude > 2.0 * d3_ceiling,
            verdict: scan.verdict,
            counterexample,
        });
        findings.push(scan);
    }

    let recurrence_residual_max = cases.iter().map(|c| c.recurrence_residual_max).fold(0.0, f64::max);
    let initial_condition_residual = cases.iter().map(|c| c.initial_condition_residual).fold(0.0, f64::max);
    let refuted: Vec<String> = cases
        .iter()
        .filter(|c| c.counterexample.is_some())
        .map(|c| format!("{}", c.epsilon))
        .collect();
    let gate_misses: Vec<String> = cases
        .iter()
        .filter(|c| c.gate_predicts_failure && c.counterexample.is_none())
        .map(|c| format!("{}", c.epsilon))
        .collect();
    let mut verdict_text = format!(
        "numerical evidence on window [{}, {}]: every f_eps solves f(x+1) = x f(x) (max residual {:.3e}) with |f(1) - 1| <= {:.3e}; \
         order-2 log-concavity is refuted by a sampled point system for eps in [{}]",
        window.0,
        window.1,
        recurrence_residual_max,
        initial_condition_residual,
        refuted.join(", ")
    );
    if !gate_misses.is_empty() {
        verdict_text.push_str(&format!(
            "; the derivative gate predicted failure but the scan found none for eps in [{}]",
            gate_misses.join(", ")
        ));
    }

    let mut result = UniquenessReport {
        scenario_id: "bohr_mollerup_order2".into(),
        recurrence_residual_max,
        initial_condition_residual,
        cases,
        convexity_findings: findings,
        verdict_text,
        artifacts: Vec::new(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let json = dir.join("bohr_mollerup.json");
        let csv = dir.join("bohr_mollerup_residuals.csv");
        result.artifacts = vec![json.clone(), csv.clone()];
        std::fs::write(&csv, report::csv_table(&["epsilon", "x", "recurrence_residual"], &residual_rows))?;
        report::write_json(&json, &result)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricPoint {
    pub x: f64,
    pub computed: f64,
    pub closed_form: f64,
    pub relative_error: f64,
    /// `|F(x+1) - g(x) F(x)| / F(x+1)` for the closed form `F`.
    pub recurrence_residual: f64,
    pub converged: bool,
    pub n_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricReport {
    pub a: f64,
    pub l_used: f64,
    pub points: Vec<GeometricPoint>,
    pub max_relative_error: f64,
    pub max_recurrence_residual: f64,
}

/// `ln(a^{(x²-x)/2} Γ(x))`.
pub fn example_23_closed_form_ln(a: f64, x: f64) -> Result<f64> {
    Ok(0.5 * (x * x - x) * a.ln() + loggamma_ref(x)?)
}

/// Compares the l-corrected product for `g(x) = x a^x`, `f(1) = 1`, with
/// `a^{(x²-x)/2} Γ(x)`.
pub fn example_23_check(a: f64, xs: &[f64], cfg: &RunConfig) -> Result<GeometricReport> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("need a > 1, got {a}")));
    }
    let params: BTreeMap<String, f64> = [("a".to_string(), a)].into();
    let g = FunctionSpec::parse("x * a^x", &params)?;
    let mut points = Vec::with_capacity(xs.len());
    let mut l_used = f64::NAN;
    for &x in xs {
        let v = gamma_type_24(&g, x, 1.0, cfg)?;
        l_used = v.l_used;
        let closed_ln = example_23_closed_form_ln(a, x)?;
        let step = example_23_closed_form_ln(a, x + 1.0)? - (x.ln() + x * a.ln()) - closed_ln;
        points.push(GeometricPoint {
            x,
            computed: v.value,
            closed_form: closed_ln.exp(),
            relative_error: (v.log_value - closed_ln).exp_m1().abs(),
            recurrence_residual: (-step).exp_m1().abs(),
            converged: v.converged(),
            n_used: v.core_limit.n_used,
        });
    }
    Ok(GeometricReport {
        a,
        l_used,
        max_relative_error: points.iter().map(|p| p.relative_error).fold(0.0, f64::max),
        max_recurrence_residual: points.iter().map(|p| p.recurrence_residual).fold(0.0, f64::max),
        points,
    })
}

/// Burn-in before block minima are collected.
pub const LIMINF_BURN_IN: u64 = 1 << 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMargin {
    pub candidate: String,
    pub value: f64,
    /// `ln(liminf) - ln(candidate)`; negative means the candidate exceeds the estimate.
    pub log_margin: f64,
    pub exceeds_liminf: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfPoint {
    pub x: f64,
    pub liminf_estimate: f64,
    pub log_liminf_estimate: f64,
    /// Whether the accelerated block minima settled within `cfg.threshold`.
    pub settled: bool,
    /// `(n, min of ln-sequence over [n/2, n))` per dyadic block.
    pub trace: Vec<TracePoint>,
    pub direct_value: f64,
    pub direct_converged: bool,
    pub candidates: Vec<CandidateMargin>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfReport {
    pub function: String,
    pub n_max: u64,
    pub points: Vec<LiminfPoint>,
    pub verdict_text: String,
}

/// Estimates `liminf` of the product-limit sequence at each `x` by block
/// minima over dyadic blocks after [`LIMINF_BURN_IN`], and compares it with
/// candidate solutions.
pub fn question1_probe(
    g: &FunctionSpec,
    xs: &[f64],
    candidates: &[FunctionSpec],
    cfg: &RunConfig,
) -> Result<LiminfReport> {
    cfg.validate()?;
    if cfg.n_max < 2 * LIMINF_BURN_IN {
        return Err(Error::InvalidConfig(format!("n_max must be at least {}", 2 * LIMINF_BURN_IN)));
    }
    let mut points = Vec::with_capacity(xs.len());
    let mut flagged = Vec::new();
    for &x in xs {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::OutOfDomain { x, domain_min: 0.0, context: "liminf probe" });
        }
        let mut logs = ProductLogs::new(g, x)?;
        let mut table = DeltaSquaredTable::new(AITKEN_DEPTH);
        let mut trace = Vec::new();
        let mut block_min = f64::INFINITY;
        let mut block_end = 2 * LIMINF_BURN_IN;
        let mut estimate = f64::NAN;
        let mut previous = f64::NAN;
        for n in 1..=cfg.n_max {
            let v = logs.term(n)?;
            if n >= LIMINF_BURN_IN {
                block_min = block_min.min(v);
            }
            if n + 1 == block_end || n == cfg.n_max {
                previous = estimate;
                estimate = table.push(block_min);
                trace.push(TracePoint { n: n + 1, value: block_min, accelerated: Some(estimate) });
                block_min = f64::INFINITY;
                block_end *= 2;
            }
        }
        let settled = estimate.is_finite() && (estimate - previous).abs() <= cfg.threshold;
        let direct = gamma_type_12(g, x, cfg)?;
        let mut margins = Vec::with_capacity(candidates.len());
        for c in candidates {
            let ln_c = ln_positive(c, x, "candidate solution")?;
            let log_margin = estimate - ln_c;
            let exceeds_liminf = log_margin < -cfg.threshold;
            if exceeds_liminf {
                flagged.push(format!("{} at x = {x}", c.text()));
            }
            margins.push(CandidateMargin { candidate: c.text().to_string(), value: ln_c.exp(), log_margin, exceeds_liminf });
        }
        points.push(LiminfPoint {
            x,
            liminf_estimate: estimate.exp(),
            log_liminf_estimate: estimate,
            settled,
            trace,
            direct_value: direct.value,
            direct_converged: direct.converged(),
            candidates: margins,
        });
    }
    let unsettled = points.iter().filter(|p| !p.settled).count();
    let mut verdict_text = format!(
        "numerical evidence only, not an answer to the question: block-minimum liminf estimates at {} point(s), {} of them unsettled by n = {}",
        points.len(),
        unsettled,
        cfg.n_max
    );
    if !flagged.is_empty() {
        verdict_text.push_str(&format!("; candidate exceeds the liminf estimate: {}", flagged.join("; ")));
    }
    Ok(LiminfReport { function: g.text().to_string(), n_max: cfg.n_max, points, verdict_text })
}

/// Status of one of the conditions c1..c6 on the scanned orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionStatus {
    pub id: String,
    pub description: String,
    /// `None` when no scanned order bears on the condition.
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingerprintReport {
    pub function: String,
    pub window: (f64, f64),
    pub orders: Vec<usize>,
    pub scans: Vec<ConvexityReport>,
    pub conditions: Vec<ConditionStatus>,
    /// For `gamma_ref`: whether odd orders came out convex and even orders concave.
    pub gamma_pattern: Option<bool>,
    pub verdict_text: String,
}

fn is_convex(v: Verdict) -> bool {
    matches!(v, Verdict::Convex | Verdict::Degenerate)
}

fn is_concave(v: Verdict) -> bool {
    matches!(v, Verdict::Concave | Verdict::Degenerate)
}

fn status(id: &str, description: &str, satisfied: Option<bool>) -> ConditionStatus {
    ConditionStatus { id: id.into(), description: description.into(), satisfied }
}

/// Scans `ln candidate` at each order and records which of c1..c6 hold on
/// the scanned orders.
pub fn question2_fingerprint(
    candidate: &FunctionSpec,
    orders: &[usize],
    window: (f64, f64),
    cfg: &RunConfig,
) -> Result<FingerprintReport> {
    check_window(window)?;
    if orders.is_empty() || orders.iter().any(|&n| !(1..=6).contains(&n)) {
        return Err(Error::InvalidArgument("orders must be a non-empty subset of 1..=6".into()));
    }
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let mut scans = Vec::with_capacity(orders.len());
    for &order in &orders {
        scans.push(is_n_convex(
            candidate,
            ScanParams { order, window, samples: cfg.samples, log_domain: true, tol_sign: cfg.tol_sign, seed: cfg.seed },
        )?);
    }
    let verdict_at = |n: usize| scans.iter().find(|s| s.order == n).map(|s| s.verdict);
    let odd: Vec<Verdict> = scans.iter().filter(|s| s.order % 2 == 1).map(|s| s.verdict).collect();
    let even: Vec<Verdict> = scans.iter().filter(|s| s.order % 2 == 0).map(|s| s.verdict).collect();
    let when = |v: &[Verdict], f: &dyn Fn(&[Verdict]) -> bool| (!v.is_empty()).then(|| f(v));

    let c1 = when(&odd, &|v| v.iter().all(|&x| is_convex(x)));
    let c2 = when(&even, &|v| v.iter().all(|&x| is_concave(x)));
    let c3 = when(&odd, &|v| v.iter().any(|&x| is_convex(x)));
    let c4 = when(&even, &|v| v.iter().any(|&x| is_concave(x)));
    let c5 = c3.zip(c4).map(|(a, b)| a && b);
    let pairs: Vec<bool> = orders
        .iter()
        .filter(|&&n| n % 2 == 1)
        .filter_map(|&n| Some(is_convex(verdict_at(n)?) && is_concave(verdict_at(n + 1)?)))
        .collect();
    let c6 = (!pairs.is_empty()).then(|| pairs.iter().any(|&b| b));
    let conditions = vec![
        status("c1", "n-log-convex for every scanned odd n", c1),
        status("c2", "n-log-concave for every scanned even n", c2),
        status("c3", "n-log-convex for some scanned odd n", c3),
        status("c4", "n-log-concave for some scanned even n", c4),
        status("c5", "c3 and c4 together", c5),
        status("c6", "n-log-convex and (n+1)-log-concave for some scanned odd n", c6),
    ];

    let pattern = scans
        .iter()
        .all(|s| if s.order % 2 == 1 { s.verdict == Verdict::Convex } else { s.verdict == Verdict::Concave });
    let gamma_pattern = (candidate.text().replace(' ', "") == "gamma_ref(x)").then_some(pattern);
    let verdicts: Vec<String> = scans.iter().map(|s| format!("{}: {:?}", s.order, s.verdict).to_lowercase()).collect();
    let mut verdict_text = format!(
        "numerical evidence at scan resolution on [{}, {}]: {}",
        window.0,
        window.1,
        verdicts.join(", ")
    );
    if let Some(p) = gamma_pattern {
        verdict_text.push_str(if p {
            "; odd orders convex and even orders concave as expected for gamma"
        } else {
            "; the odd-convex / even-concave pattern expected for gamma was not reproduced"
        });
    }
    Ok(FingerprintReport {
        function: candidate.text().to_string(),
        window,
        orders,
        scans,
        conditions,
        gamma_pattern,
        verdict_text,
    })
}
