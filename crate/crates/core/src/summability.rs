//! Limit summability of real functions.
//!
//! For `x` with `x + k` in the domain for every `k ≥ 1`:
//!
//! * remainder `R_n(f, x) = f(n) - f(x + n)`,
//! * partial summand `f_{σ_n}(x) = x f(n) + Σ_{k=1..n} R_k(f, x)`,
//! * limit summand `f_σ(x) = lim_n f_{σ_n}(x)`.
//!
//! A summable `f` needs `R_n(f, 1) → 0`; its summand then solves
//! `φ(x) - φ(x-1) = f(x)` and equals `f(1) + … + f(m)` at integers. For
//! `f = ln` the summand is `ln Γ(x + 1)`.
//!
//! Domains are intervals `(domain_min, ∞)`, so the set of admissible `x` is
//! never materialized: `x` is valid when `x + 1 > domain_min`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::FunctionSpec;
use crate::seqlim::{limit, LimitResult, RunConfig};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn require_summand_point(f: &FunctionSpec, x: f64) -> Result<()> {
    if !x.is_finite() || !f.in_domain(x + 1.0) {
        return Err(Error::OutOfDomain { x, domain_min: f.domain_min - 1.0, context: "limit summand (x + 1 in domain)" });
    }
    Ok(())
}

fn eval_at(f: &FunctionSpec, x: f64) -> Result<f64> {
    f.require_domain(x, "function evaluation")?;
    Ok(f.evaluate(x)?)
}

/// `R_n(f, x) = f(n) - f(x + n)`.
pub fn remainder(f: &FunctionSpec, x: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("remainder index n must be >= 1".into()));
    }
    difference_at(f, n as f64, x + n as f64)
}

/// `f(a) - f(b)` without cancellation between the two values.
fn difference_at(f: &FunctionSpec, a: f64, b: f64) -> Result<f64> {
    f.require_domain(a, "function evaluation")?;
    f.require_domain(b, "function evaluation")?;
    Ok(f.difference(a, b)?)
}

/// Incremental generator of `f_{σ_n}(x)` for `n = 1, 2, …`.
struct PartialSummands<'a> {
    f: &'a FunctionSpec,
    x: f64,
    remainders: CompensatedSum,
}

impl<'a> PartialSummands<'a> {
    fn new(f: &'a FunctionSpec, x: f64) -> Self {
        PartialSummands { f, x, remainders: CompensatedSum::default() }
    }

    fn term(&mut self, n: u64) -> Result<f64> {
        let fn_ = eval_at(self.f, n as f64)?;
        let r = difference_at(self.f, n as f64, self.x + n as f64)?;
        self.remainders.add(r);
        let v = self.x * fn_ + self.remainders.value();
        if !v.is_finite() {
            return Err(Error::NonFiniteTerm { index: n, value: v });
        }
        Ok(v)
    }
}

/// `f_{σ_n}(x) = x f(n) + Σ_{k=1..n} R_k(f, x)`, accumulated in order `k = 1..n`.
pub fn partial_summand(f: &FunctionSpec, x: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("partial summand index n must be >= 1".into()));
    }
    require_summand_point(f, x)?;
    let mut gen = PartialSummands::new(f, x);
    let mut v = 0.0;
    for k in 1..=n {
        v = gen.term(k)?;
    }
    Ok(v)
}

/// Threshold applied to `|R(f, 1)|`.
pub fn r1_threshold(cfg: &RunConfig) -> f64 {
    (10.0 * cfg.tol).max(1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummandEvaluation {
    pub x: f64,
    /// The limit `f_σ(x)`.
    pub result: LimitResult,
    /// The limit `R(f, 1)`.
    pub r1: LimitResult,
    pub summable_verdict: bool,
}

/// Limit of `R_n(f, 1)`.
pub fn r1_limit(f: &FunctionSpec, cfg: &RunConfig) -> Result<LimitResult> {
    limit(|n| remainder(f, 1.0, n), cfg)
}

/// Limit of the partial summands at `x`.
pub fn summand_limit(f: &FunctionSpec, x: f64, cfg: &RunConfig) -> Result<LimitResult> {
    require_summand_point(f, x)?;
    let mut gen = PartialSummands::new(f, x);
    limit(|n| gen.term(n), cfg)
}

/// Limit summand of `f` at `x` together with the `R(f, 1)` diagnostic.
pub fn summand(f: &FunctionSpec, x: f64, cfg: &RunConfig) -> Result<SummandEvaluation> {
    let result = summand_limit(f, x, cfg)?;
    let r1 = r1_limit(f, cfg)?;
    let summable_verdict = r1.converged && r1.value.abs() <= r1_threshold(cfg);
    Ok(SummandEvaluation { x, result, r1, summable_verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub x: f64,
    pub value: f64,
    pub converged: bool,
    pub n_used: u64,
    /// `|f_σ(x) - f(x) - f_σ(x - 1)|`, when `x - 1` is admissible.
    pub recurrence_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub function: String,
    pub probes: Vec<ProbeOutcome>,
    pub r1: LimitResult,
    pub r1_threshold: f64,
    pub r1_vanishes: bool,
    pub all_converged: bool,
    pub max_recurrence_residual: Option<f64>,
    pub summable: bool,
    pub notes: Vec<String>,
}

/// Evidence that `f` is limit summable: convergence at every probe, `R(1) = 0`
/// and the recurrence `f_σ(x) = f(x) + f_σ(x - 1)` on the probes.
pub fn check_limit_summable(f: &FunctionSpec, probe_xs: &[f64], cfg: &RunConfig) -> Result<SummabilityReport> {
    if probe_xs.is_empty() {
        return Err(Error::InvalidArgument("at least one probe point is required".into()));
    }
    for &x in probe_xs {
        require_summand_point(f, x)?;
    }
    let r1 = r1_limit(f, cfg)?;
    let threshold = r1_threshold(cfg);
    let r1_vanishes = r1.converged && r1.value.abs() <= threshold;

    let mut probes = Vec::with_capacity(probe_xs.len());
    for &x in probe_xs {
        let here = summand_limit(f, x, cfg)?;
        // x - 1 is admissible exactly when x itself lies in the domain
        let recurrence_residual = if f.in_domain(x) {
            let below = summand_limit(f, x - 1.0, cfg)?;
            Some((here.value - f.evaluate(x)? - below.value).abs())
        } else {
            None
        };
        probes.push(ProbeOutcome {
            x,
            value: here.value,
            converged: here.converged,
            n_used: here.n_used,
            recurrence_residual,
        });
    }
    let all_converged = probes.iter().all(|p| p.converged);
    let max_recurrence_residual = probes.iter().filter_map(|p| p.recurrence_residual).reduce(f64::max);
    let mut notes = vec![
        "domain is an interval (domain_min, inf), so D_f is contained in D_f - 1".to_string(),
        "verdict is numerical evidence on the probed points, not a proof of summability on the whole domain".to_string(),
    ];
    if !r1.converged {
        notes.push("R_n(f, 1) did not converge within n_max".into());
    }
    Ok(SummabilityReport {
        function: f.text().to_string(),
        probes,
        r1,
        r1_threshold: threshold,
        r1_vanishes,
        all_converged,
        max_recurrence_residual,
        summable: all_converged && r1_vanishes,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::convexity::loggamma_ref;

    fn spec(t: &str) -> FunctionSpec {
        FunctionSpec::from_text(t)
    }

    fn mixed() -> FunctionSpec {
        let p: BTreeMap<String, f64> = [("a".to_string(), 0.5)].into();
        FunctionSpec::parse("a^x + log2(x)", &p).unwrap()
    }

    #[test]
    fn remainder_examples() {
        assert_eq!(remainder(&spec("x"), 1.0, 7).unwrap(), -1.0);
        assert!((remainder(&spec("ln(x)"), 1.0, 1).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        // (0.25 + 1) - (0.125 + log2 3)
        let expected = 1.25 - (0.125 + 3f64.log2());
        assert!((remainder(&mixed(), 1.0, 2).unwrap() - expected).abs() < 1e-15);
        assert!((expected - (-0.459_962_500_721_156)).abs() < 1e-12);
        assert!(remainder(&spec("x"), 1.0, 0).is_err());
        assert!(remainder(&spec("ln(x)"), -3.0, 1).is_err());
    }

    #[test]
    fn partial_summand_examples() {
        for &(x, n) in &[(0.3, 5u64), (2.0, 17), (7.5, 100)] {
            assert!(partial_summand(&spec("x"), x, n).unwrap().abs() < 1e-12);
        }
        let raw = partial_summand(&spec("ln(x)"), 0.5, 100_000).unwrap();
        let target = loggamma_ref(1.5).unwrap();
        assert!((target - (-0.120_782_237_635_245_2)).abs() < 1e-12);
        // O(1/n) gap: x(x+1)/(2n) ≈ 3.75e-6
        assert!((raw - target).abs() < 1e-5);
        assert!((raw - target).abs() > 1e-7);
    }

    #[test]
    fn summand_examples() {
        let cfg = RunConfig::default();
        let s = summand(&mixed(), 2.0, &cfg).unwrap();
        assert!(s.result.converged);
        assert!((s.result.value - 1.75).abs() < 1e-9, "{}", s.result.value);

        let s = summand(&spec("ln(x)"), 1.0, &cfg).unwrap();
        assert!(s.result.value.abs() < 1e-9);
        assert!(s.summable_verdict);

        let s = summand(&spec("x"), 1.0, &cfg).unwrap();
        assert!((s.r1.value + 1.0).abs() < 1e-12);
        assert!(!s.summable_verdict);
    }

    #[test]
    fn summand_rejects_points_outside_the_admissible_set() {
        let f = spec("ln(x)");
        assert!(matches!(summand(&f, -1.0, &RunConfig::default()), Err(Error::OutOfDomain { .. })));
        assert!(summand(&f, -0.5, &RunConfig::default()).is_ok());
    }

    #[test]
    fn logarithm_is_summable_on_probes() {
        let r = check_limit_summable(&spec("ln(x)"), &[0.25, 0.5, 0.75, 1.0], &RunConfig::default()).unwrap();
        assert!(r.summable);
        assert!(r.r1_vanishes);
        assert!(r.max_recurrence_residual.unwrap() < 1e-6);
        assert!(r.probes.iter().all(|p| p.recurrence_residual.is_some()));
    }

    #[test]
    fn identity_is_not_summable() {
        let r = check_limit_summable(&spec("x"), &[0.5, 1.0], &RunConfig::default()).unwrap();
        assert!(!r.summable);
        assert!(!r.r1_vanishes);
        assert!(check_limit_summable(&spec("x"), &[], &RunConfig::default()).is_err());
    }

    #[test]
    fn mixed_example_matches_closed_form() {
        let cfg = RunConfig::default();
        let f = mixed();
        let r = check_limit_summable(&f, &[0.5, 1.5, 3.0], &cfg).unwrap();
        assert!(r.summable);
        for p in &r.probes {
            let a: f64 = 0.5;
            let closed = a / (a - 1.0) * (a.powf(p.x) - 1.0) + loggamma_ref(p.x + 1.0).unwrap() / 2f64.ln();
            assert!((p.value - closed).abs() < 1e-8, "x = {}: {} vs {}", p.x, p.value, closed);
        }
    }

    #[test]
    fn compensated_sum_beats_naive_accumulation() {
        let mut c = CompensatedSum::default();
        c.add(1.0);
        for _ in 0..1000 {
            c.add(1e-16);
        }
        assert!((c.value() - (1.0 + 1e-13)).abs() < 1e-16);
    }
}
