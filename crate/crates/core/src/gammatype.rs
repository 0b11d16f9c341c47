//! Gamma-type solutions of `f(x+1) = g(x) f(x)` and the asymptotic
//! conditions on `g` that make them unique.
//!
//! All products are carried as sums of logarithms. The product limit
//!
//! ```text
//! f(x) = lim  g(n)···g(1) g(n)^x / (g(n+x)···g(x))
//! ```
//!
//! is evaluated through
//! `L_n(x) = Σ_{k=1..n} ln g(k) + x ln g(n) - Σ_{k=0..n} ln g(x+k)`, updated
//! incrementally by
//! `L_{n+1} = L_n + ln g(n+1) + x (ln g(n+1) - ln g(n)) - ln g(x+n+1)`.
//!
//! When `g(n+1)/g(n) → l`, the detrended `G(x) = l^{-x} g(x)` has ratio limit
//! 1, its product limit `F` solves `F(x+1) = G(x) F(x)`, `F(1) = 1`, and
//! `f(x) = f(1) l^{(x²-x)/2} F(x)`. Because the `l`-powers telescope, the
//! `G`-product at every `n` equals `l^x` times the `g`-product, so this is the
//! same value as `f(1) l^{(x²+x)/2}` times the raw `g`-limit.
//!
//! The condition checkers sample `x = 2^k + t` for `k = 1..=20` and eight
//! offsets `t ∈ {0, 1/8, …, 7/8}`; the offsets matter because a 1-periodic
//! factor such as `e^{sin 2πx}` is invisible on the dyadic integers alone.
//! Deviations are measured in the log domain, and verdicts are graded as
//! evidence: `holds` when the deviation at the largest scale is within
//! `cfg.threshold`, `inconclusive` when it is still above the threshold but
//! shrinking, `fails` otherwise.

use serde::Serialize;

use crate::convexity::{is_n_convex, ConvexityReport, ScanParams, Verdict};
use crate::error::{Error, Result};
use crate::expr::{EvalError, FunctionSpec};
use crate::seqlim::{aitken, limit, LimitResult, RunConfig};
use crate::summability::{summand_limit, CompensatedSum};

/// Largest dyadic scale sampled by the condition checkers.
pub const SCALE_CAP: u32 = 20;
const OFFSETS: usize = 8;

/// `ln g(x)` for positive `g`, mapping a non-positive value to [`Error::NonPositive`].
pub fn ln_positive(g: &FunctionSpec, x: f64, what: &'static str) -> Result<f64> {
    match g.evaluate_ln(x) {
        Ok(v) => Ok(v),
        Err(EvalError::NonPositive { value, .. }) => Err(Error::NonPositive { what, at: x, value }),
        Err(e) => Err(e.into()),
    }
}

fn ln_g(g: &FunctionSpec, x: f64) -> Result<f64> {
    g.require_domain(x, "g")?;
    ln_positive(g, x, "g")
}

/// `ln g(a) - ln g(b)` without cancellation between the two logarithms.
fn ln_g_ratio(g: &FunctionSpec, a: f64, b: f64) -> Result<f64> {
    g.require_domain(a, "g")?;
    g.require_domain(b, "g")?;
    match g.ln_ratio(a, b) {
        Ok(v) => Ok(v),
        Err(EvalError::NonPositive { value, .. }) => {
            Err(Error::NonPositive { what: "g", at: if g.evaluate(a).map_or(true, |v| v <= 0.0) { a } else { b }, value })
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain product limit, normalized by `f(1) = 1`.
    #[serde(rename = "direct_12")]
    Direct12,
    /// Product limit of the detrended `G`, reassembled with `f(1)` and `l`.
    #[serde(rename = "transformed_24")]
    Transformed24,
    /// Exponential of the limit summand of `ln G`.
    #[serde(rename = "summand_25")]
    Summand25,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTypeValue {
    /// Point at which `f` was evaluated.
    pub x: f64,
    pub value: f64,
    pub log_value: f64,
    pub method: Method,
    pub core_limit: LimitResult,
    pub l_used: f64,
    pub c_used: f64,
}

impl GammaTypeValue {
    pub fn converged(&self) -> bool {
        self.core_limit.converged
    }
}

/// Limit of `g(n+1)/g(n)`.
pub fn estimate_l(g: &FunctionSpec, cfg: &RunConfig) -> Result<LimitResult> {
    ln_g(g, 1.0)?;
    limit(|n| Ok(ln_g_ratio(g, (n + 1) as f64, n as f64)?.exp()), cfg)
}

/// Incremental generator of `L_n(x)`.
pub(crate) struct ProductLogs<'a> {
    g: &'a FunctionSpec,
    x: f64,
    acc: CompensatedSum,
}

impl<'a> ProductLogs<'a> {
    pub(crate) fn new(g: &'a FunctionSpec, x: f64) -> Result<Self> {
        let ln_g1 = ln_g(g, 1.0)?;
        let mut acc = CompensatedSum::default();
        // L_1 = ln g(1) + x ln g(1) - ln g(x) - ln g(x+1)
        acc.add(ln_g1 - ln_g(g, x)?);
        acc.add(x * ln_g1 - ln_g(g, x + 1.0)?);
        Ok(ProductLogs { g, x, acc })
    }

    pub(crate) fn term(&mut self, n: u64) -> Result<f64> {
        if n > 1 {
            let m = n as f64;
            let step = self.x * ln_g_ratio(self.g, m, m - 1.0)? - ln_g_ratio(self.g, self.x + m, m)?;
            self.acc.add(step);
        }
        Ok(self.acc.value())
    }
}

fn require_positive_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x, domain_min: 0.0, context: "gamma-type evaluation" })
    }
}

/// Limit of `L_n(x)`, i.e. `ln` of the plain product limit.
pub fn product_log_limit(g: &FunctionSpec, x: f64, cfg: &RunConfig) -> Result<LimitResult> {
    require_positive_x(x)?;
    let mut logs = ProductLogs::new(g, x)?;
    limit(|n| logs.term(n), cfg)
}

/// The product limit of `g` at `x`, normalized by `f(1) = 1`.
pub fn gamma_type_12(g: &FunctionSpec, x: f64, cfg: &RunConfig) -> Result<GammaTypeValue> {
    let core_limit = product_log_limit(g, x, cfg)?;
    let log_value = core_limit.value;
    Ok(GammaTypeValue {
        x,
        value: log_value.exp(),
        log_value,
        method: Method::Direct12,
        core_limit,
        l_used: 1.0,
        c_used: 1.0,
    })
}

fn converged_l(g: &FunctionSpec, cfg: &RunConfig) -> Result<f64> {
    let l = estimate_l(g, cfg)?;
    if !l.converged || !(l.value > 0.0) || !l.value.is_finite() {
        return Err(Error::Inapplicable(format!(
            "no finite ratio limit g(n+1)/g(n) (last estimate {} after n = {}); the l-corrected product formula is inapplicable",
            l.value, l.n_used
        )));
    }
    // a ratio limit within rounding of 1 is taken as exactly 1
    Ok(if (l.value - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { l.value })
}

fn require_positive_constant(c: f64, what: &'static str) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { what, at: 1.0, value: c })
    }
}

/// The solution with `f(1) = f1` of an equation whose `g` has ratio limit `l`:
/// `f(x) = f1 · l^{(x²-x)/2} · F(x)` with `F` the product limit of `l^{-x} g(x)`.
pub fn gamma_type_24(g: &FunctionSpec, x: f64, f1: f64, cfg: &RunConfig) -> Result<GammaTypeValue> {
    require_positive_x(x)?;
    require_positive_constant(f1, "f(1)")?;
    let l = converged_l(g, cfg)?;
    let detrended = g.geometric_detrend(l);
    let core_limit = product_log_limit(&detrended, x, cfg)?;
    let log_value = f1.ln() + 0.5 * (x * x - x) * l.ln() + core_limit.value;
    Ok(GammaTypeValue {
        x,
        value: log_value.exp(),
        log_value,
        method: Method::Transformed24,
        core_limit,
        l_used: l,
        c_used: f1,
    })
}

/// `f(x+1) = c · l^{(x²+x)/2} · exp(σ(ln G)(x))` with `G(x) = l^{-x} g(x)`.
/// The returned value is located at `x + 1`, so any `x > -1` is admissible.
pub fn gamma_type_25(g: &FunctionSpec, x: f64, c: f64, cfg: &RunConfig) -> Result<GammaTypeValue> {
    if !(x > -1.0) || !x.is_finite() {
        return Err(Error::OutOfDomain { x, domain_min: -1.0, context: "summand form (x + 1 > 0)" });
    }
    require_positive_constant(c, "c")?;
    let l = converged_l(g, cfg)?;
    let ln_detrended = g.geometric_detrend(l).ln_spec();
    let core_limit = summand_limit(&ln_detrended, x, cfg)?;
    let log_value = c.ln() + 0.5 * (x * x + x) * l.ln() + core_limit.value;
    Ok(GammaTypeValue {
        x: x + 1.0,
        value: log_value.exp(),
        log_value,
        method: Method::Summand25,
        core_limit,
        l_used: l,
        c_used: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    #[serde(rename = "webster_11")]
    Webster11,
    RatioSequence,
    #[serde(rename = "rassias_trif_32")]
    RassiasTrif32,
    #[serde(rename = "class_G")]
    ClassG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// One sample: the grid parameter (`w` or `r`), the points used, the
/// measured ratio and its log-deviation from the target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub parameter: f64,
    pub points: Vec<f64>,
    pub ratio: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub verdict: ConditionVerdict,
    pub estimated_constant: Option<f64>,
    pub threshold: f64,
    pub evidence: Vec<Evidence>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convexity: Option<ConvexityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ConditionReport>,
}

impl ConditionReport {
    fn new(condition_id: ConditionId, cfg: &RunConfig) -> Self {
        ConditionReport {
            condition_id,
            verdict: ConditionVerdict::Inconclusive,
            estimated_constant: None,
            threshold: cfg.threshold,
            evidence: Vec::new(),
            notes: Vec::new(),
            convexity: None,
            components: Vec::new(),
        }
    }
}

fn scale_points(k: u32) -> impl Iterator<Item = f64> {
    let base = 2f64.powi(k as i32);
    (0..OFFSETS).map(move |j| base + j as f64 / OFFSETS as f64)
}

/// Grades a per-scale deviation profile (index = scale).
fn grade(profile: &[f64], threshold: f64) -> ConditionVerdict {
    let last = profile[profile.len() - 1];
    if last <= threshold {
        return ConditionVerdict::Holds;
    }
    let earlier = profile[profile.len().saturating_sub(4)];
    if last.is_finite() && last < 0.5 * earlier {
        ConditionVerdict::Inconclusive
    } else {
        ConditionVerdict::Fails
    }
}

fn combine(verdicts: &[ConditionVerdict]) -> ConditionVerdict {
    if verdicts.contains(&ConditionVerdict::Fails) {
        ConditionVerdict::Fails
    } else if verdicts.iter().all(|v| *v == ConditionVerdict::Holds) {
        ConditionVerdict::Holds
    } else {
        ConditionVerdict::Inconclusive
    }
}

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} grid must be non-empty and positive")));
    }
    Ok(())
}

/// Samples `log_ratio(param, x)` against `log_target(param)` for every
/// parameter over the dyadic scales; returns per-parameter verdicts.
fn scan_scales<F>(
    report: &mut ConditionReport,
    grid: &[f64],
    mut log_ratio: F,
    log_target: impl Fn(f64) -> f64,
    threshold: f64,
) -> Result<Vec<ConditionVerdict>>
where
    F: FnMut(f64, f64) -> Result<(Vec<f64>, f64)>,
{
    let mut verdicts = Vec::with_capacity(grid.len());
    for &p in grid {
        let mut profile = Vec::with_capacity(SCALE_CAP as usize);
        for k in 1..=SCALE_CAP {
            let mut worst: Option<Evidence> = None;
            for x in scale_points(k) {
                let (points, lr) = log_ratio(p, x)?;
                let deviation = (lr - log_target(p)).abs();
                if worst.as_ref().map_or(true, |w| deviation > w.deviation || deviation.is_nan()) {
                    worst = Some(Evidence { parameter: p, points, ratio: lr.exp(), deviation });
                }
            }
            let worst = worst.expect("scale has samples");
            profile.push(worst.deviation);
            report.evidence.push(worst);
        }
        verdicts.push(grade(&profile, threshold));
    }
    Ok(verdicts)
}

/// `g(x+w)/g(x) → 1` for every `w` in `w_grid`.
pub fn check_webster(g: &FunctionSpec, w_grid: &[f64], cfg: &RunConfig) -> Result<ConditionReport> {
    check_grid(w_grid, "w")?;
    let mut report = ConditionReport::new(ConditionId::Webster11, cfg);
    let verdicts = scan_scales(
        &mut report,
        w_grid,
        |w, x| Ok((vec![x, x + w], ln_g_ratio(g, x + w, x)?)),
        |_| 0.0,
        cfg.threshold,
    )?;
    report.verdict = combine(&verdicts);
    report.estimated_constant = Some(1.0);
    report.notes.push(format!(
        "sampled x = 2^k + j/{OFFSETS}, k <= {SCALE_CAP}; deviation = |ln(g(x+w)/g(x))|"
    ));
    Ok(report)
}

/// `g(n+1)/g(n) → l` over the integers; `estimated_constant` is `l`.
pub fn check_ratio_sequence(g: &FunctionSpec, cfg: &RunConfig) -> Result<ConditionReport> {
    let cfg_trace = RunConfig { record_trace: true, ..*cfg };
    let l = estimate_l(g, &cfg_trace)?;
    let mut report = ConditionReport::new(ConditionId::RatioSequence, cfg);
    let finite = l.value.is_finite() && l.value > 0.0;
    report.verdict = if l.converged && finite {
        ConditionVerdict::Holds
    } else if finite && l.last_delta.abs() <= cfg.threshold {
        ConditionVerdict::Inconclusive
    } else {
        ConditionVerdict::Fails
    };
    report.estimated_constant = finite.then_some(l.value);
    if let Some(trace) = &l.trace {
        for t in trace {
            let acc = t.accelerated.unwrap_or(t.value);
            report.evidence.push(Evidence {
                parameter: t.n as f64,
                points: vec![t.n as f64, (t.n + 1) as f64],
                ratio: t.value,
                deviation: (t.value - acc).abs(),
            });
        }
    }
    report.notes.push(format!(
        "limit of g(n+1)/g(n): converged = {}, n_used = {}, last_delta = {:e}",
        l.converged, l.n_used, l.last_delta
    ));
    Ok(report)
}

/// `g(x+r)/(x^r g(x)) → a^r` for one `a > 0` and every `r` in `r_grid`;
/// `a` is estimated from the `r = 1` samples.
pub fn check_rassias_trif(g: &FunctionSpec, r_grid: &[f64], cfg: &RunConfig) -> Result<ConditionReport> {
    check_grid(r_grid, "r")?;
    let mut report = ConditionReport::new(ConditionId::RassiasTrif32, cfg);
    let log_ratio = |r: f64, x: f64| -> Result<f64> { Ok(ln_g_ratio(g, x + r, x)? - r * x.ln()) };

    let h: Vec<f64> = (1..=SCALE_CAP).map(|k| log_ratio(1.0, 2f64.powi(k as i32))).collect::<Result<_>>()?;
    let n = h.len();
    let (a, b, c) = (h[n - 3], h[n - 2], h[n - 1]);
    let settled = (c - b).abs() <= cfg.threshold;
    let ln_a = if settled { aitken(a, b, c) } else { c };
    report.estimated_constant = Some(ln_a.exp());
    if !settled {
        report.notes.push(format!(
            "g(x+1)/(x g(x)) does not settle: ln-ratio moved by {:e} between the last two scales",
            c - b
        ));
    }
    let verdicts = scan_scales(
        &mut report,
        r_grid,
        |r, x| Ok((vec![x, x + r], log_ratio(r, x)?)),
        |r| r * ln_a,
        cfg.threshold,
    )?;
    report.verdict = if settled && ln_a.is_finite() { combine(&verdicts) } else { ConditionVerdict::Fails };
    report.notes.push(format!(
        "sampled x = 2^k + j/{OFFSETS}, k <= {SCALE_CAP}; deviation = |ln(g(x+r)/(x^r g(x))) - r ln a|"
    ));
    Ok(report)
}

/// Scan window for the eventual log-concavity part of [`check_class_g`].
pub const CLASS_G_WINDOW: (f64, f64) = (10.0, 50.0);

/// Membership in the class of eventually log-concave `g` with
/// `g(n+1)/g(n) → 1`. For such `g` the ratio condition and the Webster
/// condition are equivalent, which the report cross-checks.
pub fn check_class_g(g: &FunctionSpec, cfg: &RunConfig) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(ConditionId::ClassG, cfg);
    let scan = is_n_convex(
        g,
        ScanParams {
            order: 1,
            window: CLASS_G_WINDOW,
            samples: cfg.samples,
            log_domain: true,
            tol_sign: cfg.tol_sign,
            seed: cfg.seed,
        },
    )?;
    let log_concave = matches!(scan.verdict, Verdict::Concave | Verdict::Degenerate);
    let ratio = check_ratio_sequence(g, cfg)?;
    let l_is_one = ratio.verdict == ConditionVerdict::Holds
        && ratio.estimated_constant.is_some_and(|l| (l - 1.0).abs() <= cfg.threshold);
    let webster = check_webster(g, &[0.5, 1.0, 2.0], cfg)?;

    report.verdict = if log_concave && l_is_one {
        ConditionVerdict::Holds
    } else if ratio.verdict == ConditionVerdict::Inconclusive && log_concave {
        ConditionVerdict::Inconclusive
    } else {
        ConditionVerdict::Fails
    };
    report.estimated_constant = ratio.estimated_constant;
    if !log_concave {
        report.notes.push(format!("ln g is not 1-concave on {:?}: scan verdict {:?}", CLASS_G_WINDOW, scan.verdict));
    }
    if !l_is_one {
        report.notes.push(format!("ratio condition with l = 1 not met (l = {:?})", ratio.estimated_constant));
    }
    if log_concave {
        let agree = (webster.verdict == ConditionVerdict::Holds) == l_is_one;
        report.notes.push(format!("webster condition verdict {:?}; equivalence with the ratio condition: {agree}", webster.verdict));
        if !agree {
            report.verdict = ConditionVerdict::Inconclusive;
        }
    }
    report.convexity = Some(scan);
    report.components = vec![ratio, webster];
    Ok(report)
}
