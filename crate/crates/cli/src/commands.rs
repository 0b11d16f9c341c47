use std::collections::BTreeMap;
use std::path::Path;

use fxeq::convexity::{is_n_convex, loggamma_d2, loggamma_d3, ConvexityReport, ScanParams};
use fxeq::experiments::{
    bohr_mollerup_demo, example_23_check, question1_probe, question2_fingerprint, GeometricReport,
    FingerprintReport, LiminfReport, UniquenessReport,
};
use fxeq::gammatype::{
    check_class_g, check_rassias_trif, check_ratio_sequence, check_webster, estimate_l, gamma_type_12,
    gamma_type_24, gamma_type_25, ConditionReport, GammaTypeValue, Method,
};
use fxeq::report;
use fxeq::summability::{r1_limit, r1_threshold, summand_limit};
use fxeq::{Error, FunctionSpec, LimitResult, Result, RunConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CheckArgs, Command, Common, Condition, ConvexityArgs, Demo, DemoArgs, EvalArgs, EvalMethod, LimArgs, Output, SummandArgs};

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub x: Option<f64>,
    pub value: f64,
    pub log_value: f64,
    pub n_used: u64,
    pub last_delta: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip)]
    pub trace: Option<Vec<fxeq::seqlim::TracePoint>>,
}

impl ResultRow {
    fn from_limit(x: Option<f64>, value: f64, log_value: f64, lim: &LimitResult, method: Option<Method>) -> Self {
        ResultRow {
            x,
            value,
            log_value,
            n_used: lim.n_used,
            last_delta: lim.last_delta,
            converged: lim.converged,
            method,
            trace: lim.trace.clone(),
        }
    }

    fn from_gamma(v: GammaTypeValue) -> Self {
        Self::from_limit(Some(v.x), v.value, v.log_value, &v.core_limit, Some(v.method))
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Convexity(ConvexityReport),
    Condition(Box<ConditionReport>),
    Summability(SummabilityDiagnostic),
    Uniqueness(Box<UniquenessReport>),
    Geometric(GeometricReport),
    Liminf(LiminfReport),
    Fingerprint(Box<FingerprintReport>),
    Polygamma(PolygammaRow),
}

#[derive(Debug, Clone, Serialize)]
pub struct SummabilityDiagnostic {
    pub r1: LimitResult,
    pub r1_threshold: f64,
    pub summable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolygammaRow {
    pub x: f64,
    pub terms: usize,
    pub loggamma_d2: f64,
    pub loggamma_d3: f64,
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub inputs: Value,
    pub cfg: RunConfig,
    pub results: Vec<ResultRow>,
    pub reports: Vec<Report>,
}

impl Outcome {
    pub fn all_converged(&self) -> bool {
        self.results.iter().all(|r| r.converged)
    }
}

fn spec(text: &str, common: &Common) -> Result<FunctionSpec> {
    let params: BTreeMap<String, f64> = common.params.iter().cloned().collect();
    FunctionSpec::parse(text, &params)
}

fn params_json(common: &Common) -> Value {
    let params: BTreeMap<&str, f64> = common.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    json!(params)
}

fn points(p: &crate::args::Points) -> Result<Vec<f64>> {
    p.resolve().map_err(Error::InvalidArgument)
}

/// Evaluates `f` at every point in parallel, keeping input order.
fn par_map<T: Send>(xs: &[f64], f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    xs.par_iter().map(|&x| f(x)).collect::<Vec<_>>().into_iter().collect()
}

pub fn run(command: &Command) -> Result<(Outcome, &Common)> {
    let outcome = match command {
        Command::Eval(a) => (eval(a)?, &a.common),
        Command::Summand(a) => (summand(a)?, &a.common),
        Command::Lim(a) => (lim(a)?, &a.common),
        Command::Convexity(a) => (convexity(a)?, &a.common),
        Command::Check(a) => (check(a)?, &a.common),
        Command::Demo(a) => (demo(a)?, &a.common),
    };
    Ok(outcome)
}

fn eval(a: &EvalArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let g = spec(&a.g, &a.common)?;
    let xs = points(&a.points)?;
    let methods: &[EvalMethod] = match a.method {
        EvalMethod::All => &[EvalMethod::Direct, EvalMethod::Transformed, EvalMethod::Summand],
        ref m => std::slice::from_ref(m),
    };
    let rows = par_map(&xs, |x| {
        methods
            .iter()
            .map(|m| {
                let v = match m {
                    EvalMethod::Direct => gamma_type_12(&g, x, &cfg)?,
                    EvalMethod::Transformed => gamma_type_24(&g, x, a.f1, &cfg)?,
                    _ => gamma_type_25(&g, x - 1.0, a.f1, &cfg)?,
                };
                Ok(ResultRow::from_gamma(v))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Outcome {
        command: "eval".into(),
        inputs: json!({
            "g": a.g,
            "params": params_json(&a.common),
            "x": xs,
            "method": format!("{:?}", a.method).to_lowercase(),
            "f1": a.f1,
        }),
        cfg,
        results: rows.into_iter().flatten().collect(),
        reports: Vec::new(),
    })
}

fn summand(a: &SummandArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let f = spec(&a.f, &a.common)?;
    let xs = points(&a.points)?;
    let results = par_map(&xs, |x| {
        let lim = summand_limit(&f, x, &cfg)?;
        let (value, log_value) = if a.exp { (lim.value.exp(), lim.value) } else { (lim.value, lim.value.ln()) };
        Ok(ResultRow::from_limit(Some(x), value, log_value, &lim, None))
    })?;
    let r1 = r1_limit(&f, &RunConfig { record_trace: false, ..cfg })?;
    let threshold = r1_threshold(&cfg);
    let summable = r1.converged && r1.value.abs() <= threshold;
    Ok(Outcome {
        command: "summand".into(),
        inputs: json!({ "f": a.f, "params": params_json(&a.common), "x": xs, "exp": a.exp }),
        cfg,
        results,
        reports: vec![Report::Summability(SummabilityDiagnostic { r1, r1_threshold: threshold, summable })],
    })
}

fn lim(a: &LimArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let g = spec(&a.g, &a.common)?;
    let l = estimate_l(&g, &cfg)?;
    Ok(Outcome {
        command: "lim".into(),
        inputs: json!({ "g": a.g, "params": params_json(&a.common) }),
        cfg,
        results: vec![ResultRow::from_limit(None, l.value, l.value.ln(), &l, None)],
        reports: Vec::new(),
    })
}

fn convexity(a: &ConvexityArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let f = spec(&a.f, &a.common)?;
    let reports = a
        .order
        .par_iter()
        .map(|&order| {
            is_n_convex(
                &f,
                ScanParams {
                    order,
                    window: a.window,
                    samples: cfg.samples,
                    log_domain: a.log,
                    tol_sign: cfg.tol_sign,
                    seed: cfg.seed,
                },
            )
            .map(Report::Convexity)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        command: "convexity".into(),
        inputs: json!({
            "f": a.f,
            "params": params_json(&a.common),
            "log": a.log,
            "order": a.order,
            "window": [a.window.0, a.window.1],
        }),
        cfg,
        results: Vec::new(),
        reports,
    })
}

fn check(a: &CheckArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let g = spec(&a.g, &a.common)?;
    let reports = a
        .condition
        .par_iter()
        .map(|c| {
            let r = match c {
                Condition::Webster => check_webster(&g, &a.w_grid, &cfg)?,
                Condition::Ratio => check_ratio_sequence(&g, &cfg)?,
                Condition::RassiasTrif => check_rassias_trif(&g, &a.r_grid, &cfg)?,
                Condition::ClassG => check_class_g(&g, &cfg)?,
            };
            Ok(Report::Condition(Box::new(r)))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = a.condition.iter().map(|c| format!("{c:?}").to_lowercase()).collect();
    Ok(Outcome {
        command: "check".into(),
        inputs: json!({
            "g": a.g,
            "params": params_json(&a.common),
            "condition": names,
            "w_grid": a.w_grid,
            "r_grid": a.r_grid,
        }),
        cfg,
        results: Vec::new(),
        reports,
    })
}

fn demo(a: &DemoArgs) -> Result<Outcome> {
    let cfg = a.common.config();
    cfg.validate()?;
    let (inputs, reports) = match &a.demo {
        Demo::BohrMollerup { eps, window } => {
            let dir = a.common.out_dir.as_deref();
            let r = bohr_mollerup_demo(eps, *window, &cfg, dir)?;
            (json!({ "eps": eps, "window": [window.0, window.1] }), vec![Report::Uniqueness(Box::new(r))])
        }
        Demo::Geometric { a: base, xs } => {
            let r = example_23_check(*base, xs, &cfg)?;
            (json!({ "a": base, "xs": xs }), vec![Report::Geometric(r)])
        }
        Demo::Liminf { g, xs, candidate } => {
            let g_spec = spec(g, &a.common)?;
            let candidates = candidate.iter().map(|c| spec(c, &a.common)).collect::<Result<Vec<_>>>()?;
            let r = question1_probe(&g_spec, xs, &candidates, &cfg)?;
            (
                json!({ "g": g, "params": params_json(&a.common), "xs": xs, "candidate": candidate }),
                vec![Report::Liminf(r)],
            )
        }
        Demo::Fingerprint { f, orders, window } => {
            let f_spec = spec(f, &a.common)?;
            let r = question2_fingerprint(&f_spec, orders, *window, &cfg)?;
            (
                json!({ "f": f, "params": params_json(&a.common), "orders": orders, "window": [window.0, window.1] }),
                vec![Report::Fingerprint(Box::new(r))],
            )
        }
        Demo::Polygamma { x, terms } => {
            let rows = x
                .iter()
                .map(|&x| {
                    Ok(Report::Polygamma(PolygammaRow {
                        x,
                        terms: *terms,
                        loggamma_d2: loggamma_d2(x, *terms)?,
                        loggamma_d3: loggamma_d3(x, *terms)?,
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            (json!({ "x": x, "terms": terms }), rows)
        }
    };
    Ok(Outcome { command: format!("demo {}", a.demo.name()), inputs, cfg, results: Vec::new(), reports })
}

/// `x,n,value,accelerated` rows for every traced result.
pub fn traces_csv(results: &[ResultRow]) -> String {
    let mut out = String::from("x,n,value,accelerated\n");
    for r in results {
        let Some(trace) = &r.trace else { continue };
        let x = r.x.map(report::format_f64).unwrap_or_default();
        for line in report::trace_csv(trace).lines().skip(1) {
            out.push_str(&x);
            out.push(',');
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Renders the outcome for stdout and writes report files when an output
/// directory is set.
pub fn emit(outcome: &Outcome, common: &Common) -> Result<String> {
    let json = report::to_json_pretty(outcome)?;
    if let Some(dir) = &common.out_dir {
        std::fs::create_dir_all(dir)?;
        let stem = outcome.command.replace(' ', "_");
        write_file(&dir.join(format!("{stem}.json")), &json)?;
        if outcome.results.iter().any(|r| r.trace.is_some()) {
            write_file(&dir.join(format!("{stem}_trace.csv")), &traces_csv(&outcome.results))?;
        }
    }
    Ok(match common.output {
        Output::Json => json,
        Output::Csv => traces_csv(&outcome.results),
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    std::fs::write(path, body)?;
    Ok(())
}
