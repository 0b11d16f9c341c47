use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fxeq::expr::parse_binding;
use fxeq::{Acceleration, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fxeq", version, about = "Numerical solutions of f(x+1) = g(x) f(x)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the gamma-type solution f at one or more points.
    Eval(EvalArgs),
    /// Evaluate the limit summand of f.
    Summand(SummandArgs),
    /// Limit of the ratio g(n+1)/g(n).
    Lim(LimArgs),
    /// Scan f (or ln f) for n-convexity.
    Convexity(ConvexityArgs),
    /// Check asymptotic conditions on g.
    Check(CheckArgs),
    /// Run a packaged experiment.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Named constant used in expressions, as name=value; repeatable.
    #[arg(long = "param", short = 'p', value_parser = binding, global = true)]
    pub params: Vec<(String, f64)>,
    #[arg(long, global = true, default_value_t = RunConfig::default().tol)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = RunConfig::default().stable_steps)]
    pub stable_steps: usize,
    #[arg(long, global = true, default_value_t = RunConfig::default().n_max)]
    pub n_max: u64,
    /// Sequence acceleration: none or aitken.
    #[arg(long, global = true, default_value = "aitken", value_parser = accel)]
    pub accel: Acceleration,
    /// Evaluate the stopping rule every k-th term (no acceleration only).
    #[arg(long, global = true, default_value_t = 1)]
    pub stride: u64,
    #[arg(long, global = true, default_value_t = RunConfig::default().seed)]
    pub seed: u64,
    /// Random point systems per convexity scan.
    #[arg(long, global = true, default_value_t = RunConfig::default().samples)]
    pub samples: usize,
    /// Relative zero band for divided-difference signs.
    #[arg(long, global = true, default_value_t = RunConfig::default().tol_sign)]
    pub tol_sign: f64,
    /// Deviation threshold for asymptotic condition checks.
    #[arg(long, global = true, default_value_t = RunConfig::default().threshold)]
    pub threshold: f64,
    /// Record sequence traces (written as CSV).
    #[arg(long, global = true)]
    pub trace: bool,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    pub output: Output,
    /// Directory for report and trace files.
    #[arg(long, global = true, env = "FXEQ_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            tol: self.tol,
            stable_steps: self.stable_steps,
            n_max: self.n_max,
            acceleration: self.accel,
            check_stride: self.stride,
            seed: self.seed,
            samples: self.samples,
            tol_sign: self.tol_sign,
            threshold: self.threshold,
            record_trace: self.trace || self.output == Output::Csv,
        }
    }
}

/// One point, a comma-separated list, or a `lo:hi:step` grid.
#[derive(Debug, Clone, Args)]
pub struct Points {
    #[arg(long = "x", value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "grid")]
    pub x: Vec<f64>,
    /// Grid lo:hi:step with lo < hi and step > 0.
    #[arg(long, value_parser = grid, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step * (1.0 + 1e-12)).floor() as usize;
        (0..=count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl Points {
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        match (&self.grid, self.x.is_empty()) {
            (Some(g), _) => Ok(g.points()),
            (None, false) => Ok(self.x.clone()),
            (None, true) => Err("one of --x or --grid is required".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    /// Plain product limit with f(1) = 1.
    Direct,
    /// Product limit of l^{-x} g(x), reassembled with f(1) and l.
    Transformed,
    /// Exponential of the limit summand of ln(l^{-x} g(x)).
    Summand,
    /// All three, one result row per method.
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub g: String,
    #[command(flatten)]
    pub points: Points,
    #[arg(long, value_enum, default_value_t = EvalMethod::Direct)]
    pub method: EvalMethod,
    /// f(1) for the transformed and summand methods.
    #[arg(long, default_value_t = 1.0)]
    pub f1: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SummandArgs {
    #[arg(long)]
    pub f: String,
    #[command(flatten)]
    pub points: Points,
    /// Report exp of the summand instead of the summand.
    #[arg(long)]
    pub exp: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LimArgs {
    #[arg(long)]
    pub g: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ConvexityArgs {
    #[arg(long)]
    pub f: String,
    /// Scan ln f instead of f.
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub order: Vec<usize>,
    /// Window lo:hi.
    #[arg(long, value_parser = window)]
    pub window: (f64, f64),
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    Webster,
    Ratio,
    RassiasTrif,
    ClassG,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub g: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "webster,ratio")]
    pub condition: Vec<Condition>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub w_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub r_grid: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[command(subcommand)]
    pub demo: Demo,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Order-2 log-concavity of Γ against Γ(x) e^{ε sin 2πx}.
    BohrMollerup {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5")]
        eps: Vec<f64>,
        #[arg(long, value_parser = window, default_value = "2:10")]
        window: (f64, f64),
    },
    /// g(x) = x a^x against a^{(x²-x)/2} Γ(x).
    Geometric {
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,2.5")]
        xs: Vec<f64>,
    },
    /// Liminf of the product-limit sequence.
    Liminf {
        #[arg(long)]
        g: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        xs: Vec<f64>,
        /// Candidate solution to compare against; repeatable.
        #[arg(long)]
        candidate: Vec<String>,
    },
    /// Log-convexity verdicts over several orders.
    Fingerprint {
        #[arg(long)]
        f: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        orders: Vec<usize>,
        #[arg(long, value_parser = window, default_value = "2:30")]
        window: (f64, f64),
    },
    /// Series for (ln Γ)'' and (ln Γ)'''.
    Polygamma {
        #[arg(long, value_delimiter = ',', default_value = "1")]
        x: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        terms: usize,
    },
}

impl Demo {
    pub fn name(&self) -> &'static str {
        match self {
            Demo::BohrMollerup { .. } => "bohr-mollerup",
            Demo::Geometric { .. } => "geometric",
            Demo::Liminf { .. } => "liminf",
            Demo::Fingerprint { .. } => "fingerprint",
            Demo::Polygamma { .. } => "polygamma",
        }
    }
}

fn binding(s: &str) -> Result<(String, f64), String> {
    parse_binding(s).map_err(|e| e.to_string())
}

fn accel(s: &str) -> Result<Acceleration, String> {
    s.parse().map_err(|e: fxeq::Error| e.to_string())
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

fn grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let (lo, hi, step) = (real(lo)?, real(hi)?, real(step)?);
    if !(lo < hi) || !(step > 0.0) {
        return Err(format!("grid needs lo < hi and step > 0, got {s:?}"));
    }
    Ok(Grid { lo, hi, step })
}

fn window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let (lo, hi) = (real(lo)?, real(hi)?);
    if !(lo < hi) {
        return Err(format!("window needs lo < hi, got {s:?}"));
    }
    Ok((lo, hi))
}
