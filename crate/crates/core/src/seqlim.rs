//! Limits of real sequences.
//!
//! Without acceleration the engine iterates `a_1, a_2, …` and stops once
//! `stable_steps` consecutive increments (taken every `check_stride` terms)
//! are at most `tol`.
//!
//! With Aitken acceleration the raw terms are still generated one by one,
//! but the accelerated sequence is built from the dyadic checkpoints
//! `a_1, a_2, a_4, a_8, …`: an iterated Δ² table (up to [`AITKEN_DEPTH`]
//! levels) is fed one checkpoint at a time and the stopping rule is applied
//! to its successive estimates. On dyadic indices an `O(1/n)` error becomes a
//! geometric error of ratio 1/2, on which Δ² is exact, so the product limits
//! of this crate (all of which converge like `c/n + d/n^2 + …`) reach
//! `1e-10` within a few hundred thousand terms. Each Δ² step falls back to
//! the newest term when the three inputs do not contract, which keeps
//! divergent sequences from producing a spurious "anti-limit".

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of stacked Δ² levels in accelerated mode.
pub const AITKEN_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceleration {
    None,
    Aitken,
}

impl std::str::FromStr for Acceleration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Acceleration::None),
            "aitken" => Ok(Acceleration::Aitken),
            other => Err(Error::InvalidArgument(format!("unknown acceleration {other:?} (none | aitken)"))),
        }
    }
}

/// Numerical policy shared by every limit and scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    /// Absolute increment threshold of the stopping rule.
    pub tol: f64,
    /// Consecutive sub-`tol` increments required.
    pub stable_steps: usize,
    pub n_max: u64,
    pub acceleration: Acceleration,
    /// Raw mode only: increments are measured every `check_stride` terms.
    pub check_stride: u64,
    /// Seed for sampled point systems.
    pub seed: u64,
    /// Random point systems per convexity scan.
    pub samples: usize,
    /// Relative zero band for divided-difference signs.
    pub tol_sign: f64,
    /// Deviation threshold of the asymptotic condition checkers.
    pub threshold: f64,
    /// Record `(n, a_n, estimate)` at dyadic checkpoints.
    pub record_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tol: 1e-10,
            stable_steps: 3,
            n_max: 1_000_000,
            acceleration: Acceleration::Aitken,
            check_stride: 1,
            seed: 7,
            samples: 200,
            tol_sign: 1e-9,
            threshold: 1e-4,
            record_trace: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.stable_steps < 1 {
            return Err(Error::InvalidConfig("stable_steps must be >= 1".into()));
        }
        if self.n_max < self.stable_steps as u64 + 2 {
            return Err(Error::InvalidConfig(format!(
                "n_max must be >= stable_steps + 2, got n_max = {}",
                self.n_max
            )));
        }
        if self.check_stride < 1 {
            return Err(Error::InvalidConfig("check_stride must be >= 1".into()));
        }
        if !(self.tol_sign >= 0.0) || !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig("tol_sign must be >= 0 and threshold > 0".into()));
        }
        Ok(())
    }

    pub fn with_acceleration(mut self, acceleration: Acceleration) -> Self {
        self.acceleration = acceleration;
        self
    }

    pub fn with_n_max(mut self, n_max: u64) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub n: u64,
    pub value: f64,
    pub accelerated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitResult {
    pub value: f64,
    pub n_used: u64,
    pub last_delta: f64,
    pub converged: bool,
    pub accelerated: bool,
    /// Δ² steps that fell back to the newest term.
    pub fallbacks: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

/// One Aitken Δ² step: `c - (c-b)^2 / (c - 2b + a)`, or `c` when the
/// denominator vanishes.
pub fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let denom = c - 2.0 * b + a;
    if denom == 0.0 {
        return c;
    }
    c - (c - b) * (c - b) / denom
}

/// Δ² restricted to contracting triples; `None` means "keep the raw term".
fn contracting_aitken(a: f64, b: f64, c: f64) -> Option<f64> {
    let d1 = b - a;
    let d2 = c - b;
    if d2 == 0.0 {
        return Some(c);
    }
    if d1 == 0.0 || (d2 / d1).abs() >= 1.0 {
        return None;
    }
    let v = c - d2 * d2 / (d2 - d1);
    v.is_finite().then_some(v)
}

/// Iterated Δ² table over a stream of values; every level keeps only the
/// three most recent entries.
#[derive(Debug, Clone)]
pub struct DeltaSquaredTable {
    levels: Vec<Vec<f64>>,
    depth: usize,
    fallbacks: u64,
}

impl DeltaSquaredTable {
    pub fn new(depth: usize) -> Self {
        DeltaSquaredTable { levels: vec![Vec::new(); depth + 1], depth, fallbacks: 0 }
    }

    /// Feeds the next value and returns the current best estimate: the
    /// newest entry of the deepest populated level.
    pub fn push(&mut self, value: f64) -> f64 {
        let mut v = value;
        for level in 0..=self.depth {
            let row = &mut self.levels[level];
            row.push(v);
            if row.len() > 3 {
                row.remove(0);
            }
            if level == self.depth || row.len() < 3 {
                break;
            }
            v = match contracting_aitken(row[0], row[1], row[2]) {
                Some(acc) => acc,
                None => {
                    self.fallbacks += 1;
                    row[2]
                }
            };
        }
        self.estimate().unwrap_or(value)
    }

    pub fn estimate(&self) -> Option<f64> {
        self.levels.iter().rev().find_map(|row| row.last().copied())
    }

    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }
}

/// Increment-based stopping rule.
struct Stopper {
    tol: f64,
    need: usize,
    run: usize,
    last: Option<f64>,
    last_delta: f64,
}

impl Stopper {
    fn new(cfg: &RunConfig) -> Self {
        Stopper { tol: cfg.tol, need: cfg.stable_steps, run: 0, last: None, last_delta: f64::INFINITY }
    }

    fn observe(&mut self, v: f64) -> bool {
        if let Some(prev) = self.last {
            self.last_delta = v - prev;
            if self.last_delta.abs() <= self.tol {
                self.run += 1;
            } else {
                self.run = 0;
            }
        }
        self.last = Some(v);
        self.run >= self.need
    }
}

/// Limit of the sequence `seq(1), seq(2), …`.
///
/// `seq` is called with consecutive indices starting at 1, so incremental
/// generators may keep state between calls. A non-finite term aborts with
/// [`Error::NonFiniteTerm`]; running out of terms is not an error and yields
/// `converged = false` with the best estimate.
pub fn limit<F>(mut seq: F, cfg: &RunConfig) -> Result<LimitResult>
where
    F: FnMut(u64) -> Result<f64>,
{
    cfg.validate()?;
    let mut next = |n: u64| -> Result<f64> {
        let v = seq(n)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteTerm { index: n, value: v })
        }
    };
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut stop = Stopper::new(cfg);

    match cfg.acceleration {
        Acceleration::None => {
            let mut value = f64::NAN;
            let mut n = 0;
            while n < cfg.n_max {
                n += 1;
                value = next(n)?;
                if let Some(t) = trace.as_mut() {
                    if n.is_power_of_two() || n == cfg.n_max {
                        t.push(TracePoint { n, value, accelerated: None });
                    }
                }
                if (n % cfg.check_stride == 0 || n == 1) && stop.observe(value) {
                    return Ok(LimitResult {
                        value,
                        n_used: n,
                        last_delta: stop.last_delta,
                        converged: true,
                        accelerated: false,
                        fallbacks: 0,
                        trace,
                    });
                }
            }
            Ok(LimitResult {
                value,
                n_used: n,
                last_delta: stop.last_delta,
                converged: false,
                accelerated: false,
                fallbacks: 0,
                trace,
            })
        }
        Acceleration::Aitken => {
            let mut table = DeltaSquaredTable::new(AITKEN_DEPTH);
            let mut estimate = f64::NAN;
            let mut checkpoint = 1u64;
            let mut n = 0;
            while checkpoint <= cfg.n_max {
                let mut raw = f64::NAN;
                while n < checkpoint {
                    n += 1;
                    raw = next(n)?;
                }
                estimate = table.push(raw);
                if let Some(t) = trace.as_mut() {
                    t.push(TracePoint { n, value: raw, accelerated: Some(estimate) });
                }
                if stop.observe(estimate) {
                    return Ok(LimitResult {
                        value: estimate,
                        n_used: n,
                        last_delta: stop.last_delta,
                        converged: true,
                        accelerated: true,
                        fallbacks: table.fallbacks(),
                        trace,
                    });
                }
                match checkpoint.checked_mul(2) {
                    Some(c) => checkpoint = c,
                    None => break,
                }
            }
            Ok(LimitResult {
                value: estimate,
                n_used: n,
                last_delta: stop.last_delta,
                converged: false,
                accelerated: true,
                fallbacks: table.fallbacks(),
                trace,
            })
        }
    }
}

/// Convenience wrapper for sequences given in closed form.
pub fn limit_of<F>(f: F, cfg: &RunConfig) -> Result<LimitResult>
where
    F: Fn(u64) -> f64,
{
    limit(|n| Ok(f(n)), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(n_max: u64, tol: f64) -> RunConfig {
        RunConfig { tol, n_max, acceleration: Acceleration::None, ..RunConfig::default() }
    }

    #[test]
    fn aitken_examples() {
        assert_eq!(aitken(2.0, 1.5, 1.25), 1.0);
        assert_eq!(aitken(1.0, 1.0, 1.0), 1.0);
        let v = aitken(1.0, 0.5, 1.0 / 3.0);
        assert!((v - 0.25).abs() < 1e-15);
        assert!(v.abs() < 1.0 / 3.0);
    }

    #[test]
    fn harmonic_tail_without_acceleration_does_not_converge() {
        let r = limit_of(|n| 1.0 / n as f64, &raw(1000, 1e-6)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.n_used, 1000);
        assert!((r.value - 1e-3).abs() < 1e-15);
        assert!(!r.accelerated);
    }

    #[test]
    fn geometric_error_is_removed_exactly() {
        let r = limit_of(|n| 1.0 + 0.5f64.powi(n as i32), &RunConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.value, 1.0);
        assert!(r.accelerated);
    }

    #[test]
    fn euler_limit_with_acceleration() {
        let r = limit_of(|n| (n as f64 * (1.0 / n as f64).ln_1p()).exp(), &RunConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.value - std::f64::consts::E).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn divergent_sequences_are_not_converged() {
        // on dyadic indices n grows geometrically; the guard must reject the anti-limit 0
        let r = limit_of(|n| n as f64, &RunConfig::default()).unwrap();
        assert!(!r.converged);
        assert!(r.value > 1e5);
        let r = limit_of(|n| if n % 2 == 0 { 1.0 } else { -1.0 }, &raw(10_000, 1e-10)).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn non_finite_terms_abort_with_their_index() {
        let err = limit_of(|n| if n == 5 { f64::NAN } else { 1.0 / n as f64 }, &raw(100, 1e-12)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteTerm { index: 5, .. }));
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig { tol: 0.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { stable_steps: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { n_max: 4, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { check_stride: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
        assert_eq!("aitken".parse::<Acceleration>().unwrap(), Acceleration::Aitken);
        assert!("richardson".parse::<Acceleration>().is_err());
    }

    #[test]
    fn stride_and_trace() {
        let cfg = RunConfig { check_stride: 10, record_trace: true, ..raw(100_000, 1e-9) };
        let r = limit_of(|n| 2.0 + 0.9f64.powi(n as i32), &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.n_used % 10, 0);
        let t = r.trace.unwrap();
        assert!(t.iter().all(|p| p.n.is_power_of_two()));
        assert_eq!(t[0].n, 1);
    }

    #[test]
    fn delta_squared_table_levels() {
        let mut t = DeltaSquaredTable::new(2);
        assert_eq!(t.push(1.0), 1.0);
        assert_eq!(t.push(0.5), 0.5);
        // 1, 1/2, 1/4 is geometric: level one already holds the limit
        assert_eq!(t.push(0.25), 0.0);
        assert_eq!(t.fallbacks(), 0);
    }
}
