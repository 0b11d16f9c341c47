//! Divided differences, n-convexity scans and the reference log-gamma.
//!
//! A function is n-convex on an interval when every divided difference of
//! order n+1 over points of the interval is nonnegative (n-concave when every
//! such difference is nonpositive). Scans here sample a deterministic lattice
//! plus seeded random point systems and grade the observed signs.
//!
//! The divided-difference recursion is the standard Newton one,
//! `[x_i..x_{i+k}] = ([x_{i+1}..x_{i+k}] - [x_i..x_{i+k-1}]) / (x_{i+k} - x_i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::FunctionSpec;

/// Triangular table of divided differences; `table[k][i]` is `[x_i, …, x_{i+k}; f]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DividedDifferenceTable {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub table: Vec<Vec<f64>>,
}

impl DividedDifferenceTable {
    pub fn from_values(points: &[f64], values: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching non-empty point/value lists, got {} and {}",
                points.len(),
                values.len()
            )));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(format!(
                "points must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let mut table = vec![values.to_vec()];
        for k in 1..points.len() {
            let prev = &table[k - 1];
            let row = (0..points.len() - k)
                .map(|i| (prev[i + 1] - prev[i]) / (points[i + k] - points[i]))
                .collect();
            table.push(row);
        }
        Ok(DividedDifferenceTable { points: points.to_vec(), values: values.to_vec(), table })
    }

    pub fn entry(&self, order: usize, start: usize) -> Option<f64> {
        self.table.get(order).and_then(|row| row.get(start)).copied()
    }

    /// The highest-order entry `[x_0, …, x_last; f]`.
    pub fn top(&self) -> f64 {
        self.table[self.table.len() - 1][0]
    }

    pub fn order(&self) -> usize {
        self.table.len() - 1
    }
}

fn sample(f: &FunctionSpec, x: f64, log_domain: bool) -> Result<f64> {
    if log_domain {
        crate::gammatype::ln_positive(f, x, "f under log_domain")
    } else {
        Ok(f.evaluate(x)?)
    }
}

/// Divided-difference table of `f` (or of `ln f` when `log_domain`) at `points`.
pub fn divided_differences(points: &[f64], f: &FunctionSpec, log_domain: bool) -> Result<DividedDifferenceTable> {
    if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!("points must be strictly increasing ({} then {})", w[0], w[1])));
    }
    let values = points.iter().map(|&x| sample(f, x, log_domain)).collect::<Result<Vec<_>>>()?;
    DividedDifferenceTable::from_values(points, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convex,
    Concave,
    Neither,
    Degenerate,
}

/// One sampled point system and its top divided difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub order: usize,
    pub log_domain: bool,
    pub window: (f64, f64),
    pub samples: usize,
    pub seed: u64,
    pub tol_sign: f64,
    /// Number of point systems evaluated (lattice plus random).
    pub systems: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    pub verdict: Verdict,
    /// Point system whose sign contradicts the majority, for `neither`.
    pub counterexample: Option<Witness>,
    /// Largest positive entry beyond the zero band, if any.
    pub positive_witness: Option<Witness>,
    /// Most negative entry beyond the zero band, if any.
    pub negative_witness: Option<Witness>,
}

impl ConvexityReport {
    /// A point system refuting n-concavity, when one was found.
    pub fn refutes_concavity(&self) -> Option<&Witness> {
        self.positive_witness.as_ref()
    }

    pub fn refutes_convexity(&self) -> Option<&Witness> {
        self.negative_witness.as_ref()
    }
}

/// Parameters of a convexity scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub order: usize,
    pub window: (f64, f64),
    pub samples: usize,
    pub log_domain: bool,
    pub tol_sign: f64,
    pub seed: u64,
}

/// Deterministic lattice of `order + 2`-point systems with spacing
/// `(hi - lo) / (4 (order + 2))` and strides 1..=3.
pub fn lattice_systems(order: usize, window: (f64, f64)) -> Vec<Vec<f64>> {
    let k = order + 2;
    let (lo, hi) = window;
    let cells = 4 * k;
    let h = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|j| if j == cells { hi } else { lo + j as f64 * h }).collect();
    let mut out = Vec::new();
    for stride in 1..=3 {
        let span = (k - 1) * stride;
        for start in 0..grid.len().saturating_sub(span) {
            out.push((0..k).map(|i| grid[start + i * stride]).collect());
        }
    }
    out
}

/// `samples` seeded random increasing systems of `order + 2` points in the
/// window. The first half spreads over the whole window with consecutive gaps
/// at least the lattice spacing; the rest are local clusters whose total span
/// is between a quarter of and one lattice spacing, so features shorter than
/// the lattice step are still sampled.
pub fn random_systems(order: usize, window: (f64, f64), samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = order + 2;
    let (lo, hi) = window;
    let min_gap = (hi - lo) / (4 * k) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = samples - samples / 2;
    (0..samples)
        .map(|i| {
            let (start, width, gap) = if i < spread {
                (lo, hi - lo, min_gap)
            } else {
                let span = min_gap * rng.gen_range(0.25..1.0);
                (lo + rng.gen::<f64>() * (hi - lo - span), span, span / (2 * k) as f64)
            };
            let slack = width - (k - 1) as f64 * gap;
            let mut u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * slack).collect();
            u.sort_by(f64::total_cmp);
            u.iter().enumerate().map(|(j, &t)| start + t + j as f64 * gap).collect()
        })
        .collect()
}

/// Rounding-noise scale of a top divided difference computed from `values`.
fn noise_floor(points: &[f64], values: &[f64]) -> f64 {
    let k = points.len();
    let weight: f64 = (0..k)
        .map(|i| {
            let denom: f64 = (0..k).filter(|&j| j != i).map(|j| (points[i] - points[j]).abs()).product();
            values[i].abs() / denom
        })
        .sum();
    64.0 * k as f64 * f64::EPSILON * weight
}

/// Grades the order-(n+1) divided differences of `f` (or `ln f`) on the window.
///
/// An entry counts as signed only when it clears the zero band
/// `max(tol_sign * S, noise)`, where `S` is the largest magnitude sampled and
/// `noise` bounds the rounding error of that particular entry.
pub fn is_n_convex(f: &FunctionSpec, p: ScanParams) -> Result<ConvexityReport> {
    let (lo, hi) = p.window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("window must satisfy lo < hi, got ({lo}, {hi})")));
    }
    if p.samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if !(p.tol_sign >= 0.0) {
        return Err(Error::InvalidArgument("tol_sign must be nonnegative".into()));
    }
    let mut systems = lattice_systems(p.order, p.window);
    systems.extend(random_systems(p.order, p.window, p.samples, p.seed));

    let mut entries = Vec::with_capacity(systems.len());
    for pts in systems {
        let values = pts.iter().map(|&x| sample(f, x, p.log_domain)).collect::<Result<Vec<_>>>()?;
        let dd = DividedDifferenceTable::from_values(&pts, &values)?;
        let noise = noise_floor(&pts, &values);
        entries.push((Witness { value: dd.top(), points: pts }, noise));
    }
    let scale = entries.iter().map(|(w, _)| w.value.abs()).fold(0.0, f64::max);
    let band = p.tol_sign * scale;

    let mut positive: Option<Witness> = None;
    let mut negative: Option<Witness> = None;
    let (mut n_pos, mut n_neg) = (0, 0);
    for (w, noise) in &entries {
        let zero = band.max(*noise);
        if w.value > zero {
            n_pos += 1;
            if positive.as_ref().map_or(true, |b| w.value > b.value) {
                positive = Some(w.clone());
            }
        } else if w.value < -zero {
            n_neg += 1;
            if negative.as_ref().map_or(true, |b| w.value < b.value) {
                negative = Some(w.clone());
            }
        }
    }
    let verdict = match (n_pos > 0, n_neg > 0) {
        (true, true) => Verdict::Neither,
        (true, false) => Verdict::Convex,
        (false, true) => Verdict::Concave,
        (false, false) => Verdict::Degenerate,
    };
    let counterexample = match verdict {
        Verdict::Neither if n_pos <= n_neg => positive.clone(),
        Verdict::Neither => negative.clone(),
        _ => None,
    };
    Ok(ConvexityReport {
        order: p.order,
        log_domain: p.log_domain,
        window: p.window,
        samples: p.samples,
        seed: p.seed,
        tol_sign: p.tol_sign,
        systems: entries.len(),
        positive_count: n_pos,
        negative_count: n_neg,
        verdict,
        counterexample,
        positive_witness: positive,
        negative_witness: negative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub holds: bool,
    /// `(w - v)(ln f(z) - ln f(u)) - (z - u)(ln f(w) - ln f(v))`.
    pub margin: f64,
}

/// Log form of `(f(w)/f(v))^(z-u) <= (f(z)/f(u))^(w-v)` for `u < v < w < z`,
/// the inequality satisfied by functions that are log-convex of order two.
pub fn check_inequality_31(f: &FunctionSpec, u: f64, v: f64, w: f64, z: f64, tol_sign: f64) -> Result<InequalityCheck> {
    if !(0.0 < u && u < v && v < w && w < z) {
        return Err(Error::InvalidArgument(format!("need 0 < u < v < w < z, got ({u}, {v}, {w}, {z})")));
    }
    let [lu, lv, lw, lz] = [u, v, w, z].map(|t| sample(f, t, true));
    let (lu, lv, lw, lz) = (lu?, lv?, lw?, lz?);
    let lhs = (z - u) * (lw - lv);
    let rhs = (w - v) * (lz - lu);
    Ok(InequalityCheck { holds: lhs <= rhs + tol_sign, margin: rhs - lhs })
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Bernoulli-number coefficients `B_{2k} / (2k (2k - 1))`, k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Γ(x)` for `x > 0` by the Stirling series after shifting the argument
/// to at least 10.
pub fn loggamma_ref(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("loggamma_ref needs finite x > 0, got {x}")));
    }
    let mut z = x;
    let mut shift = 1.0;
    while z < 10.0 {
        shift *= z;
        z += 1.0;
    }
    let zinv = 1.0 / z;
    let zinv2 = zinv * zinv;
    let mut series = 0.0;
    for c in STIRLING.iter().rev() {
        series = series * zinv2 + c;
    }
    series *= zinv;
    Ok((z - 0.5) * z.ln() - z + HALF_LN_2PI + series - shift.ln())
}

fn check_series_args(x: f64, terms: usize) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite x > 0, got {x}")));
    }
    if terms == 0 {
        return Err(Error::InvalidArgument("terms must be at least 1".into()));
    }
    Ok(())
}

/// `(ln Γ)''(x) = Σ_{k≥0} 1/(x+k)^2`: `terms` summands plus the tail estimate `1/(x+terms)`.
pub fn loggamma_d2(x: f64, terms: usize) -> Result<f64> {
    check_series_args(x, terms)?;
    let tail = 1.0 / (x + terms as f64);
    Ok((0..terms).rev().fold(tail, |acc, k| {
        let t = x + k as f64;
        acc + 1.0 / (t * t)
    }))
}

/// `(ln Γ)'''(x) = -2 Σ_{k≥0} 1/(x+k)^3`: `terms` summands plus the tail estimate `-1/(x+terms)^2`.
pub fn loggamma_d3(x: f64, terms: usize) -> Result<f64> {
    check_series_args(x, terms)?;
    let n = x + terms as f64;
    let tail = 1.0 / (2.0 * n * n);
    let s = (0..terms).rev().fold(tail, |acc, k| {
        let t = x + k as f64;
        acc + 1.0 / (t * t * t)
    });
    Ok(-2.0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(t: &str) -> FunctionSpec {
        FunctionSpec::from_text(t)
    }

    #[test]
    fn table_examples() {
        let sq = spec("x^2");
        assert_eq!(divided_differences(&[0.0, 1.0, 2.0], &sq, false).unwrap().top(), 1.0);
        assert_eq!(divided_differences(&[0.0, 1.0, 2.0, 5.0], &sq, false).unwrap().top(), 0.0);
        let ln = divided_differences(&[1.0, 2.0, 3.0], &spec("x"), true).unwrap();
        // ((ln3 - ln2) - ln2) / 2
        assert!((ln.top() - (-0.143_841_036_225_890_46)).abs() < 1e-15);
        assert_eq!(ln.entry(0, 1), Some(2f64.ln()));
        assert_eq!(ln.order(), 2);
    }

    #[test]
    fn table_rejects_bad_points() {
        assert!(divided_differences(&[1.0, 1.0], &spec("x"), false).is_err());
        assert!(divided_differences(&[2.0, 1.0], &spec("x"), false).is_err());
        assert!(divided_differences(&[], &spec("x"), false).is_err());
        assert!(matches!(
            divided_differences(&[-1.0, 1.0], &spec("x"), true),
            Err(Error::NonPositive { .. })
        ));
    }

    fn scan(f: &str, order: usize, window: (f64, f64), log_domain: bool) -> ConvexityReport {
        is_n_convex(
            &spec(f),
            ScanParams { order, window, samples: 200, log_domain, tol_sign: 1e-9, seed: 7 },
        )
        .unwrap()
    }

    #[test]
    fn cube_is_two_convex() {
        let r = scan("x^3", 2, (0.1, 10.0), false);
        assert_eq!(r.verdict, Verdict::Convex);
        assert!(r.counterexample.is_none());
    }

    #[test]
    fn gamma_is_log_convex_and_two_log_concave() {
        assert_eq!(scan("gamma_ref(x)", 1, (2.0, 50.0), true).verdict, Verdict::Convex);
        assert_eq!(scan("gamma_ref(x)", 2, (2.0, 50.0), true).verdict, Verdict::Concave);
    }

    #[test]
    fn quadratic_at_its_boundary_order_is_degenerate() {
        assert_eq!(scan("3*x^2 - x + 1", 2, (1.0, 10.0), false).verdict, Verdict::Degenerate);
    }

    #[test]
    fn oscillation_is_neither_with_counterexample() {
        let r = scan("sin(x)", 1, (0.0, 10.0), false);
        assert_eq!(r.verdict, Verdict::Neither);
        let c = r.counterexample.unwrap();
        assert_eq!(c.points.len(), 3);
        assert!(r.positive_witness.unwrap().value > 0.0);
        assert!(r.negative_witness.unwrap().value < 0.0);
    }

    #[test]
    fn scans_are_deterministic_in_the_seed() {
        let a = random_systems(3, (1.0, 4.0), 50, 11);
        assert_eq!(a, random_systems(3, (1.0, 4.0), 50, 11));
        assert_ne!(a, random_systems(3, (1.0, 4.0), 50, 12));
        let lattice = 3.0 / 20.0;
        for (i, s) in a.iter().enumerate() {
            assert!(s[0] >= 1.0 && s[4] <= 4.0 + 1e-12);
            if i < 25 {
                assert!(s.windows(2).all(|w| w[1] - w[0] >= lattice - 1e-12));
            } else {
                assert!(s[4] - s[0] <= lattice + 1e-12);
                assert!(s.windows(2).all(|w| w[1] - w[0] > 0.0));
            }
        }
    }

    #[test]
    fn scan_argument_errors() {
        let p = ScanParams { order: 1, window: (2.0, 1.0), samples: 10, log_domain: false, tol_sign: 1e-9, seed: 0 };
        assert!(is_n_convex(&spec("x"), p).is_err());
        let p = ScanParams { window: (1.0, 2.0), samples: 0, ..p };
        assert!(is_n_convex(&spec("x"), p).is_err());
    }

    #[test]
    fn inequality_examples() {
        let r = check_inequality_31(&spec("exp(x^3)"), 1.0, 2.0, 3.0, 4.0, 1e-9).unwrap();
        assert!(r.holds);
        assert!((r.margin - 6.0).abs() < 1e-9, "{}", r.margin);
        let r = check_inequality_31(&spec("7"), 1.0, 2.0, 3.0, 4.0, 1e-9).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, 0.0);
        let r = check_inequality_31(&spec("gamma_ref(x)"), 2.0, 3.0, 4.0, 5.0, 1e-9).unwrap();
        assert!(!r.holds);
        // ln 24 - 3 ln 3
        assert!((r.margin - (24f64.ln() - 3.0 * 3f64.ln())).abs() < 1e-12);
        assert!(check_inequality_31(&spec("x"), 1.0, 3.0, 2.0, 4.0, 1e-9).is_err());
    }

    #[test]
    fn loggamma_anchors() {
        assert!(loggamma_ref(1.0).unwrap().abs() < 1e-13);
        assert!(loggamma_ref(2.0).unwrap().abs() < 1e-13);
        assert!((loggamma_ref(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-13);
        assert!((loggamma_ref(6.0).unwrap() - 120f64.ln()).abs() < 1e-13);
        // Γ(0.5)^2 = π
        let g = loggamma_ref(0.5).unwrap().exp();
        assert!((g * g - std::f64::consts::PI).abs() < 1e-13);
        assert!(loggamma_ref(0.0).is_err());
        assert!(loggamma_ref(-1.5).is_err());
        assert!(loggamma_ref(f64::NAN).is_err());
    }

    #[test]
    fn polygamma_series() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((loggamma_d2(1.0, 10_000).unwrap() - pi2_6).abs() < 1e-8);
        assert!((loggamma_d2(2.0, 10_000).unwrap() - (pi2_6 - 1.0)).abs() < 1e-8);
        let zeta3 = 1.202_056_903_159_594_3;
        assert!((loggamma_d3(1.0, 10_000).unwrap() + 2.0 * zeta3).abs() < 1e-8);
        assert!(loggamma_d2(0.0, 10).is_err());
        assert!(loggamma_d3(1.0, 0).is_err());
    }
}
