//! Tree-walking evaluator.
//!
//! Each node yields a [`Mag`]: an ordinary `f64` while the value is a normal
//! double, and a sign plus `ln|v|` once it would overflow or underflow. In
//! the ordinary range results are bit-identical to plain `f64` arithmetic;
//! the logarithmic form only keeps products like `x * 2^x * 2^-x` finite.

use thiserror::Error;

use super::{BinOp, Builtin, Node};
use crate::convexity::loggamma_ref;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain violation in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: &'static str },
    #[error("non-finite result in `{subexpr}`")]
    NonFinite { subexpr: String },
    #[error("`{subexpr}` is non-positive ({value}) where its logarithm is required")]
    NonPositive { subexpr: String, value: f64 },
}

fn domain(node: &Node, reason: &'static str) -> EvalError {
    EvalError::Domain { subexpr: node.to_string(), reason }
}

fn non_finite(node: &Node) -> EvalError {
    EvalError::NonFinite { subexpr: node.to_string() }
}

// exp() stays a normal double on this range
const LN_MAX: f64 = 709.0;
const LN_MIN: f64 = -708.0;

#[derive(Debug, Clone, Copy)]
enum Mag {
    Direct(f64),
    Log { neg: bool, ln_abs: f64 },
}

impl Mag {
    fn from_log(neg: bool, ln_abs: f64) -> Mag {
        if ln_abs > LN_MIN && ln_abs < LN_MAX {
            let v = ln_abs.exp();
            Mag::Direct(if neg { -v } else { v })
        } else {
            Mag::Log { neg, ln_abs }
        }
    }

    fn to_f64(self) -> f64 {
        match self {
            Mag::Direct(v) => v,
            Mag::Log { neg, ln_abs } => {
                let v = ln_abs.exp();
                if neg {
                    -v
                } else {
                    v
                }
            }
        }
    }

    fn is_zero(self) -> bool {
        matches!(self, Mag::Direct(v) if v == 0.0)
    }

    fn is_neg(self) -> bool {
        match self {
            Mag::Direct(v) => v < 0.0,
            Mag::Log { neg, .. } => neg,
        }
    }

    fn ln_abs(self) -> f64 {
        match self {
            Mag::Direct(v) => v.abs().ln(),
            Mag::Log { ln_abs, .. } => ln_abs,
        }
    }

    fn negate(self) -> Mag {
        match self {
            Mag::Direct(v) => Mag::Direct(-v),
            Mag::Log { neg, ln_abs } => Mag::Log { neg: !neg, ln_abs },
        }
    }
}

/// A direct result is accepted when it is finite and did not silently lose
/// its magnitude to underflow.
fn accept(v: f64, exact_zero: bool) -> bool {
    v.is_finite() && (v.is_normal() || (v == 0.0 && exact_zero))
}

fn add(a: Mag, b: Mag) -> Mag {
    if let (Mag::Direct(x), Mag::Direct(y)) = (a, b) {
        let s = x + y;
        if s.is_finite() {
            return Mag::Direct(s);
        }
    }
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    let (big, small) = if a.ln_abs() >= b.ln_abs() { (a, b) } else { (b, a) };
    let d = small.ln_abs() - big.ln_abs();
    if big.is_neg() == small.is_neg() {
        Mag::from_log(big.is_neg(), big.ln_abs() + d.exp().ln_1p())
    } else if d == 0.0 {
        Mag::Direct(0.0)
    } else {
        Mag::from_log(big.is_neg(), big.ln_abs() + (-d.exp_m1()).ln())
    }
}

fn mul(a: Mag, b: Mag) -> Mag {
    if a.is_zero() || b.is_zero() {
        return Mag::Direct(0.0);
    }
    if let (Mag::Direct(x), Mag::Direct(y)) = (a, b) {
        let p = x * y;
        if accept(p, false) {
            return Mag::Direct(p);
        }
    }
    Mag::from_log(a.is_neg() != b.is_neg(), a.ln_abs() + b.ln_abs())
}

fn div(node: &Node, a: Mag, b: Mag) -> Result<Mag, EvalError> {
    if b.is_zero() {
        return Err(non_finite(node));
    }
    if a.is_zero() {
        return Ok(Mag::Direct(0.0));
    }
    if let (Mag::Direct(x), Mag::Direct(y)) = (a, b) {
        let q = x / y;
        if accept(q, false) {
            return Ok(Mag::Direct(q));
        }
    }
    Ok(Mag::from_log(a.is_neg() != b.is_neg(), a.ln_abs() - b.ln_abs()))
}

fn pow(node: &Node, base: Mag, exponent: f64) -> Result<Mag, EvalError> {
    if !exponent.is_finite() {
        return Err(non_finite(node));
    }
    if base.is_zero() {
        return match exponent {
            e if e > 0.0 => Ok(Mag::Direct(0.0)),
            e if e == 0.0 => Ok(Mag::Direct(1.0)),
            _ => Err(non_finite(node)),
        };
    }
    let integral = exponent.fract() == 0.0;
    if base.is_neg() && !integral {
        return Err(domain(node, "negative base with non-integer exponent"));
    }
    if let Mag::Direct(b) = base {
        let r = b.powf(exponent);
        if accept(r, false) || exponent == 0.0 {
            return Ok(Mag::Direct(r));
        }
    }
    let odd = integral && (exponent / 2.0).fract() != 0.0;
    Ok(Mag::from_log(base.is_neg() && odd, exponent * base.ln_abs()))
}

fn finite_arg(node: &Node, m: Mag) -> Result<f64, EvalError> {
    let v = m.to_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(non_finite(node))
    }
}

fn binary(node: &Node, op: BinOp, rhs: &Node, a: Mag, b: Mag) -> Result<Mag, EvalError> {
    Ok(match op {
        BinOp::Add => add(a, b),
        BinOp::Sub => add(a, b.negate()),
        BinOp::Mul => mul(a, b),
        BinOp::Div => div(node, a, b)?,
        BinOp::Pow => pow(node, a, finite_arg(rhs, b)?)?,
    })
}

fn call(node: &Node, func: Builtin, args: &[Node], vals: &[Mag]) -> Result<Mag, EvalError> {
    let a = vals[0];
    Ok(match func {
        Builtin::Exp => {
            let u = finite_arg(&args[0], a)?;
            let r = u.exp();
            if accept(r, false) {
                Mag::Direct(r)
            } else {
                Mag::Log { neg: false, ln_abs: u }
            }
        }
        Builtin::Ln | Builtin::Log2 => {
            if a.is_zero() || a.is_neg() {
                return Err(domain(node, "logarithm of a non-positive value"));
            }
            Mag::Direct(match (func, a) {
                (Builtin::Log2, Mag::Direct(v)) => v.log2(),
                (Builtin::Log2, m) => m.ln_abs() / std::f64::consts::LN_2,
                (_, m) => m.ln_abs(),
            })
        }
        Builtin::Sqrt => {
            if a.is_neg() {
                return Err(domain(node, "square root of a negative value"));
            }
            match a {
                Mag::Direct(v) => Mag::Direct(v.sqrt()),
                Mag::Log { ln_abs, .. } => Mag::from_log(false, ln_abs / 2.0),
            }
        }
        Builtin::Abs => match a {
            Mag::Direct(v) => Mag::Direct(v.abs()),
            Mag::Log { ln_abs, .. } => Mag::Log { neg: false, ln_abs },
        },
        Builtin::Sin => Mag::Direct(finite_arg(&args[0], a)?.sin()),
        Builtin::Cos => Mag::Direct(finite_arg(&args[0], a)?.cos()),
        Builtin::Floor => Mag::Direct(finite_arg(&args[0], a)?.floor()),
        Builtin::GammaRef => {
            let u = finite_arg(&args[0], a)?;
            if u <= 0.0 {
                return Err(domain(node, "reference gamma requires a positive argument"));
            }
            let lg = loggamma_ref(u).map_err(|_| domain(node, "reference gamma requires a positive argument"))?;
            Mag::from_log(false, lg)
        }
        Builtin::Pow => pow(node, a, finite_arg(&args[1], vals[1])?)?,
    })
}

fn checked(node: &Node, m: Mag) -> Result<Mag, EvalError> {
    match m {
        Mag::Direct(v) if v.is_nan() => Err(non_finite(node)),
        Mag::Log { ln_abs, .. } if ln_abs.is_nan() || ln_abs == f64::INFINITY => Err(non_finite(node)),
        m => Ok(m),
    }
}

fn eval_node(node: &Node, x: f64) -> Result<Mag, EvalError> {
    let out = match node {
        Node::Num(v) => Mag::Direct(*v),
        Node::Var => Mag::Direct(x),
        Node::Param { value, .. } => Mag::Direct(*value),
        Node::Neg(inner) => eval_node(inner, x)?.negate(),
        Node::Binary(op, lhs, rhs) => binary(node, *op, rhs, eval_node(lhs, x)?, eval_node(rhs, x)?)?,
        Node::Call(func, args) => {
            let vals = args.iter().map(|a| eval_node(a, x)).collect::<Result<Vec<_>, _>>()?;
            call(node, *func, args, &vals)?
        }
    };
    checked(node, out)
}

pub(super) fn evaluate(root: &Node, x: f64) -> Result<f64, EvalError> {
    let v = eval_node(root, x)?.to_f64();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(non_finite(root))
    }
}

pub(super) fn evaluate_ln(root: &Node, x: f64) -> Result<f64, EvalError> {
    let m = eval_node(root, x)?;
    if m.is_zero() || m.is_neg() {
        return Err(EvalError::NonPositive { subexpr: root.to_string(), value: m.to_f64() });
    }
    let l = m.ln_abs();
    if l.is_finite() {
        Ok(l)
    } else {
        Err(non_finite(root))
    }
}

/// A node evaluated at two points `a` and `b`, with `dv = f(a) - f(b)` (both
/// values ordinary doubles) and `dl = ln|f(a)| - ln|f(b)|` (same nonzero
/// sign) propagated through the tree, so that neither is formed by
/// subtracting two large nearby numbers.
#[derive(Debug, Clone, Copy)]
struct Pair {
    a: Mag,
    b: Mag,
    dv: Option<f64>,
    dl: Option<f64>,
}

fn direct(m: Mag) -> Option<f64> {
    match m {
        Mag::Direct(v) => Some(v),
        Mag::Log { .. } => None,
    }
}

fn same_sign(a: Mag, b: Mag) -> bool {
    !a.is_zero() && !b.is_zero() && a.is_neg() == b.is_neg()
}

/// `ln(1 + r)` when the ratio stays positive.
fn ln1p_checked(r: f64) -> Option<f64> {
    (r > -1.0 && r.is_finite()).then(|| r.ln_1p())
}

impl Pair {
    fn new(a: Mag, b: Mag, dv: Option<f64>, dl: Option<f64>) -> Pair {
        let (av, bv) = (direct(a), direct(b));
        let same = same_sign(a, b);
        let mut dv = dv.filter(|d| d.is_finite() && av.is_some() && bv.is_some());
        let mut dl = dl.filter(|d| d.is_finite() && same);
        if let (None, Some(l), Some(bv)) = (dv, dl, bv) {
            if av.is_some() {
                dv = Some(bv * l.exp_m1());
            }
        }
        if let (None, Some(d), Some(bv)) = (dl, dv, bv) {
            if same {
                dl = ln1p_checked(d / bv);
            }
        }
        if dv.is_none() {
            dv = av.zip(bv).map(|(x, y)| x - y);
        }
        if dl.is_none() && same {
            dl = Some(a.ln_abs() - b.ln_abs());
        }
        Pair { a, b, dv, dl }
    }

    fn negate(self) -> Pair {
        Pair { a: self.a.negate(), b: self.b.negate(), dv: self.dv.map(|d| -d), dl: self.dl }
    }

    fn direct_values(&self) -> Option<(f64, f64)> {
        direct(self.a).zip(direct(self.b))
    }
}

/// Signed `part / whole` for magnitudes that may be logarithmic.
fn share(part: Mag, whole: Mag) -> f64 {
    if part.is_zero() {
        return 0.0;
    }
    let r = (part.ln_abs() - whole.ln_abs()).exp();
    if part.is_neg() != whole.is_neg() {
        -r
    } else {
        r
    }
}

fn sum_diffs(u: &Pair, v: &Pair, b: Mag) -> (Option<f64>, Option<f64>) {
    let dv = u.dv.zip(v.dv).map(|(x, y)| x + y);
    let dl = if (dv.is_some() && direct(b).is_some()) || b.is_zero() {
        None
    } else {
        let term = |p: &Pair| -> Option<f64> {
            if p.b.is_zero() {
                return if p.a.is_zero() { Some(0.0) } else { None };
            }
            Some(share(p.b, b) * p.dl?.exp_m1())
        };
        term(u).zip(term(v)).and_then(|(x, y)| ln1p_checked(x + y))
    };
    (dv, dl)
}

fn binary_diffs(op: BinOp, u: &Pair, v: &Pair, b: Mag) -> (Option<f64>, Option<f64>) {
    match op {
        BinOp::Add => sum_diffs(u, v, b),
        BinOp::Sub => sum_diffs(u, &v.negate(), b),
        BinOp::Mul => {
            let dl = u.dl.zip(v.dl).map(|(x, y)| x + y);
            let dv = u.direct_values().zip(v.direct_values()).zip(u.dv.zip(v.dv)).map(
                |(((ua, _), (_, vb)), (du, dv))| ua * dv + vb * du,
            );
            (dv, dl)
        }
        BinOp::Div => {
            let dl = u.dl.zip(v.dl).map(|(x, y)| x - y);
            let dv = u.direct_values().zip(v.direct_values()).zip(u.dv.zip(v.dv)).map(
                |(((_, ub), (va, vb)), (du, dv))| (du * vb - ub * dv) / (va * vb),
            );
            (dv, dl)
        }
        BinOp::Pow => (None, pow_dl(u, v)),
    }
}

/// `e_a ln|u_a| - e_b ln|u_b| = e_a (ln|u_a| - ln|u_b|) + (e_a - e_b) ln|u_b|`.
fn pow_dl(base: &Pair, exponent: &Pair) -> Option<f64> {
    let (ea, _) = exponent.direct_values()?;
    let de = exponent.dv?;
    let dlu = base.dl?;
    Some(if de == 0.0 { ea * dlu } else { ea * dlu + de * base.b.ln_abs() })
}

fn call_diffs(func: Builtin, c: &[Pair]) -> (Option<f64>, Option<f64>) {
    let w = &c[0];
    match func {
        Builtin::Exp => (None, w.dv),
        Builtin::Ln => (w.dl, None),
        Builtin::Log2 => (w.dl.map(|d| d / std::f64::consts::LN_2), None),
        Builtin::Sqrt => (None, w.dl.map(|d| d / 2.0)),
        Builtin::Abs => {
            let dv = if same_sign(w.a, w.b) {
                w.dv.map(|d| if w.b.is_neg() { -d } else { d })
            } else {
                None
            };
            (dv, w.dl)
        }
        Builtin::Sin => {
            let dv = w.direct_values().zip(w.dv).map(|((a, b), d)| 2.0 * (0.5 * (a + b)).cos() * (0.5 * d).sin());
            (dv, None)
        }
        Builtin::Cos => {
            let dv = w.direct_values().zip(w.dv).map(|((a, b), d)| -2.0 * (0.5 * (a + b)).sin() * (0.5 * d).sin());
            (dv, None)
        }
        Builtin::Pow => (None, pow_dl(w, &c[1])),
        Builtin::Floor | Builtin::GammaRef => (None, None),
    }
}

fn diff_node(node: &Node, xa: f64, xb: f64) -> Result<Pair, EvalError> {
    let (a, b, dv, dl) = match node {
        Node::Num(v) | Node::Param { value: v, .. } => (Mag::Direct(*v), Mag::Direct(*v), Some(0.0), Some(0.0)),
        Node::Var => (Mag::Direct(xa), Mag::Direct(xb), Some(xa - xb), ln1p_checked((xa - xb) / xb)),
        Node::Neg(inner) => {
            let p = diff_node(inner, xa, xb)?.negate();
            (p.a, p.b, p.dv, p.dl)
        }
        Node::Binary(op, lhs, rhs) => {
            let u = diff_node(lhs, xa, xb)?;
            let v = diff_node(rhs, xa, xb)?;
            let a = binary(node, *op, rhs, u.a, v.a)?;
            let b = binary(node, *op, rhs, u.b, v.b)?;
            let (dv, dl) = binary_diffs(*op, &u, &v, b);
            (a, b, dv, dl)
        }
        Node::Call(func, args) => {
            let c = args.iter().map(|n| diff_node(n, xa, xb)).collect::<Result<Vec<_>, _>>()?;
            let a = call(node, *func, args, &c.iter().map(|p| p.a).collect::<Vec<_>>())?;
            let b = call(node, *func, args, &c.iter().map(|p| p.b).collect::<Vec<_>>())?;
            let (dv, dl) = call_diffs(*func, &c);
            (a, b, dv, dl)
        }
    };
    Ok(Pair::new(checked(node, a)?, checked(node, b)?, dv, dl))
}

/// `f(a) - f(b)`.
pub(super) fn difference(root: &Node, a: f64, b: f64) -> Result<f64, EvalError> {
    let p = diff_node(root, a, b)?;
    let d = p.dv.unwrap_or_else(|| p.a.to_f64() - p.b.to_f64());
    if d.is_finite() {
        Ok(d)
    } else {
        Err(non_finite(root))
    }
}

/// `ln(f(a) / f(b))` for positive `f(a)`, `f(b)`.
pub(super) fn ln_ratio(root: &Node, a: f64, b: f64) -> Result<f64, EvalError> {
    let p = diff_node(root, a, b)?;
    for m in [p.a, p.b] {
        if m.is_zero() || m.is_neg() {
            return Err(EvalError::NonPositive { subexpr: root.to_string(), value: m.to_f64() });
        }
    }
    match p.dl {
        Some(d) if d.is_finite() => Ok(d),
        _ => Err(non_finite(root)),
    }
}
