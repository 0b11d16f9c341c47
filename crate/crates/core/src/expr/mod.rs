//! Closed-form expressions of one real variable.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | "x" | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than a leading minus, so
//! `-x^2` is `-(x^2)` and `2^-1` is `0.5`. Bare identifiers other than `x`
//! are parameters; `pi` and `e` are predefined unless the caller binds them.

mod eval;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use eval::EvalError;
pub use parse::{ParseError, ParseErrorKind};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Registered builtin functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Builtin {
    Exp,
    Ln,
    Log2,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Floor,
    /// Γ through the reference log-gamma.
    GammaRef,
    Pow,
}

impl Builtin {
    pub const ALL: [Builtin; 10] = [
        Builtin::Exp,
        Builtin::Ln,
        Builtin::Log2,
        Builtin::Sin,
        Builtin::Cos,
        Builtin::Sqrt,
        Builtin::Abs,
        Builtin::Floor,
        Builtin::GammaRef,
        Builtin::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Log2 => "log2",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Sqrt => "sqrt",
            Builtin::Abs => "abs",
            Builtin::Floor => "floor",
            Builtin::GammaRef => "gamma_ref",
            Builtin::Pow => "pow",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var,
    /// A named constant, bound to its value at parse time.
    Param { name: String, value: f64 },
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Builtin, Vec<Node>),
}

impl Node {
    pub fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Builtin, arg: Node) -> Node {
        Node::Call(f, vec![arg])
    }
}

/// Fully parenthesized rendering; re-parsing it yields the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Node::Num(v) => write!(f, "{v}"),
            Node::Var => f.write_str("x"),
            Node::Param { name, .. } => f.write_str(name),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub root: Node,
    pub source_text: String,
}

impl Expression {
    pub fn parse(text: &str, parameters: &BTreeMap<String, f64>) -> std::result::Result<Self, ParseError> {
        let root = parse::parse(text, parameters)?;
        Ok(Expression { root, source_text: text.to_string() })
    }

    /// Wraps a constructed tree; the source text is its canonical rendering.
    pub fn from_node(root: Node) -> Self {
        let source_text = root.to_string();
        Expression { root, source_text }
    }

    pub fn serialize(&self) -> String {
        self.root.to_string()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

/// A positive real function on `(domain_min, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub body: Expression,
    pub domain_min: f64,
    pub parameters: BTreeMap<String, f64>,
}

impl FunctionSpec {
    /// Parses `text` with the given named constants; the domain defaults to `(0, ∞)`.
    pub fn parse(text: &str, parameters: &BTreeMap<String, f64>) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(ParseError::new(ParseErrorKind::EmptyInput, 0, vec!["expression".into()]).into());
        }
        let body = Expression::parse(text, parameters)?;
        Ok(FunctionSpec { body, domain_min: 0.0, parameters: parameters.clone() })
    }

    /// Parses an expression without parameters. Panics on malformed input,
    /// so it is meant for literals in code and tests.
    pub fn from_text(text: &str) -> Self {
        Self::parse(text, &BTreeMap::new()).unwrap_or_else(|e| panic!("bad expression {text:?}: {e}"))
    }

    /// Named builtin functions: `identity`, `ln`, `gamma`, `exp`.
    pub fn named(name: &str) -> Option<Self> {
        let text = match name {
            "identity" | "x" => "x",
            "ln" | "log" => "ln(x)",
            "gamma" | "gamma_ref" => "gamma_ref(x)",
            "exp" => "exp(x)",
            _ => return None,
        };
        Some(Self::from_text(text))
    }

    pub fn from_node(root: Node, domain_min: f64, parameters: BTreeMap<String, f64>) -> Self {
        FunctionSpec { body: Expression::from_node(root), domain_min, parameters }
    }

    pub fn with_domain_min(mut self, domain_min: f64) -> Self {
        self.domain_min = domain_min;
        self
    }

    pub fn text(&self) -> &str {
        &self.body.source_text
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x > self.domain_min
    }

    pub fn require_domain(&self, x: f64, context: &'static str) -> Result<()> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, domain_min: self.domain_min, context })
        }
    }

    /// Value of the function at `x` in double precision.
    pub fn evaluate(&self, x: f64) -> std::result::Result<f64, EvalError> {
        eval::evaluate(&self.body.root, x)
    }

    /// `ln f(x)`, computed without forming `f(x)` when it would overflow or
    /// underflow. Fails when `f(x) <= 0`.
    pub fn evaluate_ln(&self, x: f64) -> std::result::Result<f64, EvalError> {
        eval::evaluate_ln(&self.body.root, x)
    }

    /// `f(a) - f(b)`, propagated through the expression so that nearby
    /// arguments do not lose precision to cancellation.
    pub fn difference(&self, a: f64, b: f64) -> std::result::Result<f64, EvalError> {
        eval::difference(&self.body.root, a, b)
    }

    /// `ln(f(a) / f(b))` for positive values, computed like [`Self::difference`].
    pub fn ln_ratio(&self, a: f64, b: f64) -> std::result::Result<f64, EvalError> {
        eval::ln_ratio(&self.body.root, a, b)
    }

    /// The spec of `ln f`.
    pub fn ln_spec(&self) -> FunctionSpec {
        FunctionSpec::from_node(
            Node::call(Builtin::Ln, self.body.root.clone()),
            self.domain_min,
            self.parameters.clone(),
        )
    }

    /// The spec of `l^(-x) f(x)`, written as `f(x) * exp(-(ln l) x)`.
    pub fn geometric_detrend(&self, l: f64) -> FunctionSpec {
        let rate = l.ln();
        let factor = Node::call(
            Builtin::Exp,
            Node::Neg(Box::new(Node::binary(BinOp::Mul, Node::Num(rate), Node::Var))),
        );
        FunctionSpec::from_node(
            Node::binary(BinOp::Mul, self.body.root.clone(), factor),
            self.domain_min,
            self.parameters.clone(),
        )
    }

    /// The spec of `λ f(x)`.
    pub fn scaled(&self, lambda: f64) -> FunctionSpec {
        FunctionSpec::from_node(
            Node::binary(BinOp::Mul, Node::Num(lambda), self.body.root.clone()),
            self.domain_min,
            self.parameters.clone(),
        )
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("FunctionSpec", 3)?;
        st.serialize_field("text", self.text())?;
        st.serialize_field("domain_min", &self.domain_min)?;
        st.serialize_field("parameters", &self.parameters)?;
        st.end()
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Parses `name=value` bindings.
pub fn parse_binding(text: &str) -> Result<(String, f64)> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("expected name=value, got {text:?}")))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::InvalidArgument(format!("invalid parameter name {name:?}")));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid value for {name}: {value:?}")))?;
    Ok((name.to_string(), value))
}
