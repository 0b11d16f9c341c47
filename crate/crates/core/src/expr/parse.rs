use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;

use thiserror::Error;

use super::{BinOp, Builtin, Node};

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    BadNumber(String),
    UnknownIdentifier(String),
    UnknownParameter(String),
    WrongArity { function: String, expected: usize, found: usize },
    TooDeep,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyInput => f.write_str("empty input"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::BadNumber(t) => write!(f, "malformed number {t:?}"),
            ParseErrorKind::UnknownIdentifier(n) => write!(f, "unknown function {n:?}"),
            ParseErrorKind::UnknownParameter(n) => write!(f, "unknown parameter {n:?}"),
            ParseErrorKind::WrongArity { function, expected, found } => {
                write!(f, "{function} takes {expected} argument(s), found {found}")
            }
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH} levels"),
        }
    }
}

/// A syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {kind} (expected {})", .expected.join(" | "))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, position: usize, expected: Vec<String>) -> Self {
        ParseError { kind, position, expected }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Caret => f.write_str("^"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Comma => f.write_str(","),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by digits, so "2e" stays 2 then `e`
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| {
                ParseError::new(ParseErrorKind::BadNumber(lit.to_string()), start, vec!["number".into()])
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError::new(
            ParseErrorKind::UnexpectedChar(ch),
            start,
            vec!["operator".into(), "number".into(), "identifier".into()],
        ));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
    params: &'a BTreeMap<String, f64>,
}

fn operand_expected() -> Vec<String> {
    ["number", "x", "identifier", "(", "-"].iter().map(|s| s.to_string()).collect()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: Vec<String>) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.to_string()),
        };
        ParseError::new(kind, self.offset(), expected)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(vec![tok.to_string()]))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::new(ParseErrorKind::TooDeep, self.offset(), vec![]));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::binary(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let node = if *self.peek() == Tok::Minus {
            self.bump();
            Node::Neg(Box::new(self.power()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(node)
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.call(name, at)
                } else if name == "x" {
                    Ok(Node::Var)
                } else if let Some(v) = self.params.get(&name) {
                    Ok(Node::Param { name, value: *v })
                } else if name == "pi" {
                    Ok(Node::Param { name, value: PI })
                } else if name == "e" {
                    Ok(Node::Param { name, value: E })
                } else {
                    Err(ParseError::new(
                        ParseErrorKind::UnknownParameter(name),
                        at,
                        std::iter::once("x".to_string()).chain(self.params.keys().cloned()).collect(),
                    ))
                }
            }
            _ => Err(self.unexpected(operand_expected())),
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Node, ParseError> {
        let func = Builtin::from_name(&name).ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::UnknownIdentifier(name.clone()),
                at,
                Builtin::ALL.iter().map(|b| b.name().to_string()).collect(),
            )
        })?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        if *self.peek() != Tok::RParen {
            return Err(self.unexpected(vec![",".into(), ")".into()]));
        }
        self.bump();
        if args.len() != func.arity() {
            return Err(ParseError::new(
                ParseErrorKind::WrongArity { function: name, expected: func.arity(), found: args.len() },
                at,
                vec![],
            ));
        }
        Ok(Node::Call(func, args))
    }
}

pub(super) fn parse(text: &str, params: &BTreeMap<String, f64>) -> Result<Node, ParseError> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(ParseError::new(ParseErrorKind::EmptyInput, 0, vec!["expression".into()]));
    }
    let mut p = Parser { toks, pos: 0, depth: 0, params };
    let node = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected(vec!["operator".into(), "end of input".into()]));
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Result<Node, ParseError> {
        parse(text, &BTreeMap::new())
    }

    #[test]
    fn errors_carry_kind_and_position() {
        assert_eq!(p("x + ").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        let e = p("foo(x)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(e.position, 0);
        let e = p("x * a").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownParameter("a".into()));
        assert_eq!(e.position, 4);
        assert!(matches!(p("x $ 1").unwrap_err().kind, ParseErrorKind::UnexpectedChar('$')));
        assert!(matches!(p("1.2.3").unwrap_err().kind, ParseErrorKind::BadNumber(_)));
        assert!(matches!(p("pow(x)").unwrap_err().kind, ParseErrorKind::WrongArity { .. }));
        assert!(matches!(p("(x").unwrap_err().kind, ParseErrorKind::UnexpectedEnd));
        assert!(matches!(p("x)").unwrap_err().kind, ParseErrorKind::UnexpectedToken(_)));
        assert!(matches!(p("--x").unwrap_err().kind, ParseErrorKind::UnexpectedToken(_)));
        assert!(matches!(p("2e").unwrap_err().kind, ParseErrorKind::UnexpectedToken(_)));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let text = "(".repeat(10_000) + "x" + &")".repeat(10_000);
        assert_eq!(p(&text).unwrap_err().kind, ParseErrorKind::TooDeep);
        let text = "2^".repeat(10_000) + "x";
        assert_eq!(p(&text).unwrap_err().kind, ParseErrorKind::TooDeep);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(p("1.5e3").unwrap(), Node::Num(1500.0));
        assert_eq!(p("2E-2").unwrap(), Node::Num(0.02));
        assert_eq!(p(".5").unwrap(), Node::Num(0.5));
    }

    #[test]
    fn structure_of_precedence() {
        let n = p("-x^2").unwrap();
        assert_eq!(n, Node::Neg(Box::new(Node::binary(BinOp::Pow, Node::Var, Node::Num(2.0)))));
        let n = p("1 - 2 - 3").unwrap();
        assert_eq!(
            n,
            Node::binary(BinOp::Sub, Node::binary(BinOp::Sub, Node::Num(1.0), Node::Num(2.0)), Node::Num(3.0))
        );
    }

    #[test]
    fn params_shadow_predefined_constants() {
        let mut params = BTreeMap::new();
        params.insert("e".to_string(), 3.0);
        assert_eq!(parse("e", &params).unwrap(), Node::Param { name: "e".into(), value: 3.0 });
        assert_eq!(p("e").unwrap(), Node::Param { name: "e".into(), value: E });
    }
}
