//! Arithmetic expressions over coordinates and parameters.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tightest and associates to the right, so `-x^2` is `-(x^2)` and
//! `a^b^c` is `a^(b^c)`.

use std::fmt;

use thiserror::Error;

use crate::jet::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    InvalidNumber(String),
    UnexpectedToken { expected: String, found: String },
    UnknownIdentifier(String),
    UnsupportedFunction(String),
    MissingComponent(String),
    DuplicateDeclaration(String),
    AsymmetricComponent { first: String, second: String },
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::UnexpectedToken { expected, found } => write!(f, "expected {expected}, found {found}"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::UnsupportedFunction(s) => {
                write!(f, "unsupported function `{s}` (available: {})", Func::NAMES.join(", "))
            }
            ParseErrorKind::MissingComponent(s) => write!(f, "missing component {s}"),
            ParseErrorKind::DuplicateDeclaration(s) => write!(f, "duplicate declaration of {s}"),
            ParseErrorKind::AsymmetricComponent { first, second } => {
                write!(f, "component {second} differs from its symmetric partner {first}")
            }
            ParseErrorKind::Invalid(s) => f.write_str(s),
        }
    }
}

/// Error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, column, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => " * ",
            BinOp::Div => " / ",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
}

impl Func {
    pub const NAMES: [&'static str; 6] = ["sqrt", "exp", "ln", "sin", "cos", "tan"];

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
        }
    }

    fn apply(self, x: &Jet) -> Result<Jet, JetError> {
        match self {
            Func::Sqrt => x.try_sqrt(),
            Func::Exp => Ok(x.exp()),
            Func::Ln => x.try_ln(),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan => x.try_tan(),
        }
    }
}

/// Syntax tree. Identifiers stay unresolved until a [`Scope`] binds them to
/// coordinates, parameters or macros.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Num(_) | Expr::Ident(_) | Expr::Call(..) => 5,
        }
    }

    /// Identifiers in order of first appearance, with duplicates.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk_idents(&mut out);
        out
    }

    fn walk_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Ident(s) => out.push(s),
            Expr::Neg(e) | Expr::Call(_, e) => e.walk_idents(out),
            Expr::Binary(_, a, b) => {
                a.walk_idents(out);
                b.walk_idents(out);
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical form: minimal parentheses, single spaces around `+ - * /`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Ident(s) => f.write_str(s),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < 3)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_child(f, a, a.precedence() <= p)?;
                    f.write_str(op.symbol())?;
                    write_child(f, b, b.precedence() < 3)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    f.write_str(op.symbol())?;
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based column.
    pub column: usize,
}

/// Split one line into tokens; a `#` starts a comment.
pub(crate) fn lex(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' | '-' | '*' | '/' | '^' => Some(Tok::Op(c)),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, column });
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Token {
                    tok: Tok::Num(v),
                    column,
                }),
                _ => return Err(ParseError::new(line, column, ParseErrorKind::InvalidNumber(s))),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else {
            return Err(ParseError::new(line, column, ParseErrorKind::UnexpectedChar(c)));
        }
    }
    Ok(out)
}

/// Recursive-descent parser over the tokens of one line.
pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    /// Column just past the last token, for end-of-line errors.
    end_column: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: &'a [Token], line: usize, line_len: usize) -> Self {
        Parser {
            toks,
            pos: 0,
            line,
            end_column: line_len + 1,
        }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub(crate) fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    pub(crate) fn error(&self, expected: &str) -> ParseError {
        let found = self.peek().map_or_else(|| "end of line".to_string(), Tok::describe);
        ParseError::new(
            self.line,
            self.column(),
            ParseErrorKind::UnexpectedToken {
                expected: expected.to_string(),
                found,
            },
        )
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    pub(crate) fn ident(&mut self, expected: &str) -> Result<(String, usize), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                let column = self.column();
                self.pos += 1;
                Ok((s, column))
            }
            _ => Err(self.error(expected)),
        }
    }

    pub(crate) fn integer(&mut self, expected: &str) -> Result<(usize, usize), ParseError> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v < 1e6 => {
                let column = self.column();
                let v = *v as usize;
                self.pos += 1;
                Ok((v, column))
            }
            _ => Err(self.error(expected)),
        }
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("an operator or end of line"))
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('+')) => BinOp::Add,
                Some(Tok::Op('-')) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('*')) => BinOp::Mul,
                Some(Tok::Op('/')) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                let column = self.column();
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| {
                        ParseError::new(self.line, column, ParseErrorKind::UnsupportedFunction(name.clone()))
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.error("a number, identifier, function call or `(`")),
        }
    }
}

/// Parse a single expression occupying the whole of `text`.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    if text.contains('\n') {
        return Err(ParseError::new(
            1,
            text.find('\n').map_or(1, |i| text[..i].chars().count() + 1),
            ParseErrorKind::UnexpectedChar('\n'),
        ));
    }
    let toks = lex(text, 1)?;
    let mut p = Parser::new(&toks, 1, text.chars().count());
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Expression with every identifier resolved, ready for jet evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Compiled {
    Const(f64),
    Coord(usize),
    Neg(Box<Compiled>),
    Binary(BinOp, Box<Compiled>, Box<Compiled>),
    Call(Func, Box<Compiled>),
}

impl Compiled {
    /// Resolve identifiers with `lookup`; `None` from `lookup` is reported
    /// as an unknown identifier at (`line`, `column`).
    pub fn new(
        expr: &Expr,
        lookup: &dyn Fn(&str) -> Option<Compiled>,
        line: usize,
        column: usize,
    ) -> Result<Compiled, ParseError> {
        Ok(match expr {
            Expr::Num(v) => Compiled::Const(*v),
            Expr::Ident(name) => lookup(name)
                .ok_or_else(|| ParseError::new(line, column, ParseErrorKind::UnknownIdentifier(name.clone())))?,
            Expr::Neg(e) => Compiled::Neg(Box::new(Compiled::new(e, lookup, line, column)?)),
            Expr::Call(f, e) => Compiled::Call(*f, Box::new(Compiled::new(e, lookup, line, column)?)),
            Expr::Binary(op, a, b) => Compiled::Binary(
                *op,
                Box::new(Compiled::new(a, lookup, line, column)?),
                Box::new(Compiled::new(b, lookup, line, column)?),
            ),
        })
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Jet, JetError> {
        Ok(match self {
            Compiled::Const(v) => x[0].constant_like(*v),
            Compiled::Coord(i) => x[*i],
            Compiled::Neg(e) => -e.eval(x)?,
            Compiled::Call(f, e) => f.apply(&e.eval(x)?)?,
            Compiled::Binary(op, a, b) => {
                let a = a.eval(x)?;
                match (op, b.as_ref()) {
                    // integer powers stay defined for non-positive bases
                    (BinOp::Pow, Compiled::Const(n)) if n.fract() == 0.0 && n.abs() <= 64.0 => a.try_powi(*n as i32)?,
                    (BinOp::Pow, _) => {
                        let b = b.eval(x)?;
                        (a.try_ln()? * b).exp()
                    }
                    (BinOp::Add, _) => a + b.eval(x)?,
                    (BinOp::Sub, _) => a - b.eval(x)?,
                    (BinOp::Mul, _) => a * b.eval(x)?,
                    (BinOp::Div, _) => a.try_div(&b.eval(x)?)?,
                }
            }
        })
    }

    /// Value when the expression uses no coordinates.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Compiled::Const(v) => Some(*v),
            Compiled::Coord(_) => None,
            Compiled::Neg(e) => e.constant_value().map(|v| -v),
            Compiled::Call(f, e) => {
                let v = e.constant_value()?;
                let j = f.apply(&Jet::constant(v, 1, 0)).ok()?;
                Some(j.value())
            }
            Compiled::Binary(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                };
                v.is_finite().then_some(v)
            }
        }
    }
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;

    fn func() -> impl Strategy<Value = Func> {
        prop::sample::select(vec![Func::Sqrt, Func::Exp, Func::Ln, Func::Sin, Func::Cos, Func::Tan])
    }

    fn op() -> impl Strategy<Value = BinOp> {
        prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow])
    }

    fn expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..1e6f64).prop_map(Expr::Num),
            (0u32..1000).prop_map(|n| Expr::Num(f64::from(n))),
            prop::sample::select(vec!["x", "y", "r", "theta", "m2"]).prop_map(|s| Expr::Ident(s.to_string())),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (func(), inner.clone()).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                (op(), inner.clone(), inner).prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn canonical_printing_round_trips(e in expr()) {
            let text = e.to_string();
            let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert_eq!(&back, &e, "{}", text);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
