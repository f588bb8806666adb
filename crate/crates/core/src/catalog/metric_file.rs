//! Line-oriented metric files.
//!
//! ```text
//! # Taub-NUT in Gibbons-Hawking form
//! kind = kk_triple
//! name = my_taub_nut
//! signature = euclidean
//! coordinates = r, theta, phi
//! param m = 1
//! let V = 1 + m/r
//! domain r = [0.5, 5]
//! domain theta = [0.3, pi - 0.3]
//! domain phi = [0, 2*pi]
//! g[1,1] = V^2
//! g[2,2] = V^2 * r^2
//! g[3,3] = V^2 * r^2 * sin(theta)^2
//! a[3] = m * (1 - cos(theta))
//! sigma = -ln(V) / 2
//! ```
//!
//! One statement per line, `#` starts a comment. Indices are 1-based.
//! Diagonal components are required, off-diagonal ones default to zero, and
//! `g[i,j]` may be repeated as `g[j,i]` only with the same expression.
//! `a[i]` and `sigma` (default zero) are accepted for `kk_triple` files only.
//! Every name must be declared before it is used; `pi` is predefined.

use std::collections::HashMap;
use std::sync::Arc;

use super::expr::{lex, Compiled, Func, Parser, Tok, Token};
use super::{apply_overrides, Geometry, GeometryEntry, GeometryKind, Interval, Parameter};
use super::{ParseError, ParseErrorKind};
use crate::error::Result;
use crate::field::{CovectorField, MetricField, ScalarField, Signature};
use crate::kaluza_klein::KKTriple;

const KEYWORDS: [&str; 10] = [
    "kind",
    "name",
    "signature",
    "coordinates",
    "param",
    "let",
    "domain",
    "g",
    "a",
    "sigma",
];

/// Parse with the declared parameter defaults.
pub fn parse_metric_file(text: &str) -> Result<GeometryEntry, ParseError> {
    parse(text, &[])
}

/// Parse with parameter overrides; overriding an undeclared parameter is an
/// error.
pub fn parse_metric_file_with(text: &str, overrides: &[(String, f64)]) -> Result<GeometryEntry> {
    let mut entry = parse(text, overrides)?;
    apply_overrides(&mut entry.params, overrides, &entry.name)?;
    Ok(entry)
}

#[derive(Clone)]
struct Component {
    expr: Compiled,
    line: usize,
}

struct State<'a> {
    overrides: &'a [(String, f64)],
    kind: Option<GeometryKind>,
    name: Option<String>,
    signature: Option<Signature>,
    coordinates: Option<Vec<String>>,
    /// (name, default, value)
    params: Vec<(String, f64, f64)>,
    lets: HashMap<String, Compiled>,
    domain: HashMap<usize, Interval>,
    g: HashMap<(usize, usize), Component>,
    a: HashMap<usize, Component>,
    sigma: Option<Compiled>,
    seen: HashMap<&'static str, usize>,
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError::new(line, column, kind)
}

fn invalid(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    err(line, column, ParseErrorKind::Invalid(msg.into()))
}

/// Which names an expression may refer to.
#[derive(Clone, Copy, PartialEq)]
enum Scope {
    /// Parameters and `pi`.
    Constant,
    /// Also coordinates and `let` macros.
    Field,
}

impl State<'_> {
    fn dim(&self) -> usize {
        self.coordinates.as_ref().map_or(0, Vec::len)
    }

    fn lookup(&self, name: &str, scope: Scope, defaults: bool) -> Option<Compiled> {
        if name == "pi" {
            return Some(Compiled::Const(std::f64::consts::PI));
        }
        if let Some((_, d, v)) = self.params.iter().find(|(n, ..)| n == name) {
            return Some(Compiled::Const(if defaults { *d } else { *v }));
        }
        if scope == Scope::Field {
            if let Some(i) = self.coordinates.as_ref().and_then(|c| c.iter().position(|c| c == name)) {
                return Some(Compiled::Coord(i));
            }
            if let Some(c) = self.lets.get(name) {
                return Some(c.clone());
            }
        }
        None
    }

    fn is_declared(&self, name: &str) -> bool {
        name == "pi"
            || self.params.iter().any(|(n, ..)| n == name)
            || self.lets.contains_key(name)
            || self.coordinates.as_ref().is_some_and(|c| c.iter().any(|c| c == name))
    }

    fn check_new_name(&self, name: &str, line: usize, column: usize) -> Result<(), ParseError> {
        if Func::from_name(name).is_some() || KEYWORDS.contains(&name) {
            return Err(invalid(line, column, format!("`{name}` is reserved")));
        }
        if self.is_declared(name) {
            return Err(err(
                line,
                column,
                ParseErrorKind::DuplicateDeclaration(format!("`{name}`")),
            ));
        }
        Ok(())
    }

    fn once(&mut self, key: &'static str, line: usize, column: usize) -> Result<(), ParseError> {
        if let Some(prev) = self.seen.insert(key, line) {
            return Err(err(
                line,
                column,
                ParseErrorKind::DuplicateDeclaration(format!("`{key}` (first on line {prev})")),
            ));
        }
        Ok(())
    }

    fn require_coordinates(&self, line: usize, column: usize, what: &str) -> Result<(), ParseError> {
        if self.coordinates.is_none() {
            return Err(invalid(
                line,
                column,
                format!("`coordinates` must be declared before {what}"),
            ));
        }
        Ok(())
    }

    /// Report the first identifier in `toks` that does not resolve in `scope`.
    fn check_identifiers(&self, toks: &[Token], line: usize, scope: Scope) -> Result<(), ParseError> {
        for (i, t) in toks.iter().enumerate() {
            if let Tok::Ident(name) = &t.tok {
                let is_call = matches!(toks.get(i + 1).map(|t| &t.tok), Some(Tok::LParen));
                if !is_call && self.lookup(name, scope, false).is_none() {
                    return Err(err(line, t.column, ParseErrorKind::UnknownIdentifier(name.clone())));
                }
            }
        }
        Ok(())
    }

    /// Parse an expression from the parser position, resolved in `scope`.
    /// Returns the compiled form with parameter values and with defaults.
    fn expression(
        &self,
        p: &mut Parser<'_>,
        toks: &[Token],
        line: usize,
        scope: Scope,
    ) -> Result<(Compiled, Compiled), ParseError> {
        let start = p.position();
        let e = p.expr()?;
        self.check_identifiers(&toks[start..p.position()], line, scope)?;
        let value = Compiled::new(&e, &|s| self.lookup(s, scope, false), line, 1)?;
        let default = Compiled::new(&e, &|s| self.lookup(s, scope, true), line, 1)?;
        Ok((value, default))
    }
}

fn index(p: &mut Parser<'_>, dim: usize, line: usize) -> Result<usize, ParseError> {
    let (i, column) = p.integer("a component index")?;
    if i == 0 || i > dim {
        return Err(invalid(line, column, format!("index {i} out of range 1..={dim}")));
    }
    Ok(i - 1)
}

fn statement(st: &mut State<'_>, text: &str, line: usize) -> Result<(), ParseError> {
    let toks = lex(text, line)?;
    if toks.is_empty() {
        return Ok(());
    }
    let mut p = Parser::new(&toks, line, text.chars().count());
    let (head, head_col) = p.ident("a statement keyword")?;
    match head.as_str() {
        "kind" => {
            st.once("kind", line, head_col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (k, col) = p.ident("metric4, metric3 or kk_triple")?;
            p.finish()?;
            let kind = GeometryKind::from_name(&k).ok_or_else(|| {
                invalid(
                    line,
                    col,
                    format!("unknown kind `{k}` (expected metric4, metric3 or kk_triple)"),
                )
            })?;
            st.kind = Some(kind);
        }
        "name" => {
            st.once("name", line, head_col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (n, _) = p.ident("a name")?;
            p.finish()?;
            st.name = Some(n);
        }
        "signature" => {
            st.once("signature", line, head_col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (s, col) = p.ident("euclidean or lorentzian")?;
            p.finish()?;
            st.signature = Some(match s.as_str() {
                "euclidean" => Signature::Euclidean,
                "lorentzian" => Signature::Lorentzian,
                _ => return Err(invalid(line, col, format!("unknown signature `{s}`"))),
            });
        }
        "coordinates" => {
            st.once("coordinates", line, head_col)?;
            let kind = st
                .kind
                .ok_or_else(|| invalid(line, head_col, "`kind` must be declared before `coordinates`"))?;
            p.expect(Tok::Eq, "`=`")?;
            let mut names = Vec::new();
            loop {
                let (n, col) = p.ident("a coordinate name")?;
                st.check_new_name(&n, line, col)?;
                if names.contains(&n) {
                    return Err(err(line, col, ParseErrorKind::DuplicateDeclaration(format!("`{n}`"))));
                }
                names.push(n);
                if p.at_end() {
                    break;
                }
                p.expect(Tok::Comma, "`,` or end of line")?;
            }
            if names.len() != kind.chart_dim() {
                return Err(invalid(
                    line,
                    head_col,
                    format!(
                        "{} needs {} coordinates, found {}",
                        kind.as_str(),
                        kind.chart_dim(),
                        names.len()
                    ),
                ));
            }
            st.coordinates = Some(names);
        }
        "param" => {
            let (n, col) = p.ident("a parameter name")?;
            st.check_new_name(&n, line, col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (value, default) = st.expression(&mut p, &toks, line, Scope::Constant)?;
            p.finish()?;
            let (Some(v), Some(d)) = (value.constant_value(), default.constant_value()) else {
                return Err(invalid(
                    line,
                    col,
                    format!("parameter `{n}` does not evaluate to a finite number"),
                ));
            };
            let v = st.overrides.iter().find(|(o, _)| *o == n).map_or(v, |(_, o)| *o);
            st.params.push((n, d, v));
        }
        "let" => {
            st.require_coordinates(line, head_col, "`let`")?;
            let (n, col) = p.ident("a macro name")?;
            st.check_new_name(&n, line, col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (value, _) = st.expression(&mut p, &toks, line, Scope::Field)?;
            p.finish()?;
            st.lets.insert(n, value);
        }
        "domain" => {
            st.require_coordinates(line, head_col, "`domain`")?;
            let (n, col) = p.ident("a coordinate name")?;
            let axis = st
                .coordinates
                .as_ref()
                .and_then(|c| c.iter().position(|c| *c == n))
                .ok_or_else(|| err(line, col, ParseErrorKind::UnknownIdentifier(n.clone())))?;
            if st.domain.contains_key(&axis) {
                return Err(err(
                    line,
                    col,
                    ParseErrorKind::DuplicateDeclaration(format!("domain {n}")),
                ));
            }
            p.expect(Tok::Eq, "`=`")?;
            p.expect(Tok::LBracket, "`[`")?;
            let lo = bound(st, &mut p, &toks, line)?;
            p.expect(Tok::Comma, "`,`")?;
            let hi_col = p.column();
            let hi = bound(st, &mut p, &toks, line)?;
            p.expect(Tok::RBracket, "`]`")?;
            p.finish()?;
            if !(lo < hi) {
                return Err(invalid(line, hi_col, format!("empty domain [{lo}, {hi}]")));
            }
            st.domain.insert(axis, Interval::new(lo, hi));
        }
        "g" => {
            st.require_coordinates(line, head_col, "components")?;
            let dim = if st.kind == Some(GeometryKind::KkTriple) {
                3
            } else {
                st.dim()
            };
            p.expect(Tok::LBracket, "`[`")?;
            let i = index(&mut p, dim, line)?;
            p.expect(Tok::Comma, "`,`")?;
            let j = index(&mut p, dim, line)?;
            p.expect(Tok::RBracket, "`]`")?;
            p.expect(Tok::Eq, "`=`")?;
            let (value, _) = st.expression(&mut p, &toks, line, Scope::Field)?;
            p.finish()?;
            let label = format!("g[{},{}]", i + 1, j + 1);
            if let Some(prev) = st.g.get(&(i, j)) {
                return Err(err(
                    line,
                    head_col,
                    ParseErrorKind::DuplicateDeclaration(format!("{label} (first on line {})", prev.line)),
                ));
            }
            if let Some(prev) = st.g.get(&(j, i)) {
                if prev.expr != value {
                    return Err(err(
                        line,
                        head_col,
                        ParseErrorKind::AsymmetricComponent {
                            first: format!("g[{},{}] on line {}", j + 1, i + 1, prev.line),
                            second: label,
                        },
                    ));
                }
            }
            st.g.insert((i, j), Component { expr: value, line });
        }
        "a" => {
            st.require_coordinates(line, head_col, "components")?;
            if st.kind != Some(GeometryKind::KkTriple) {
                return Err(invalid(line, head_col, "`a` components only apply to kk_triple files"));
            }
            p.expect(Tok::LBracket, "`[`")?;
            let i = index(&mut p, 3, line)?;
            p.expect(Tok::RBracket, "`]`")?;
            p.expect(Tok::Eq, "`=`")?;
            let (value, _) = st.expression(&mut p, &toks, line, Scope::Field)?;
            p.finish()?;
            if let Some(prev) = st.a.get(&i) {
                return Err(err(
                    line,
                    head_col,
                    ParseErrorKind::DuplicateDeclaration(format!("a[{}] (first on line {})", i + 1, prev.line)),
                ));
            }
            st.a.insert(i, Component { expr: value, line });
        }
        "sigma" => {
            st.require_coordinates(line, head_col, "components")?;
            if st.kind != Some(GeometryKind::KkTriple) {
                return Err(invalid(line, head_col, "`sigma` only applies to kk_triple files"));
            }
            st.once("sigma", line, head_col)?;
            p.expect(Tok::Eq, "`=`")?;
            let (value, _) = st.expression(&mut p, &toks, line, Scope::Field)?;
            p.finish()?;
            st.sigma = Some(value);
        }
        _ => {
            return Err(err(
                line,
                head_col,
                ParseErrorKind::UnexpectedToken {
                    expected: format!("a statement keyword ({})", KEYWORDS.join(", ")),
                    found: format!("identifier `{head}`"),
                },
            ))
        }
    }
    Ok(())
}

/// Constant domain bound: an expression up to the next `,` or `]`.
fn bound(st: &State<'_>, p: &mut Parser<'_>, toks: &[Token], line: usize) -> Result<f64, ParseError> {
    let col = p.column();
    let (value, _) = st.expression(p, toks, line, Scope::Constant)?;
    value
        .constant_value()
        .ok_or_else(|| invalid(line, col, "domain bound does not evaluate to a finite number"))
}

fn parse(text: &str, overrides: &[(String, f64)]) -> Result<GeometryEntry, ParseError> {
    let mut st = State {
        overrides,
        kind: None,
        name: None,
        signature: None,
        coordinates: None,
        params: Vec::new(),
        lets: HashMap::new(),
        domain: HashMap::new(),
        g: HashMap::new(),
        a: HashMap::new(),
        sigma: None,
        seen: HashMap::new(),
    };
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        statement(&mut st, raw, i + 1)?;
    }
    let end = last.max(1);
    let missing = |what: &str| err(end, 1, ParseErrorKind::MissingComponent(what.to_string()));

    let kind = st.kind.ok_or_else(|| missing("kind"))?;
    let signature = st.signature.ok_or_else(|| missing("signature"))?;
    let coordinates = st.coordinates.clone().ok_or_else(|| missing("coordinates"))?;
    if kind == GeometryKind::Metric3 && signature != Signature::Euclidean {
        let line = st.seen.get("signature").copied().unwrap_or(end);
        return Err(invalid(line, 1, "metric3 files must be euclidean"));
    }
    let n = if kind == GeometryKind::KkTriple {
        3
    } else {
        coordinates.len()
    };
    let mut comps = vec![Compiled::Const(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            if let Some(c) = st.g.get(&(i, j)).or_else(|| st.g.get(&(j, i))) {
                comps[i * n + j] = c.expr.clone();
            } else if i == j {
                return Err(missing(&format!("g[{},{}]", i + 1, i + 1)));
            }
        }
    }
    let mut domain = Vec::with_capacity(coordinates.len());
    for (axis, c) in coordinates.iter().enumerate() {
        domain.push(*st.domain.get(&axis).ok_or_else(|| missing(&format!("domain {c}")))?);
    }
    let name = st.name.clone().unwrap_or_else(|| "custom".to_string());

    let comps = Arc::new(comps);
    let metric = {
        let comps = Arc::clone(&comps);
        MetricField::new(
            name.clone(),
            n,
            if kind == GeometryKind::KkTriple {
                Signature::Euclidean
            } else {
                signature
            },
            move |x| comps.iter().map(|c| c.eval(x).map_err(Into::into)).collect(),
        )
    };
    let geometry = if kind == GeometryKind::KkTriple {
        let a: Arc<Vec<Compiled>> = Arc::new(
            (0..3)
                .map(|i| st.a.get(&i).map_or(Compiled::Const(0.0), |c| c.expr.clone()))
                .collect(),
        );
        let sigma = st.sigma.clone().unwrap_or(Compiled::Const(0.0));
        let a = CovectorField::new(3, move |x| a.iter().map(|c| c.eval(x).map_err(Into::into)).collect());
        let sigma = ScalarField::new(move |x| sigma.eval(x).map_err(Into::into));
        let kk = KKTriple::new(sigma, a, metric, signature).map_err(|e| invalid(end, 1, e.to_string()))?;
        Geometry::Kk(kk)
    } else {
        Geometry::Metric(metric)
    };

    let params = st
        .params
        .iter()
        .map(|(n, d, v)| Parameter {
            name: n.clone(),
            default: *d,
            value: *v,
        })
        .collect();
    Ok(GeometryEntry {
        name,
        kind,
        signature,
        coordinates,
        params,
        domain,
        provenance: "metric file".to_string(),
        geometry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAUB_NUT: &str = "\
# Gibbons-Hawking form
kind = kk_triple
name = tn_file
signature = euclidean
coordinates = r, theta, phi
param m = 1
let V = 1 + m/r
domain r = [0.5, 5]
domain theta = [0.3, pi - 0.3]
domain phi = [0, 2*pi]
g[1,1] = V^2
g[2,2] = V^2 * r^2
g[3,3] = V^2 * r^2 * sin(theta)^2
a[3] = m * (1 - cos(theta))
sigma = -ln(V) / 2
";

    fn flat3() -> String {
        "kind = metric3\nsignature = euclidean\ncoordinates = x, y, z\n\
         domain x = [0, 1]\ndomain y = [0, 1]\ndomain z = [0, 1]\n\
         g[1,1] = 1\ng[2,2] = 1\ng[3,3] = 1\n"
            .to_string()
    }

    fn error(text: &str) -> ParseError {
        match parse_metric_file(text) {
            Err(e) => e,
            Ok(_) => panic!("accepted:\n{text}"),
        }
    }

    #[test]
    fn flat_declaration_is_identity() {
        let e = parse_metric_file(&flat3()).unwrap();
        assert_eq!(e.kind, GeometryKind::Metric3);
        let g = e.metric3().unwrap().values_at(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn macro_component() {
        let e = parse_metric_file(TAUB_NUT).unwrap();
        let Geometry::Kk(kk) = &e.geometry else { panic!() };
        let g = kk.g3.values_at(&[2.0, 1.0, 0.0]).unwrap();
        assert_eq!(g[[0, 0]], 2.25);
        assert_eq!(e.domain[1], Interval::new(0.3, std::f64::consts::PI - 0.3));
    }

    #[test]
    fn matches_builtin_taub_nut() {
        let file = parse_metric_file(TAUB_NUT).unwrap().metric4().unwrap();
        let builtin = super::super::builtin("taub_nut", &[]).unwrap().metric4().unwrap();
        for p in [[2.0, 1.0, 0.3, 0.0], [0.7, 2.1, 4.0, 0.0]] {
            let (a, b) = (file.jets_at(&p, 3).unwrap(), builtin.jets_at(&p, 3).unwrap());
            for (x, y) in a.metric.as_slice().iter().zip(b.metric.as_slice()) {
                for (u, v) in x.coeffs().iter().zip(y.coeffs()) {
                    assert!((u - v).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn overrides() {
        let e = parse_metric_file_with(TAUB_NUT, &[("m".into(), 2.0)]).unwrap();
        assert_eq!(e.param("m"), Some(2.0));
        assert_eq!(e.params[0].default, 1.0);
        let Geometry::Kk(kk) = &e.geometry else { panic!() };
        assert_eq!(kk.g3.values_at(&[2.0, 1.0, 0.0]).unwrap()[[0, 0]], 4.0);
        assert!(parse_metric_file_with(TAUB_NUT, &[("q".into(), 2.0)]).is_err());
    }

    #[test]
    fn off_diagonal_symmetry() {
        let ok = flat3() + "g[1,2] = x/2\ng[2,1] = x / 2\n";
        let e = parse_metric_file(&ok).unwrap();
        assert_eq!(e.metric3().unwrap().values_at(&[0.5, 0.0, 0.0]).unwrap()[[1, 0]], 0.25);
        let e = error(&(flat3() + "g[1,2] = x\ng[2,1] = y\n"));
        assert_eq!(e.line, 11);
        assert!(matches!(e.kind, ParseErrorKind::AsymmetricComponent { .. }));
        let e = error(&(flat3() + "g[1,1] = 2\n"));
        assert!(matches!(e.kind, ParseErrorKind::DuplicateDeclaration(_)));
    }

    #[test]
    fn semantic_errors() {
        let e = error(&flat3().replace("g[2,2] = 1\n", ""));
        assert_eq!(e.kind, ParseErrorKind::MissingComponent("g[2,2]".into()));
        let e = error(&flat3().replace("g[3,3] = 1", "g[3,3] = 1 + w"));
        assert_eq!((e.line, e.column), (9, 14));
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("w".into()));
        let e = error(&flat3().replace("g[3,3] = 1", "g[3,3] = cosh(x)"));
        assert_eq!((e.line, e.column), (9, 10));
        assert_eq!(e.kind, ParseErrorKind::UnsupportedFunction("cosh".into()));
        let e = error(&flat3().replace("g[3,3]", "g[4,3]"));
        assert_eq!((e.line, e.column), (9, 3));
        let e = error(&flat3().replace("domain z = [0, 1]\n", ""));
        assert_eq!(e.kind, ParseErrorKind::MissingComponent("domain z".into()));
        let e = error(&(flat3() + "a[1] = 1\n"));
        assert_eq!(e.line, 10);
        let e = error(&flat3().replace("coordinates = x, y, z", "coordinates = x, y"));
        assert_eq!(e.line, 3);
        let e = error(&flat3().replace("domain x = [0, 1]", "domain x = [1, 0]"));
        assert_eq!(e.line, 4);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let e = error(&flat3().replace("g[2,2] = 1", "g[2,2] = (1 + x"));
        assert_eq!((e.line, e.column), (8, 16));
        let e = error(&flat3().replace("g[2,2] = 1", "g[2,2] = 1 $ x"));
        assert_eq!((e.line, e.column, e.kind), (8, 12, ParseErrorKind::UnexpectedChar('$')));
        let e = error(&flat3().replace("g[2,2] = 1", "g[2,2] 1"));
        assert_eq!((e.line, e.column), (8, 8));
        let e = error("metric = 1\n");
        assert_eq!((e.line, e.column), (1, 1));
    }
}
