//! Parameter expressions: sums of constants, scaled variables, pairwise
//! products, squares and `plogis(...)` wrappers.

use std::fmt;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(f64),
    Linear { coef: f64, var: usize },
    Product { coef: f64, a: usize, b: usize },
    Square { coef: f64, var: usize },
    Logistic { coef: f64, inner: Box<Expr> },
}

/// A sum of terms over variables identified by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

pub fn plogis(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr {
            terms: vec![Term::Const(c)],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => *c,
                Term::Linear { coef, var } => coef * values[*var],
                Term::Product { coef, a, b } => coef * values[*a] * values[*b],
                Term::Square { coef, var } => coef * values[*var] * values[*var],
                Term::Logistic { coef, inner } => coef * plogis(inner.eval(values)),
            })
            .sum()
    }

    /// Value when the expression references no variables.
    pub fn as_constant(&self) -> Option<f64> {
        let mut acc = 0.0;
        for t in &self.terms {
            match t {
                Term::Const(c) => acc += c,
                Term::Logistic { coef, inner } => acc += coef * plogis(inner.as_constant()?),
                _ => return None,
            }
        }
        Some(acc)
    }

    /// Referenced variables, sorted and deduplicated.
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        for t in &self.terms {
            match t {
                Term::Const(_) => {}
                Term::Linear { var, .. } | Term::Square { var, .. } => out.push(*var),
                Term::Product { a, b, .. } => out.extend([*a, *b]),
                Term::Logistic { inner, .. } => inner.collect_vars(out),
            }
        }
    }

    /// Replaces `var` by `value` and folds constants. Logistic wrappers are
    /// kept so the result still reads as a probability model.
    pub fn substitute(&self, var: usize, value: f64) -> Expr {
        let mut out = Vec::new();
        for t in &self.terms {
            out.push(match t {
                Term::Linear { coef, var: v } if *v == var => Term::Const(coef * value),
                Term::Square { coef, var: v } if *v == var => Term::Const(coef * value * value),
                Term::Product { coef, a, b } if *a == var && *b == var => {
                    Term::Const(coef * value * value)
                }
                Term::Product { coef, a, b } if *a == var => Term::Linear {
                    coef: coef * value,
                    var: *b,
                },
                Term::Product { coef, a, b } if *b == var => Term::Linear {
                    coef: coef * value,
                    var: *a,
                },
                Term::Logistic { coef, inner } => Term::Logistic {
                    coef: *coef,
                    inner: Box::new(inner.substitute(var, value)),
                },
                other => other.clone(),
            });
        }
        Expr { terms: out }.fold_constants()
    }

    fn fold_constants(self) -> Expr {
        let mut c = 0.0;
        let mut any = false;
        let mut rest: Vec<Term> = Vec::new();
        for t in self.terms {
            match t {
                Term::Const(v) => {
                    c += v;
                    any = true;
                }
                t => {
                    if let Some(slot) = rest.iter_mut().find(|r| same_monomial(r, &t)) {
                        *coef_mut(slot) += coef_of(&t);
                    } else {
                        rest.push(t);
                    }
                }
            }
        }
        rest.retain(|t| matches!(t, Term::Logistic { .. }) || coef_of(t) != 0.0);
        if any && (c != 0.0 || rest.is_empty()) {
            rest.insert(0, Term::Const(c));
        }
        Expr { terms: rest }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        ExprDisplay { expr: self, names }
    }
}

fn same_monomial(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Linear { var: x, .. }, Term::Linear { var: y, .. }) => x == y,
        (Term::Square { var: x, .. }, Term::Square { var: y, .. }) => x == y,
        (Term::Product { a: a1, b: b1, .. }, Term::Product { a: a2, b: b2, .. }) => {
            a1 == a2 && b1 == b2
        }
        _ => false,
    }
}

fn coef_of(t: &Term) -> f64 {
    match t {
        Term::Const(c) => *c,
        Term::Linear { coef, .. }
        | Term::Product { coef, .. }
        | Term::Square { coef, .. }
        | Term::Logistic { coef, .. } => *coef,
    }
}

fn coef_mut(t: &mut Term) -> &mut f64 {
    match t {
        Term::Const(c) => c,
        Term::Linear { coef, .. }
        | Term::Product { coef, .. }
        | Term::Square { coef, .. }
        | Term::Logistic { coef, .. } => coef,
    }
}

struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.expr.terms.iter().enumerate() {
            let (coef, body) = match t {
                Term::Const(c) => (*c, None),
                Term::Linear { coef, var } => (*coef, Some(self.names[*var].clone())),
                Term::Product { coef, a, b } => {
                    (*coef, Some(format!("{}*{}", self.names[*a], self.names[*b])))
                }
                Term::Square { coef, var } => (*coef, Some(format!("{}^2", self.names[*var]))),
                Term::Logistic { coef, inner } => (
                    *coef,
                    Some(format!("plogis({})", inner.display(self.names))),
                ),
            };
            let mag = coef.abs();
            if i == 0 {
                if coef < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if coef < 0.0 { " - " } else { " + " })?;
            }
            match body {
                None => write!(f, "{mag}")?,
                Some(b) if mag == 1.0 => f.write_str(&b)?,
                Some(b) => write!(f, "{mag}*{b}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

/// Parser over a single expression string. `resolve` maps a variable name
/// to its index or `None` when it is not (yet) declared.
pub(crate) struct ExprParser<'a, F> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    line: usize,
    resolve: &'a F,
}

impl<'a, F> ExprParser<'a, F>
where
    F: Fn(&str) -> Option<usize>,
{
    /// `offset` is the column of `src` within its line, for error locations.
    pub(crate) fn parse(src: &str, line: usize, offset: usize, resolve: &'a F) -> Result<Expr, ModelError> {
        let toks = tokenize(src, line, offset)?;
        let mut p = ExprParser {
            end: offset + src.len() + 1,
            toks,
            pos: 0,
            line,
            resolve,
        };
        let e = p.expr()?;
        if let Some((col, t)) = p.toks.get(p.pos) {
            return Err(p.err(*col, format!("unexpected {t:?}")));
        }
        Ok(e)
    }

    fn err(&self, column: usize, message: String) -> ModelError {
        ModelError::Syntax {
            line: self.line,
            column,
            message,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(c, _)| *c)
    }

    fn expr(&mut self) -> Result<Expr, ModelError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        loop {
            terms.push(self.term(sign)?);
            match self.peek() {
                Some(Tok::Plus) => sign = 1.0,
                Some(Tok::Minus) => sign = -1.0,
                _ => break,
            }
            self.pos += 1;
        }
        Ok(Expr { terms })
    }

    fn term(&mut self, sign: f64) -> Result<Term, ModelError> {
        let start = self.col();
        let mut coef = sign;
        let mut vars: Vec<usize> = Vec::new();
        let mut logistic: Option<Expr> = None;
        loop {
            match self.factor()? {
                Factor::Num(v) => coef *= v,
                Factor::Var(v, 1) => vars.push(v),
                Factor::Var(v, _) => vars.extend([v, v]),
                Factor::Logistic(e) => {
                    if logistic.is_some() {
                        return Err(self.err(start, "at most one plogis(...) per term".into()));
                    }
                    logistic = Some(e);
                }
            }
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if !coef.is_finite() {
            return Err(ModelError::NonFinite {
                line: self.line,
                column: start,
            });
        }
        match (logistic, vars.as_slice()) {
            (Some(inner), []) => Ok(Term::Logistic {
                coef,
                inner: Box::new(inner),
            }),
            (Some(_), _) => Err(self.err(start, "plogis(...) cannot be multiplied by a variable".into())),
            (None, []) => Ok(Term::Const(coef)),
            (None, [v]) => Ok(Term::Linear { coef, var: *v }),
            (None, [a, b]) if a == b => Ok(Term::Square { coef, var: *a }),
            (None, [a, b]) => Ok(Term::Product {
                coef,
                a: *a.min(b),
                b: *a.max(b),
            }),
            (None, _) => Err(self.err(start, "terms may have degree at most 2".into())),
        }
    }

    fn factor(&mut self) -> Result<Factor, ModelError> {
        let col = self.col();
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err(col, "unexpected end of expression".into()));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Factor::Num(v)),
            Tok::Ident(name) if self.peek() == Some(&Tok::LParen) => {
                if name != "plogis" {
                    return Err(ModelError::UnknownFunction {
                        name,
                        line: self.line,
                        column: col,
                    });
                }
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err(self.col(), "expected `)`".into()));
                }
                self.pos += 1;
                Ok(Factor::Logistic(inner))
            }
            Tok::Ident(name) => {
                let idx = (self.resolve)(&name).ok_or_else(|| ModelError::UnknownVariable {
                    name: name.clone(),
                    line: self.line,
                    column: col,
                })?;
                if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    match self.toks.get(self.pos) {
                        Some((_, Tok::Num(p))) if *p == 2.0 => {
                            self.pos += 1;
                            Ok(Factor::Var(idx, 2))
                        }
                        Some((_, Tok::Num(p))) if *p == 1.0 => {
                            self.pos += 1;
                            Ok(Factor::Var(idx, 1))
                        }
                        _ => Err(self.err(self.col(), "only ^2 is supported".into())),
                    }
                } else {
                    Ok(Factor::Var(idx, 1))
                }
            }
            t => Err(self.err(col, format!("unexpected {t:?}"))),
        }
    }
}

enum Factor {
    Num(f64),
    Var(usize, u8),
    Logistic(Expr),
}

fn tokenize(src: &str, line: usize, offset: usize) -> Result<Vec<(usize, Tok)>, ModelError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = offset + i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
                continue;
            }
            '+' => out.push((col, Tok::Plus)),
            '-' => out.push((col, Tok::Minus)),
            '*' => out.push((col, Tok::Star)),
            '^' => out.push((col, Tok::Caret)),
            '(' => out.push((col, Tok::LParen)),
            ')' => out.push((col, Tok::RParen)),
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ModelError::Syntax {
                    line,
                    column: col,
                    message: format!("bad number `{text}`"),
                })?;
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { line, column: col });
                }
                out.push((col, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((col, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            other => {
                return Err(ModelError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["L", "A", "Y"].iter().map(|s| s.to_string()).collect()
    }

    fn parse(src: &str) -> Result<Expr, ModelError> {
        let n = names();
        let resolve = |s: &str| n.iter().position(|x| x == s);
        ExprParser::parse(src, 1, 0, &resolve)
    }

    #[test]
    fn linear_and_logistic() {
        let e = parse("plogis(-0.5 + 2*L)").unwrap();
        assert!((e.eval(&[0.25, 0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(e.display(&names()).to_string(), "plogis(-0.5 + 2*L)");
        let e = parse("2 + A + 3*L + A*L").unwrap();
        assert_eq!(e.eval(&[2.0, 1.0, 0.0]), 2.0 + 1.0 + 6.0 + 2.0);
        assert_eq!(e.variables(), vec![0, 1]);
    }

    #[test]
    fn squares_and_products() {
        let e = parse("0.5*L^2 - Y*A").unwrap();
        assert_eq!(e.terms()[0], Term::Square { coef: 0.5, var: 0 });
        assert_eq!(e.terms()[1], Term::Product { coef: -1.0, a: 1, b: 2 });
        assert_eq!(parse("L*L").unwrap().terms()[0], Term::Square { coef: 1.0, var: 0 });
        assert_eq!(e.display(&names()).to_string(), "0.5*L^2 - A*Y");
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("exp(L)"), Err(ModelError::UnknownFunction { .. })));
        assert!(matches!(parse("Q + 1"), Err(ModelError::UnknownVariable { .. })));
        assert!(matches!(parse("L*A*Y"), Err(ModelError::Syntax { .. })));
        assert!(matches!(parse("L^3"), Err(ModelError::Syntax { .. })));
        assert!(matches!(parse("1e999"), Err(ModelError::NonFinite { .. })));
        assert!(matches!(parse("2 +"), Err(ModelError::Syntax { .. })));
        assert!(matches!(parse("(L)"), Err(ModelError::Syntax { column: 1, .. })));
    }

    #[test]
    fn substitution_folds_constants() {
        let e = parse("plogis(0.5 - 2*A)").unwrap();
        let s = e.substitute(1, 0.0);
        assert_eq!(s.display(&names()).to_string(), "plogis(0.5)");
        assert!((s.as_constant().unwrap() - plogis(0.5)).abs() < 1e-15);
        let e = parse("2 + A + 3*L + A*L").unwrap().substitute(1, 1.0);
        assert_eq!(e.display(&names()).to_string(), "3 + 4*L");
    }

    #[test]
    fn plogis_is_stable() {
        assert_eq!(plogis(-800.0), 0.0);
        assert_eq!(plogis(800.0), 1.0);
        assert!((plogis(1.0) + plogis(-1.0) - 1.0).abs() < 1e-15);
    }
}
