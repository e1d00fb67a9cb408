//! Problem files, candidate points and certificate reports.
//!
//! Problem file grammar (line oriented, `#` starts a comment):
//!
//! ```text
//! name "wb2"
//! vars x1 x2 x3
//! minimize 2500/13*x1^2 - 12500/13*x1*x3 - 2500/13*x1*x2
//! subject_to
//! 25/26*x1*x2 - 125/26*x1*x3 - 25/26*x2^2 - 25/26*x3^2 == 7/2
//! 0 <= 25/26*x1^2 - 125/26*x1*x3 - 25/26*x1*x2 <= 6
//! ```
//!
//! Constraints are `POLY >= c`, `POLY <= c`, `POLY == c` or `lo <= POLY <= hi`;
//! every one of them is rewritten into `g(x) >= 0` form. Fractions `p/q` are
//! read as integers and divided once, so `25/26` is the correctly rounded
//! binary64 value. Multiplication must be written explicitly with `*`.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::multiindex::MultiIndex;
use crate::polynomial::Polynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: unknown variable `{name}`")]
    UnknownVariable { name: String, line: usize, col: usize },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("problem has no constraints")]
    EmptyConstraints,
    #[error("line {line}: lower bound {lo} exceeds upper bound {hi}")]
    InconsistentBound { line: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("no value given for variable `{0}`")]
    Missing(String),
    #[error("variable `{0}` assigned more than once")]
    Duplicate(String),
    #[error("value `{value}` for `{name}` is not a number")]
    NonNumeric { name: String, value: String },
    #[error("point assigns unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("malformed point specification: {0}")]
    Malformed(String),
}

/// Where a canonical constraint came from in the source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceForm {
    Inequality,
    /// One of the two halves of `e == c`; `upper` is the `c - e >= 0` half.
    EqualityHalf { upper: bool },
    /// One of the two halves of `lo <= e <= hi`.
    BoundHalf { upper: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintSource {
    pub line: usize,
    pub form: SourceForm,
}

/// A polynomial optimization problem `min f(x) s.t. g_i(x) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PopProblem {
    pub name: String,
    pub variables: Vec<String>,
    pub objective: Polynomial,
    pub constraints: Vec<Polynomial>,
    pub provenance: Vec<ConstraintSource>,
}

impl PopProblem {
    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    /// Smallest admissible relaxation order: every constraint's half-degree
    /// and the objective's half-degree must fit.
    pub fn min_order(&self) -> u32 {
        let obj = self.objective.half_degree().unwrap_or(0);
        self.constraints
            .iter()
            .filter_map(Polynomial::half_degree)
            .fold(obj, u32::max)
            .max(1)
    }

    /// Relaxation order used when none is requested: the minimum order, but
    /// never below the second-order relaxation.
    pub fn default_order(&self) -> u32 {
        self.min_order().max(2)
    }
}

/// Constraint as written, before rewriting into `g >= 0` form.
#[derive(Clone, Debug, PartialEq)]
pub enum RawConstraint {
    Ge { expr: Polynomial, rhs: f64, line: usize },
    Le { expr: Polynomial, rhs: f64, line: usize },
    Eq { expr: Polynomial, rhs: f64, line: usize },
    Between { lo: f64, expr: Polynomial, hi: f64, line: usize },
}

/// Rewrites raw constraints into `g >= 0` form, preserving order and keeping
/// the two halves of equalities and bounds adjacent.
pub fn canonicalize(raw: &[RawConstraint]) -> Result<Vec<(Polynomial, ConstraintSource)>, ParseError> {
    let mut out = Vec::with_capacity(raw.len() * 2);
    for rc in raw {
        match rc {
            RawConstraint::Ge { expr, rhs, line } => out.push((
                expr.add_constant(-rhs),
                ConstraintSource { line: *line, form: SourceForm::Inequality },
            )),
            RawConstraint::Le { expr, rhs, line } => out.push((
                expr.scale(-1.0).add_constant(*rhs),
                ConstraintSource { line: *line, form: SourceForm::Inequality },
            )),
            RawConstraint::Eq { expr, rhs, line } => {
                out.push((
                    expr.add_constant(-rhs),
                    ConstraintSource { line: *line, form: SourceForm::EqualityHalf { upper: false } },
                ));
                out.push((
                    expr.scale(-1.0).add_constant(*rhs),
                    ConstraintSource { line: *line, form: SourceForm::EqualityHalf { upper: true } },
                ));
            }
            RawConstraint::Between { lo, expr, hi, line } => {
                if lo > hi {
                    return Err(ParseError::InconsistentBound { line: *line, lo: *lo, hi: *hi });
                }
                out.push((
                    expr.add_constant(-lo),
                    ConstraintSource { line: *line, form: SourceForm::BoundHalf { upper: false } },
                ));
                out.push((
                    expr.scale(-1.0).add_constant(*hi),
                    ConstraintSource { line: *line, form: SourceForm::BoundHalf { upper: true } },
                ));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num { text: String, integer: bool },
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Ge,
    Le,
    EqEq,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, col, msg: msg.into() }
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integer = true;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                integer = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if text == "." {
                return Err(syntax(line, col, "stray `.`"));
            }
            toks.push(Token { tok: Tok::Num { text, integer }, col });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j == chars.len() {
                return Err(syntax(line, col, "unterminated string"));
            }
            toks.push(Token { tok: Tok::Str(chars[start..j].iter().collect()), col });
            i = j + 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, width) = match (c, two.as_str()) {
            (_, ">=") => (Tok::Ge, 2),
            (_, "<=") => (Tok::Le, 2),
            (_, "==") => (Tok::EqEq, 2),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            _ => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
        };
        toks.push(Token { tok, col });
        i += width;
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// parser

struct LineParser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a HashMap<String, usize>,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        syntax(self.line, self.col(), msg)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// NUMBER := decimal | INT "/" INT
    fn number(&mut self) -> Result<f64, ParseError> {
        let col = self.col();
        let (text, integer) = match self.bump() {
            Some(Token { tok: Tok::Num { text, integer }, .. }) => (text.clone(), *integer),
            _ => return Err(syntax(self.line, col, "expected a number")),
        };
        let value: f64 = text
            .parse()
            .map_err(|_| syntax(self.line, col, format!("bad number `{text}`")))?;
        if self.peek() == Some(&Tok::Slash) {
            if !integer {
                return Err(self.err("fraction numerator must be an integer"));
            }
            self.bump();
            let dcol = self.col();
            match self.bump() {
                Some(Token { tok: Tok::Num { text: d, integer: true }, .. }) => {
                    let den: f64 = d
                        .parse()
                        .map_err(|_| syntax(self.line, dcol, format!("bad number `{d}`")))?;
                    if den == 0.0 {
                        return Err(syntax(self.line, dcol, "division by zero"));
                    }
                    Ok(value / den)
                }
                _ => Err(syntax(self.line, dcol, "fraction denominator must be an integer")),
            }
        } else {
            Ok(value)
        }
    }

    /// Optionally signed number, for bound positions.
    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        while let Some(t) = self.peek() {
            match t {
                Tok::Minus => sign = -sign,
                Tok::Plus => {}
                _ => break,
            }
            self.bump();
        }
        Ok(sign * self.number()?)
    }

    /// factor := IDENT ["^" INT]
    fn factor(&mut self, exps: &mut [u32]) -> Result<(), ParseError> {
        let col = self.col();
        let name = match self.bump() {
            Some(Token { tok: Tok::Ident(s), .. }) => s.clone(),
            _ => return Err(syntax(self.line, col, "expected a variable")),
        };
        let k = *self.vars.get(&name).ok_or(ParseError::UnknownVariable {
            name: name.clone(),
            line: self.line,
            col,
        })?;
        let mut power = 1u32;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let pcol = self.col();
            match self.bump() {
                Some(Token { tok: Tok::Num { text, integer: true }, .. }) => {
                    power = text
                        .parse()
                        .map_err(|_| syntax(self.line, pcol, format!("bad exponent `{text}`")))?;
                }
                _ => return Err(syntax(self.line, pcol, "exponent must be a nonnegative integer")),
            }
        }
        exps[k] += power;
        Ok(())
    }

    /// term := NUMBER | [NUMBER "*"] factor ("*" factor)*
    fn term(&mut self, sign: f64) -> Result<(MultiIndex, f64), ParseError> {
        let n = self.vars.len();
        let mut exps = vec![0u32; n];
        let mut coeff = sign;
        let mut need_factor = true;
        if matches!(self.peek(), Some(Tok::Num { .. })) {
            coeff *= self.number()?;
            if self.peek() == Some(&Tok::Star) {
                self.bump();
            } else {
                need_factor = false;
            }
        }
        if need_factor {
            self.factor(&mut exps)?;
            while self.peek() == Some(&Tok::Star) {
                self.bump();
                self.factor(&mut exps)?;
            }
        }
        Ok((MultiIndex::new(exps), coeff))
    }

    /// POLY := term (("+"|"-") term)*, with an optional leading sign.
    fn poly(&mut self) -> Result<Polynomial, ParseError> {
        let mut p = Polynomial::zero(self.vars.len());
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.bump();
            }
            Some(Tok::Plus) => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let (alpha, c) = self.term(sign)?;
            p.add_term(alpha, c);
            match self.peek() {
                Some(Tok::Plus) => sign = 1.0,
                Some(Tok::Minus) => sign = -1.0,
                _ => break,
            }
            self.bump();
        }
        Ok(p)
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn constraint(&mut self) -> Result<RawConstraint, ParseError> {
        let line = self.line;
        let cmp_positions: Vec<usize> = self
            .toks
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t.tok, Tok::Ge | Tok::Le | Tok::EqEq))
            .map(|(i, _)| i)
            .collect();
        match cmp_positions.len() {
            1 => {
                let expr = self.poly()?;
                let cmp = self.bump().map(|t| t.tok.clone());
                let rhs_poly = self.poly()?;
                self.expect_end()?;
                // anything non-constant on the right moves to the left
                let rhs = rhs_poly.coefficient(&MultiIndex::zero(self.vars.len()));
                let expr = Polynomial::linear_combine(1.0, &expr, -1.0, &rhs_poly.add_constant(-rhs));
                Ok(match cmp {
                    Some(Tok::Ge) => RawConstraint::Ge { expr, rhs, line },
                    Some(Tok::Le) => RawConstraint::Le { expr, rhs, line },
                    _ => RawConstraint::Eq { expr, rhs, line },
                })
            }
            2 => {
                let first = self.signed_number()?;
                let c1 = self.bump().map(|t| t.tok.clone());
                let expr = self.poly()?;
                let c2col = self.col();
                let c2 = self.bump().map(|t| t.tok.clone());
                let second = self.signed_number()?;
                self.expect_end()?;
                let (lo, hi) = match (c1, c2) {
                    (Some(Tok::Le), Some(Tok::Le)) => (first, second),
                    (Some(Tok::Ge), Some(Tok::Ge)) => (second, first),
                    _ => return Err(syntax(line, c2col, "two-sided bound needs matching `<=` or `>=`")),
                };
                Ok(RawConstraint::Between { lo, expr, hi, line })
            }
            0 => Err(self.err("constraint needs a comparison (`>=`, `<=` or `==`)")),
            _ => Err(syntax(line, self.toks[cmp_positions[2]].col, "too many comparisons")),
        }
    }
}

/// Parses a problem file into canonical `g >= 0` form.
pub fn parse_problem(text: &str) -> Result<PopProblem, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let toks = lex_line(raw, i + 1)?;
        if !toks.is_empty() {
            lines.push((i + 1, raw.chars().count() + 1, toks));
        }
    }
    let mut it = lines.iter();
    let keyword = |entry: Option<&(usize, usize, Vec<Token>)>, kw: &str| -> Result<(usize, usize, Vec<Token>), ParseError> {
        match entry {
            Some((line, end, toks)) if toks[0].tok == Tok::Ident(kw.to_string()) => {
                Ok((*line, *end, toks[1..].to_vec()))
            }
            Some((line, _, toks)) => Err(syntax(*line, toks[0].col, format!("expected `{kw}`"))),
            None => Err(syntax(text.lines().count().max(1), 1, format!("expected `{kw}` before end of file"))),
        }
    };

    let (line, _, rest) = keyword(it.next(), "name")?;
    let name = match rest.as_slice() {
        [Token { tok: Tok::Str(s), .. }] => s.clone(),
        _ => return Err(syntax(line, rest.first().map_or(5, |t| t.col), "expected a quoted problem name")),
    };

    let (line, _, rest) = keyword(it.next(), "vars")?;
    let mut variables = Vec::new();
    let mut index = HashMap::new();
    for t in &rest {
        match &t.tok {
            Tok::Ident(v) => {
                if index.insert(v.clone(), variables.len()).is_some() {
                    return Err(ParseError::DuplicateVariable(v.clone()));
                }
                variables.push(v.clone());
            }
            _ => return Err(syntax(line, t.col, "expected a variable name")),
        }
    }
    if variables.is_empty() {
        return Err(syntax(line, 5, "no variables declared"));
    }

    let (line, end_col, rest) = keyword(it.next(), "minimize")?;
    let mut p = LineParser { toks: &rest, pos: 0, line, end_col, vars: &index };
    let objective = p.poly()?;
    p.expect_end()?;

    let (line, _, rest) = keyword(it.next(), "subject_to")?;
    if let Some(t) = rest.first() {
        return Err(syntax(line, t.col, "`subject_to` stands on its own line"));
    }

    let mut raw = Vec::new();
    for (line, end_col, toks) in it {
        let mut p = LineParser { toks, pos: 0, line: *line, end_col: *end_col, vars: &index };
        raw.push(p.constraint()?);
    }
    if raw.is_empty() {
        return Err(ParseError::EmptyConstraints);
    }
    let (constraints, provenance) = canonicalize(&raw)?.into_iter().unzip();
    Ok(PopProblem { name, variables, objective, constraints, provenance })
}

/// Writes a polynomial in problem-file syntax; the output parses back to the
/// same coefficients bit for bit.
pub fn format_polynomial(p: &Polynomial, variables: &[String]) -> String {
    let terms = p.graded_terms();
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (alpha, c)) in terms.iter().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
        }
        let mut factors = Vec::new();
        for (k, &e) in alpha.exponents().iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(variables[k].clone()),
                _ => factors.push(format!("{}^{}", variables[k], e)),
            }
        }
        if factors.is_empty() {
            out.push_str(&format!("{mag:?}"));
        } else {
            if mag != 1.0 {
                out.push_str(&format!("{mag:?}*"));
            }
            out.push_str(&factors.join("*"));
        }
    }
    out
}

impl fmt::Display for PopProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name \"{}\"", self.name)?;
        writeln!(f, "vars {}", self.variables.join(" "))?;
        writeln!(f, "minimize {}", format_polynomial(&self.objective, &self.variables))?;
        writeln!(f, "subject_to")?;
        for g in &self.constraints {
            writeln!(f, "{} >= 0", format_polynomial(g, &self.variables))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// candidate points

/// Candidate point `x̂`, ordered like the problem's variables.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePoint {
    pub values: Vec<f64>,
}

fn parse_value(name: &str, text: &str) -> Result<f64, PointError> {
    let t = text.trim();
    let bad = || PointError::NonNumeric { name: name.to_string(), value: t.to_string() };
    if let Some((num, den)) = t.split_once('/') {
        let num: f64 = num.trim().parse().map_err(|_| bad())?;
        let den: f64 = den.trim().parse().map_err(|_| bad())?;
        return Ok(num / den);
    }
    let v: f64 = t.parse().map_err(|_| bad())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Parses `name=value,...` or a JSON object keyed by variable name.
pub fn parse_point(text: &str, problem: &PopProblem) -> Result<CandidatePoint, PointError> {
    let mut assigned: Vec<Option<f64>> = vec![None; problem.nvars()];
    let index: HashMap<&str, usize> = problem
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut assign = |name: &str, v: f64| -> Result<(), PointError> {
        let k = *index
            .get(name)
            .ok_or_else(|| PointError::UnknownVariable(name.to_string()))?;
        if assigned[k].replace(v).is_some() {
            return Err(PointError::Duplicate(name.to_string()));
        }
        Ok(())
    };

    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        // serde_json keeps the last of repeated keys, so scan the raw text
        // for duplicates through a streaming map visitor instead.
        let entries: Vec<(String, serde_json::Value)> = json_entries(trimmed)?;
        for (name, value) in entries {
            let v = match &value {
                serde_json::Value::Number(num) => num.as_f64().ok_or_else(|| PointError::NonNumeric {
                    name: name.clone(),
                    value: value.to_string(),
                })?,
                serde_json::Value::String(s) => parse_value(&name, s)?,
                other => {
                    return Err(PointError::NonNumeric { name: name.clone(), value: other.to_string() })
                }
            };
            assign(&name, v)?;
        }
    } else {
        for part in trimmed.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| PointError::Malformed(format!("`{}` is not name=value", part.trim())))?;
            let name = name.trim();
            assign(name, parse_value(name, value)?)?;
        }
    }
    let values = assigned
        .into_iter()
        .zip(&problem.variables)
        .map(|(v, name)| v.ok_or_else(|| PointError::Missing(name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CandidatePoint { values })
}

fn json_entries(text: &str) -> Result<Vec<(String, serde_json::Value)>, PointError> {
    use serde::de::{Deserializer, MapAccess, Visitor};

    struct Entries;
    impl<'de> Visitor<'de> for Entries {
        type Value = Vec<(String, serde_json::Value)>;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a JSON object of variable values")
        }
        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some((k, v)) = map.next_entry::<String, serde_json::Value>()? {
                out.push((k, v));
            }
            Ok(out)
        }
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let entries = de
        .deserialize_map(Entries)
        .map_err(|e| PointError::Malformed(e.to_string()))?;
    de.end().map_err(|e| PointError::Malformed(e.to_string()))?;
    Ok(entries)
}

// ---------------------------------------------------------------------------
// reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not-certified",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub assemble: f64,
    pub solve_l1: f64,
    pub solve_l2: f64,
}

/// Outcome of a certification run. The serialized field names are a stable
/// interface; fields marked `skip` only appear in the text rendering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub problem: String,
    pub order: u32,
    pub n0: usize,
    pub ni: Vec<usize>,
    pub multipliers_total: usize,
    pub multipliers_fixed_zero: usize,
    pub residual_l1: Option<f64>,
    pub residual_l2: Option<f64>,
    pub verdict: Verdict,
    pub objective_value: f64,
    pub feasibility_margin: f64,
    pub iterations_l1: Option<usize>,
    pub iterations_l2: Option<usize>,
    pub time_ms: Timings,
    #[serde(skip)]
    pub variables: Vec<String>,
    #[serde(skip)]
    pub candidate: Vec<f64>,
    #[serde(skip)]
    pub multipliers_free: usize,
    #[serde(skip)]
    pub status_l1: Option<String>,
    #[serde(skip)]
    pub status_l2: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2e}"))
}

pub fn emit_report(r: &CertificateReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(r).expect("report serializes"),
        ReportFormat::Text => {
            let point: Vec<String> = r
                .variables
                .iter()
                .zip(&r.candidate)
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            let mut s = String::new();
            s.push_str(&format!("problem      {}\n", r.problem));
            s.push_str(&format!("order        {}  (n0 = {}, ni = {:?})\n", r.order, r.n0, r.ni));
            s.push_str(&format!(
                "multipliers  {} total, {} fixed to zero, {} free\n",
                r.multipliers_total, r.multipliers_fixed_zero, r.multipliers_free
            ));
            s.push_str(&format!("objective    {}\n", r.objective_value));
            s.push_str(&format!("feasibility  {:.3e}\n\n", r.feasibility_margin));
            let sol = point.join(", ");
            let w = sol.len().max(8);
            s.push_str(&format!("{:<w$} | {:<13} | {:<9} | {:<9}\n", "Solution", "Verdict", "l1 norm", "l2 norm"));
            s.push_str(&format!("{:-<w$}-+-{:-<13}-+-{:-<9}-+-{:-<9}\n", "", "", "", ""));
            s.push_str(&format!(
                "{:<w$} | {:<13} | {:<9} | {:<9}\n",
                sol,
                r.verdict.to_string(),
                sci(r.residual_l1),
                sci(r.residual_l2)
            ));
            for (label, st) in [("l1", &r.status_l1), ("l2", &r.status_l2)] {
                if let Some(st) = st {
                    if st != "optimal" {
                        s.push_str(&format!("{label} solver status: {st}\n"));
                    }
                }
            }
            s.push_str(&format!(
                "\ntimings (ms)  assemble {:.3}, l1 {:.3}, l2 {:.3}\n",
                r.time_ms.assemble, r.time_ms.solve_l1, r.time_ms.solve_l2
            ));
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const UNIVARIATE: &str = "name \"univariate\"\nvars x\nminimize 1/4*x^4 + 1/8*x^3 - 2*x^2 - 3/2*x + 7\nsubject_to\n-x^2 + 5 >= 0\n";

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn parses_univariate() {
        let p = parse_problem(UNIVARIATE).unwrap();
        assert_eq!(p.variables, vec!["x"]);
        assert_eq!(p.constraints.len(), 1);
        assert_eq!(p.objective.coefficient(&mi(&[4])), 0.25);
        assert_eq!(p.objective.coefficient(&mi(&[1])), -1.5);
        assert_eq!(p.constraints[0].coefficient(&mi(&[0])), 5.0);
        assert_eq!(p.constraints[0].coefficient(&mi(&[2])), -1.0);
        assert_eq!(p.min_order(), 2);
    }

    #[test]
    fn unknown_variable_is_reported_with_position() {
        let text = "name \"t\"\nvars x\nminimize x\nsubject_to\nx9 >= 0\n";
        assert_eq!(
            parse_problem(text),
            Err(ParseError::UnknownVariable { name: "x9".into(), line: 5, col: 1 })
        );
    }

    #[test]
    fn rejects_malformed_files() {
        assert_eq!(
            parse_problem("name \"t\"\nvars x x\nminimize x\nsubject_to\nx >= 0\n"),
            Err(ParseError::DuplicateVariable("x".into()))
        );
        assert_eq!(
            parse_problem("name \"t\"\nvars x\nminimize x\nsubject_to\n"),
            Err(ParseError::EmptyConstraints)
        );
        // implicit multiplication
        assert!(matches!(
            parse_problem("name \"t\"\nvars x\nminimize 2x\nsubject_to\nx >= 0\n"),
            Err(ParseError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_problem("name \"t\"\nvars x\nminimize x\nsubject_to\n3 <= x <= 1\n"),
            Err(ParseError::InconsistentBound { line: 5, .. })
        ));
    }

    #[test]
    fn canonical_forms() {
        let e = Polynomial::from_terms(1, [(mi(&[1]), 1.0)]);
        let raw = vec![
            RawConstraint::Between { lo: 0.0, expr: e.clone(), hi: 6.0, line: 1 },
            RawConstraint::Eq { expr: e.clone(), rhs: 3.5, line: 2 },
            RawConstraint::Le { expr: e.clone(), rhs: 2.0, line: 3 },
        ];
        let c = canonicalize(&raw).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c[0].0, e);
        assert_eq!(c[1].0, e.scale(-1.0).add_constant(6.0));
        assert_eq!(c[2].0, e.add_constant(-3.5));
        assert_eq!(c[3].0, e.scale(-1.0).add_constant(3.5));
        assert_eq!(c[4].0, e.scale(-1.0).add_constant(2.0));
        assert_eq!(c[3].1.form, SourceForm::EqualityHalf { upper: true });
    }

    #[test]
    fn two_sided_bound_on_a_square() {
        let text = "name \"t\"\nvars x\nminimize x\nsubject_to\n0.9025 <= x^2 <= 1.1025\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.constraints[0].coefficient(&mi(&[0])), -0.9025);
        assert_eq!(p.constraints[1].coefficient(&mi(&[0])), 1.1025);
        assert_eq!(p.constraints[1].coefficient(&mi(&[2])), -1.0);
    }

    #[test]
    fn fractions_are_divided_once() {
        let text = "name \"t\"\nvars x\nminimize 25/26*x\nsubject_to\nx >= -7/2\n";
        let p = parse_problem(text).unwrap();
        assert_eq!(p.objective.coefficient(&mi(&[1])), 25.0 / 26.0);
        assert_eq!(p.constraints[0].coefficient(&mi(&[0])), 3.5);
    }

    #[test]
    fn points() {
        let p = parse_problem(UNIVARIATE).unwrap();
        assert_eq!(parse_point("x=2", &p).unwrap().values, vec![2.0]);
        assert_eq!(parse_point("{\"x\": -2}", &p).unwrap().values, vec![-2.0]);
        assert_eq!(parse_point("x=1,x=2", &p), Err(PointError::Duplicate("x".into())));
        assert_eq!(parse_point("{\"x\": 1, \"x\": 2}", &p), Err(PointError::Duplicate("x".into())));
        assert!(matches!(parse_point("x=abc", &p), Err(PointError::NonNumeric { .. })));
        assert_eq!(parse_point("y=1", &p), Err(PointError::UnknownVariable("y".into())));

        let text = "name \"t\"\nvars x1 x2 x3\nminimize x1\nsubject_to\nx1 >= 0\n";
        let tri = parse_problem(text).unwrap();
        assert_eq!(
            parse_point("x1=.950,x2=.413,x3=-.884", &tri).unwrap().values,
            vec![0.950, 0.413, -0.884]
        );
        assert_eq!(parse_point("x1=1,x2=2", &tri), Err(PointError::Missing("x3".into())));
    }

    fn report(name: &str, verdict: Verdict) -> CertificateReport {
        CertificateReport {
            problem: name.into(),
            order: 2,
            n0: 3,
            ni: vec![2],
            multipliers_total: 10,
            multipliers_fixed_zero: 5,
            residual_l1: Some(0.0),
            residual_l2: Some(1e-15),
            verdict,
            objective_value: 1.0,
            feasibility_margin: 1.0,
            iterations_l1: Some(3),
            iterations_l2: Some(2),
            time_ms: Timings::default(),
            variables: vec!["x".into()],
            candidate: vec![2.0],
            multipliers_free: 6,
            status_l1: Some("optimal".into()),
            status_l2: Some("optimal".into()),
        }
    }

    #[test]
    fn json_report_keys() {
        let json = emit_report(&report("", Verdict::Certified), ReportFormat::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["verdict"], "certified");
        assert_eq!(v["problem"], "");
        // top-level keys in emission order (serde_json's Value would sort them)
        let keys: Vec<&str> = json
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(
            keys,
            [
                "problem", "order", "n0", "ni", "multipliers_total", "multipliers_fixed_zero",
                "residual_l1", "residual_l2", "verdict", "objective_value", "feasibility_margin",
                "iterations_l1", "iterations_l2", "time_ms"
            ]
        );
        let t: Vec<&str> = v["time_ms"].as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(t, ["assemble", "solve_l1", "solve_l2"]);
        let json = emit_report(&report("u", Verdict::NotCertified), ReportFormat::Json);
        assert!(json.contains("\"verdict\": \"not-certified\""));
    }

    #[test]
    fn text_report_mentions_verdict() {
        let text = emit_report(&report("u", Verdict::Certified), ReportFormat::Text);
        assert!(text.contains("certified"));
        assert!(text.contains("x=2 "));
    }

    fn arb_poly(n: usize) -> impl Strategy<Value = Polynomial> {
        proptest::collection::vec(
            (proptest::collection::vec(0u32..3, n), prop_oneof![-1e3f64..1e3, Just(1.0), Just(-1.0)]),
            0..6,
        )
        .prop_map(move |terms| Polynomial::from_terms(n, terms.into_iter().map(|(e, c)| (MultiIndex::new(e), c))))
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(
            f in arb_poly(2),
            gs in proptest::collection::vec(arb_poly(2), 1..4),
        ) {
            let problem = PopProblem {
                name: "rt".into(),
                variables: vec!["a".into(), "b1".into()],
                objective: f,
                constraints: gs,
                provenance: vec![],
            };
            let reparsed = parse_problem(&problem.to_string()).unwrap();
            prop_assert_eq!(&reparsed.objective, &problem.objective);
            prop_assert_eq!(&reparsed.constraints, &problem.constraints);
        }

        #[test]
        fn canonical_constraints_hold_at_satisfying_points(
            lo in -5.0f64..5.0, width in 0.0f64..5.0, t in 0.0f64..1.0, c in -3.0f64..3.0,
        ) {
            // e(x) = x, pick x inside [lo, lo + width] and compare with c
            let hi = lo + width;
            let x = lo + t * width;
            let e = Polynomial::from_terms(1, [(MultiIndex::new(vec![1]), 1.0)]);
            let mut raw = vec![RawConstraint::Between { lo, expr: e.clone(), hi, line: 1 }];
            raw.push(if x >= c {
                RawConstraint::Ge { expr: e.clone(), rhs: c, line: 2 }
            } else {
                RawConstraint::Le { expr: e.clone(), rhs: c, line: 2 }
            });
            raw.push(RawConstraint::Eq { expr: e.clone(), rhs: x, line: 3 });
            for (g, _) in canonicalize(&raw).unwrap() {
                prop_assert!(g.evaluate(&[x]) >= -1e-12);
            }
        }
    }
}
