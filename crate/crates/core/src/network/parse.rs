//! Line-oriented network DSL.
//!
//! ```text
//! # comment
//! species Pred Prey
//! param th1 th2 th3
//! const k = 10
//! reaction: Pred + Prey -> 2 Pred @ th1 * Pred * Prey
//! ```
//!
//! Expressions follow
//! `expr := term (('+'|'-') term)*`, `term := factor (('*'|'/') factor)*`,
//! `factor := number | identifier | '(' expr ')' | '-' factor`.

use super::expr::{Expr, Symbol};
use super::{Reaction, ReactionNetwork};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    DuplicateName,
    EmptyReactions,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownIdentifier => "unknown-identifier",
            ParseErrorKind::DuplicateName => "duplicate-name",
            ParseErrorKind::EmptyReactions => "empty-reactions",
        }
    }
}

/// Parse failure with a 1-based source position (`column` 0 when the error
/// concerns the whole input).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error at {}:{}: {}", self.kind.as_str(), self.line, self.column, self.message)
    }
}

fn err(kind: ParseErrorKind, line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { kind, line, column, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

/// Tokens paired with their 1-based column in the source line.
fn tokenize(src: &str, line: usize, col_offset: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = col_offset + i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' => push(&mut out, Tok::Plus, col, &mut i),
            '-' => push(&mut out, Tok::Minus, col, &mut i),
            '*' => push(&mut out, Tok::Star, col, &mut i),
            '/' => push(&mut out, Tok::Slash, col, &mut i),
            '(' => push(&mut out, Tok::LParen, col, &mut i),
            ')' => push(&mut out, Tok::RParen, col, &mut i),
            c if c.is_ascii_digit() || c == '.' => {
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
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(ParseErrorKind::Syntax, line, col, format!("malformed number `{text}`")))?;
                out.push((Tok::Num(v), col));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), col));
            }
            other => return Err(err(ParseErrorKind::Syntax, line, col, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

fn push(out: &mut Vec<(Tok, usize)>, t: Tok, col: usize, i: &mut usize) {
    out.push((t, col));
    *i += 1;
}

struct Scope<'a> {
    names: &'a HashMap<String, Symbol>,
}

struct ExprParser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    scope: Scope<'a>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(err(ParseErrorKind::Syntax, self.line, col, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Ident(name) => match self.scope.names.get(&name) {
                Some(s) => Ok(Expr::Sym(*s)),
                None => Err(err(ParseErrorKind::UnknownIdentifier, self.line, col, format!("unknown identifier `{name}`"))),
            },
            Tok::Minus => Ok(Expr::Neg(Box::new(self.factor()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(err(ParseErrorKind::Syntax, self.line, self.col(), "expected `)`")),
                }
            }
            other => Err(err(ParseErrorKind::Syntax, self.line, col, format!("unexpected token {other:?}"))),
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits a line into whitespace-separated words with their 1-based columns.
fn words(s: &str, col_offset: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((&s[st..i], col_offset + st + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((&s[st..], col_offset + st + 1));
    }
    out
}

struct RawReaction<'a> {
    line: usize,
    body: &'a str,
    body_col: usize,
}

/// Parses the network DSL.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut species: Option<Vec<String>> = None;
    let mut params: Option<Vec<String>> = None;
    let mut consts: Vec<(String, f64)> = Vec::new();
    let mut raw = Vec::new();
    let mut names: HashMap<String, Symbol> = HashMap::new();

    let declare = |names: &mut HashMap<String, Symbol>, name: &str, sym: Symbol, line: usize, col: usize| {
        if !is_identifier(name) {
            return Err(err(ParseErrorKind::Syntax, line, col, format!("`{name}` is not a valid identifier")));
        }
        if names.insert(name.to_string(), sym).is_some() {
            return Err(err(ParseErrorKind::DuplicateName, line, col, format!("`{name}` declared twice")));
        }
        Ok(())
    };

    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("");
        let lead = content.len() - content.trim_start().len();
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let ws = words(trimmed, lead);
        let (keyword, kcol) = ws[0];
        match keyword {
            "species" => {
                if species.is_some() {
                    return Err(err(ParseErrorKind::Syntax, line, kcol, "`species` declared more than once"));
                }
                let mut list = Vec::new();
                for &(name, col) in &ws[1..] {
                    declare(&mut names, name, Symbol::Species(list.len()), line, col)?;
                    list.push(name.to_string());
                }
                if list.is_empty() {
                    return Err(err(ParseErrorKind::Syntax, line, kcol, "at least one species is required"));
                }
                species = Some(list);
            }
            "param" => {
                if params.is_some() {
                    return Err(err(ParseErrorKind::Syntax, line, kcol, "`param` declared more than once"));
                }
                let mut list = Vec::new();
                for &(name, col) in &ws[1..] {
                    declare(&mut names, name, Symbol::Param(list.len()), line, col)?;
                    list.push(name.to_string());
                }
                params = Some(list);
            }
            "const" => {
                let rest = &trimmed["const".len()..];
                let rest_col = lead + "const".len();
                let Some(eq) = rest.find('=') else {
                    return Err(err(ParseErrorKind::Syntax, line, rest_col + 1, "expected `const <name> = <number>`"));
                };
                let name = rest[..eq].trim();
                let name_col = rest_col + rest[..eq].find(name).unwrap_or(0) + 1;
                let value_text = rest[eq + 1..].trim();
                let value_col = rest_col + eq + 2;
                let value: f64 = value_text
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| err(ParseErrorKind::Syntax, line, value_col, format!("malformed number `{value_text}`")))?;
                declare(&mut names, name, Symbol::Const(consts.len()), line, name_col)?;
                consts.push((name.to_string(), value));
            }
            _ if trimmed.starts_with("reaction:") => {
                raw.push(RawReaction { line, body: &trimmed["reaction:".len()..], body_col: lead + "reaction:".len() });
            }
            other => {
                return Err(err(ParseErrorKind::Syntax, line, kcol, format!("unknown directive `{other}`")));
            }
        }
    }

    let species = species.ok_or_else(|| err(ParseErrorKind::Syntax, 0, 0, "missing `species` line"))?;
    let params = params.ok_or_else(|| err(ParseErrorKind::Syntax, 0, 0, "missing `param` line"))?;
    if raw.is_empty() {
        return Err(err(ParseErrorKind::EmptyReactions, 0, 0, "network has no reactions"));
    }

    let mut reactions = Vec::with_capacity(raw.len());
    for r in raw {
        reactions.push(parse_reaction(&r, &names, species.len())?);
    }
    Ok(ReactionNetwork::from_parts(species, params, consts, reactions))
}

fn parse_reaction(r: &RawReaction<'_>, names: &HashMap<String, Symbol>, n_s: usize) -> Result<Reaction, ParseError> {
    let line = r.line;
    let Some(at) = r.body.find('@') else {
        return Err(err(ParseErrorKind::Syntax, line, r.body_col + 1, "expected `@ <rate expression>`"));
    };
    let scheme = &r.body[..at];
    let Some(arrow) = scheme.find("->") else {
        return Err(err(ParseErrorKind::Syntax, line, r.body_col + 1, "expected `<lhs> -> <rhs>`"));
    };
    let reactants = parse_side(&scheme[..arrow], r.body_col, line, names)?;
    let products = parse_side(&scheme[arrow + 2..], r.body_col + arrow + 2, line, names)?;

    let expr_col = r.body_col + at + 1;
    let toks = tokenize(&r.body[at + 1..], line, expr_col)?;
    let end_col = expr_col + r.body[at + 1..].len() + 1;
    let mut p = ExprParser { toks, pos: 0, line, end_col, scope: Scope { names } };
    let rate = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(ParseErrorKind::Syntax, line, p.col(), "trailing tokens after rate expression"));
    }

    let mut net_effect = vec![0i64; n_s];
    for &(s, m) in &reactants {
        net_effect[s] -= m as i64;
    }
    for &(s, m) in &products {
        net_effect[s] += m as i64;
    }
    Ok(Reaction { reactants, products, net_effect, rate })
}

fn parse_side(
    text: &str,
    col_offset: usize,
    line: usize,
    names: &HashMap<String, Symbol>,
) -> Result<Vec<(usize, u32)>, ParseError> {
    let trimmed = text.trim();
    let lead = text.len() - text.trim_start().len();
    if trimmed == "0" {
        return Ok(Vec::new());
    }
    if trimmed.is_empty() {
        return Err(err(ParseErrorKind::Syntax, line, col_offset + 1, "empty reaction side (use `0`)"));
    }
    let mut out: Vec<(usize, u32)> = Vec::new();
    let mut offset = col_offset + lead;
    for term in trimmed.split('+') {
        let term_lead = term.len() - term.trim_start().len();
        let col = offset + term_lead + 1;
        offset += term.len() + 1;
        let t = term.trim();
        let digits = t.chars().take_while(char::is_ascii_digit).count();
        let (mult, name) = if digits == 0 {
            (1, t)
        } else {
            let m: u32 = t[..digits]
                .parse()
                .ok()
                .filter(|m| *m > 0)
                .ok_or_else(|| err(ParseErrorKind::Syntax, line, col, "multiplicity must be a positive integer"))?;
            (m, t[digits..].trim_start())
        };
        if !is_identifier(name) {
            return Err(err(ParseErrorKind::Syntax, line, col, format!("malformed reaction term `{t}`")));
        }
        match names.get(name) {
            Some(Symbol::Species(s)) => match out.iter_mut().find(|(os, _)| os == s) {
                Some(entry) => entry.1 += mult,
                None => out.push((*s, mult)),
            },
            _ => {
                return Err(err(ParseErrorKind::UnknownIdentifier, line, col, format!("`{name}` is not a declared species")))
            }
        }
    }
    Ok(out)
}
