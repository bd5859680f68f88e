//! The formula language: AST, ASCII concrete syntax, positivity and
//! desugaring of the derived fixed-point operators.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::runs::{AgentId, ClockValue, Time};
use crate::views::AgentSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    K(AgentId, Box<Formula>),
    /// Someone in the group knows.
    S(AgentSet, Box<Formula>),
    E(AgentSet, Box<Formula>),
    EPow(AgentSet, u32, Box<Formula>),
    D(AgentSet, Box<Formula>),
    C(AgentSet, Box<Formula>),
    EEps(AgentSet, Time, Box<Formula>),
    CEps(AgentSet, Time, Box<Formula>),
    EDiamond(AgentSet, Box<Formula>),
    CDiamond(AgentSet, Box<Formula>),
    KTime(AgentId, ClockValue, Box<Formula>),
    ETime(AgentSet, ClockValue, Box<Formula>),
    CTime(AgentSet, ClockValue, Box<Formula>),
    Var(String),
    Nu(String, Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Prop(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn falsum() -> Self {
        Not(Box::new(True))
    }

    pub fn not(f: Formula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn all(items: impl IntoIterator<Item = Formula>) -> Self {
        items.into_iter().reduce(Formula::and).unwrap_or(True)
    }

    /// Disjunction of all items; `false` when empty.
    pub fn any(items: impl IntoIterator<Item = Formula>) -> Self {
        items.into_iter().reduce(Formula::or).unwrap_or_else(Formula::falsum)
    }

    pub fn k(agent: usize, f: Formula) -> Self {
        K(AgentId(agent), Box::new(f))
    }

    pub fn nu(var: impl Into<String>, body: Formula) -> Self {
        Nu(var.into(), Box::new(body))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            True | Prop(_) | Var(_) => vec![],
            And(a, b) => vec![a, b],
            Not(f) | K(_, f) | S(_, f) | E(_, f) | EPow(_, _, f) | D(_, f) | C(_, f) | EEps(_, _, f)
            | CEps(_, _, f) | EDiamond(_, f) | CDiamond(_, f) | KTime(_, _, f) | ETime(_, _, f)
            | CTime(_, _, f) | Nu(_, f) => vec![f],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Proposition names occurring in the formula.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Prop(p) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Every variable name occurring, bound or free.
    pub fn var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Var(x) | Nu(x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Var(x) if !bound.contains(x) => {
                    out.insert(x.clone());
                }
                Nu(x, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                _ => f.children().into_iter().for_each(|c| go(c, bound, out)),
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Largest agent index mentioned anywhere.
    pub fn max_agent(&self) -> Option<AgentId> {
        let mut best: Option<AgentId> = None;
        self.walk(&mut |f| {
            let here = match f {
                K(a, _) | KTime(a, _, _) => Some(*a),
                S(g, _) | E(g, _) | EPow(g, _, _) | D(g, _) | C(g, _) | EEps(g, _, _) | CEps(g, _, _)
                | EDiamond(g, _) | CDiamond(g, _) | ETime(g, _, _) | CTime(g, _, _) => Some(g.max_agent()),
                _ => None,
            };
            best = best.max(here);
        });
        best
    }

    pub fn uses_clocks(&self) -> bool {
        let mut found = false;
        self.walk(&mut |f| found |= matches!(f, KTime(..) | ETime(..) | CTime(..)));
        found
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }
}

// ---------------------------------------------------------------------------
// printing

fn group(g: &AgentSet) -> String {
    let parts: Vec<String> = g.iter().map(|a| a.0.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn print_top(f: &Formula, out: &mut String) {
    match f {
        Nu(x, body) => {
            out.push_str("nu ");
            out.push_str(x);
            out.push_str(". ");
            print_top(body, out);
        }
        And(..) => print_and(f, out),
        _ => print_unary(f, out),
    }
}

fn print_and(f: &Formula, out: &mut String) {
    match f {
        And(a, b) => {
            print_and(a, out);
            out.push_str(" & ");
            if matches!(**b, And(..)) {
                out.push('(');
                print_and(b, out);
                out.push(')');
            } else {
                print_unary(b, out);
            }
        }
        _ => print_unary(f, out),
    }
}

fn print_unary(f: &Formula, out: &mut String) {
    let prefix = |out: &mut String, op: String, body: &Formula| {
        out.push_str(&op);
        out.push(' ');
        print_unary(body, out);
    };
    match f {
        True => out.push_str("true"),
        Prop(p) | Var(p) => out.push_str(p),
        Not(g) => {
            out.push('~');
            print_unary(g, out);
        }
        And(..) | Nu(..) => {
            out.push('(');
            print_top(f, out);
            out.push(')');
        }
        K(a, g) => prefix(out, format!("K{}", a.0), g),
        S(gr, g) => prefix(out, format!("S{}", group(gr)), g),
        E(gr, g) => prefix(out, format!("E{}", group(gr)), g),
        EPow(gr, k, g) => prefix(out, format!("E^{k}{}", group(gr)), g),
        D(gr, g) => prefix(out, format!("D{}", group(gr)), g),
        C(gr, g) => prefix(out, format!("C{}", group(gr)), g),
        EEps(gr, e, g) => prefix(out, format!("Eeps[{e}]{}", group(gr)), g),
        CEps(gr, e, g) => prefix(out, format!("Ceps[{e}]{}", group(gr)), g),
        EDiamond(gr, g) => prefix(out, format!("Ev{}", group(gr)), g),
        CDiamond(gr, g) => prefix(out, format!("Cv{}", group(gr)), g),
        KTime(a, t, g) => prefix(out, format!("Kt{}[{t}]", a.0), g),
        ETime(gr, t, g) => prefix(out, format!("Et[{t}]{}", group(gr)), g),
        CTime(gr, t, g) => prefix(out, format!("Ct[{t}]{}", group(gr)), g),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        print_top(self, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at position {pos}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Sym(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: [&str; 14] = ["<->", "->", "~", "&", "|", "(", ")", "{", "}", "[", "]", ",", ".", "^"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i]
                .parse()
                .map_err(|_| ParseError { pos: start, message: "number too large".into() })?;
            out.push((start, Tok::Num(n)));
            continue;
        }
        for sym in SYMBOLS {
            if text[i..].starts_with(sym) {
                out.push((i, Tok::Sym(sym)));
                i += sym.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(ParseError { pos: i, message: format!("unexpected character `{ch}`") });
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// Whether `name` lexes as a single identifier.
pub fn is_identifier(name: &str) -> bool {
    let mut bytes = name.bytes();
    bytes.next().is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Identifiers that cannot name propositions or variables.
pub fn is_reserved(name: &str) -> bool {
    let indexed = |prefix: &str| {
        name.strip_prefix(prefix)
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    };
    matches!(
        name,
        "S" | "E" | "D" | "C" | "Eeps" | "Ceps" | "Ev" | "Cv" | "Et" | "Ct" | "nu" | "true" | "false"
    ) || indexed("K")
        || indexed("Kt")
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    scope: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { pos: self.offset(), message: message.into() })
    }

    fn eat(&mut self, sym: &'static str) -> bool {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &'static str) -> PResult<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.error(format!("expected `{sym}`, found {}", self.peek()))
        }
    }

    fn number(&mut self, what: &str) -> PResult<u64> {
        match self.peek() {
            Tok::Num(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn bracketed(&mut self, what: &str) -> PResult<u64> {
        self.expect("[")?;
        let n = self.number(what)?;
        self.expect("]")?;
        Ok(n)
    }

    fn group(&mut self) -> PResult<AgentSet> {
        let start = self.offset();
        if !self.eat("{") {
            return self.error(format!("malformed group: expected `{{`, found {}", self.peek()));
        }
        let mut members = Vec::new();
        loop {
            match self.peek() {
                Tok::Num(n) => {
                    members.push(*n as usize);
                    self.bump();
                }
                other => return self.error(format!("malformed group: expected agent index, found {other}")),
            }
            if self.eat("}") {
                break;
            }
            if !self.eat(",") {
                return self.error(format!("malformed group: expected `,` or `}}`, found {}", self.peek()));
            }
        }
        AgentSet::of(&members).map_err(|_| ParseError { pos: start, message: "malformed group: empty".into() })
    }

    fn formula(&mut self) -> PResult<Formula> {
        let mut left = self.implication()?;
        while self.eat("<->") {
            let right = self.implication()?;
            left = Formula::iff(left, right);
        }
        Ok(left)
    }

    fn implication(&mut self) -> PResult<Formula> {
        let left = self.disjunction()?;
        if self.eat("->") {
            let right = self.implication()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut left = self.conjunction()?;
        while self.eat("|") {
            let right = self.conjunction()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut left = self.unary()?;
        while self.eat("&") {
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.eat("~") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        let start = self.offset();
        let name = match self.peek() {
            Tok::Ident(s) => s.clone(),
            other => return self.error(format!("expected formula, found {other}")),
        };
        self.bump();
        let boxed = |p: &mut Parser| p.unary().map(Box::new);
        if let Some(idx) = name.strip_prefix("Kt").filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit())) {
            let agent = AgentId(idx.parse().map_err(|_| ParseError { pos: start, message: "agent index too large".into() })?);
            let t = self.bracketed("clock value")? as ClockValue;
            return Ok(KTime(agent, t, boxed(self)?));
        }
        if let Some(idx) = name.strip_prefix('K').filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit())) {
            let agent = AgentId(idx.parse().map_err(|_| ParseError { pos: start, message: "agent index too large".into() })?);
            return Ok(K(agent, boxed(self)?));
        }
        let f = match name.as_str() {
            "true" => True,
            "false" => Formula::falsum(),
            "nu" => {
                let var = match self.peek() {
                    Tok::Ident(v) if !is_reserved(v) => v.clone(),
                    other => return self.error(format!("expected fixpoint variable, found {other}")),
                };
                self.bump();
                self.expect(".")?;
                self.scope.push(var.clone());
                let body = self.formula();
                self.scope.pop();
                Nu(var, Box::new(body?))
            }
            "S" => {
                let g = self.group()?;
                S(g, boxed(self)?)
            }
            "E" => {
                if self.eat("^") {
                    let k = self.number("exponent")?;
                    if k == 0 || k > u32::MAX as u64 {
                        return Err(ParseError { pos: start, message: "exponent must be a positive integer".into() });
                    }
                    let g = self.group()?;
                    EPow(g, k as u32, boxed(self)?)
                } else {
                    let g = self.group()?;
                    E(g, boxed(self)?)
                }
            }
            "D" => {
                let g = self.group()?;
                D(g, boxed(self)?)
            }
            "C" => {
                let g = self.group()?;
                C(g, boxed(self)?)
            }
            "Eeps" | "Ceps" => {
                let e = self.bracketed("interval width")?;
                let e = Time::try_from(e).map_err(|_| ParseError { pos: start, message: "interval width too large".into() })?;
                let g = self.group()?;
                if name == "Eeps" {
                    EEps(g, e, boxed(self)?)
                } else {
                    CEps(g, e, boxed(self)?)
                }
            }
            "Ev" => {
                let g = self.group()?;
                EDiamond(g, boxed(self)?)
            }
            "Cv" => {
                let g = self.group()?;
                CDiamond(g, boxed(self)?)
            }
            "Et" | "Ct" => {
                let t = self.bracketed("clock value")? as ClockValue;
                let g = self.group()?;
                if name == "Et" {
                    ETime(g, t, boxed(self)?)
                } else {
                    CTime(g, t, boxed(self)?)
                }
            }
            _ => {
                if matches!(self.peek(), Tok::Sym("{") | Tok::Sym("[") | Tok::Sym("^")) {
                    return Err(ParseError { pos: start, message: format!("unknown operator `{name}`") });
                }
                if self.scope.contains(&name) {
                    Var(name)
                } else {
                    Prop(name)
                }
            }
        };
        Ok(f)
    }
}

/// Parses a formula. Names bound by an enclosing `nu` become variables,
/// every other identifier is a proposition.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, scope: Vec::new() };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// positivity

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("variable `{var}` occurs negatively (path {path:?})")]
pub struct PositivityError {
    pub var: String,
    /// Child indices from the root to the offending occurrence.
    pub path: Vec<usize>,
}

/// Every occurrence of a `nu`-bound variable must sit under an even number of
/// negations, counted from its binder.
pub fn check_positivity(f: &Formula) -> Result<(), PositivityError> {
    fn go(
        f: &Formula,
        // (name, negation parity at binder)
        bound: &mut Vec<(String, bool)>,
        negated: bool,
        path: &mut Vec<usize>,
    ) -> Result<(), PositivityError> {
        match f {
            Var(x) => {
                if let Some((_, at_binder)) = bound.iter().rev().find(|(n, _)| n == x) {
                    if *at_binder != negated {
                        return Err(PositivityError { var: x.clone(), path: path.clone() });
                    }
                }
                Ok(())
            }
            Nu(x, body) => {
                bound.push((x.clone(), negated));
                path.push(0);
                let r = go(body, bound, negated, path);
                path.pop();
                bound.pop();
                r
            }
            Not(g) => {
                path.push(0);
                let r = go(g, bound, !negated, path);
                path.pop();
                r
            }
            _ => {
                for (i, c) in f.children().into_iter().enumerate() {
                    path.push(i);
                    go(c, bound, negated, path)?;
                    path.pop();
                }
                Ok(())
            }
        }
    }
    go(f, &mut Vec::new(), false, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// desugaring

/// Prefix of the variable names introduced by [`expand_fixpoints`].
pub const FRESH_PREFIX: &str = "_fp";

struct Fresh {
    taken: BTreeSet<String>,
    next: usize,
}

impl Fresh {
    fn name(&mut self) -> String {
        loop {
            let candidate = format!("{FRESH_PREFIX}{}", self.next);
            self.next += 1;
            if !self.taken.contains(&candidate) {
                return candidate;
            }
        }
    }
}

/// Rewrites C, Ceps, Cv and Ct into their `nu` forms, unrolls `E^k` and
/// expands `S` into a disjunction of individual knowledge.
pub fn expand_fixpoints(f: &Formula) -> Formula {
    let mut taken = f.var_names();
    taken.extend(f.props());
    let mut fresh = Fresh { taken, next: 0 };
    expand(f, &mut fresh)
}

fn expand(f: &Formula, fresh: &mut Fresh) -> Formula {
    let fix = |fresh: &mut Fresh, body: &Formula, wrap: &dyn Fn(Box<Formula>) -> Formula| {
        let x = fresh.name();
        let inner = expand(body, fresh);
        Nu(x.clone(), Box::new(wrap(Box::new(Formula::and(inner, Var(x))))))
    };
    match f {
        True | Prop(_) | Var(_) => f.clone(),
        Not(g) => Formula::not(expand(g, fresh)),
        And(a, b) => Formula::and(expand(a, fresh), expand(b, fresh)),
        K(a, g) => K(*a, Box::new(expand(g, fresh))),
        S(gr, g) => {
            let inner = expand(g, fresh);
            Formula::any(gr.iter().map(|a| K(a, Box::new(inner.clone()))))
        }
        E(gr, g) => E(gr.clone(), Box::new(expand(g, fresh))),
        EPow(gr, k, g) => {
            let mut out = expand(g, fresh);
            for _ in 0..*k {
                out = E(gr.clone(), Box::new(out));
            }
            out
        }
        D(gr, g) => D(gr.clone(), Box::new(expand(g, fresh))),
        EEps(gr, e, g) => EEps(gr.clone(), *e, Box::new(expand(g, fresh))),
        EDiamond(gr, g) => EDiamond(gr.clone(), Box::new(expand(g, fresh))),
        KTime(a, t, g) => KTime(*a, *t, Box::new(expand(g, fresh))),
        ETime(gr, t, g) => ETime(gr.clone(), *t, Box::new(expand(g, fresh))),
        Nu(x, g) => Nu(x.clone(), Box::new(expand(g, fresh))),
        C(gr, g) => fix(fresh, g, &|b| E(gr.clone(), b)),
        CEps(gr, e, g) => fix(fresh, g, &|b| EEps(gr.clone(), *e, b)),
        CDiamond(gr, g) => fix(fresh, g, &|b| EDiamond(gr.clone(), b)),
        CTime(gr, t, g) => fix(fresh, g, &|b| ETime(gr.clone(), *t, b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(ids: &[usize]) -> AgentSet {
        AgentSet::of(ids).unwrap()
    }

    #[test]
    fn parses_knowledge() {
        assert_eq!(parse("K1 m").unwrap(), Formula::k(1, Formula::prop("m")));
    }

    #[test]
    fn parses_fixpoint() {
        let f = parse("nu X. E{1,2}(m & X)").unwrap();
        let expected = Formula::nu(
            "X",
            E(g(&[1, 2]), Box::new(Formula::and(Formula::prop("m"), Formula::var("X")))),
        );
        assert_eq!(f, expected);
        let c = parse("C{1,2} m").unwrap();
        assert_eq!(c, C(g(&[1, 2]), Box::new(Formula::prop("m"))));
        let expanded = expand_fixpoints(&c);
        assert_eq!(
            expanded,
            Formula::nu(
                "_fp0",
                E(g(&[1, 2]), Box::new(Formula::and(Formula::prop("m"), Formula::var("_fp0"))))
            )
        );
    }

    #[test]
    fn precedence() {
        let p = || Formula::prop("p");
        let q = || Formula::prop("q");
        let r = || Formula::prop("r");
        assert_eq!(parse("p | q & r").unwrap(), Formula::or(p(), Formula::and(q(), r())));
        assert_eq!(parse("p -> q -> r").unwrap(), Formula::implies(p(), Formula::implies(q(), r())));
        assert_eq!(parse("~p & q").unwrap(), Formula::and(Formula::not(p()), q()));
        assert_eq!(parse("K0 p & q").unwrap(), Formula::and(Formula::k(0, p()), q()));
        assert_eq!(parse("false").unwrap(), Formula::falsum());
        assert_eq!(parse("p <-> q").unwrap(), Formula::iff(p(), q()));
    }

    #[test]
    fn all_operators_parse() {
        for text in [
            "S{0,1} p",
            "E^3{0} p",
            "D{0,1} p",
            "Eeps[2]{0,1} p",
            "Ceps[0]{1} p",
            "Ev{0,1} p",
            "Cv{0,1} p",
            "Kt1[5] p",
            "Et[4]{0,1} p",
            "Ct[4]{0,1} p",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(f.to_string(), text);
        }
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("K1 (p &").unwrap_err();
        assert_eq!(e.pos, 7);
        let e = parse("E{} p").unwrap_err();
        assert!(e.message.contains("malformed group"));
        let e = parse("Q{1} p").unwrap_err();
        assert!(e.message.contains("unknown operator"));
        assert_eq!(e.pos, 0);
        assert!(parse("p q").is_err());
        assert!(parse("E^0{1} p").is_err());
        assert!(parse("p $ q").is_err());
    }

    #[test]
    fn positivity() {
        assert!(check_positivity(&parse("nu X. E{1}(m & X)").unwrap()).is_ok());
        let err = check_positivity(&parse("nu X. ~X").unwrap()).unwrap_err();
        assert_eq!(err.var, "X");
        assert_eq!(err.path, vec![0, 0]);
        assert!(check_positivity(&parse("nu X. ~K1 ~X").unwrap()).is_ok());
        // polarity is relative to the binder
        assert!(check_positivity(&parse("~(nu X. K0 X)").unwrap()).is_ok());
        assert!(check_positivity(&parse("nu X. nu Y. X & ~Y").unwrap()).is_err());
    }

    #[test]
    fn expansion_cases() {
        let f = parse("E^2{1,2} m").unwrap();
        assert_eq!(expand_fixpoints(&f), parse("E{1,2} E{1,2} m").unwrap());
        let plain = parse("K0 p & ~D{0,1} q").unwrap();
        assert_eq!(expand_fixpoints(&plain), plain);
        let s = parse("S{0,1} p").unwrap();
        assert_eq!(expand_fixpoints(&s), parse("K0 p | K1 p").unwrap());
        // fresh names avoid clashes with names already in the formula
        let clash = parse("nu _fp0. C{0} _fp0").unwrap();
        let e = expand_fixpoints(&clash);
        assert!(e.to_string().contains("_fp1"));
        assert!(check_positivity(&e).is_ok());
    }

    #[test]
    fn printer_parenthesizes_nested_fixpoints() {
        let f = Formula::and(Formula::prop("p"), Formula::nu("X", Formula::and(Formula::var("X"), Formula::prop("q"))));
        assert_eq!(f.to_string(), "p & (nu X. X & q)");
        assert_eq!(parse(&f.to_string()).unwrap(), f);
    }
}
