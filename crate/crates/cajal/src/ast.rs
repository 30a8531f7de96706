//! Abstract syntax, concrete syntax, and binder hygiene.
//!
//! The concrete grammar:
//!
//! ```text
//! e ::= \x:T. e                      (linear function)
//!     | if e then e else e
//!     | iter e1 {x -> e2} e3
//!     | e e                          (application, left-assoc)
//!     | x | tt | ff | 0 | 17 | succ e | (e)
//! T ::= Bool | Nat | T -o T          (-o is right-assoc)
//! ```
//!
//! Decimal numerals desugar to iterated `succ` over `0` at parse time, and the
//! pretty-printer re-sugars closed successor chains back into numerals.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Types: booleans, naturals, and linear functions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    Nat,
    Fn(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn fun(dom: Ty, cod: Ty) -> Ty {
        Ty::Fn(Box::new(dom), Box::new(cod))
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Ty::Bool | Ty::Nat)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "Bool"),
            Ty::Nat => write!(f, "Nat"),
            Ty::Fn(a, b) => {
                if matches!(**a, Ty::Fn(..)) {
                    write!(f, "({}) -o {}", a, b)
                } else {
                    write!(f, "{} -o {}", a, b)
                }
            }
        }
    }
}

/// Expressions. After parsing (or an explicit [`alpha_rename`]) all binder
/// names are globally unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    True,
    False,
    Zero,
    Succ(Box<Expr>),
    Iter {
        base: Box<Expr>,
        binder: String,
        step: Box<Expr>,
        count: Box<Expr>,
    },
    Lam {
        binder: String,
        annot: Ty,
        body: Box<Expr>,
    },
    App {
        fun: Box<Expr>,
        arg: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn succ(e: Expr) -> Expr {
        Expr::Succ(Box::new(e))
    }

    /// The numeral `n` as iterated successors over zero.
    pub fn numeral(n: u64) -> Expr {
        let mut e = Expr::Zero;
        for _ in 0..n {
            e = Expr::succ(e);
        }
        e
    }

    pub fn lam(binder: &str, annot: Ty, body: Expr) -> Expr {
        Expr::Lam {
            binder: binder.to_string(),
            annot,
            body: Box::new(body),
        }
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::App {
            fun: Box::new(fun),
            arg: Box::new(arg),
        }
    }

    pub fn ite(cond: Expr, then: Expr, els: Expr) -> Expr {
        Expr::If {
            cond: Box::new(cond),
            then: Box::new(then),
            els: Box::new(els),
        }
    }

    pub fn iter(base: Expr, binder: &str, step: Expr, count: Expr) -> Expr {
        Expr::Iter {
            base: Box::new(base),
            binder: binder.to_string(),
            step: Box::new(step),
            count: Box::new(count),
        }
    }

    /// If this is a closed successor chain, its numeric value.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0u64;
        let mut cur = self;
        loop {
            match cur {
                Expr::Zero => return Some(n),
                Expr::Succ(inner) => {
                    n += 1;
                    cur = inner;
                }
                _ => return None,
            }
        }
    }

    /// Multiset of free variable occurrences.
    pub fn free_vars(&self) -> BTreeMap<String, usize> {
        fn go(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeMap<String, usize>) {
            match e {
                Expr::Var(x) => {
                    if !bound.contains(x) {
                        *out.entry(x.clone()).or_insert(0) += 1;
                    }
                }
                Expr::True | Expr::False | Expr::Zero => {}
                Expr::Succ(e) => go(e, bound, out),
                Expr::Iter {
                    base,
                    binder,
                    step,
                    count,
                } => {
                    go(base, bound, out);
                    bound.push(binder.clone());
                    go(step, bound, out);
                    bound.pop();
                    go(count, bound, out);
                }
                Expr::Lam { binder, body, .. } => {
                    bound.push(binder.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                Expr::App { fun, arg } => {
                    go(fun, bound, out);
                    go(arg, bound, out);
                }
                Expr::If { cond, then, els } => {
                    go(cond, bound, out);
                    go(then, bound, out);
                    go(els, bound, out);
                }
            }
        }
        let mut out = BTreeMap::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Per-variable use counts under the linear reading: conditional
    /// branches share their context, so a variable's uses across the two
    /// branches count as the maximum of the per-branch counts, while every
    /// other form sums its children.
    pub fn linear_uses(&self) -> BTreeMap<String, usize> {
        fn merge(out: &mut BTreeMap<String, usize>, other: BTreeMap<String, usize>) {
            for (k, v) in other {
                *out.entry(k).or_insert(0) += v;
            }
        }
        match self {
            Expr::Var(x) => BTreeMap::from([(x.clone(), 1)]),
            Expr::True | Expr::False | Expr::Zero => BTreeMap::new(),
            Expr::Succ(e) => e.linear_uses(),
            Expr::Lam { binder, body, .. } => {
                let mut out = body.linear_uses();
                out.remove(binder);
                out
            }
            Expr::App { fun, arg } => {
                let mut out = fun.linear_uses();
                merge(&mut out, arg.linear_uses());
                out
            }
            Expr::If { cond, then, els } => {
                let mut out = cond.linear_uses();
                let t = then.linear_uses();
                let mut e = els.linear_uses();
                let mut shared = BTreeMap::new();
                for (k, tv) in t {
                    let ev = e.remove(&k).unwrap_or(0);
                    shared.insert(k, tv.max(ev));
                }
                merge(&mut shared, e);
                merge(&mut out, shared);
                out
            }
            Expr::Iter {
                base,
                binder,
                step,
                count,
            } => {
                let mut out = base.linear_uses();
                let mut s = step.linear_uses();
                s.remove(binder);
                merge(&mut out, s);
                merge(&mut out, count.linear_uses());
                out
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Syntactic values per the value grammar.
    pub fn is_value(&self) -> bool {
        match self {
            Expr::True | Expr::False | Expr::Zero | Expr::Lam { .. } => true,
            Expr::Succ(e) => e.is_value(),
            _ => false,
        }
    }
}

/// Ordered typing context of `name : type` binders.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ctx(Vec<(String, Ty)>);

impl Ctx {
    pub fn empty() -> Ctx {
        Ctx(Vec::new())
    }

    pub fn from_binders(binders: Vec<(String, Ty)>) -> Ctx {
        Ctx(binders)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn binders(&self) -> &[(String, Ty)] {
        &self.0
    }

    pub fn lookup(&self, name: &str) -> Option<&Ty> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// 1-based index of a variable; the rightmost binder's index equals the
    /// context length. 0 when absent.
    pub fn index_of(&self, name: &str) -> usize {
        for (i, (n, _)) in self.0.iter().enumerate().rev() {
            if n == name {
                return i + 1;
            }
        }
        0
    }

    /// Extend on the right with one binder.
    pub fn extended(&self, name: &str, ty: Ty) -> Ctx {
        let mut v = self.0.clone();
        v.push((name.to_string(), ty));
        Ctx(v)
    }

    /// Concatenation appends the right context on the right.
    pub fn concat(&self, other: &Ctx) -> Ctx {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Ctx(v)
    }

    /// Order-preserving restriction to a set of names.
    pub fn restrict_to<F: Fn(&str) -> bool>(&self, keep: F) -> Ctx {
        Ctx(self
            .0
            .iter()
            .filter(|(n, _)| keep(n))
            .cloned()
            .collect())
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.0.iter().any(|(n, _)| !seen.insert(n))
    }
}

impl fmt::Display for Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(n, t)| format!("{}:{}", n, t)).collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    Lambda,
    Colon,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Arrow,   // ->
    Lolli,   // -o
    KwIf,
    KwThen,
    KwElse,
    KwIter,
    KwSucc,
    KwTrue,
    KwFalse,
    KwBool,
    KwNat,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "identifier `{}`", x),
            Tok::Num(n) => return write!(f, "numeral `{}`", n),
            Tok::Lambda => "\\",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Arrow => "->",
            Tok::Lolli => "-o",
            Tok::KwIf => "if",
            Tok::KwThen => "then",
            Tok::KwElse => "else",
            Tok::KwIter => "iter",
            Tok::KwSucc => "succ",
            Tok::KwTrue => "tt",
            Tok::KwFalse => "ff",
            Tok::KwBool => "Bool",
            Tok::KwNat => "Nat",
        };
        write!(f, "`{}`", s)
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if let Some(c) = c {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        c
    }

    fn lex(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    // line comment
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let c = match self.chars.peek() {
                Some(&c) => c,
                None => return Ok(out),
            };
            let tok = match c {
                '\\' | 'λ' => {
                    self.bump();
                    Tok::Lambda
                }
                ':' => {
                    self.bump();
                    Tok::Colon
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '{' => {
                    self.bump();
                    Tok::LBrace
                }
                '}' => {
                    self.bump();
                    Tok::RBrace
                }
                '-' => {
                    self.bump();
                    match self.chars.peek() {
                        Some('>') => {
                            self.bump();
                            Tok::Arrow
                        }
                        Some('o') => {
                            self.bump();
                            Tok::Lolli
                        }
                        _ => {
                            return Err(ParseError {
                                line,
                                col,
                                msg: "expected `->` or `-o` after `-`".to_string(),
                            })
                        }
                    }
                }
                c if c.is_ascii_digit() => {
                    let mut n: u64 = 0;
                    while let Some(&d) = self.chars.peek() {
                        if let Some(digit) = d.to_digit(10) {
                            n = n
                                .checked_mul(10)
                                .and_then(|n| n.checked_add(digit as u64))
                                .ok_or(ParseError {
                                    line,
                                    col,
                                    msg: "numeral too large".to_string(),
                                })?;
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Num(n)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(&d) = self.chars.peek() {
                        if d.is_alphanumeric() || d == '_' || d == '\'' {
                            s.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    match s.as_str() {
                        "if" => Tok::KwIf,
                        "then" => Tok::KwThen,
                        "else" => Tok::KwElse,
                        "iter" => Tok::KwIter,
                        "succ" => Tok::KwSucc,
                        "tt" => Tok::KwTrue,
                        "ff" => Tok::KwFalse,
                        "Bool" => Tok::KwBool,
                        "Nat" => Tok::KwNat,
                        _ => Tok::Ident(s),
                    }
                }
                c => {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!("unexpected character `{}`", c),
                    })
                }
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .or_else(|| self.toks.last().map(|&(_, l, c)| (l, c + 1)))
            .unwrap_or((1, 1))
    }

    fn err(&self, expected: &str) -> ParseError {
        let (line, col) = self.here();
        let found = match self.peek() {
            Some(t) => format!("{}", t),
            None => "end of input".to_string(),
        };
        ParseError {
            line,
            col,
            msg: format!("expected {}, found {}", expected, found),
        }
    }

    fn eat(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("{}", tok)))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.err("identifier")),
        }
    }

    fn ty(&mut self) -> Result<Ty, ParseError> {
        let lhs = self.ty_atom()?;
        if self.peek() == Some(&Tok::Lolli) {
            self.pos += 1;
            let rhs = self.ty()?;
            Ok(Ty::fun(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_atom(&mut self) -> Result<Ty, ParseError> {
        match self.peek() {
            Some(Tok::KwBool) => {
                self.pos += 1;
                Ok(Ty::Bool)
            }
            Some(Tok::KwNat) => {
                self.pos += 1;
                Ok(Ty::Nat)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.ty()?;
                self.eat(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.err("a type")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Lambda) => {
                self.pos += 1;
                let binder = self.ident()?;
                self.eat(Tok::Colon)?;
                let annot = self.ty()?;
                self.eat(Tok::Dot)?;
                let body = self.expr()?;
                Ok(Expr::Lam {
                    binder,
                    annot,
                    body: Box::new(body),
                })
            }
            Some(Tok::KwIf) => {
                self.pos += 1;
                let cond = self.expr()?;
                self.eat(Tok::KwThen)?;
                let then = self.expr()?;
                self.eat(Tok::KwElse)?;
                let els = self.expr()?;
                Ok(Expr::ite(cond, then, els))
            }
            Some(Tok::KwIter) => {
                self.pos += 1;
                let base = self.app()?;
                self.eat(Tok::LBrace)?;
                let binder = self.ident()?;
                self.eat(Tok::Arrow)?;
                let step = self.expr()?;
                self.eat(Tok::RBrace)?;
                let count = self.app()?;
                Ok(Expr::Iter {
                    base: Box::new(base),
                    binder,
                    step: Box::new(step),
                    count: Box::new(count),
                })
            }
            _ => self.app(),
        }
    }

    fn app(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while matches!(
            self.peek(),
            Some(
                Tok::Ident(_)
                    | Tok::Num(_)
                    | Tok::KwTrue
                    | Tok::KwFalse
                    | Tok::KwSucc
                    | Tok::LParen
            )
        ) {
            let arg = self.atom()?;
            e = Expr::app(e, arg);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(Expr::Var(x))
            }
            Some(&Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::numeral(n))
            }
            Some(Tok::KwTrue) => {
                self.pos += 1;
                Ok(Expr::True)
            }
            Some(Tok::KwFalse) => {
                self.pos += 1;
                Ok(Expr::False)
            }
            Some(Tok::KwSucc) => {
                self.pos += 1;
                let e = self.atom()?;
                Ok(Expr::succ(e))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.err("an expression")),
        }
    }
}

/// Parse source text into an alpha-renamed expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::new(source).lex()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("end of input"));
    }
    Ok(alpha_rename(&e))
}

/// Parse a type from source text.
pub fn parse_ty(source: &str) -> Result<Ty, ParseError> {
    let toks = Lexer::new(source).lex()?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.ty()?;
    if p.pos != p.toks.len() {
        return Err(p.err("end of input"));
    }
    Ok(t)
}

/// Rename binders so that all binder names are globally distinct and disjoint
/// from the free variables (Barendregt convention).
pub fn alpha_rename(e: &Expr) -> Expr {
    let mut used: std::collections::HashSet<String> =
        e.free_vars().keys().cloned().collect();

    fn fresh(base: &str, used: &mut std::collections::HashSet<String>) -> String {
        if used.insert(base.to_string()) {
            return base.to_string();
        }
        let stem: String = base.trim_end_matches(|c: char| c.is_ascii_digit()).to_string();
        let stem = if stem.is_empty() { "x".to_string() } else { stem };
        let mut i = 1;
        loop {
            let cand = format!("{}{}", stem, i);
            if used.insert(cand.clone()) {
                return cand;
            }
            i += 1;
        }
    }

    fn go(
        e: &Expr,
        map: &mut Vec<(String, String)>,
        used: &mut std::collections::HashSet<String>,
    ) -> Expr {
        match e {
            Expr::Var(x) => {
                let name = map
                    .iter()
                    .rev()
                    .find(|(from, _)| from == x)
                    .map(|(_, to)| to.clone())
                    .unwrap_or_else(|| x.clone());
                Expr::Var(name)
            }
            Expr::True => Expr::True,
            Expr::False => Expr::False,
            Expr::Zero => Expr::Zero,
            Expr::Succ(e) => Expr::succ(go(e, map, used)),
            Expr::Lam { binder, annot, body } => {
                let new = fresh(binder, used);
                map.push((binder.clone(), new.clone()));
                let body = go(body, map, used);
                map.pop();
                Expr::Lam {
                    binder: new,
                    annot: annot.clone(),
                    body: Box::new(body),
                }
            }
            Expr::Iter {
                base,
                binder,
                step,
                count,
            } => {
                let base = go(base, map, used);
                let new = fresh(binder, used);
                map.push((binder.clone(), new.clone()));
                let step = go(step, map, used);
                map.pop();
                let count = go(count, map, used);
                Expr::Iter {
                    base: Box::new(base),
                    binder: new,
                    step: Box::new(step),
                    count: Box::new(count),
                }
            }
            Expr::App { fun, arg } => Expr::app(go(fun, map, used), go(arg, map, used)),
            Expr::If { cond, then, els } => Expr::ite(
                go(cond, map, used),
                go(then, map, used),
                go(els, map, used),
            ),
        }
    }

    go(e, &mut Vec::new(), &mut used)
}

/// Alpha-equivalence of two expressions.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    fn go(a: &Expr, b: &Expr, pairs: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (Expr::Var(x), Expr::Var(y)) => {
                for (bx, by) in pairs.iter().rev() {
                    if bx == x || by == y {
                        return bx == x && by == y;
                    }
                }
                x == y
            }
            (Expr::True, Expr::True)
            | (Expr::False, Expr::False)
            | (Expr::Zero, Expr::Zero) => true,
            (Expr::Succ(a), Expr::Succ(b)) => go(a, b, pairs),
            (
                Expr::Lam {
                    binder: xa,
                    annot: ta,
                    body: ba,
                },
                Expr::Lam {
                    binder: xb,
                    annot: tb,
                    body: bb,
                },
            ) => {
                if ta != tb {
                    return false;
                }
                pairs.push((xa.clone(), xb.clone()));
                let r = go(ba, bb, pairs);
                pairs.pop();
                r
            }
            (
                Expr::Iter {
                    base: ba,
                    binder: xa,
                    step: sa,
                    count: ca,
                },
                Expr::Iter {
                    base: bb,
                    binder: xb,
                    step: sb,
                    count: cb,
                },
            ) => {
                if !go(ba, bb, pairs) || !go(ca, cb, pairs) {
                    return false;
                }
                pairs.push((xa.clone(), xb.clone()));
                let r = go(sa, sb, pairs);
                pairs.pop();
                r
            }
            (Expr::App { fun: fa, arg: aa }, Expr::App { fun: fb, arg: ab }) => {
                go(fa, fb, pairs) && go(aa, ab, pairs)
            }
            (
                Expr::If {
                    cond: ca,
                    then: ta,
                    els: ea,
                },
                Expr::If {
                    cond: cb,
                    then: tb,
                    els: eb,
                },
            ) => go(ca, cb, pairs) && go(ta, tb, pairs) && go(ea, eb, pairs),
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

/// Canonical concrete syntax. `parse(pretty(e))` is alpha-equivalent to `e`.
pub fn pretty(e: &Expr) -> String {
    // Precedence positions: 0 = anywhere, 1 = function position, 2 = atom position.
    fn go(e: &Expr, prec: u8, out: &mut String) {
        if let Some(n) = e.as_numeral() {
            out.push_str(&n.to_string());
            return;
        }
        match e {
            Expr::Var(x) => out.push_str(x),
            Expr::True => out.push_str("tt"),
            Expr::False => out.push_str("ff"),
            Expr::Zero => out.push('0'),
            Expr::Succ(inner) => {
                // `succ` binds like application; parenthesize in atom position.
                let need = prec >= 2;
                if need {
                    out.push('(');
                }
                out.push_str("succ ");
                go(inner, 2, out);
                if need {
                    out.push(')');
                }
            }
            Expr::Lam { binder, annot, body } => {
                let need = prec >= 1;
                if need {
                    out.push('(');
                }
                out.push('\\');
                out.push_str(binder);
                out.push(':');
                out.push_str(&annot.to_string());
                out.push_str(". ");
                go(body, 0, out);
                if need {
                    out.push(')');
                }
            }
            Expr::App { fun, arg } => {
                let need = prec >= 2;
                if need {
                    out.push('(');
                }
                go(fun, 1, out);
                out.push(' ');
                go(arg, 2, out);
                if need {
                    out.push(')');
                }
            }
            Expr::If { cond, then, els } => {
                let need = prec >= 1;
                if need {
                    out.push('(');
                }
                out.push_str("if ");
                go(cond, 0, out);
                out.push_str(" then ");
                go(then, 0, out);
                out.push_str(" else ");
                go(els, 0, out);
                if need {
                    out.push(')');
                }
            }
            Expr::Iter {
                base,
                binder,
                step,
                count,
            } => {
                let need = prec >= 1;
                if need {
                    out.push('(');
                }
                out.push_str("iter ");
                go(base, 2, out);
                out.push_str(" {");
                out.push_str(binder);
                out.push_str(" -> ");
                go(step, 0, out);
                out.push_str("} ");
                go(count, 2, out);
                if need {
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(e, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_doubling_iterator() {
        let e = parse("iter 0 {y -> succ (succ y)} (succ 0)").unwrap();
        assert_eq!(
            e,
            Expr::iter(
                Expr::Zero,
                "y",
                Expr::succ(Expr::succ(Expr::var("y"))),
                Expr::numeral(1)
            )
        );
    }

    #[test]
    fn parses_atoms() {
        assert_eq!(parse("tt").unwrap(), Expr::True);
        assert_eq!(parse("ff").unwrap(), Expr::False);
        assert_eq!(parse("3").unwrap(), Expr::numeral(3));
    }

    #[test]
    fn parses_not_operator() {
        let e = parse("\\x:Bool. if x then ff else tt").unwrap();
        assert_eq!(
            e,
            Expr::lam(
                "x",
                Ty::Bool,
                Expr::ite(Expr::var("x"), Expr::False, Expr::True)
            )
        );
    }

    #[test]
    fn parse_error_has_location() {
        let err = parse("if tt then").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.msg.contains("expected"));
    }

    #[test]
    fn application_is_left_associative() {
        let e = parse("f a b").unwrap();
        assert_eq!(
            e,
            Expr::app(Expr::app(Expr::var("f"), Expr::var("a")), Expr::var("b"))
        );
    }

    #[test]
    fn lolli_is_right_associative() {
        assert_eq!(
            parse_ty("Bool -o Bool -o Nat").unwrap(),
            Ty::fun(Ty::Bool, Ty::fun(Ty::Bool, Ty::Nat))
        );
        assert_eq!(
            parse_ty("(Bool -o Bool) -o Nat").unwrap(),
            Ty::fun(Ty::fun(Ty::Bool, Ty::Bool), Ty::Nat)
        );
    }

    #[test]
    fn pretty_atoms() {
        assert_eq!(pretty(&Expr::Zero), "0");
        assert_eq!(pretty(&Expr::succ(Expr::succ(Expr::Zero))), "2");
        assert_eq!(
            pretty(&Expr::lam("x", Ty::Bool, Expr::var("x"))),
            "\\x:Bool. x"
        );
    }

    #[test]
    fn alpha_rename_removes_shadowing() {
        let shadowed = Expr::lam(
            "x",
            Ty::Bool,
            Expr::lam("x", Ty::Bool, Expr::var("x")),
        );
        let renamed = alpha_rename(&shadowed);
        assert_eq!(
            renamed,
            Expr::lam("x", Ty::Bool, Expr::lam("x1", Ty::Bool, Expr::var("x1")))
        );
        assert!(alpha_eq(&shadowed, &renamed));
    }

    #[test]
    fn alpha_rename_keeps_unique_binders() {
        let e = parse("\\x:Bool. \\y:Bool. x").unwrap();
        assert_eq!(alpha_rename(&e), e);
    }

    #[test]
    fn alpha_rename_self_application() {
        let id = Expr::lam("x", Ty::Bool, Expr::var("x"));
        let e = Expr::app(id.clone(), id);
        let renamed = alpha_rename(&e);
        assert_eq!(
            renamed,
            Expr::app(
                Expr::lam("x", Ty::Bool, Expr::var("x")),
                Expr::lam("x1", Ty::Bool, Expr::var("x1"))
            )
        );
    }

    #[test]
    fn numerals_round_trip() {
        for n in [0u64, 1, 2, 10, 137, 1000] {
            assert_eq!(pretty(&Expr::numeral(n)), n.to_string());
            assert_eq!(parse(&n.to_string()).unwrap(), Expr::numeral(n));
        }
    }

    #[test]
    fn ctx_index_and_concat() {
        let c1 = Ctx::from_binders(vec![("x".into(), Ty::Bool)]);
        let c2 = Ctx::from_binders(vec![("y".into(), Ty::Nat), ("z".into(), Ty::Bool)]);
        let c = c1.concat(&c2);
        assert_eq!(c.len(), 3);
        assert_eq!(c.index_of("x"), 1);
        assert_eq!(c.index_of("z"), 3);
        assert_eq!(c.index_of("w"), 0);
    }
}
