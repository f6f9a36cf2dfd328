//! Line-oriented map descriptions.
//!
//! ```text
//! # Lanford map, studied through its second iterate
//! poly [0,1] : 2x + (1/2)x(1-x) mod 1
//! iterate 2
//! ```
//!
//! Each `poly` line gives one branch: a rational domain and an expression in
//! `x` built from rational literals, `+ - * / ^`, parentheses and at most one
//! `A sin(B pi x)` term. `linear a [mod 1]` is shorthand for the single
//! branch `a x` on `[0,1]`. `circle` marks the map as a circle map.
//! Statements are separated by newlines or `;`.

use std::collections::BTreeMap;
use std::fmt;

use super::{Branch, ExprDef, MapError, MapSpec, Poly, Trig};
use crate::rational::ExactRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Map(#[from] MapError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = s.chars().map(|c| if c == '\u{2212}' { '-' } else { c }).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).map_or(false, |d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c.is_alphabetic() {
            if c == 'π' {
                out.push(Tok::Ident("pi".into()));
                i += 1;
                continue;
            }
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            // `xx` style juxtaposition is not supported; single variable only
            out.push(Tok::Ident(word));
        } else if "+-*/^()[],:".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(syntax(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// Polynomial in `x` and `pi` plus sine terms.
#[derive(Clone, Debug, Default)]
struct Sym {
    mono: BTreeMap<(u32, u32), ExactRational>,
    trig: Vec<Trig>,
}

impl Sym {
    fn constant(c: ExactRational) -> Sym {
        let mut mono = BTreeMap::new();
        if !c.is_zero() {
            mono.insert((0, 0), c);
        }
        Sym { mono, trig: Vec::new() }
    }

    fn monomial(x: u32, pi: u32) -> Sym {
        let mut mono = BTreeMap::new();
        mono.insert((x, pi), ExactRational::one());
        Sym { mono, trig: Vec::new() }
    }

    fn as_constant(&self) -> Option<ExactRational> {
        if !self.trig.is_empty() {
            return None;
        }
        match self.mono.len() {
            0 => Some(ExactRational::zero()),
            1 => self.mono.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    fn add(mut self, other: Sym) -> Sym {
        for (k, v) in other.mono {
            let e = self.mono.entry(k).or_insert_with(ExactRational::zero);
            *e = &*e + &v;
        }
        self.mono.retain(|_, v| !v.is_zero());
        for t in other.trig {
            match self.trig.iter_mut().find(|s| s.freq == t.freq) {
                Some(s) => s.amp = &s.amp + &t.amp,
                None => self.trig.push(t),
            }
        }
        self.trig.retain(|t| !t.amp.is_zero());
        self
    }

    fn scale(mut self, c: &ExactRational) -> Sym {
        for v in self.mono.values_mut() {
            *v = &*v * c;
        }
        for t in &mut self.trig {
            t.amp = &t.amp * c;
        }
        self.mono.retain(|_, v| !v.is_zero());
        self.trig.retain(|t| !t.amp.is_zero());
        self
    }

    fn mul(self, other: Sym, line: usize) -> Result<Sym, ParseError> {
        if let Some(c) = self.as_constant() {
            return Ok(other.scale(&c));
        }
        if let Some(c) = other.as_constant() {
            return Ok(self.scale(&c));
        }
        if !self.trig.is_empty() || !other.trig.is_empty() {
            return Err(syntax(line, "sine terms may only be multiplied by constants"));
        }
        let mut out = Sym::default();
        for ((a, b), u) in &self.mono {
            for ((c, d), v) in &other.mono {
                let e = out.mono.entry((a + c, b + d)).or_insert_with(ExactRational::zero);
                *e = &*e + &(u * v);
            }
        }
        out.mono.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    fn sin(self, line: usize) -> Result<Sym, ParseError> {
        if !self.trig.is_empty() {
            return Err(syntax(line, "nested sine"));
        }
        if self.mono.is_empty() {
            return Ok(Sym::default());
        }
        match (self.mono.len(), self.mono.get(&(1, 1))) {
            (1, Some(freq)) => Ok(Sym {
                mono: BTreeMap::new(),
                trig: vec![Trig { amp: ExactRational::one(), freq: freq.clone() }],
            }),
            _ => Err(syntax(line, "sine argument must have the form `B pi x`")),
        }
    }

    fn into_expr(self, line: usize) -> Result<ExprDef, ParseError> {
        let mut coeffs = Vec::new();
        for ((xd, pd), v) in self.mono {
            if pd != 0 {
                return Err(syntax(line, "`pi` may only appear inside sin(...)"));
            }
            let i = xd as usize;
            if coeffs.len() <= i {
                coeffs.resize(i + 1, ExactRational::zero());
            }
            coeffs[i] = v;
        }
        if self.trig.len() > 1 {
            return Err(syntax(line, "at most one sine term per branch"));
        }
        Ok(ExprDef { poly: Poly::new(coeffs), trig: self.trig.into_iter().next() })
    }
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.next() {
            Some(Tok::Sym(d)) if d == c => Ok(()),
            other => Err(syntax(self.line, format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Tok::Sym(d)) if *d == c)
    }

    fn expr(&mut self) -> Result<Sym, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.at_sym('+') {
                self.pos += 1;
                acc = acc.add(self.term()?);
            } else if self.at_sym('-') {
                self.pos += 1;
                acc = acc.add(self.term()?.scale(&ExactRational::from_int(-1)));
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Some(Tok::Num(_)) => true,
            Some(Tok::Ident(w)) => w != "mod",
            Some(Tok::Sym('(')) => true,
            _ => false,
        }
    }

    fn term(&mut self) -> Result<Sym, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.at_sym('*') {
                self.pos += 1;
                let f = self.factor()?;
                acc = acc.mul(f, self.line)?;
            } else if self.at_sym('/') {
                self.pos += 1;
                let f = self.factor()?;
                let c = f.as_constant().ok_or_else(|| syntax(self.line, "division by a non-constant"))?;
                if c.is_zero() {
                    return Err(syntax(self.line, "division by zero"));
                }
                acc = acc.scale(&c.recip());
            } else if self.starts_factor() {
                let f = self.factor()?;
                acc = acc.mul(f, self.line)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Sym, ParseError> {
        let base = self.atom()?;
        if self.at_sym('^') {
            self.pos += 1;
            let n = match self.next() {
                Some(Tok::Num(s)) => s.parse::<u32>().map_err(|_| syntax(self.line, "exponent must be a small integer"))?,
                other => return Err(syntax(self.line, format!("expected exponent, found {other:?}"))),
            };
            let mut acc = Sym::constant(ExactRational::one());
            for _ in 0..n {
                acc = acc.mul(base.clone(), self.line)?;
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Sym, ParseError> {
        match self.next() {
            Some(Tok::Num(s)) => {
                let q: ExactRational = s.parse().map_err(|_| syntax(self.line, format!("bad number `{s}`")))?;
                Ok(Sym::constant(q))
            }
            Some(Tok::Ident(w)) => match w.as_str() {
                "x" => Ok(Sym::monomial(1, 0)),
                "pi" => Ok(Sym::monomial(0, 1)),
                "sin" => {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    arg.sin(self.line)
                }
                _ => Err(syntax(self.line, format!("unknown identifier `{w}`"))),
            },
            Some(Tok::Sym('(')) => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym('-')) => Ok(self.factor()?.scale(&ExactRational::from_int(-1))),
            Some(Tok::Sym('+')) => self.factor(),
            other => Err(syntax(self.line, format!("unexpected token {other:?}"))),
        }
    }

    fn rational(&mut self) -> Result<ExactRational, ParseError> {
        let e = self.expr()?;
        e.as_constant().ok_or_else(|| syntax(self.line, "expected a rational constant"))
    }

    fn mod_one(&mut self) -> Result<bool, ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == "mod" => {
                self.pos += 1;
                match self.next() {
                    Some(Tok::Num(s)) if s == "1" => Ok(true),
                    other => Err(syntax(self.line, format!("only `mod 1` is supported, found {other:?}"))),
                }
            }
            _ => Ok(false),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(self.line, format!("trailing input {t:?}"))),
        }
    }
}

/// Parses a map description. Domains are checked to partition `[0,1]`.
pub fn parse_map(text: &str) -> Result<MapSpec, ParseError> {
    let mut branches = Vec::new();
    let mut iterate = 1u32;
    let mut circle = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        for stmt in content.split(';') {
            let toks = tokenize(stmt, line)?;
            if toks.is_empty() {
                continue;
            }
            let mut p = Parser { toks: &toks, pos: 1, line };
            let Tok::Ident(kw) = &toks[0] else {
                return Err(syntax(line, "expected `poly`, `linear`, `iterate` or `circle`"));
            };
            match kw.as_str() {
                "poly" => {
                    p.expect('[')?;
                    let lo = p.rational()?;
                    p.expect(',')?;
                    let hi = p.rational()?;
                    p.expect(']')?;
                    p.expect(':')?;
                    let e = p.expr()?.into_expr(line)?;
                    let mod_one = p.mod_one()?;
                    p.done()?;
                    branches.push(Branch { lo, hi, expr: e, mod_one });
                }
                "linear" => {
                    let a = p.rational()?;
                    let mod_one = p.mod_one()?;
                    p.done()?;
                    let poly = Poly::new(vec![ExactRational::zero(), a]);
                    branches.push(Branch {
                        lo: ExactRational::zero(),
                        hi: ExactRational::one(),
                        expr: ExprDef::poly(poly),
                        mod_one,
                    });
                }
                "iterate" => {
                    iterate = match p.next() {
                        Some(Tok::Num(s)) => s.parse().map_err(|_| syntax(line, "iterate needs a positive integer"))?,
                        _ => return Err(syntax(line, "iterate needs a positive integer")),
                    };
                    p.done()?;
                }
                "circle" => {
                    p.done()?;
                    circle = true;
                }
                other => return Err(syntax(line, format!("unknown statement `{other}`"))),
            }
        }
    }
    let spec = MapSpec { branches, iterate, circle };
    spec.validate()?;
    Ok(spec)
}

impl fmt::Display for MapSpec {
    /// Canonical description accepted by [`parse_map`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.branches {
            write!(f, "poly [{},{}] : {}", b.lo, b.hi, b.expr)?;
            if b.mod_one {
                write!(f, " mod 1")?;
            }
            writeln!(f)?;
        }
        if self.iterate != 1 {
            writeln!(f, "iterate {}", self.iterate)?;
        }
        if self.circle {
            writeln!(f, "circle")?;
        }
        Ok(())
    }
}
