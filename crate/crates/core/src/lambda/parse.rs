//! Concrete syntax for λ-terms.
//!
//! Named grammar: `t ::= IDENT | '\' IDENT '.' t | t t | '(' t ')'`, with
//! application associating to the left and a λ-body extending maximally to
//! the right. Free names map to context slots in first-use order.
//!
//! De Bruijn grammar: `t ::= '@'NAT | 'lam' '(' t ')' | 'app' '(' t ',' t ')'`
//! with a mandatory `ctx=N` header for open terms.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Body, LambdaTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSyntax {
    Named,
    DeBruijn,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("lambda parse error at {pos}: {msg}")]
pub struct ParseLambdaError {
    pub pos: usize,
    pub msg: String,
}

fn perr<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseLambdaError> {
    Err(ParseLambdaError { pos, msg: msg.into() })
}

pub fn parse_lambda(
    src: &str,
    syntax: LambdaSyntax,
    aliases: &BTreeMap<String, LambdaTerm>,
) -> Result<LambdaTerm, ParseLambdaError> {
    match syntax {
        LambdaSyntax::Named => parse_named(src, aliases),
        LambdaSyntax::DeBruijn => parse_debruijn(src),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    Comma,
    At(usize),
    Ident(String),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseLambdaError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '\\' | 'λ' => {
                toks.push((Tok::Lambda, i));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '@' => {
                let start = i;
                i += 1;
                let ds = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
                if ds == 0 {
                    return perr(start, "expected an index after `@`");
                }
                let n: usize = chars[i..i + ds]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| ParseLambdaError { pos: start, msg: "index out of range".into() })?;
                toks.push((Tok::At(n), start));
                i += ds;
            }
            _ if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
            }
            _ => return perr(i, format!("unexpected character `{c}`")),
        }
    }
    Ok(toks)
}

struct NamedParser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    binders: Vec<String>,
    free: Vec<String>,
    aliases: &'a BTreeMap<String, LambdaTerm>,
    end: usize,
}

impl<'a> NamedParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn term(&mut self) -> Result<Body, ParseLambdaError> {
        if self.peek() == Some(&Tok::Lambda) {
            self.lam()
        } else {
            self.appseq()
        }
    }

    fn lam(&mut self) -> Result<Body, ParseLambdaError> {
        let at = self.here();
        self.bump();
        let name = match self.bump() {
            Some((Tok::Ident(n), _)) => n,
            _ => return perr(at, "expected a binder name after `\\`"),
        };
        match self.bump() {
            Some((Tok::Dot, _)) => {}
            _ => return perr(at, "expected `.` after the binder"),
        }
        self.binders.push(name);
        let body = self.term()?;
        self.binders.pop();
        Ok(Body::Lam(Box::new(body)))
    }

    fn appseq(&mut self) -> Result<Body, ParseLambdaError> {
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let rhs = self.atom()?;
                    t = Body::App(Box::new(t), Box::new(rhs));
                }
                Some(Tok::Lambda) => {
                    let rhs = self.lam()?;
                    return Ok(Body::App(Box::new(t), Box::new(rhs)));
                }
                _ => return Ok(t),
            }
        }
    }

    fn atom(&mut self) -> Result<Body, ParseLambdaError> {
        let at = self.here();
        match self.bump() {
            Some((Tok::LParen, _)) => {
                let t = self.term()?;
                match self.bump() {
                    Some((Tok::RParen, _)) => Ok(t),
                    _ => perr(at, "unbalanced `(`"),
                }
            }
            Some((Tok::Ident(name), _)) => Ok(self.resolve(name)),
            Some((t, p)) => perr(p, format!("unexpected token {t:?}")),
            None => perr(at, "unexpected end of input"),
        }
    }

    fn resolve(&mut self, name: String) -> Body {
        // Innermost binder wins; aliases apply to names not bound anywhere.
        if let Some(k) = self.binders.iter().rev().position(|b| *b == name) {
            return Body::Var(k);
        }
        if let Some(alias) = self.aliases.get(&name) {
            debug_assert!(alias.is_closed());
            return alias.body().clone();
        }
        let slot = match self.free.iter().position(|f| *f == name) {
            Some(s) => s,
            None => {
                self.free.push(name);
                self.free.len() - 1
            }
        };
        Body::Var(self.binders.len() + slot)
    }
}

fn parse_named(
    src: &str,
    aliases: &BTreeMap<String, LambdaTerm>,
) -> Result<LambdaTerm, ParseLambdaError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return perr(0, "empty input");
    }
    let end = src.chars().count();
    let mut p = NamedParser { toks, pos: 0, binders: Vec::new(), free: Vec::new(), aliases, end };
    let body = p.term()?;
    if let Some((_, pos)) = p.toks.get(p.pos) {
        return perr(*pos, "trailing input after term");
    }
    let ctx = p.free.len();
    LambdaTerm::from_body(ctx, body)
        .map_err(|e| ParseLambdaError { pos: 0, msg: e.to_string() })
}

fn parse_debruijn(src: &str) -> Result<LambdaTerm, ParseLambdaError> {
    // Optional `ctx=N` header.
    let trimmed = src.trim_start();
    let header_off = src.len() - trimmed.len();
    let (ctx, rest, rest_off) = if let Some(after) = trimmed.strip_prefix("ctx") {
        let after2 = after.trim_start();
        let Some(after3) = after2.strip_prefix('=') else {
            return perr(header_off, "expected `=` after `ctx`");
        };
        let after4 = after3.trim_start();
        let ds = after4.chars().take_while(char::is_ascii_digit).count();
        if ds == 0 {
            return perr(header_off, "expected a context size after `ctx=`");
        }
        let n: usize = after4[..ds]
            .parse()
            .map_err(|_| ParseLambdaError { pos: header_off, msg: "context size out of range".into() })?;
        (n, &after4[ds..], src.len() - after4.len() + ds)
    } else {
        (0, trimmed, header_off)
    };

    let toks = tokenize(rest)?;
    if toks.is_empty() {
        return perr(rest_off, "empty input");
    }
    let mut pos = 0usize;
    let body = parse_db_body(&toks, &mut pos)?;
    if pos != toks.len() {
        return perr(toks[pos].1, "trailing input after term");
    }
    LambdaTerm::from_body(ctx, body).map_err(|_| ParseLambdaError {
        pos: rest_off,
        msg: format!("variable index escapes context of size {ctx}; add or fix the `ctx=N` header"),
    })
}

fn parse_db_body(toks: &[(Tok, usize)], pos: &mut usize) -> Result<Body, ParseLambdaError> {
    let Some((tok, at)) = toks.get(*pos).cloned() else {
        return perr(0, "unexpected end of input");
    };
    *pos += 1;
    match tok {
        Tok::At(i) => Ok(Body::Var(i)),
        Tok::Ident(kw) if kw == "lam" => {
            expect_db(toks, pos, &Tok::LParen, "`(`")?;
            let b = parse_db_body(toks, pos)?;
            expect_db(toks, pos, &Tok::RParen, "`)`")?;
            Ok(Body::Lam(Box::new(b)))
        }
        Tok::Ident(kw) if kw == "app" => {
            expect_db(toks, pos, &Tok::LParen, "`(`")?;
            let f = parse_db_body(toks, pos)?;
            expect_db(toks, pos, &Tok::Comma, "`,`")?;
            let a = parse_db_body(toks, pos)?;
            expect_db(toks, pos, &Tok::RParen, "`)`")?;
            Ok(Body::App(Box::new(f), Box::new(a)))
        }
        other => perr(at, format!("expected `@i`, `lam(..)` or `app(..)`, found {other:?}")),
    }
}

fn expect_db(toks: &[(Tok, usize)], pos: &mut usize, want: &Tok, what: &str) -> Result<(), ParseLambdaError> {
    match toks.get(*pos) {
        Some((t, _)) if t == want => {
            *pos += 1;
            Ok(())
        }
        Some((_, p)) => perr(*p, format!("expected {what}")),
        None => perr(0, format!("expected {what}, found end of input")),
    }
}

fn binder_name(level: usize) -> String {
    let letters = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'];
    if level < letters.len() {
        letters[level].to_string()
    } else {
        format!("a{}", level - letters.len())
    }
}

/// Named rendering with deterministic binder names `a, b, c, ...` and free
/// slots printed as `x0, x1, ...`.
pub fn render_named(t: &LambdaTerm) -> String {
    // prec 0: top (bare λ ok); 1: left of an application; 2: right of one.
    fn go(b: &Body, depth: usize, prec: u8, out: &mut String) {
        match b {
            Body::Var(i) => {
                if *i < depth {
                    out.push_str(&binder_name(depth - 1 - i));
                } else {
                    out.push_str(&format!("x{}", i - depth));
                }
            }
            Body::Lam(body) => {
                let need = prec > 0;
                if need {
                    out.push('(');
                }
                out.push('\\');
                out.push_str(&binder_name(depth));
                out.push_str(". ");
                go(body, depth + 1, 0, out);
                if need {
                    out.push(')');
                }
            }
            Body::App(f, a) => {
                let need = prec > 1;
                if need {
                    out.push('(');
                }
                go(f, depth, 1, out);
                out.push(' ');
                go(a, depth, 2, out);
                if need {
                    out.push(')');
                }
            }
        }
    }
    let mut out = String::new();
    go(&t.body, 0, 0, &mut out);
    out
}

/// Exact rendering in the de Bruijn grammar; open terms carry their header.
pub fn render_debruijn(t: &LambdaTerm) -> String {
    fn go(b: &Body, out: &mut String) {
        match b {
            Body::Var(i) => out.push_str(&format!("@{i}")),
            Body::Lam(body) => {
                out.push_str("lam(");
                go(body, out);
                out.push(')');
            }
            Body::App(f, a) => {
                out.push_str("app(");
                go(f, out);
                out.push_str(", ");
                go(a, out);
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    if t.ctx > 0 {
        out.push_str(&format!("ctx={} ", t.ctx));
    }
    go(&t.body, &mut out);
    out
}
