//! First-order terms over an algebraic signature: construction, parsing,
//! substitution, single-hole contexts, and bounded enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// The reserved hole metavariable used by contexts and function templates.
pub const HOLE: &str = "·";

/// ASCII spelling of [`HOLE`], accepted by the parser.
pub const HOLE_ASCII: &str = "_HOLE_";

/// An algebraic signature: operation symbols with fixed arities.
///
/// Declaration order is significant; it drives the canonical term order used
/// by [`enumerate_closed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    decls: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate operation symbol `{0}`")]
    Duplicate(String),
    #[error("empty operation symbol name")]
    EmptyName,
}

impl Signature {
    pub fn new<I, S>(decls: I) -> Result<Self, SignatureError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut sig = Signature { decls: Vec::new(), index: HashMap::new() };
        for (name, arity) in decls {
            let name = name.into();
            if name.is_empty() {
                return Err(SignatureError::EmptyName);
            }
            if sig.index.contains_key(&name) {
                return Err(SignatureError::Duplicate(name));
            }
            sig.index.insert(name.clone(), sig.decls.len());
            sig.decls.push((name, arity));
        }
        Ok(sig)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| self.decls[i].1)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Position of a symbol in declaration order.
    pub fn decl_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Symbols in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = (&str, usize)> {
        self.decls.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    /// Whether `t u` infix application sugar is available.
    pub fn has_infix_app(&self) -> bool {
        self.arity("app") == Some(2)
    }
}

/// A first-order term: a metavariable or an operation applied to arguments.
///
/// Terms are immutable values with structural equality. Subtrees are shared
/// behind `Arc`, so clones are cheap and terms work well as memoization keys.
/// A term is *closed* iff it contains no `Var` node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Arc<str>),
    Op(Arc<str>, Arc<[Term]>),
}

impl Term {
    pub fn var(name: impl AsRef<str>) -> Term {
        Term::Var(Arc::from(name.as_ref()))
    }

    pub fn op(name: impl AsRef<str>, args: Vec<Term>) -> Term {
        Term::Op(Arc::from(name.as_ref()), Arc::from(args))
    }

    pub fn constant(name: impl AsRef<str>) -> Term {
        Term::Op(Arc::from(name.as_ref()), Arc::from(Vec::new()))
    }

    pub fn hole() -> Term {
        Term::Var(Arc::from(HOLE))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Op(_, args) => args.iter().all(Term::is_closed),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Op(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// The set of metavariable names occurring in the term.
    pub fn metavars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_metavars(&mut out);
        out
    }

    fn collect_metavars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.to_string());
            }
            Term::Op(_, args) => {
                for a in args.iter() {
                    a.collect_metavars(out);
                }
            }
        }
    }

    /// Number of occurrences of a metavariable.
    pub fn count_var(&self, name: &str) -> usize {
        match self {
            Term::Var(v) => usize::from(&**v == name),
            Term::Op(_, args) => args.iter().map(|a| a.count_var(name)).sum(),
        }
    }

    /// Checks that every operation node matches the signature's arity.
    pub fn well_formed(&self, sig: &Signature) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Op(f, args) => {
                sig.arity(f) == Some(args.len()) && args.iter().all(|a| a.well_formed(sig))
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("unbound metavariable `{0}` in substitution")]
    UnboundMetavar(String),
    #[error("context has {0} holes, at most one allowed")]
    TooManyHoles(usize),
}

/// Simultaneous replacement of metavariables. Every metavariable of `t` must
/// be in the binding's domain.
pub fn substitute(t: &Term, binding: &BTreeMap<String, Term>) -> Result<Term, TermError> {
    match t {
        Term::Var(v) => binding
            .get(&**v)
            .cloned()
            .ok_or_else(|| TermError::UnboundMetavar(v.to_string())),
        Term::Op(f, args) => {
            let args = args
                .iter()
                .map(|a| substitute(a, binding))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::Op(f.clone(), Arc::from(args)))
        }
    }
}

/// A term in which the hole `·` occurs at most once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context1(Term);

impl Context1 {
    pub fn new(t: Term) -> Result<Context1, TermError> {
        let holes = t.count_var(HOLE);
        if holes > 1 {
            return Err(TermError::TooManyHoles(holes));
        }
        Ok(Context1(t))
    }

    pub fn hole() -> Context1 {
        Context1(Term::hole())
    }

    pub fn term(&self) -> &Term {
        &self.0
    }

    pub fn has_hole(&self) -> bool {
        self.0.count_var(HOLE) == 1
    }

    /// Substitutes `t` for the hole; a hole-free context is returned unchanged.
    pub fn plug(&self, t: &Term) -> Term {
        fn go(c: &Term, t: &Term) -> Term {
            match c {
                Term::Var(v) if &**v == HOLE => t.clone(),
                Term::Var(v) => Term::Var(v.clone()),
                Term::Op(f, args) => {
                    if args.iter().all(|a| a.count_var(HOLE) == 0) {
                        return c.clone();
                    }
                    let args: Vec<Term> = args.iter().map(|a| go(a, t)).collect();
                    Term::Op(f.clone(), Arc::from(args))
                }
            }
        }
        go(&self.0, t)
    }

    /// Plugs `inner` into this context's hole, yielding the composite context.
    pub fn compose(&self, inner: &Context1) -> Context1 {
        Context1(self.plug(&inner.0))
    }
}

impl fmt::Display for Context1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Renders a term in the concrete grammar. Binary `app` nodes print as
/// left-associative juxtaposition; everything else prints prefix.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, f, false)
    }
}

fn write_term(t: &Term, f: &mut fmt::Formatter<'_>, right_of_app: bool) -> fmt::Result {
    match t {
        Term::Var(v) => write!(f, "{v}"),
        Term::Op(op, args) if &**op == "app" && args.len() == 2 => {
            if right_of_app {
                write!(f, "(")?;
            }
            write_term(&args[0], f, false)?;
            write!(f, " ")?;
            write_term(&args[1], f, true)?;
            if right_of_app {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Op(op, args) => {
            write!(f, "{op}")?;
            if !args.is_empty() {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_term(a, f, false)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

pub fn render(t: &Term) -> String {
    t.to_string()
}

/// Whether metavariables are accepted by [`parse_term`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermMode {
    Closed,
    Open,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseTermError {
    pub pos: usize,
    pub msg: String,
}

fn perr<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseTermError> {
    Err(ParseTermError { pos, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseTermError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            toks.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            toks.push((Tok::RParen, i));
            i += 1;
        } else if c == ',' {
            toks.push((Tok::Comma, i));
            i += 1;
        } else if c == '·' {
            toks.push((Tok::Ident(HOLE.to_string()), i));
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            i += 1;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            let mut name: String = chars[start..i].iter().collect();
            if name == HOLE_ASCII {
                name = HOLE.to_string();
            }
            toks.push((Tok::Ident(name), start));
        } else {
            return perr(i, format!("unexpected character `{c}`"));
        }
    }
    Ok(toks)
}

struct TermParser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    mode: TermMode,
    end: usize,
}

impl<'a> TermParser<'a> {
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

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ParseTermError> {
        let at = self.here();
        match self.bump() {
            Some((t, p)) if t == want => Ok(p),
            _ => perr(at, format!("expected {what}")),
        }
    }

    fn parse_app(&mut self) -> Result<Term, ParseTermError> {
        let mut t = self.parse_atom()?;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let at = self.here();
                    if !self.sig.has_infix_app() {
                        return perr(at, "unexpected term (signature has no app/2 for juxtaposition)");
                    }
                    let rhs = self.parse_atom()?;
                    t = Term::op("app", vec![t, rhs]);
                }
                _ => return Ok(t),
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Term, ParseTermError> {
        let at = self.here();
        match self.bump() {
            Some((Tok::LParen, _)) => {
                let t = self.parse_app()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some((Tok::Ident(name), p)) => {
                // A following `(` opens an argument list only for symbols of
                // positive arity; for constants and metavariables it starts a
                // juxtaposed parenthesized term instead.
                let takes_args = self.sig.arity(&name).is_some_and(|ar| ar >= 1);
                if takes_args && self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = vec![self.parse_app()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        args.push(self.parse_app()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    match self.sig.arity(&name) {
                        Some(ar) if ar == args.len() => Ok(Term::op(name, args)),
                        Some(ar) => perr(
                            p,
                            format!("arity mismatch: `{name}` takes {ar} arguments, got {}", args.len()),
                        ),
                        None => perr(p, format!("unknown symbol `{name}`")),
                    }
                } else {
                    match self.sig.arity(&name) {
                        Some(0) => Ok(Term::constant(name)),
                        Some(ar) => perr(
                            p,
                            format!("arity mismatch: `{name}` takes {ar} arguments, got 0"),
                        ),
                        None => match self.mode {
                            TermMode::Open => Ok(Term::var(name)),
                            TermMode::Closed => perr(p, format!("unknown symbol `{name}`")),
                        },
                    }
                }
            }
            Some((t, p)) => perr(p, format!("unexpected token {t:?}")),
            None => perr(at, "unexpected end of input"),
        }
    }
}

/// Parses a term; symbols and arities are validated against `sig`.
/// Metavariables are admitted only in [`TermMode::Open`].
pub fn parse_term(src: &str, sig: &Signature, mode: TermMode) -> Result<Term, ParseTermError> {
    let toks = tokenize(src)?;
    let end = src.chars().count();
    let mut p = TermParser { toks, pos: 0, sig, mode, end };
    if p.peek().is_none() {
        return perr(0, "empty input");
    }
    let t = p.parse_app()?;
    if let Some((_, pos)) = p.toks.get(p.pos) {
        return perr(*pos, "trailing input after term");
    }
    Ok(t)
}

/// All closed terms with node count <= `max_size`, duplicate-free, in the
/// canonical order: size-major, then symbol declaration order, then
/// recursively by arguments.
pub fn enumerate_closed(sig: &Signature, max_size: usize) -> Vec<Term> {
    let mut by_size: Vec<Vec<Term>> = Vec::new();
    for s in 1..=max_size {
        let mut level = Vec::new();
        for (f, ar) in sig.symbols() {
            if ar == 0 {
                if s == 1 {
                    level.push(Term::constant(f));
                }
            } else if s > ar {
                let mut args = Vec::with_capacity(ar);
                push_arg_tuples(&by_size, s - 1, ar, f, &mut args, &mut level);
            }
        }
        by_size.push(level);
    }
    by_size.into_iter().flatten().collect()
}

fn push_arg_tuples(
    by_size: &[Vec<Term>],
    budget: usize,
    remaining: usize,
    f: &str,
    args: &mut Vec<Term>,
    out: &mut Vec<Term>,
) {
    if remaining == 0 {
        if budget == 0 {
            out.push(Term::op(f, args.clone()));
        }
        return;
    }
    // Each of the remaining arguments needs at least one node.
    let max_here = budget.saturating_sub(remaining - 1);
    for s in 1..=max_here {
        for t in &by_size[s - 1] {
            args.push(t.clone());
            push_arg_tuples(by_size, budget - s, remaining - 1, f, args, out);
            args.pop();
        }
    }
}

/// Node count of a term; alias for [`Term::size`].
pub fn term_size(t: &Term) -> usize {
    t.size()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xcl() -> Signature {
        Signature::new([
            ("S", 0),
            ("K", 0),
            ("I", 0),
            ("S'", 1),
            ("K'", 1),
            ("S''", 2),
            ("app", 2),
        ])
        .unwrap()
    }

    #[test]
    fn parse_prefix_app() {
        let sig = xcl();
        let t = parse_term("app(S,K)", &sig, TermMode::Closed).unwrap();
        assert_eq!(
            t,
            Term::op("app", vec![Term::constant("S"), Term::constant("K")])
        );
    }

    #[test]
    fn parse_primed_symbols() {
        let sig = xcl();
        let t = parse_term("S''(K,I)", &sig, TermMode::Closed).unwrap();
        assert_eq!(
            t,
            Term::op("S''", vec![Term::constant("K"), Term::constant("I")])
        );
    }

    #[test]
    fn parse_arity_mismatch() {
        let sig = xcl();
        let err = parse_term("app(S)", &sig, TermMode::Closed).unwrap_err();
        assert!(err.msg.contains("arity mismatch"), "{err}");
    }

    #[test]
    fn parse_unknown_symbol_closed() {
        let sig = xcl();
        let err = parse_term("Q", &sig, TermMode::Closed).unwrap_err();
        assert!(err.msg.contains("unknown symbol"), "{err}");
        // Open mode admits it as a metavariable.
        let t = parse_term("Q", &sig, TermMode::Open).unwrap();
        assert_eq!(t, Term::var("Q"));
    }

    #[test]
    fn parse_infix_left_assoc() {
        let sig = xcl();
        let t = parse_term("(S K) I", &sig, TermMode::Closed).unwrap();
        let u = parse_term("S K I", &sig, TermMode::Closed).unwrap();
        let expected = Term::op(
            "app",
            vec![
                Term::op("app", vec![Term::constant("S"), Term::constant("K")]),
                Term::constant("I"),
            ],
        );
        assert_eq!(t, expected);
        assert_eq!(u, expected);
    }

    #[test]
    fn parse_infix_requires_app2() {
        let sig = Signature::new([("f", 1), ("c", 0)]).unwrap();
        assert!(parse_term("c c", &sig, TermMode::Closed).is_err());
        assert!(parse_term("f(c)", &sig, TermMode::Closed).is_ok());
    }

    #[test]
    fn parse_hole_aliases() {
        let sig = xcl();
        let a = parse_term("app(·, K)", &sig, TermMode::Open).unwrap();
        let b = parse_term("app(_HOLE_, K)", &sig, TermMode::Open).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count_var(HOLE), 1);
    }

    #[test]
    fn substitute_s_rule_conclusion() {
        let sig = xcl();
        let t = parse_term("app(app(x1, x), app(x2, x))", &sig, TermMode::Open).unwrap();
        let t0 = parse_term("S K", &sig, TermMode::Closed).unwrap();
        let binding = BTreeMap::from([
            ("x1".to_string(), Term::constant("K")),
            ("x2".to_string(), Term::constant("I")),
            ("x".to_string(), t0.clone()),
        ]);
        let out = substitute(&t, &binding).unwrap();
        let expected = parse_term("(K (S K)) (I (S K))", &sig, TermMode::Closed).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn substitute_identity_and_duplication() {
        let sig = xcl();
        let binding = BTreeMap::from([("x".to_string(), Term::constant("I"))]);
        assert_eq!(
            substitute(&Term::var("x"), &binding).unwrap(),
            Term::constant("I")
        );

        let dup = parse_term("app(y, y)", &sig, TermMode::Open).unwrap();
        let binding = BTreeMap::from([(
            "y".to_string(),
            parse_term("app(S,K)", &sig, TermMode::Closed).unwrap(),
        )]);
        assert_eq!(
            substitute(&dup, &binding).unwrap(),
            parse_term("app(app(S,K),app(S,K))", &sig, TermMode::Closed).unwrap()
        );
    }

    #[test]
    fn substitute_unbound() {
        let err = substitute(&Term::var("z"), &BTreeMap::new()).unwrap_err();
        assert_eq!(err, TermError::UnboundMetavar("z".to_string()));
    }

    #[test]
    fn plug_examples() {
        let sig = xcl();
        let c = Context1::new(parse_term("app(·, K)", &sig, TermMode::Open).unwrap()).unwrap();
        assert_eq!(
            c.plug(&Term::constant("I")),
            parse_term("app(I, K)", &sig, TermMode::Closed).unwrap()
        );

        let no_hole = Context1::new(Term::constant("K")).unwrap();
        assert_eq!(no_hole.plug(&Term::constant("I")), Term::constant("K"));

        let c = Context1::new(parse_term("S''(K, ·)", &sig, TermMode::Open).unwrap()).unwrap();
        assert_eq!(
            c.plug(&Term::constant("I")),
            parse_term("S''(K, I)", &sig, TermMode::Closed).unwrap()
        );
    }

    #[test]
    fn context_rejects_two_holes() {
        let sig = xcl();
        let t = parse_term("app(·, ·)", &sig, TermMode::Open).unwrap();
        assert_eq!(Context1::new(t).unwrap_err(), TermError::TooManyHoles(2));
    }

    #[test]
    fn enumerate_size_one_and_two() {
        let sig = xcl();
        let ts = enumerate_closed(&sig, 1);
        assert_eq!(
            ts,
            vec![Term::constant("S"), Term::constant("K"), Term::constant("I")]
        );

        let ts = enumerate_closed(&sig, 2);
        let names: Vec<String> = ts.iter().map(render).collect();
        assert_eq!(
            names,
            vec!["S", "K", "I", "S'(S)", "S'(K)", "S'(I)", "K'(S)", "K'(K)", "K'(I)"]
        );
    }

    #[test]
    fn enumerate_no_constants() {
        let sig = Signature::new([("f", 1)]).unwrap();
        assert!(enumerate_closed(&sig, 5).is_empty());
    }

    #[test]
    fn term_sizes() {
        let sig = xcl();
        assert_eq!(term_size(&Term::constant("S")), 1);
        let t = parse_term("app(app(S,K),I)", &sig, TermMode::Closed).unwrap();
        assert_eq!(term_size(&t), 5);
    }

    #[test]
    fn render_round_trip() {
        let sig = xcl();
        let t = parse_term("K'(I)", &sig, TermMode::Closed).unwrap();
        assert_eq!(render(&t), "K'(I)");
        let t = parse_term("S K I", &sig, TermMode::Closed).unwrap();
        assert_eq!(render(&t), "S K I");
        let t = parse_term("S (K I)", &sig, TermMode::Closed).unwrap();
        assert_eq!(render(&t), "S (K I)");
        for t in enumerate_closed(&sig, 4) {
            let back = parse_term(&render(&t), &sig, TermMode::Closed).unwrap();
            assert_eq!(back, t);
        }
    }
}
