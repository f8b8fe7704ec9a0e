//! The higher-order rule format: sugared concrete syntax, desugaring into the
//! strict format, and validation.
//!
//! A strict rule for an `n`-ary operation fixes a set `W ⊆ {1..n}` of operands
//! that reduce; the remaining operands behave as functions. Premises are fully
//! determined by `(op, W, shape)`, so a strict rule only stores the conclusion
//! term over a canonical metavariable set:
//!
//! - `x{i}`      — the i-th operand,
//! - `y{j}`      — the reduct of operand `j ∈ W`,
//! - `y{i}^x{j}` — operand `i ∉ W` applied to operand `j`,
//! - `x`, `y{i}^x` — the input label and operand `i ∉ W` applied to it
//!   (labelled-conclusion rules only).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::term::{parse_term, substitute, Signature, Term, TermMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Det,
    Nd,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Det => write!(f, "det"),
            Mode::Nd => write!(f, "nd"),
        }
    }
}

/// A premise of a sugared rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    /// `xi -> yi`: operand `source` reduces to `out`.
    Reduce { source: String, out: String },
    /// `xi -[z]-> w`: operand `source` applied to `label` yields `out`.
    Labeled { source: String, label: String, out: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conclusion {
    /// `lhs --> t`
    Reduce(Term),
    /// `lhs =[x]=> t`
    Labeled { label: String, term: Term },
}

/// A rule as written: premises only for the operands the author mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SugaredRule {
    pub name: String,
    pub op: String,
    pub operands: Vec<String>,
    pub premises: Vec<Premise>,
    pub conclusion: Conclusion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SugaredSpec {
    pub sig: Signature,
    pub mode: Mode,
    pub rules: Vec<SugaredRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RuleShape {
    Red,
    Lab,
}

/// A strict rule: unique per `(op, W)` in deterministic mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoRule {
    pub op: String,
    pub arity: usize,
    pub w: BTreeSet<usize>,
    pub shape: RuleShape,
    pub conclusion: Term,
    /// Name of the sugared rule this expansion came from.
    pub origin: String,
}

pub type RuleKey = (String, BTreeSet<usize>);

/// A validated set of strict rules, exactly one per `(op, W)` pair in
/// deterministic mode, at least one in nondeterministic mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoSpec {
    pub sig: Signature,
    pub mode: Mode,
    rules: BTreeMap<RuleKey, Vec<HoRule>>,
}

impl HoSpec {
    /// The rules matching `(op, W)`. A singleton on validated deterministic
    /// specs; non-empty on validated nondeterministic specs.
    pub fn lookup(&self, op: &str, w: &BTreeSet<usize>) -> &[HoRule] {
        self.rules
            .get(&(op.to_string(), w.clone()))
            .map_or(&[], Vec::as_slice)
    }

    pub fn rule_count(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    pub fn iter_rules(&self) -> impl Iterator<Item = &HoRule> {
        self.rules.values().flatten()
    }
}

pub(crate) fn mv_operand(i: usize) -> String {
    format!("x{i}")
}

pub(crate) fn mv_label() -> String {
    "x".to_string()
}

pub(crate) fn mv_reduce_out(j: usize) -> String {
    format!("y{j}")
}

pub(crate) fn mv_app_out(i: usize, target: Option<usize>) -> String {
    match target {
        Some(j) => format!("y{i}^x{j}"),
        None => format!("y{i}^x"),
    }
}

/// The metavariables a conclusion may use, given `(arity, W, shape)`.
pub fn allowed_conclusion_vars(
    arity: usize,
    w: &BTreeSet<usize>,
    shape: RuleShape,
) -> BTreeSet<String> {
    let mut vars = BTreeSet::new();
    for i in 1..=arity {
        vars.insert(mv_operand(i));
    }
    for &j in w {
        vars.insert(mv_reduce_out(j));
    }
    for i in 1..=arity {
        if !w.contains(&i) {
            for j in 1..=arity {
                vars.insert(mv_app_out(i, Some(j)));
            }
            if shape == RuleShape::Lab {
                vars.insert(mv_app_out(i, None));
            }
        }
    }
    if shape == RuleShape::Lab {
        vars.insert(mv_label());
    }
    vars
}

fn fmt_w(w: &BTreeSet<usize>) -> String {
    let inner: Vec<String> = w.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

impl fmt::Display for HoRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op)?;
        if self.arity > 0 {
            let xs: Vec<String> = (1..=self.arity).map(mv_operand).collect();
            write!(f, "({})", xs.join(", "))?;
        }
        match self.shape {
            RuleShape::Red => write!(f, " --> {}", self.conclusion)?,
            RuleShape::Lab => write!(f, " =[x]=> {}", self.conclusion)?,
        }
        write!(f, "  [W={}, from {}]", fmt_w(&self.w), self.origin)
    }
}

/// A validation or desugaring finding; reporting is exhaustive, not fail-fast.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecDiagnostic {
    #[error("gap: no rule for ({op}, {})", fmt_w(.w))]
    Gap { op: String, w: BTreeSet<usize> },
    #[error("overlap: rules {origins:?} all cover ({op}, {})", fmt_w(.w))]
    Overlap {
        op: String,
        w: BTreeSet<usize>,
        origins: Vec<String>,
    },
    #[error("rule `{rule}`: conclusion uses variable `{var}` not justified by any premise or operand")]
    IllegalConclusionVar { rule: String, var: String },
    #[error("rule `{rule}`: {msg}")]
    BadRule { rule: String, msg: String },
}

/// Expands every sugared rule into strict rules: each operand not mentioned in
/// any premise is expanded both ways (reducing and higher-order), and the
/// remaining labelled premises required by the format are synthesized with
/// fresh unused outputs. Coverage is then checked per mode.
pub fn desugar(s: &SugaredSpec) -> Result<HoSpec, Vec<SpecDiagnostic>> {
    let mut diags = Vec::new();
    let mut all: Vec<HoRule> = Vec::new();

    for rule in &s.rules {
        match expand_rule(rule) {
            Ok(mut rs) => all.append(&mut rs),
            Err(mut ds) => diags.append(&mut ds),
        }
    }

    let mut rules: BTreeMap<RuleKey, Vec<HoRule>> = BTreeMap::new();
    for r in all {
        rules.entry((r.op.clone(), r.w.clone())).or_default().push(r);
    }
    coverage_diagnostics(&s.sig, s.mode, &rules, &mut diags);

    if diags.is_empty() {
        Ok(HoSpec { sig: s.sig.clone(), mode: s.mode, rules })
    } else {
        Err(diags)
    }
}

fn expand_rule(rule: &SugaredRule) -> Result<Vec<HoRule>, Vec<SpecDiagnostic>> {
    let n = rule.operands.len();
    let operand_index: BTreeMap<&str, usize> = rule
        .operands
        .iter()
        .enumerate()
        .map(|(k, name)| (name.as_str(), k + 1))
        .collect();

    let label_var = match &rule.conclusion {
        Conclusion::Labeled { label, .. } => Some(label.as_str()),
        Conclusion::Reduce(_) => None,
    };

    // Premise classification; structural errors here are parse-level
    // invariants re-checked for hand-built rules.
    let mut reduce_out: BTreeMap<usize, &str> = BTreeMap::new();
    let mut labeled_out: BTreeMap<(usize, Option<usize>), &str> = BTreeMap::new();
    let mut bad = Vec::new();
    for p in &rule.premises {
        match p {
            Premise::Reduce { source, out } => match operand_index.get(source.as_str()) {
                Some(&i) => {
                    if reduce_out.insert(i, out).is_some()
                        || labeled_out.keys().any(|(j, _)| *j == i)
                    {
                        bad.push(SpecDiagnostic::BadRule {
                            rule: rule.name.clone(),
                            msg: format!("operand `{source}` appears in more than one premise kind"),
                        });
                    }
                }
                None => bad.push(SpecDiagnostic::BadRule {
                    rule: rule.name.clone(),
                    msg: format!("premise source `{source}` is not an operand"),
                }),
            },
            Premise::Labeled { source, label, out } => {
                let i = match operand_index.get(source.as_str()) {
                    Some(&i) => i,
                    None => {
                        bad.push(SpecDiagnostic::BadRule {
                            rule: rule.name.clone(),
                            msg: format!("premise source `{source}` is not an operand"),
                        });
                        continue;
                    }
                };
                let target = if Some(label.as_str()) == label_var {
                    None
                } else {
                    match operand_index.get(label.as_str()) {
                        Some(&j) => Some(j),
                        None => {
                            bad.push(SpecDiagnostic::BadRule {
                                rule: rule.name.clone(),
                                msg: format!(
                                    "premise label `{label}` is neither an operand nor the conclusion label"
                                ),
                            });
                            continue;
                        }
                    }
                };
                if reduce_out.contains_key(&i) {
                    bad.push(SpecDiagnostic::BadRule {
                        rule: rule.name.clone(),
                        msg: format!("operand `{source}` appears in more than one premise kind"),
                    });
                }
                if labeled_out.insert((i, target), out).is_some() {
                    bad.push(SpecDiagnostic::BadRule {
                        rule: rule.name.clone(),
                        msg: format!("duplicate labelled premise on `{source}` with label `{label}`"),
                    });
                }
            }
        }
    }
    if !bad.is_empty() {
        return Err(bad);
    }

    let mentioned: BTreeSet<usize> = reduce_out
        .keys()
        .copied()
        .chain(labeled_out.keys().map(|(i, _)| *i))
        .collect();
    let unmentioned: Vec<usize> = (1..=n).filter(|i| !mentioned.contains(i)).collect();
    let labeled_sources: BTreeSet<usize> = labeled_out.keys().map(|(i, _)| *i).collect();

    let (shape, concl_term) = match &rule.conclusion {
        Conclusion::Reduce(t) => (RuleShape::Red, t),
        Conclusion::Labeled { term, .. } => (RuleShape::Lab, term),
    };

    let mut out = Vec::new();
    for mask in 0u32..(1 << unmentioned.len()) {
        let mut w: BTreeSet<usize> = reduce_out.keys().copied().collect();
        for (bit, &i) in unmentioned.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                w.insert(i);
            }
        }
        debug_assert!(labeled_sources.iter().all(|i| !w.contains(i)));

        let mut binding: BTreeMap<String, Term> = BTreeMap::new();
        for (name, &i) in &operand_index {
            binding.insert((*name).to_string(), Term::var(mv_operand(i)));
        }
        if let Some(lv) = label_var {
            binding.insert(lv.to_string(), Term::var(mv_label()));
        }
        for (&j, &outname) in &reduce_out {
            binding.insert(outname.to_string(), Term::var(mv_reduce_out(j)));
        }
        for (&(i, target), &outname) in &labeled_out {
            binding.insert(outname.to_string(), Term::var(mv_app_out(i, target)));
        }

        match substitute(concl_term, &binding) {
            Ok(conclusion) => out.push(HoRule {
                op: rule.op.clone(),
                arity: n,
                w,
                shape,
                conclusion,
                origin: rule.name.clone(),
            }),
            Err(crate::term::TermError::UnboundMetavar(var)) => {
                return Err(vec![SpecDiagnostic::IllegalConclusionVar {
                    rule: rule.name.clone(),
                    var,
                }]);
            }
            Err(e) => {
                return Err(vec![SpecDiagnostic::BadRule {
                    rule: rule.name.clone(),
                    msg: e.to_string(),
                }]);
            }
        }
    }
    Ok(out)
}

fn coverage_diagnostics(
    sig: &Signature,
    mode: Mode,
    rules: &BTreeMap<RuleKey, Vec<HoRule>>,
    diags: &mut Vec<SpecDiagnostic>,
) {
    for (op, arity) in sig.symbols() {
        for mask in 0u32..(1 << arity) {
            let w: BTreeSet<usize> = (1..=arity).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let have = rules
                .get(&(op.to_string(), w.clone()))
                .map_or(0, Vec::len);
            match (mode, have) {
                (_, 0) => diags.push(SpecDiagnostic::Gap { op: op.to_string(), w }),
                (Mode::Det, k) if k > 1 => {
                    let origins = rules[&(op.to_string(), w.clone())]
                        .iter()
                        .map(|r| r.origin.clone())
                        .collect();
                    diags.push(SpecDiagnostic::Overlap { op: op.to_string(), w, origins });
                }
                _ => {}
            }
        }
    }
}

/// Re-checks the [`HoSpec`] invariants: coverage per mode, key consistency,
/// and conclusion variables within the shape-allowed set.
pub fn validate(spec: &HoSpec) -> Result<(), Vec<SpecDiagnostic>> {
    let mut diags = Vec::new();
    coverage_diagnostics(&spec.sig, spec.mode, &spec.rules, &mut diags);
    for ((op, w), group) in &spec.rules {
        for rule in group {
            if &rule.op != op || &rule.w != w {
                diags.push(SpecDiagnostic::BadRule {
                    rule: rule.origin.clone(),
                    msg: "rule stored under inconsistent (op, W) key".to_string(),
                });
            }
            if spec.sig.arity(&rule.op) != Some(rule.arity) {
                diags.push(SpecDiagnostic::BadRule {
                    rule: rule.origin.clone(),
                    msg: format!("operation `{}` arity disagrees with signature", rule.op),
                });
                continue;
            }
            let allowed = allowed_conclusion_vars(rule.arity, &rule.w, rule.shape);
            for var in rule.conclusion.metavars() {
                if !allowed.contains(&var) {
                    diags.push(SpecDiagnostic::IllegalConclusionVar {
                        rule: rule.origin.clone(),
                        var,
                    });
                }
            }
            if !rule.conclusion.well_formed(&spec.sig) {
                diags.push(SpecDiagnostic::BadRule {
                    rule: rule.origin.clone(),
                    msg: "conclusion is not well-formed over the signature".to_string(),
                });
            }
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// Renders a strict rule back to the sugared form with its full premise list.
/// Used to state desugaring idempotence.
pub fn to_sugared(rule: &HoRule) -> SugaredRule {
    let n = rule.arity;
    let mut premises = Vec::new();
    for &j in &rule.w {
        premises.push(Premise::Reduce { source: mv_operand(j), out: mv_reduce_out(j) });
    }
    for i in 1..=n {
        if rule.w.contains(&i) {
            continue;
        }
        for j in 1..=n {
            premises.push(Premise::Labeled {
                source: mv_operand(i),
                label: mv_operand(j),
                out: mv_app_out(i, Some(j)),
            });
        }
        if rule.shape == RuleShape::Lab {
            premises.push(Premise::Labeled {
                source: mv_operand(i),
                label: mv_label(),
                out: mv_app_out(i, None),
            });
        }
    }
    SugaredRule {
        name: rule.origin.clone(),
        op: rule.op.clone(),
        operands: (1..=n).map(mv_operand).collect(),
        premises,
        conclusion: match rule.shape {
            RuleShape::Red => Conclusion::Reduce(rule.conclusion.clone()),
            RuleShape::Lab => Conclusion::Labeled { label: mv_label(), term: rule.conclusion.clone() },
        },
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("spec parse error at {pos}: {msg}")]
pub struct ParseSpecError {
    pub pos: usize,
    pub msg: String,
}

fn serr<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseSpecError> {
    Err(ParseSpecError { pos, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum STok {
    Ident(String),
    Nat(usize),
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Slash,
    LParen,
    RParen,
    Turnstile,   // |-
    ArrowRed,    // ->
    ArrowConcl,  // -->
    LBrackPre,   // -[
    RBrackPre,   // ]->
    LBrackConcl, // =[
    RBrackConcl, // ]=>
}

impl fmt::Display for STok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STok::Ident(s) => write!(f, "`{s}`"),
            STok::Nat(n) => write!(f, "`{n}`"),
            STok::LBrace => write!(f, "`{{`"),
            STok::RBrace => write!(f, "`}}`"),
            STok::Semi => write!(f, "`;`"),
            STok::Colon => write!(f, "`:`"),
            STok::Comma => write!(f, "`,`"),
            STok::Slash => write!(f, "`/`"),
            STok::LParen => write!(f, "`(`"),
            STok::RParen => write!(f, "`)`"),
            STok::Turnstile => write!(f, "`|-`"),
            STok::ArrowRed => write!(f, "`->`"),
            STok::ArrowConcl => write!(f, "`-->`"),
            STok::LBrackPre => write!(f, "`-[`"),
            STok::RBrackPre => write!(f, "`]->`"),
            STok::LBrackConcl => write!(f, "`=[`"),
            STok::RBrackConcl => write!(f, "`]=>`"),
        }
    }
}

struct SpecLexer<'a> {
    src: &'a str,
    pos: usize, // byte offset
}

impl<'a> SpecLexer<'a> {
    fn new(src: &'a str) -> Self {
        SpecLexer { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    fn next(&mut self) -> Result<Option<(STok, usize)>, ParseSpecError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let mut chars = rest.chars();
        let c = match chars.next() {
            Some(c) => c,
            None => return Ok(None),
        };
        let tok = |t: STok, len: usize, lexer: &mut Self| {
            lexer.pos = start + len;
            Ok(Some((t, start)))
        };
        match c {
            '{' => tok(STok::LBrace, 1, self),
            '}' => tok(STok::RBrace, 1, self),
            ';' => tok(STok::Semi, 1, self),
            ':' => tok(STok::Colon, 1, self),
            ',' => tok(STok::Comma, 1, self),
            '/' => tok(STok::Slash, 1, self),
            '(' => tok(STok::LParen, 1, self),
            ')' => tok(STok::RParen, 1, self),
            '|' if rest.starts_with("|-") => tok(STok::Turnstile, 2, self),
            '-' if rest.starts_with("-->") => tok(STok::ArrowConcl, 3, self),
            '-' if rest.starts_with("-[") => tok(STok::LBrackPre, 2, self),
            '-' if rest.starts_with("->") => tok(STok::ArrowRed, 2, self),
            ']' if rest.starts_with("]->") => tok(STok::RBrackPre, 3, self),
            ']' if rest.starts_with("]=>") => tok(STok::RBrackConcl, 3, self),
            '=' if rest.starts_with("=[") => tok(STok::LBrackConcl, 2, self),
            _ if c.is_ascii_digit() => {
                let len = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
                let n: usize = rest[..len]
                    .parse()
                    .map_err(|_| ParseSpecError { pos: start, msg: "number out of range".into() })?;
                tok(STok::Nat(n), len, self)
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let len = rest
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''))
                    .unwrap_or(rest.len());
                tok(STok::Ident(rest[..len].to_string()), len, self)
            }
            _ => serr(start, format!("unexpected character `{c}`")),
        }
    }

    fn peek(&mut self) -> Result<Option<(STok, usize)>, ParseSpecError> {
        let save = self.pos;
        let t = self.next();
        self.pos = save;
        t
    }

    fn expect(&mut self, want: &STok, what: &str) -> Result<usize, ParseSpecError> {
        match self.next()? {
            Some((t, p)) if &t == want => Ok(p),
            Some((t, p)) => serr(p, format!("expected {what}, found {t}")),
            None => serr(self.src.len(), format!("expected {what}, found end of input")),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize), ParseSpecError> {
        match self.next()? {
            Some((STok::Ident(s), p)) => Ok((s, p)),
            Some((t, p)) => serr(p, format!("expected {what}, found {t}")),
            None => serr(self.src.len(), format!("expected {what}, found end of input")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<usize, ParseSpecError> {
        let (s, p) = self.expect_ident(&format!("`{kw}`"))?;
        if s == kw {
            Ok(p)
        } else {
            serr(p, format!("expected `{kw}`, found `{s}`"))
        }
    }

    /// Raw source up to (not including) the next `;`, which is consumed.
    fn take_until_semi(&mut self) -> Result<(&'a str, usize), ParseSpecError> {
        self.skip_ws();
        let start = self.pos;
        match self.src[start..].find(';') {
            Some(off) => {
                let slice = &self.src[start..start + off];
                self.pos = start + off + 1;
                Ok((slice, start))
            }
            None => serr(start, "expected `;` terminating the rule"),
        }
    }
}

/// Parses a specification in the `.hos` concrete syntax.
pub fn parse_spec(src: &str) -> Result<SugaredSpec, ParseSpecError> {
    let mut lx = SpecLexer::new(src);

    lx.expect_keyword("sig")?;
    lx.expect(&STok::LBrace, "`{`")?;
    let mut decls: Vec<(String, usize)> = Vec::new();
    let sig_pos;
    loop {
        match lx.next()? {
            Some((STok::RBrace, p)) => {
                if decls.is_empty() {
                    return serr(p, "signature must declare at least one symbol");
                }
                sig_pos = p;
                break;
            }
            Some((STok::Ident(name), p)) => {
                lx.expect(&STok::Slash, "`/`")?;
                let arity = match lx.next()? {
                    Some((STok::Nat(n), _)) => n,
                    Some((t, q)) => return serr(q, format!("expected arity, found {t}")),
                    None => return serr(self_end(src), "expected arity"),
                };
                lx.expect(&STok::Semi, "`;`")?;
                if decls.iter().any(|(n, _)| n == &name) {
                    return serr(p, format!("duplicate operation symbol `{name}`"));
                }
                decls.push((name, arity));
            }
            Some((t, p)) => return serr(p, format!("expected symbol declaration or `}}`, found {t}")),
            None => return serr(self_end(src), "unterminated signature block"),
        }
    }
    let sig = Signature::new(decls)
        .map_err(|e| ParseSpecError { pos: sig_pos, msg: e.to_string() })?;

    lx.expect_keyword("mode")?;
    let (mode_word, mode_pos) = lx.expect_ident("`det` or `nd`")?;
    let mode = match mode_word.as_str() {
        "det" => Mode::Det,
        "nd" => Mode::Nd,
        other => return serr(mode_pos, format!("expected `det` or `nd`, found `{other}`")),
    };
    lx.expect(&STok::Semi, "`;`")?;

    lx.expect_keyword("rules")?;
    lx.expect(&STok::LBrace, "`{`")?;
    let mut rules: Vec<SugaredRule> = Vec::new();
    loop {
        match lx.peek()? {
            Some((STok::RBrace, _)) => {
                lx.next()?;
                break;
            }
            Some((STok::Ident(kw), p)) if kw == "rule" => {
                lx.next()?;
                let rule = parse_rule(&mut lx, &sig, &rules)?;
                if rules.iter().any(|r| r.name == rule.name) {
                    return serr(p, format!("duplicate rule name `{}`", rule.name));
                }
                rules.push(rule);
            }
            Some((t, p)) => return serr(p, format!("expected `rule` or `}}`, found {t}")),
            None => return serr(self_end(src), "unterminated rules block"),
        }
    }

    if let Some((t, p)) = lx.next()? {
        return serr(p, format!("trailing input after rules block: {t}"));
    }

    Ok(SugaredSpec { sig, mode, rules })
}

fn self_end(src: &str) -> usize {
    src.len()
}

fn parse_rule(
    lx: &mut SpecLexer<'_>,
    sig: &Signature,
    _so_far: &[SugaredRule],
) -> Result<SugaredRule, ParseSpecError> {
    let (name, _) = lx.expect_ident("rule name")?;
    lx.expect(&STok::Colon, "`:`")?;

    // Premises up to the turnstile.
    let mut raw_premises: Vec<(Premise, usize)> = Vec::new();
    loop {
        match lx.peek()? {
            Some((STok::Turnstile, _)) => {
                lx.next()?;
                break;
            }
            _ => {
                let (source, p) = lx.expect_ident("premise source")?;
                match lx.next()? {
                    Some((STok::ArrowRed, _)) => {
                        let (out, _) = lx.expect_ident("premise output")?;
                        raw_premises.push((Premise::Reduce { source, out }, p));
                    }
                    Some((STok::LBrackPre, _)) => {
                        let (label, _) = lx.expect_ident("premise label")?;
                        lx.expect(&STok::RBrackPre, "`]->`")?;
                        let (out, _) = lx.expect_ident("premise output")?;
                        raw_premises.push((Premise::Labeled { source, label, out }, p));
                    }
                    Some((t, q)) => return serr(q, format!("expected `->` or `-[`, found {t}")),
                    None => return serr(p, "unterminated premise"),
                }
                match lx.peek()? {
                    Some((STok::Comma, _)) => {
                        lx.next()?;
                    }
                    Some((STok::Turnstile, _)) => {}
                    Some((t, q)) => return serr(q, format!("expected `,` or `|-`, found {t}")),
                    None => return serr(self_end(lx.src), "unterminated premises"),
                }
            }
        }
    }

    // Left-hand side.
    let (op, op_pos) = lx.expect_ident("operation symbol")?;
    let arity = match sig.arity(&op) {
        Some(a) => a,
        None => return serr(op_pos, format!("unknown symbol `{op}`")),
    };
    let mut operands = Vec::new();
    if let Some((STok::LParen, _)) = lx.peek()? {
        lx.next()?;
        loop {
            let (v, _) = lx.expect_ident("operand variable")?;
            operands.push(v);
            match lx.next()? {
                Some((STok::Comma, _)) => {}
                Some((STok::RParen, _)) => break,
                Some((t, q)) => return serr(q, format!("expected `,` or `)`, found {t}")),
                None => return serr(self_end(lx.src), "unterminated operand list"),
            }
        }
    }
    if operands.len() != arity {
        return serr(
            op_pos,
            format!("`{op}` has arity {arity} but the rule lists {} operands", operands.len()),
        );
    }
    {
        let mut seen = BTreeSet::new();
        for v in &operands {
            if !seen.insert(v.clone()) {
                return serr(op_pos, format!("duplicate operand variable `{v}`"));
            }
        }
    }

    // Conclusion arrow, label, and term.
    let (label, term_src, term_pos) = match lx.next()? {
        Some((STok::ArrowConcl, _)) => {
            let (s, p) = lx.take_until_semi()?;
            (None, s, p)
        }
        Some((STok::LBrackConcl, _)) => {
            let (label, lp) = lx.expect_ident("conclusion label")?;
            if operands.contains(&label) {
                return serr(lp, format!("conclusion label `{label}` collides with an operand"));
            }
            lx.expect(&STok::RBrackConcl, "`]=>`")?;
            let (s, p) = lx.take_until_semi()?;
            (Some(label), s, p)
        }
        Some((t, q)) => return serr(q, format!("expected `-->` or `=[`, found {t}")),
        None => return serr(self_end(lx.src), "missing conclusion"),
    };
    let term = parse_term(term_src, sig, TermMode::Open).map_err(|e| ParseSpecError {
        pos: term_pos,
        msg: format!("in conclusion of rule `{name}`: {e}"),
    })?;

    // Premise labels must be operands or the conclusion label.
    let mut outs: BTreeSet<&str> = BTreeSet::new();
    for (p, pos) in &raw_premises {
        let (source, lbl, out) = match p {
            Premise::Reduce { source, out } => (source, None, out),
            Premise::Labeled { source, label, out } => (source, Some(label), out),
        };
        if !operands.contains(source) {
            return serr(*pos, format!("premise source `{source}` is not an operand"));
        }
        if let Some(l) = lbl {
            let is_label_var = label.as_deref() == Some(l.as_str());
            if !is_label_var && !operands.contains(l) {
                return serr(
                    *pos,
                    format!("premise label `{l}` is neither an operand nor the conclusion label"),
                );
            }
        }
        if operands.contains(out) || label.as_deref() == Some(out.as_str()) || !outs.insert(out) {
            return serr(*pos, format!("premise output `{out}` reuses another variable name"));
        }
    }

    let conclusion = match label {
        None => Conclusion::Reduce(term),
        Some(label) => Conclusion::Labeled { label, term },
    };
    Ok(SugaredRule {
        name,
        op,
        operands,
        premises: raw_premises.into_iter().map(|(p, _)| p).collect(),
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn xcl_parses_to_eight_sugared_rules() {
        let s = parse_spec(builtins::XCL_SRC).unwrap();
        assert_eq!(s.rules.len(), 8);
        assert_eq!(s.mode, Mode::Det);
        assert_eq!(s.sig.len(), 7);
    }

    #[test]
    fn empty_rules_block_parses() {
        let src = "sig { c/0; } mode det; rules { }";
        let s = parse_spec(src).unwrap();
        assert!(s.rules.is_empty());
        // Validation then reports the gap.
        let err = desugar(&s).unwrap_err();
        assert_eq!(
            err,
            vec![SpecDiagnostic::Gap { op: "c".into(), w: BTreeSet::new() }]
        );
    }

    #[test]
    fn bad_premise_label_rejected() {
        let src = "sig { f/1; } mode det; rules { rule r: p -[q]-> w |- f(p) --> w; }";
        let err = parse_spec(src).unwrap_err();
        assert!(err.msg.contains("premise label"), "{err}");
    }

    #[test]
    fn xcl_desugars_to_fifteen_rules() {
        let spec = builtins::xcl();
        assert_eq!(spec.rule_count(), 15);
        // 1 each for S, K, I; 2 each for S', K'; 4 each for S'', app.
        let per_op = |op: &str| {
            spec.iter_rules().filter(|r| r.op == op).count()
        };
        assert_eq!(per_op("S"), 1);
        assert_eq!(per_op("K"), 1);
        assert_eq!(per_op("I"), 1);
        assert_eq!(per_op("S'"), 2);
        assert_eq!(per_op("K'"), 2);
        assert_eq!(per_op("S''"), 4);
        assert_eq!(per_op("app"), 4);
        assert!(validate(&spec).is_ok());
    }

    #[test]
    fn app2_expands_to_w_empty_and_w_two() {
        let s = parse_spec(builtins::XCL_SRC).unwrap();
        let spec = desugar(&s).unwrap();
        let empty = spec.lookup("app", &BTreeSet::new());
        assert_eq!(empty.len(), 1);
        assert_eq!(empty[0].origin, "app2");
        assert_eq!(empty[0].shape, RuleShape::Red);
        assert_eq!(empty[0].conclusion, Term::var("y1^x2"));

        let w2 = spec.lookup("app", &BTreeSet::from([2]));
        assert_eq!(w2.len(), 1);
        assert_eq!(w2[0].origin, "app2");
        assert_eq!(w2[0].conclusion, Term::var("y1^x2"));
    }

    #[test]
    fn app1_covers_w_one_and_w_both() {
        let spec = builtins::xcl();
        for w in [BTreeSet::from([1]), BTreeSet::from([1, 2])] {
            let rs = spec.lookup("app", &w);
            assert_eq!(rs.len(), 1);
            assert_eq!(rs[0].origin, "app1");
            assert_eq!(
                rs[0].conclusion,
                Term::op("app", vec![Term::var("y1"), Term::var("x2")])
            );
        }
    }

    #[test]
    fn s_axiom_is_lab_shaped() {
        let spec = builtins::xcl();
        let rs = spec.lookup("S", &BTreeSet::new());
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].shape, RuleShape::Lab);
        assert_eq!(rs[0].conclusion, Term::op("S'", vec![Term::var("x")]));
    }

    #[test]
    fn deleting_app1_reports_exact_gaps() {
        let mut s = parse_spec(builtins::XCL_SRC).unwrap();
        s.rules.retain(|r| r.name != "app1");
        let err = desugar(&s).unwrap_err();
        assert_eq!(
            err,
            vec![
                SpecDiagnostic::Gap { op: "app".into(), w: BTreeSet::from([1]) },
                SpecDiagnostic::Gap { op: "app".into(), w: BTreeSet::from([1, 2]) },
            ]
        );
    }

    #[test]
    fn duplicating_a_rule_reports_overlaps() {
        let mut s = parse_spec(builtins::XCL_SRC).unwrap();
        let mut dup = s.rules.iter().find(|r| r.name == "app2").unwrap().clone();
        dup.name = "app2_copy".into();
        s.rules.push(dup);
        let err = desugar(&s).unwrap_err();
        let overlaps: Vec<_> = err
            .iter()
            .filter(|d| matches!(d, SpecDiagnostic::Overlap { .. }))
            .collect();
        assert_eq!(overlaps.len(), 2); // (app, {}) and (app, {2})
    }

    #[test]
    fn nd_spec_validates_with_plus_axioms() {
        let spec = builtins::xcl_nd();
        assert_eq!(spec.mode, Mode::Nd);
        assert!(validate(&spec).is_ok());
        let rs = spec.lookup("plus", &BTreeSet::new());
        assert_eq!(rs.len(), 2);
        let concls: BTreeSet<&Term> = rs.iter().map(|r| &r.conclusion).collect();
        assert!(concls.contains(&Term::var("x1")));
        assert!(concls.contains(&Term::var("x2")));
    }

    #[test]
    fn illegal_conclusion_variable_reported() {
        let src = "sig { f/1; c/0; } mode det; rules { rule r: |- f(p) --> q; }";
        let s = parse_spec(src).unwrap();
        let err = desugar(&s).unwrap_err();
        assert!(err.iter().any(|d| matches!(
            d,
            SpecDiagnostic::IllegalConclusionVar { var, .. } if var == "q"
        )));
    }

    #[test]
    fn desugar_is_idempotent_on_strict_specs() {
        let spec = builtins::xcl();
        let strict = SugaredSpec {
            sig: spec.sig.clone(),
            mode: spec.mode,
            rules: spec.iter_rules().map(to_sugared).collect(),
        };
        let again = desugar(&strict).unwrap();
        assert_eq!(again.rule_count(), spec.rule_count());
        for rule in spec.iter_rules() {
            let found = again.lookup(&rule.op, &rule.w);
            assert_eq!(found.len(), 1);
            assert_eq!(found[0].shape, rule.shape);
            assert_eq!(found[0].conclusion, rule.conclusion);
        }
    }

    #[test]
    fn det_lookup_is_total_and_singleton() {
        let spec = builtins::xcl();
        for (op, arity) in spec.sig.symbols() {
            let mut count = 0;
            for mask in 0u32..(1 << arity) {
                let w: BTreeSet<usize> =
                    (1..=arity).filter(|i| mask & (1 << (i - 1)) != 0).collect();
                assert_eq!(spec.lookup(op, &w).len(), 1);
                count += 1;
            }
            assert_eq!(count, 1 << arity);
        }
    }
}
