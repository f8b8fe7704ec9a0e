//! The operational model of a validated specification: one-step behaviour of
//! closed terms by structural recursion on subterm behaviours, deterministic
//! and nondeterministic, plus multi-step tracing.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::spec::{mv_label, HoRule, HoSpec, RuleShape};
use crate::term::{render, Term, HOLE};

/// One-step observation of a closed term.
///
/// `Fun` carries the result template intensionally: an open term whose only
/// metavariable is the hole `·`. Rules are uniform in the input label, so the
/// template determines the function completely. The hole may occur any number
/// of times (`S''` duplicates it).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Behavior {
    Reduce(Term),
    Fun(Term),
    Stuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BehaviorKind {
    Reduce,
    Fun,
    Stuck,
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BehaviorKind::Reduce => write!(f, "reduce"),
            BehaviorKind::Fun => write!(f, "fun"),
            BehaviorKind::Stuck => write!(f, "stuck"),
        }
    }
}

impl Behavior {
    pub fn kind(&self) -> BehaviorKind {
        match self {
            Behavior::Reduce(_) => BehaviorKind::Reduce,
            Behavior::Fun(_) => BehaviorKind::Fun,
            Behavior::Stuck => BehaviorKind::Stuck,
        }
    }

    pub fn is_reduce(&self) -> bool {
        matches!(self, Behavior::Reduce(_))
    }
}

/// Finite set of behaviour alternatives (nondeterministic mode).
pub type BehaviorSet = BTreeSet<Behavior>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("term is not closed (metavariable `{0}`)")]
    OpenTerm(String),
    #[error("no rule for ({op}, W={w:?}); run validation first")]
    MissingRule { op: String, w: BTreeSet<usize> },
    #[error("multiple rules for ({op}, W={w:?}); use the nondeterministic engine")]
    AmbiguousRule { op: String, w: BTreeSet<usize> },
    #[error("apply_fun applied to a {0} behaviour")]
    NotAFunction(String),
    #[error("internal rule instantiation failure: {0}")]
    Instantiation(String),
}

/// Applies a function behaviour to an argument by filling every hole of the
/// template.
pub fn apply_fun(b: &Behavior, arg: &Term) -> Result<Term, EngineError> {
    match b {
        Behavior::Fun(template) => Ok(fill_hole(template, arg)),
        other => Err(EngineError::NotAFunction(other.kind().to_string())),
    }
}

fn fill_hole(template: &Term, arg: &Term) -> Term {
    match template {
        Term::Var(v) if &**v == HOLE => arg.clone(),
        Term::Var(v) => Term::Var(v.clone()),
        Term::Op(f, args) => {
            if args.iter().all(|a| a.count_var(HOLE) == 0) {
                return template.clone();
            }
            let args: Vec<Term> = args.iter().map(|a| fill_hole(a, arg)).collect();
            Term::Op(f.clone(), args.into())
        }
    }
}

/// A single evaluation session over one spec; memoizes subterm behaviours.
pub struct Session<'s> {
    spec: &'s HoSpec,
    memo: HashMap<Term, Behavior>,
    memo_nd: HashMap<Term, BehaviorSet>,
}

impl<'s> Session<'s> {
    pub fn new(spec: &'s HoSpec) -> Self {
        Session { spec, memo: HashMap::new(), memo_nd: HashMap::new() }
    }

    pub fn spec(&self) -> &HoSpec {
        self.spec
    }

    /// One-step behaviour of a closed term under a deterministic spec.
    ///
    /// For `t = f(t1..tn)`: the operand behaviours decide which rule fires
    /// (`W` = the reducing operands), and the rule's conclusion is
    /// instantiated with the operands, their reducts, and the applications of
    /// their function behaviours.
    pub fn step(&mut self, t: &Term) -> Result<Behavior, EngineError> {
        if let Some(b) = self.memo.get(t) {
            return Ok(b.clone());
        }
        let (op, args) = match t {
            Term::Var(v) => return Err(EngineError::OpenTerm(v.to_string())),
            Term::Op(op, args) => (op, args),
        };
        let mut behaviors = Vec::with_capacity(args.len());
        for a in args.iter() {
            behaviors.push(self.step(a)?);
        }
        let w: BTreeSet<usize> = behaviors
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_reduce())
            .map(|(i, _)| i + 1)
            .collect();
        let rule = match self.spec.lookup(op, &w) {
            [] => return Err(EngineError::MissingRule { op: op.to_string(), w }),
            [r] => r.clone(),
            _ => return Err(EngineError::AmbiguousRule { op: op.to_string(), w }),
        };
        let b = instantiate(&rule, args, &behaviors)?;
        self.memo.insert(t.clone(), b.clone());
        Ok(b)
    }

    /// Behaviour set of a closed term under a nondeterministic spec: every
    /// pointwise choice of operand behaviours is evaluated against every rule
    /// matching the induced `(f, W)`, and the results are collected as a set.
    pub fn step_nd(&mut self, t: &Term) -> Result<BehaviorSet, EngineError> {
        if let Some(s) = self.memo_nd.get(t) {
            return Ok(s.clone());
        }
        let (op, args) = match t {
            Term::Var(v) => return Err(EngineError::OpenTerm(v.to_string())),
            Term::Op(op, args) => (op, args),
        };
        let mut alternatives: Vec<Vec<Behavior>> = Vec::with_capacity(args.len());
        for a in args.iter() {
            alternatives.push(self.step_nd(a)?.into_iter().collect());
        }
        let mut out = BehaviorSet::new();
        let mut selection: Vec<Behavior> = Vec::with_capacity(args.len());
        self.collect_nd(op, args, &alternatives, &mut selection, &mut out)?;
        self.memo_nd.insert(t.clone(), out.clone());
        Ok(out)
    }

    fn collect_nd(
        &self,
        op: &str,
        args: &[Term],
        alternatives: &[Vec<Behavior>],
        selection: &mut Vec<Behavior>,
        out: &mut BehaviorSet,
    ) -> Result<(), EngineError> {
        if selection.len() == alternatives.len() {
            let w: BTreeSet<usize> = selection
                .iter()
                .enumerate()
                .filter(|(_, b)| b.is_reduce())
                .map(|(i, _)| i + 1)
                .collect();
            let rules = self.spec.lookup(op, &w);
            if rules.is_empty() {
                return Err(EngineError::MissingRule { op: op.to_string(), w });
            }
            for rule in rules {
                out.insert(instantiate(rule, args, selection)?);
            }
            return Ok(());
        }
        for b in &alternatives[selection.len()] {
            selection.push(b.clone());
            self.collect_nd(op, args, alternatives, selection, out)?;
            selection.pop();
        }
        Ok(())
    }

    /// Follows `Reduce` edges until a function or stuck behaviour is reached,
    /// or `max_steps` events have been emitted.
    pub fn trace(&mut self, t: &Term, max_steps: usize) -> Result<Trace, EngineError> {
        let mut events = Vec::new();
        let mut cur = t.clone();
        loop {
            if events.len() == max_steps {
                return Ok(Trace { events, terminal: Terminal::Cutoff });
            }
            match self.step(&cur)? {
                Behavior::Reduce(next) => {
                    events.push(TraceEvent {
                        state: cur,
                        kind: BehaviorKind::Reduce,
                        successor: Some(next.clone()),
                    });
                    cur = next;
                }
                Behavior::Fun(template) => {
                    events.push(TraceEvent {
                        state: cur,
                        kind: BehaviorKind::Fun,
                        successor: Some(template),
                    });
                    return Ok(Trace { events, terminal: Terminal::Fun });
                }
                Behavior::Stuck => {
                    events.push(TraceEvent { state: cur, kind: BehaviorKind::Stuck, successor: None });
                    return Ok(Trace { events, terminal: Terminal::Stuck });
                }
            }
        }
    }
}

fn instantiate(rule: &HoRule, operands: &[Term], behaviors: &[Behavior]) -> Result<Behavior, EngineError> {
    debug_assert_eq!(operands.len(), rule.arity);
    let conclusion = instantiate_term(&rule.conclusion, rule, operands, behaviors)?;
    Ok(match rule.shape {
        RuleShape::Red => Behavior::Reduce(conclusion),
        RuleShape::Lab => Behavior::Fun(conclusion),
    })
}

/// Walks the conclusion template, resolving each canonical metavariable
/// on demand: `x{i}` to the operand, `y{j}` to its reduct, `y{i}^x{j}` to
/// the function behaviour applied to operand `j`, and `x`/`y{i}^x` to the
/// hole and the raw template (labelled rules).
fn instantiate_term(
    t: &Term,
    rule: &HoRule,
    operands: &[Term],
    behaviors: &[Behavior],
) -> Result<Term, EngineError> {
    match t {
        Term::Op(f, args) => {
            let args = args
                .iter()
                .map(|a| instantiate_term(a, rule, operands, behaviors))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::Op(f.clone(), args.into()))
        }
        Term::Var(v) => resolve_rule_var(v, rule, operands, behaviors),
    }
}

fn resolve_rule_var(
    v: &str,
    rule: &HoRule,
    operands: &[Term],
    behaviors: &[Behavior],
) -> Result<Term, EngineError> {
    let bad = || EngineError::Instantiation(format!("metavariable `{v}` outside the rule format"));
    if v == mv_label() {
        if rule.shape != RuleShape::Lab {
            return Err(bad());
        }
        return Ok(Term::hole());
    }
    if let Some((head, target)) = v.split_once('^') {
        // y{i}^x{j} or y{i}^x
        let i: usize = head.strip_prefix('y').and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if i == 0 || i > rule.arity || rule.w.contains(&i) {
            return Err(bad());
        }
        let bi = &behaviors[i - 1];
        if target == mv_label() {
            if rule.shape != RuleShape::Lab {
                return Err(bad());
            }
            return match bi {
                Behavior::Fun(template) => Ok(template.clone()),
                other => Err(EngineError::NotAFunction(other.kind().to_string())),
            };
        }
        let j: usize = target.strip_prefix('x').and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if j == 0 || j > rule.arity {
            return Err(bad());
        }
        return apply_fun(bi, &operands[j - 1]);
    }
    if let Some(rest) = v.strip_prefix('x') {
        let i: usize = rest.parse().map_err(|_| bad())?;
        if i == 0 || i > rule.arity {
            return Err(bad());
        }
        return Ok(operands[i - 1].clone());
    }
    if let Some(rest) = v.strip_prefix('y') {
        let j: usize = rest.parse().map_err(|_| bad())?;
        if !rule.w.contains(&j) {
            return Err(bad());
        }
        return match &behaviors[j - 1] {
            Behavior::Reduce(next) => Ok(next.clone()),
            other => Err(EngineError::Instantiation(format!(
                "operand {j} classified as reducing but behaves as {}",
                other.kind()
            ))),
        };
    }
    Err(bad())
}

/// One event of a multi-step run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub state: Term,
    pub kind: BehaviorKind,
    pub successor: Option<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Fun,
    Stuck,
    Cutoff,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Fun => write!(f, "fun"),
            Terminal::Stuck => write!(f, "stuck"),
            Terminal::Cutoff => write!(f, "cutoff"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub terminal: Terminal,
}

impl Trace {
    pub fn to_json(&self) -> Value {
        json!({
            "trace": self.events.iter().map(|e| json!({
                "state": render(&e.state),
                "kind": e.kind.to_string(),
                "next": e.successor.as_ref().map(render),
            })).collect::<Vec<_>>(),
            "terminal": self.terminal.to_string(),
        })
    }

    /// Line-delimited rendering: `index <TAB> state <TAB> kind <TAB> successor`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.events.iter().enumerate() {
            let succ = e.successor.as_ref().map(render).unwrap_or_default();
            out.push_str(&format!("{i}\t{}\t{}\t{succ}\n", render(&e.state), e.kind));
        }
        out.push_str(&format!("terminal\t{}\n", self.terminal));
        out
    }
}
