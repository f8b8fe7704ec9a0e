//! De Bruijn realization of the untyped λ-calculus in explicit contexts:
//! renaming and simultaneous substitution, small-step call-by-name and
//! call-by-value evaluation, and bounded strong applicative bisimilarity.
//!
//! A term lives in a context of size `n`; its free variables are the indices
//! `0..n-1` counted past the enclosing binders (standard de Bruijn indices,
//! innermost binder = 0). α-equivalence is structural equality.

mod bisim;
mod enumerate;
mod parse;

pub use bisim::{
    app_bisim_closed, app_bisim_open, coalg_bisim, congruence_probe_lambda, lambda_verdict_json,
    replay_lambda_witness, sample_lambda_context, LambdaAnomaly, LambdaCheckConfig,
    LambdaCheckError, LambdaContext, LambdaMove, LambdaProbeError, LambdaProbeReport,
    LambdaVerdict,
};
pub use enumerate::{enumerate_lambda, sample_lambda};
pub use parse::{parse_lambda, render_debruijn, render_named, LambdaSyntax, ParseLambdaError};

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{BehaviorKind, Terminal};

/// Body tree of a λ-term. Indices are distances: `Var(i)` under `d` binders
/// refers to binder `i` when `i < d`, and to context slot `i - d` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Body {
    Var(usize),
    Lam(Box<Body>),
    App(Box<Body>, Box<Body>),
}

impl Body {
    fn valid_in(&self, depth: usize) -> bool {
        match self {
            Body::Var(i) => *i < depth,
            Body::Lam(b) => b.valid_in(depth + 1),
            Body::App(f, a) => f.valid_in(depth) && a.valid_in(depth),
        }
    }

    fn size(&self) -> usize {
        match self {
            Body::Var(_) => 1,
            Body::Lam(b) => 1 + b.size(),
            Body::App(f, a) => 1 + f.size() + a.size(),
        }
    }
}

/// A λ-term in an explicit context of size `ctx`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LambdaTerm {
    ctx: usize,
    body: Body,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LambdaError {
    #[error("variable index out of range for context size {0}")]
    IndexOutOfRange(usize),
    #[error("renaming has length {got}, context needs {want}")]
    RenamingLength { got: usize, want: usize },
    #[error("renaming image {0} not below target context {1}")]
    RenamingImage(usize, usize),
    #[error("substitution vector has length {got}, context needs {want}")]
    SubstitutionLength { got: usize, want: usize },
    #[error("substitution images live in unequal contexts")]
    MixedContexts,
}

impl LambdaTerm {
    pub fn var(ctx: usize, index: usize) -> LambdaTerm {
        assert!(index < ctx, "variable index {index} out of context {ctx}");
        LambdaTerm { ctx, body: Body::Var(index) }
    }

    /// Binds the innermost variable of `body`.
    pub fn lam(body: LambdaTerm) -> LambdaTerm {
        assert!(body.ctx >= 1, "lam needs a body in a non-empty context");
        LambdaTerm { ctx: body.ctx - 1, body: Body::Lam(Box::new(body.body)) }
    }

    pub fn app(fun: LambdaTerm, arg: LambdaTerm) -> LambdaTerm {
        assert_eq!(fun.ctx, arg.ctx, "application of terms in unequal contexts");
        LambdaTerm { ctx: fun.ctx, body: Body::App(Box::new(fun.body), Box::new(arg.body)) }
    }

    pub fn from_body(ctx: usize, body: Body) -> Result<LambdaTerm, LambdaError> {
        if body.valid_in(ctx) {
            Ok(LambdaTerm { ctx, body })
        } else {
            Err(LambdaError::IndexOutOfRange(ctx))
        }
    }

    pub fn ctx(&self) -> usize {
        self.ctx
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn is_closed(&self) -> bool {
        self.ctx == 0
    }

    /// Node count.
    pub fn size(&self) -> usize {
        self.body.size()
    }

    /// Embeds into a wider context; existing slots keep their indices.
    pub fn weaken_to(&self, ctx: usize) -> LambdaTerm {
        assert!(ctx >= self.ctx);
        LambdaTerm { ctx, body: self.body.clone() }
    }
}

impl fmt::Display for LambdaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_named(self))
    }
}

/// Functorial action of a context map `r : n -> m`: every free occurrence of
/// slot `p` becomes slot `r[p]`. Under a binder the map extends by the
/// identity on the bound variable.
pub fn rename(t: &LambdaTerm, r: &[usize], target_ctx: usize) -> Result<LambdaTerm, LambdaError> {
    if r.len() != t.ctx {
        return Err(LambdaError::RenamingLength { got: r.len(), want: t.ctx });
    }
    if let Some(&bad) = r.iter().find(|&&i| i >= target_ctx) {
        return Err(LambdaError::RenamingImage(bad, target_ctx));
    }
    fn go(b: &Body, depth: usize, r: &[usize]) -> Body {
        match b {
            Body::Var(i) => {
                if *i < depth {
                    Body::Var(*i)
                } else {
                    Body::Var(depth + r[*i - depth])
                }
            }
            Body::Lam(b) => Body::Lam(Box::new(go(b, depth + 1, r))),
            Body::App(f, a) => Body::App(Box::new(go(f, depth, r)), Box::new(go(a, depth, r))),
        }
    }
    Ok(LambdaTerm { ctx: target_ctx, body: go(&t.body, 0, r) })
}

/// Shifts every free variable past `by` binders.
fn shift_body(b: &Body, by: usize) -> Body {
    fn go(b: &Body, depth: usize, by: usize) -> Body {
        match b {
            Body::Var(i) => {
                if *i < depth {
                    Body::Var(*i)
                } else {
                    Body::Var(*i + by)
                }
            }
            Body::Lam(b) => Body::Lam(Box::new(go(b, depth + 1, by))),
            Body::App(f, a) => Body::App(Box::new(go(f, depth, by)), Box::new(go(a, depth, by))),
        }
    }
    if by == 0 {
        b.clone()
    } else {
        go(b, 0, by)
    }
}

/// Simultaneous substitution: slot `p` of `t` is replaced by `images[p]`.
/// Under a binder the substitution extends with the fresh bound variable and
/// the images are weakened past it.
pub fn subst_sim(t: &LambdaTerm, images: &[LambdaTerm]) -> Result<LambdaTerm, LambdaError> {
    if images.len() != t.ctx {
        return Err(LambdaError::SubstitutionLength { got: images.len(), want: t.ctx });
    }
    let target_ctx = match images.first() {
        None => 0,
        Some(u) => {
            if images.iter().any(|v| v.ctx != u.ctx) {
                return Err(LambdaError::MixedContexts);
            }
            u.ctx
        }
    };
    fn go(b: &Body, depth: usize, images: &[LambdaTerm]) -> Body {
        match b {
            Body::Var(i) => {
                if *i < depth {
                    Body::Var(*i)
                } else {
                    shift_body(&images[*i - depth].body, depth)
                }
            }
            Body::Lam(b) => Body::Lam(Box::new(go(b, depth + 1, images))),
            Body::App(f, a) => {
                Body::App(Box::new(go(f, depth, images)), Box::new(go(a, depth, images)))
            }
        }
    }
    Ok(LambdaTerm { ctx: target_ctx, body: go(&t.body, 0, images) })
}

/// The identity substitution vector for a context.
pub fn identity_subst(ctx: usize) -> Vec<LambdaTerm> {
    (0..ctx).map(|i| LambdaTerm::var(ctx, i)).collect()
}

/// One-step observation of a λ-term in context `n`: a reduct in `n`, a
/// function given by its body in `n + 1`, or stuck.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaBehavior {
    Reduce(LambdaTerm),
    Fun(LambdaTerm),
    Stuck,
}

impl LambdaBehavior {
    pub fn kind(&self) -> BehaviorKind {
        match self {
            LambdaBehavior::Reduce(_) => BehaviorKind::Reduce,
            LambdaBehavior::Fun(_) => BehaviorKind::Fun,
            LambdaBehavior::Stuck => BehaviorKind::Stuck,
        }
    }
}

/// Applies a function behaviour's body (in `n + 1`) to an argument (in `n`)
/// by substituting the bound slot and keeping the rest identically.
pub fn apply_body(body: &LambdaTerm, arg: &LambdaTerm) -> LambdaTerm {
    assert_eq!(body.ctx, arg.ctx + 1, "function body must live one slot above its argument");
    let mut images = Vec::with_capacity(body.ctx);
    images.push(arg.clone());
    for i in 0..arg.ctx {
        images.push(LambdaTerm::var(arg.ctx, i));
    }
    subst_sim(body, &images).expect("well-typed β instance")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Cbn,
    Cbv,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Cbn => write!(f, "cbn"),
            Strategy::Cbv => write!(f, "cbv"),
        }
    }
}

/// Call-by-name step: a variable is stuck, an abstraction is a function, and
/// an application drives its left operand (reduct, β, or stuck propagation).
pub fn step_cbn(t: &LambdaTerm) -> LambdaBehavior {
    match &t.body {
        Body::Var(_) => LambdaBehavior::Stuck,
        Body::Lam(b) => {
            LambdaBehavior::Fun(LambdaTerm { ctx: t.ctx + 1, body: (**b).clone() })
        }
        Body::App(f, a) => {
            let t1 = LambdaTerm { ctx: t.ctx, body: (**f).clone() };
            let t2 = LambdaTerm { ctx: t.ctx, body: (**a).clone() };
            match step_cbn(&t1) {
                LambdaBehavior::Reduce(t1p) => {
                    LambdaBehavior::Reduce(LambdaTerm::app(t1p, t2))
                }
                LambdaBehavior::Fun(b) => LambdaBehavior::Reduce(apply_body(&b, &t2)),
                LambdaBehavior::Stuck => LambdaBehavior::Stuck,
            }
        }
    }
}

/// Call-by-value step, clause by clause: the left operand steps first; once
/// it is a function, a reducing argument steps, and a function or stuck
/// argument is consumed by β.
pub fn step_cbv(t: &LambdaTerm) -> LambdaBehavior {
    match &t.body {
        Body::Var(_) => LambdaBehavior::Stuck,
        Body::Lam(b) => {
            LambdaBehavior::Fun(LambdaTerm { ctx: t.ctx + 1, body: (**b).clone() })
        }
        Body::App(f, a) => {
            let t1 = LambdaTerm { ctx: t.ctx, body: (**f).clone() };
            let t2 = LambdaTerm { ctx: t.ctx, body: (**a).clone() };
            match step_cbv(&t1) {
                LambdaBehavior::Reduce(t1p) => {
                    LambdaBehavior::Reduce(LambdaTerm::app(t1p, t2))
                }
                LambdaBehavior::Fun(b) => match step_cbv(&t2) {
                    LambdaBehavior::Reduce(t2p) => {
                        LambdaBehavior::Reduce(LambdaTerm::app(t1, t2p))
                    }
                    LambdaBehavior::Fun(_) | LambdaBehavior::Stuck => {
                        LambdaBehavior::Reduce(apply_body(&b, &t2))
                    }
                },
                LambdaBehavior::Stuck => LambdaBehavior::Stuck,
            }
        }
    }
}

pub fn step(strategy: Strategy, t: &LambdaTerm) -> LambdaBehavior {
    match strategy {
        Strategy::Cbn => step_cbn(t),
        Strategy::Cbv => step_cbv(t),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaTraceEvent {
    pub state: LambdaTerm,
    pub kind: BehaviorKind,
    pub successor: Option<LambdaTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaTrace {
    pub events: Vec<LambdaTraceEvent>,
    pub terminal: Terminal,
}

impl LambdaTrace {
    pub fn to_json(&self) -> Value {
        json!({
            "trace": self.events.iter().map(|e| json!({
                "state": render_named(&e.state),
                "kind": e.kind.to_string(),
                "next": e.successor.as_ref().map(render_named),
            })).collect::<Vec<_>>(),
            "terminal": self.terminal.to_string(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.events.iter().enumerate() {
            let succ = e.successor.as_ref().map(render_named).unwrap_or_default();
            out.push_str(&format!("{i}\t{}\t{}\t{succ}\n", render_named(&e.state), e.kind));
        }
        out.push_str(&format!("terminal\t{}\n", self.terminal));
        out
    }
}

/// Follows reduction until a function or stuck behaviour, or `max_steps`.
pub fn trace(strategy: Strategy, t: &LambdaTerm, max_steps: usize) -> LambdaTrace {
    let mut events = Vec::new();
    let mut cur = t.clone();
    loop {
        if events.len() == max_steps {
            return LambdaTrace { events, terminal: Terminal::Cutoff };
        }
        match step(strategy, &cur) {
            LambdaBehavior::Reduce(next) => {
                events.push(LambdaTraceEvent {
                    state: cur,
                    kind: BehaviorKind::Reduce,
                    successor: Some(next.clone()),
                });
                cur = next;
            }
            LambdaBehavior::Fun(body) => {
                events.push(LambdaTraceEvent {
                    state: cur,
                    kind: BehaviorKind::Fun,
                    successor: Some(body),
                });
                return LambdaTrace { events, terminal: Terminal::Fun };
            }
            LambdaBehavior::Stuck => {
                events.push(LambdaTraceEvent { state: cur, kind: BehaviorKind::Stuck, successor: None });
                return LambdaTrace { events, terminal: Terminal::Stuck };
            }
        }
    }
}
