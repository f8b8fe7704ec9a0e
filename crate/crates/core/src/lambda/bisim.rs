//! Bounded strong applicative bisimilarity for λ-terms, its open extension,
//! and the coalgebraic characterization used as a cross-check, plus a
//! congruence probe over sampled λ-contexts.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use super::{
    apply_body, render_named, step, subst_sim, LambdaBehavior, LambdaTerm, Strategy,
};
use crate::bisim::Mismatch;

/// Bounds for a λ check: unrolling depth and the pool of closed arguments
/// finitely approximating "for every closed term".
#[derive(Debug, Clone)]
pub struct LambdaCheckConfig {
    pub depth: usize,
    pub pool: Vec<LambdaTerm>,
    pub extra_args: Vec<LambdaTerm>,
}

impl LambdaCheckConfig {
    pub fn new(depth: usize, pool: Vec<LambdaTerm>) -> Self {
        LambdaCheckConfig { depth, pool, extra_args: Vec::new() }
    }

    pub fn effective_pool(&self) -> Vec<LambdaTerm> {
        let mut out = self.pool.clone();
        for t in &self.extra_args {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaMove {
    Reduce,
    Apply(LambdaTerm),
    /// Instantiation of the open pair by a substitution tuple.
    Close(Vec<LambdaTerm>),
}

impl LambdaMove {
    pub fn to_json(&self) -> Value {
        match self {
            LambdaMove::Reduce => json!({"move": "reduce"}),
            LambdaMove::Apply(arg) => json!({"move": "apply", "arg": render_named(arg)}),
            LambdaMove::Close(tuple) => json!({
                "move": "close",
                "args": tuple.iter().map(render_named).collect::<Vec<_>>(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaVerdict {
    Distinguished { witness: Vec<LambdaMove>, mismatch: Mismatch },
    NoCounterexampleWithin { depth: usize, pool_size: usize, tuples_tried: usize },
}

impl LambdaVerdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, LambdaVerdict::Distinguished { .. })
    }
}

pub fn lambda_verdict_json(v: &LambdaVerdict, depth: usize, pool_size: usize) -> Value {
    match v {
        LambdaVerdict::NoCounterexampleWithin { depth, pool_size, tuples_tried } => json!({
            "verdict": "no_counterexample",
            "depth": depth,
            "pool_size": pool_size,
            "tuples_tried": tuples_tried,
        }),
        LambdaVerdict::Distinguished { witness, mismatch } => json!({
            "verdict": "distinguished",
            "depth": depth,
            "pool_size": pool_size,
            "witness": witness.iter().map(LambdaMove::to_json).collect::<Vec<_>>(),
            "mismatch": mismatch.as_str(),
        }),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LambdaCheckError {
    #[error("empty argument pool while both behaviours are functions")]
    EmptyPool,
    #[error("terms are open but the closing pool is empty")]
    EmptyClosingPool,
    #[error("terms live in unequal contexts ({0} vs {1})")]
    ContextMismatch(usize, usize),
    #[error("expected a closed term, got one in context size {0}")]
    OpenInput(usize),
    #[error("argument pool must consist of closed terms")]
    OpenPoolTerm,
}

type Failure = (Vec<LambdaMove>, Mismatch);

struct ClosedChecker {
    strategy: Strategy,
    pool: Vec<LambdaTerm>,
    stack: HashSet<(LambdaTerm, LambdaTerm)>,
}

impl ClosedChecker {
    fn run(
        &mut self,
        p: &LambdaTerm,
        q: &LambdaTerm,
        depth: usize,
    ) -> Result<Option<Failure>, LambdaCheckError> {
        if p == q || depth == 0 {
            return Ok(None);
        }
        let key = (p.clone(), q.clone());
        if self.stack.contains(&key) {
            return Ok(None);
        }
        self.stack.insert(key.clone());
        let out = self.run_inner(p, q, depth);
        self.stack.remove(&key);
        out
    }

    fn run_inner(
        &mut self,
        p: &LambdaTerm,
        q: &LambdaTerm,
        depth: usize,
    ) -> Result<Option<Failure>, LambdaCheckError> {
        let bp = step(self.strategy, p);
        let bq = step(self.strategy, q);
        match (&bp, &bq) {
            (LambdaBehavior::Reduce(p2), LambdaBehavior::Reduce(q2)) => {
                Ok(self.run(p2, q2, depth - 1)?.map(|(mut w, m)| {
                    w.insert(0, LambdaMove::Reduce);
                    (w, m)
                }))
            }
            (LambdaBehavior::Fun(f), LambdaBehavior::Fun(g)) => {
                if self.pool.is_empty() {
                    return Err(LambdaCheckError::EmptyPool);
                }
                for i in 0..self.pool.len() {
                    let e = self.pool[i].clone();
                    let p2 = apply_body(f, &e);
                    let q2 = apply_body(g, &e);
                    if let Some((mut w, m)) = self.run(&p2, &q2, depth - 1)? {
                        w.insert(0, LambdaMove::Apply(e));
                        return Ok(Some((w, m)));
                    }
                }
                Ok(None)
            }
            (LambdaBehavior::Stuck, LambdaBehavior::Stuck) => Ok(None),
            _ => Ok(Some((Vec::new(), Mismatch::Kind))),
        }
    }
}

/// Bounded strong applicative bisimilarity on closed terms: reductions must
/// match reductions, functions are compared on every pool argument.
pub fn app_bisim_closed(
    t1: &LambdaTerm,
    t2: &LambdaTerm,
    strategy: Strategy,
    cfg: &LambdaCheckConfig,
) -> Result<LambdaVerdict, LambdaCheckError> {
    if !t1.is_closed() {
        return Err(LambdaCheckError::OpenInput(t1.ctx()));
    }
    if !t2.is_closed() {
        return Err(LambdaCheckError::OpenInput(t2.ctx()));
    }
    let pool = cfg.effective_pool();
    if pool.iter().any(|t| !t.is_closed()) {
        return Err(LambdaCheckError::OpenPoolTerm);
    }
    let mut checker = ClosedChecker { strategy, pool: pool.clone(), stack: HashSet::new() };
    let failure = checker.run(t1, t2, cfg.depth)?;
    Ok(finish(failure, cfg.depth, pool.len(), 1))
}

fn finish(failure: Option<Failure>, depth: usize, pool_size: usize, tuples_tried: usize) -> LambdaVerdict {
    match failure {
        Some((witness, mismatch)) => LambdaVerdict::Distinguished { witness, mismatch },
        None => LambdaVerdict::NoCounterexampleWithin { depth, pool_size, tuples_tried },
    }
}

/// Enumerates tuples of `pool^n` in canonical order (last slot fastest).
fn closing_tuples(pool: &[LambdaTerm], n: usize, cap: usize) -> Vec<Vec<LambdaTerm>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| pool[i].clone()).collect());
        if out.len() == cap {
            return out;
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pool.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Open extension: enumerates up to `limit` closing tuples over the pool and
/// checks each closed instance. The first distinguishing tuple wins.
pub fn app_bisim_open(
    t1: &LambdaTerm,
    t2: &LambdaTerm,
    strategy: Strategy,
    cfg: &LambdaCheckConfig,
    closing_pool: &[LambdaTerm],
    limit: usize,
) -> Result<LambdaVerdict, LambdaCheckError> {
    if t1.ctx() != t2.ctx() {
        return Err(LambdaCheckError::ContextMismatch(t1.ctx(), t2.ctx()));
    }
    let n = t1.ctx();
    if n > 0 && closing_pool.is_empty() {
        return Err(LambdaCheckError::EmptyClosingPool);
    }
    if closing_pool.iter().any(|t| !t.is_closed()) {
        return Err(LambdaCheckError::OpenPoolTerm);
    }
    let mut tried = 0usize;
    for tuple in closing_tuples(closing_pool, n, limit.max(1)) {
        tried += 1;
        let c1 = subst_sim(t1, &tuple).expect("tuple length matches context");
        let c2 = subst_sim(t2, &tuple).expect("tuple length matches context");
        match app_bisim_closed(&c1, &c2, strategy, cfg)? {
            LambdaVerdict::Distinguished { mut witness, mismatch } => {
                if n > 0 {
                    witness.insert(0, LambdaMove::Close(tuple));
                }
                return Ok(LambdaVerdict::Distinguished { witness, mismatch });
            }
            LambdaVerdict::NoCounterexampleWithin { .. } => {}
        }
    }
    Ok(LambdaVerdict::NoCounterexampleWithin {
        depth: cfg.depth,
        pool_size: cfg.effective_pool().len(),
        tuples_tried: tried,
    })
}

struct CoalgChecker {
    strategy: Strategy,
    pool: Vec<LambdaTerm>,
    subst_pool: Vec<LambdaTerm>,
    renaming_budget: usize,
    stack: HashSet<(LambdaTerm, LambdaTerm)>,
    // Pairs already explored exhaustively to at least the recorded depth.
    ok_memo: HashMap<(LambdaTerm, LambdaTerm), usize>,
}

impl CoalgChecker {
    fn run(
        &mut self,
        w: &LambdaTerm,
        z: &LambdaTerm,
        depth: usize,
    ) -> Result<Option<Failure>, LambdaCheckError> {
        if w == z || depth == 0 {
            return Ok(None);
        }
        let key = (w.clone(), z.clone());
        if self.stack.contains(&key) {
            return Ok(None);
        }
        if self.ok_memo.get(&key).is_some_and(|&d| d >= depth) {
            return Ok(None);
        }
        self.stack.insert(key.clone());
        let out = self.run_inner(w, z, depth);
        self.stack.remove(&key);
        if let Ok(None) = out {
            let entry = self.ok_memo.entry(key).or_insert(0);
            *entry = (*entry).max(depth);
        }
        out
    }

    /// Checks the behaviour clauses directly on the (possibly open) pair,
    /// then samples the substitution clause with closing tuples and
    /// variable-renaming tuples.
    fn run_inner(
        &mut self,
        w: &LambdaTerm,
        z: &LambdaTerm,
        depth: usize,
    ) -> Result<Option<Failure>, LambdaCheckError> {
        let k = w.ctx();
        let bw = step(self.strategy, w);
        let bz = step(self.strategy, z);
        match (&bw, &bz) {
            (LambdaBehavior::Reduce(w2), LambdaBehavior::Reduce(z2)) => {
                if let Some((mut moves, m)) = self.run(w2, z2, depth - 1)? {
                    moves.insert(0, LambdaMove::Reduce);
                    return Ok(Some((moves, m)));
                }
            }
            (LambdaBehavior::Fun(f), LambdaBehavior::Fun(g)) => {
                if self.pool.is_empty() {
                    return Err(LambdaCheckError::EmptyPool);
                }
                for i in 0..self.pool.len() {
                    let e = self.pool[i].weaken_to(k);
                    let w2 = apply_body(f, &e);
                    let z2 = apply_body(g, &e);
                    if let Some((mut moves, m)) = self.run(&w2, &z2, depth - 1)? {
                        moves.insert(0, LambdaMove::Apply(e));
                        return Ok(Some((moves, m)));
                    }
                }
            }
            (LambdaBehavior::Stuck, LambdaBehavior::Stuck) => {}
            _ => return Ok(Some((Vec::new(), Mismatch::Kind))),
        }

        if k > 0 {
            // Substituting does not unroll a transition, so closing keeps the
            // current depth; the closed pair then cannot close again.
            for tuple in closing_tuples(&self.subst_pool, k, usize::MAX) {
                let w2 = subst_sim(w, &tuple).expect("tuple length matches context");
                let z2 = subst_sim(z, &tuple).expect("tuple length matches context");
                if let Some((mut moves, m)) = self.run(&w2, &z2, depth)? {
                    moves.insert(0, LambdaMove::Close(tuple));
                    return Ok(Some((moves, m)));
                }
            }
            // Renaming instances of the same clause; these can grow the
            // context, so they do consume depth.
            for tuple in renaming_tuples(k, self.renaming_budget) {
                let w2 = subst_sim(w, &tuple).expect("tuple length matches context");
                let z2 = subst_sim(z, &tuple).expect("tuple length matches context");
                if let Some((mut moves, m)) = self.run(&w2, &z2, depth - 1)? {
                    moves.insert(0, LambdaMove::Close(tuple));
                    return Ok(Some((moves, m)));
                }
            }
        }
        Ok(None)
    }
}

/// Variable tuples encoding renaming instances of the substitution clause:
/// weakening into a fresh slot, a swap, and a contraction.
fn renaming_tuples(k: usize, budget: usize) -> Vec<Vec<LambdaTerm>> {
    let mut out: Vec<Vec<LambdaTerm>> = Vec::new();
    if budget == 0 {
        return out;
    }
    out.push((0..k).map(|i| LambdaTerm::var(k + 1, i)).collect());
    if k >= 2 {
        let mut swap: Vec<LambdaTerm> = (0..k).map(|i| LambdaTerm::var(k, i)).collect();
        swap.swap(0, 1);
        out.push(swap);
        out.push(
            (0..k)
                .map(|i| LambdaTerm::var(k - 1, i.saturating_sub(1)))
                .collect(),
        );
    }
    out.truncate(budget);
    out
}

/// Bounded check of the coalgebraic bisimulation clauses on possibly open
/// terms: behaviour clauses on the pair itself plus sampled substitution
/// instances at every level. Expected to agree with [`app_bisim_open`] on
/// shared bounds.
pub fn coalg_bisim(
    t1: &LambdaTerm,
    t2: &LambdaTerm,
    strategy: Strategy,
    cfg: &LambdaCheckConfig,
    subst_pool: &[LambdaTerm],
    renaming_budget: usize,
) -> Result<LambdaVerdict, LambdaCheckError> {
    if t1.ctx() != t2.ctx() {
        return Err(LambdaCheckError::ContextMismatch(t1.ctx(), t2.ctx()));
    }
    if t1.ctx() > 0 && subst_pool.is_empty() {
        return Err(LambdaCheckError::EmptyClosingPool);
    }
    let pool = cfg.effective_pool();
    if pool.iter().chain(subst_pool).any(|t| !t.is_closed()) {
        return Err(LambdaCheckError::OpenPoolTerm);
    }
    let mut checker = CoalgChecker {
        strategy,
        pool: pool.clone(),
        subst_pool: subst_pool.to_vec(),
        renaming_budget,
        stack: HashSet::new(),
        ok_memo: HashMap::new(),
    };
    let failure = checker.run(t1, t2, cfg.depth)?;
    Ok(finish(failure, cfg.depth, pool.len(), subst_pool.len()))
}

/// Re-executes a λ witness. Returns `true` iff the moves stay executable and
/// end at a pair whose behaviours differ in kind.
pub fn replay_lambda_witness(
    strategy: Strategy,
    t1: &LambdaTerm,
    t2: &LambdaTerm,
    witness: &[LambdaMove],
) -> bool {
    let mut p = t1.clone();
    let mut q = t2.clone();
    for mv in witness {
        match mv {
            LambdaMove::Close(tuple) => {
                if tuple.len() != p.ctx() || p.ctx() != q.ctx() {
                    return false;
                }
                p = match subst_sim(&p, tuple) {
                    Ok(t) => t,
                    Err(_) => return false,
                };
                q = match subst_sim(&q, tuple) {
                    Ok(t) => t,
                    Err(_) => return false,
                };
            }
            LambdaMove::Reduce => {
                match (step(strategy, &p), step(strategy, &q)) {
                    (LambdaBehavior::Reduce(p2), LambdaBehavior::Reduce(q2)) => {
                        p = p2;
                        q = q2;
                    }
                    _ => return false,
                }
            }
            LambdaMove::Apply(e) => {
                match (step(strategy, &p), step(strategy, &q)) {
                    (LambdaBehavior::Fun(f), LambdaBehavior::Fun(g)) => {
                        if e.ctx() != p.ctx() {
                            return false;
                        }
                        p = apply_body(&f, e);
                        q = apply_body(&g, e);
                    }
                    _ => return false,
                }
            }
        }
    }
    step(strategy, &p).kind() != step(strategy, &q).kind()
}

/// A λ-context with exactly one hole; plugging is restricted to closed terms,
/// which need no index adjustment under binders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaContext {
    Hole,
    Lam(Box<LambdaContext>),
    AppL(Box<LambdaContext>, LambdaTerm),
    AppR(LambdaTerm, Box<LambdaContext>),
}

impl LambdaContext {
    pub fn plug(&self, t: &LambdaTerm) -> LambdaTerm {
        assert!(t.is_closed(), "λ-contexts plug closed terms only");
        fn go(c: &LambdaContext, t: &LambdaTerm) -> super::Body {
            match c {
                LambdaContext::Hole => t.body().clone(),
                LambdaContext::Lam(inner) => super::Body::Lam(Box::new(go(inner, t))),
                LambdaContext::AppL(inner, u) => {
                    super::Body::App(Box::new(go(inner, t)), Box::new(u.body().clone()))
                }
                LambdaContext::AppR(u, inner) => {
                    super::Body::App(Box::new(u.body().clone()), Box::new(go(inner, t)))
                }
            }
        }
        LambdaTerm::from_body(0, go(self, t)).expect("closed plug stays closed")
    }

    pub fn size(&self) -> usize {
        match self {
            LambdaContext::Hole => 1,
            LambdaContext::Lam(c) => 1 + c.size(),
            LambdaContext::AppL(c, u) => 1 + c.size() + u.size(),
            LambdaContext::AppR(u, c) => 1 + u.size() + c.size(),
        }
    }

    pub fn render(&self) -> String {
        fn go(c: &LambdaContext, out: &mut String) {
            match c {
                LambdaContext::Hole => out.push('·'),
                LambdaContext::Lam(inner) => {
                    out.push_str("(\\_. ");
                    go(inner, out);
                    out.push(')');
                }
                LambdaContext::AppL(inner, u) => {
                    out.push('(');
                    go(inner, out);
                    out.push(' ');
                    out.push_str(&render_named(u));
                    out.push(')');
                }
                LambdaContext::AppR(u, inner) => {
                    out.push('(');
                    out.push_str(&render_named(u));
                    out.push(' ');
                    go(inner, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        go(self, &mut out);
        out
    }
}

/// Seeded sampling of single-hole λ-contexts of size <= `max_size`; the
/// non-hole branches come from the pool.
pub fn sample_lambda_context<R: Rng>(
    rng: &mut R,
    pool: &[LambdaTerm],
    max_size: usize,
) -> LambdaContext {
    let min_pool = pool.iter().map(LambdaTerm::size).min().unwrap_or(usize::MAX);
    sample_ctx(rng, pool, min_pool, max_size.max(1))
}

fn sample_ctx<R: Rng>(
    rng: &mut R,
    pool: &[LambdaTerm],
    min_pool: usize,
    budget: usize,
) -> LambdaContext {
    let can_lam = budget >= 2;
    let can_app = budget >= 2 + min_pool;
    if (!can_lam && !can_app) || rng.gen_bool(0.3) {
        return LambdaContext::Hole;
    }
    let mut choices: Vec<u8> = Vec::new();
    if can_lam {
        choices.push(0);
    }
    if can_app {
        choices.extend_from_slice(&[1, 2]);
    }
    match choices[rng.gen_range(0..choices.len())] {
        0 => LambdaContext::Lam(Box::new(sample_ctx(rng, pool, min_pool, budget - 1))),
        kind => {
            let cap = budget - 2;
            let fits: Vec<&LambdaTerm> = pool.iter().filter(|t| t.size() <= cap).collect();
            let partner = fits[rng.gen_range(0..fits.len())].clone();
            let inner = sample_ctx(rng, pool, min_pool, budget - 1 - partner.size());
            if kind == 1 {
                LambdaContext::AppL(Box::new(inner), partner)
            } else {
                LambdaContext::AppR(partner, Box::new(inner))
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LambdaProbeError {
    #[error("inputs are distinguished already; congruence probing requires a no-counterexample pair")]
    InputsDistinguished,
    #[error(transparent)]
    Check(#[from] LambdaCheckError),
}

#[derive(Debug, Clone)]
pub struct LambdaAnomaly {
    pub context: LambdaContext,
    pub verdict: LambdaVerdict,
}

#[derive(Debug, Clone)]
pub struct LambdaProbeReport {
    pub anomalies: Vec<LambdaAnomaly>,
    pub contexts_tried: usize,
    pub seed: u64,
}

impl LambdaProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "anomalies": self.anomalies.iter().map(|a| {
                let witness = match &a.verdict {
                    LambdaVerdict::Distinguished { witness, .. } => {
                        witness.iter().map(LambdaMove::to_json).collect::<Vec<_>>()
                    }
                    LambdaVerdict::NoCounterexampleWithin { .. } => Vec::new(),
                };
                json!({"context": a.context.render(), "witness": witness})
            }).collect::<Vec<_>>(),
            "contexts_tried": self.contexts_tried,
            "seed": self.seed,
        })
    }
}

/// Congruence probe for the λ steppers: seeded single-hole contexts around a
/// pair already found indistinguishable.
pub fn congruence_probe_lambda(
    strategy: Strategy,
    p: &LambdaTerm,
    q: &LambdaTerm,
    n_contexts: usize,
    ctx_size: usize,
    cfg: &LambdaCheckConfig,
    seed: u64,
) -> Result<LambdaProbeReport, LambdaProbeError> {
    if app_bisim_closed(p, q, strategy, cfg)?.is_distinguished() {
        return Err(LambdaProbeError::InputsDistinguished);
    }
    let pool = cfg.effective_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anomalies = Vec::new();
    for _ in 0..n_contexts {
        let context = sample_lambda_context(&mut rng, &pool, ctx_size);
        let verdict = app_bisim_closed(&context.plug(p), &context.plug(q), strategy, cfg)?;
        if verdict.is_distinguished() {
            anomalies.push(LambdaAnomaly { context, verdict });
        }
    }
    Ok(LambdaProbeReport { anomalies, contexts_tried: n_contexts, seed })
}
