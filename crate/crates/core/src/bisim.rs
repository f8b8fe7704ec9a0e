//! Bounded strong bisimilarity checking for deterministic and
//! nondeterministic operational models, with replayable distinguishing
//! witnesses, plus a congruence falsification harness.
//!
//! Verdicts never claim full bisimilarity: labels range over infinitely many
//! closed terms, so the universal clause is sampled over a finite pool and
//! the positive verdict names its bounds.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{apply_fun, Behavior, EngineError, Session};
use crate::spec::{HoSpec, Mode};
use crate::term::{render, Context1, Term};

/// Bounds for a bisimilarity check: maximum unrolling depth and the argument
/// pool that finitely approximates the universal quantification over labels.
#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub depth: usize,
    pub pool: Vec<Term>,
    pub extra_args: Vec<Term>,
}

impl CheckConfig {
    pub fn new(depth: usize, pool: Vec<Term>) -> Self {
        CheckConfig { depth, pool, extra_args: Vec::new() }
    }

    pub fn effective_pool(&self) -> Vec<Term> {
        let mut out = self.pool.clone();
        for t in &self.extra_args {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}

/// One step of a distinguishing witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Reduce,
    Apply(Term),
}

impl Move {
    pub fn to_json(&self) -> Value {
        match self {
            Move::Reduce => json!({"move": "reduce"}),
            Move::Apply(arg) => json!({"move": "apply", "arg": render(arg)}),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mismatch {
    Kind,
    NdUnmatched,
}

impl Mismatch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mismatch::Kind => "kind",
            Mismatch::NdUnmatched => "nd_unmatched",
        }
    }
}

/// Outcome of a bounded check.
///
/// A `Distinguished` witness replays deterministically: following its moves
/// from the checked pair reaches a pair whose behaviours differ in kind, or,
/// in nondeterministic mode, whose behaviour sets fail mutual matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Distinguished { witness: Vec<Move>, mismatch: Mismatch },
    NoCounterexampleWithin { depth: usize, pool_size: usize },
}

impl Verdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, Verdict::Distinguished { .. })
    }
}

/// The machine-readable verdict document.
pub fn verdict_json(v: &Verdict, depth: usize, pool_size: usize) -> Value {
    match v {
        Verdict::NoCounterexampleWithin { depth, pool_size } => json!({
            "verdict": "no_counterexample",
            "depth": depth,
            "pool_size": pool_size,
        }),
        Verdict::Distinguished { witness, mismatch } => json!({
            "verdict": "distinguished",
            "depth": depth,
            "pool_size": pool_size,
            "witness": witness.iter().map(Move::to_json).collect::<Vec<_>>(),
            "mismatch": mismatch.as_str(),
        }),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("empty argument pool while both behaviours are functions")]
    EmptyPool,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

struct Checker<'a, 's> {
    session: Session<'s>,
    pool: &'a [Term],
    stack: HashSet<(Term, Term)>,
    // Pairs already explored exhaustively to at least the recorded depth.
    ok_memo: HashMap<(Term, Term), usize>,
}

type Failure = (Vec<Move>, Mismatch);

impl<'a, 's> Checker<'a, 's> {
    fn new(session: Session<'s>, pool: &'a [Term]) -> Self {
        Checker { session, pool, stack: HashSet::new(), ok_memo: HashMap::new() }
    }

    /// Deterministic-mode check. `None` means no counterexample within
    /// bounds; a failure carries the move path to the mismatching pair.
    fn run(&mut self, p: &Term, q: &Term, depth: usize) -> Result<Option<Failure>, CheckError> {
        if p == q || depth == 0 {
            return Ok(None);
        }
        let key = (p.clone(), q.clone());
        if self.stack.contains(&key) {
            // Coinductive hypothesis: the pair is already assumed related.
            return Ok(None);
        }
        if self.ok_memo.get(&key).is_some_and(|&d| d >= depth) {
            return Ok(None);
        }
        self.stack.insert(key.clone());
        let out = self.run_inner(p, q, depth);
        self.stack.remove(&key);
        if let Ok(None) = out {
            let entry = self.ok_memo.entry(key).or_insert(0);
            *entry = (*entry).max(depth);
        }
        out
    }

    fn run_inner(&mut self, p: &Term, q: &Term, depth: usize) -> Result<Option<Failure>, CheckError> {
        let bp = self.session.step(p)?;
        let bq = self.session.step(q)?;
        match (&bp, &bq) {
            (Behavior::Reduce(p2), Behavior::Reduce(q2)) => {
                Ok(self.run(p2, q2, depth - 1)?.map(|(mut w, m)| {
                    w.insert(0, Move::Reduce);
                    (w, m)
                }))
            }
            (Behavior::Fun(_), Behavior::Fun(_)) => {
                if self.pool.is_empty() {
                    return Err(CheckError::EmptyPool);
                }
                for i in 0..self.pool.len() {
                    let e = self.pool[i].clone();
                    let p2 = apply_fun(&bp, &e)?;
                    let q2 = apply_fun(&bq, &e)?;
                    if let Some((mut w, m)) = self.run(&p2, &q2, depth - 1)? {
                        w.insert(0, Move::Apply(e));
                        return Ok(Some((w, m)));
                    }
                }
                Ok(None)
            }
            (Behavior::Stuck, Behavior::Stuck) => Ok(None),
            _ => Ok(Some((Vec::new(), Mismatch::Kind))),
        }
    }

    /// Nondeterministic-mode check: every behaviour of one side must be
    /// matched (same kind, related successors) by some behaviour of the
    /// other, explored with backtracking. A failed mutual matching is
    /// reported at the pair where it occurs.
    fn run_nd(&mut self, p: &Term, q: &Term, depth: usize) -> Result<Option<Failure>, CheckError> {
        if p == q || depth == 0 {
            return Ok(None);
        }
        let key = (p.clone(), q.clone());
        if self.stack.contains(&key) {
            return Ok(None);
        }
        if self.ok_memo.get(&key).is_some_and(|&d| d >= depth) {
            return Ok(None);
        }
        self.stack.insert(key.clone());
        let out = self.run_nd_inner(p, q, depth);
        self.stack.remove(&key);
        if let Ok(None) = out {
            let entry = self.ok_memo.entry(key).or_insert(0);
            *entry = (*entry).max(depth);
        }
        out
    }

    fn run_nd_inner(&mut self, p: &Term, q: &Term, depth: usize) -> Result<Option<Failure>, CheckError> {
        let sp: Vec<Behavior> = self.session.step_nd(p)?.into_iter().collect();
        let sq: Vec<Behavior> = self.session.step_nd(q)?.into_iter().collect();
        for a in &sp {
            if !self.has_match(a, &sq, depth, false)? {
                return Ok(Some((Vec::new(), Mismatch::NdUnmatched)));
            }
        }
        for b in &sq {
            if !self.has_match(b, &sp, depth, true)? {
                return Ok(Some((Vec::new(), Mismatch::NdUnmatched)));
            }
        }
        Ok(None)
    }

    fn has_match(
        &mut self,
        a: &Behavior,
        candidates: &[Behavior],
        depth: usize,
        flipped: bool,
    ) -> Result<bool, CheckError> {
        for b in candidates {
            let (lhs, rhs) = if flipped { (b, a) } else { (a, b) };
            if self.related(lhs, rhs, depth - 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn related(&mut self, a: &Behavior, b: &Behavior, depth: usize) -> Result<bool, CheckError> {
        match (a, b) {
            (Behavior::Reduce(x), Behavior::Reduce(y)) => Ok(self.run_nd(x, y, depth)?.is_none()),
            (Behavior::Fun(_), Behavior::Fun(_)) => {
                if self.pool.is_empty() {
                    return Err(CheckError::EmptyPool);
                }
                for i in 0..self.pool.len() {
                    let e = self.pool[i].clone();
                    let x = apply_fun(a, &e)?;
                    let y = apply_fun(b, &e)?;
                    if self.run_nd(&x, &y, depth)?.is_some() {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            (Behavior::Stuck, Behavior::Stuck) => Ok(true),
            _ => Ok(false),
        }
    }
}

fn finish(
    failure: Option<Failure>,
    cfg: &CheckConfig,
    pool_size: usize,
) -> Verdict {
    match failure {
        Some((witness, mismatch)) => Verdict::Distinguished { witness, mismatch },
        None => Verdict::NoCounterexampleWithin { depth: cfg.depth, pool_size },
    }
}

/// Bounded strong bisimilarity for a deterministic spec.
pub fn check(spec: &HoSpec, p: &Term, q: &Term, cfg: &CheckConfig) -> Result<Verdict, CheckError> {
    let pool = cfg.effective_pool();
    let mut checker = Checker::new(Session::new(spec), &pool);
    let failure = checker.run(p, q, cfg.depth)?;
    Ok(finish(failure, cfg, pool.len()))
}

/// Bounded strong bisimilarity for a nondeterministic spec, with set
/// matching in both directions.
pub fn check_nd(spec: &HoSpec, p: &Term, q: &Term, cfg: &CheckConfig) -> Result<Verdict, CheckError> {
    let pool = cfg.effective_pool();
    let mut checker = Checker::new(Session::new(spec), &pool);
    let failure = checker.run_nd(p, q, cfg.depth)?;
    Ok(finish(failure, cfg, pool.len()))
}

/// Dispatches on the spec's mode.
pub fn check_auto(spec: &HoSpec, p: &Term, q: &Term, cfg: &CheckConfig) -> Result<Verdict, CheckError> {
    match spec.mode {
        Mode::Det => check(spec, p, q, cfg),
        Mode::Nd => check_nd(spec, p, q, cfg),
    }
}

/// Re-executes a witness against the engine. Returns `true` iff following
/// the moves from `(p, q)` reaches a genuine behaviour mismatch: differing
/// kinds in deterministic mode, a failed mutual matching in nondeterministic
/// mode (where witnesses are rooted at the reported pair).
pub fn replay_witness(
    spec: &HoSpec,
    p: &Term,
    q: &Term,
    witness: &[Move],
    cfg: &CheckConfig,
) -> Result<bool, CheckError> {
    let mut session = Session::new(spec);
    let mut cur_p = p.clone();
    let mut cur_q = q.clone();
    for mv in witness {
        let bp = session.step(&cur_p)?;
        let bq = session.step(&cur_q)?;
        match mv {
            Move::Reduce => match (bp, bq) {
                (Behavior::Reduce(p2), Behavior::Reduce(q2)) => {
                    cur_p = p2;
                    cur_q = q2;
                }
                _ => return Ok(false),
            },
            Move::Apply(arg) => match (&bp, &bq) {
                (Behavior::Fun(_), Behavior::Fun(_)) => {
                    cur_p = apply_fun(&bp, arg)?;
                    cur_q = apply_fun(&bq, arg)?;
                }
                _ => return Ok(false),
            },
        }
    }
    match spec.mode {
        Mode::Det => {
            let mut session = Session::new(spec);
            let bp = session.step(&cur_p)?;
            let bq = session.step(&cur_q)?;
            Ok(bp.kind() != bq.kind())
        }
        Mode::Nd => {
            let pool = cfg.effective_pool();
            let mut checker = Checker::new(Session::new(spec), &pool);
            Ok(checker.run_nd(&cur_p, &cur_q, cfg.depth)?.is_some())
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProbeError {
    #[error("inputs are distinguished already; congruence probing requires a no-counterexample pair")]
    InputsDistinguished,
    #[error("argument pool is empty; cannot sample context arguments")]
    EmptyPool,
    #[error(transparent)]
    Check(#[from] CheckError),
}

#[derive(Debug, Clone)]
pub struct Anomaly {
    pub context: Context1,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub anomalies: Vec<Anomaly>,
    pub contexts_tried: usize,
    pub seed: u64,
}

impl ProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "anomalies": self.anomalies.iter().map(|a| {
                let witness = match &a.verdict {
                    Verdict::Distinguished { witness, .. } => {
                        witness.iter().map(Move::to_json).collect::<Vec<_>>()
                    }
                    Verdict::NoCounterexampleWithin { .. } => Vec::new(),
                };
                json!({"context": a.context.to_string(), "witness": witness})
            }).collect::<Vec<_>>(),
            "contexts_tried": self.contexts_tried,
            "seed": self.seed,
        })
    }
}

/// Samples seeded single-hole contexts around a pair already found
/// indistinguishable and re-checks each plugged pair. The congruence theorem
/// predicts zero anomalies for genuinely bisimilar inputs; any anomaly is
/// either non-bisimilarity revealed in context or an engine bug.
pub fn congruence_probe(
    spec: &HoSpec,
    p: &Term,
    q: &Term,
    n_contexts: usize,
    ctx_size: usize,
    cfg: &CheckConfig,
    seed: u64,
) -> Result<ProbeReport, ProbeError> {
    let pool = cfg.effective_pool();
    // One checker for the whole probe: verified pairs recur across contexts,
    // so the memo carries over.
    let mut checker = Checker::new(Session::new(spec), &pool);
    let run_pair = |checker: &mut Checker, a: &Term, b: &Term| match spec.mode {
        Mode::Det => checker.run(a, b, cfg.depth),
        Mode::Nd => checker.run_nd(a, b, cfg.depth),
    };
    if run_pair(&mut checker, p, q)?.is_some() {
        return Err(ProbeError::InputsDistinguished);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anomalies = Vec::new();
    for _ in 0..n_contexts {
        let context = sample_context(&mut rng, spec, &pool, ctx_size)?;
        if let Some((witness, mismatch)) =
            run_pair(&mut checker, &context.plug(p), &context.plug(q))?
        {
            let verdict = Verdict::Distinguished { witness, mismatch };
            anomalies.push(Anomaly { context, verdict });
        }
    }
    Ok(ProbeReport { anomalies, contexts_tried: n_contexts, seed })
}

/// Grammar of sampled contexts: the hole, or a signature symbol with the
/// hole in one argument and pool terms elsewhere.
pub fn sample_context(
    rng: &mut ChaCha8Rng,
    spec: &HoSpec,
    pool: &[Term],
    max_size: usize,
) -> Result<Context1, ProbeError> {
    if pool.is_empty() && spec.sig.symbols().any(|(_, ar)| ar > 1) {
        return Err(ProbeError::EmptyPool);
    }
    let min_filler = pool.iter().map(Term::size).min().unwrap_or(1);
    let term = sample_context_term(rng, spec, pool, min_filler, max_size);
    Ok(Context1::new(term).expect("sampler emits exactly one hole"))
}

fn sample_context_term(
    rng: &mut ChaCha8Rng,
    spec: &HoSpec,
    pool: &[Term],
    min_filler: usize,
    budget: usize,
) -> Term {
    let candidates: Vec<(&str, usize)> = spec
        .sig
        .symbols()
        .filter(|&(_, ar)| ar >= 1 && 1 + 1 + (ar - 1) * min_filler <= budget)
        .collect();
    if candidates.is_empty() || rng.gen_bool(0.3) {
        return Term::hole();
    }
    let (op, arity) = candidates[rng.gen_range(0..candidates.len())];
    let hole_pos = rng.gen_range(0..arity);
    let mut budget_left = budget - 1;
    let mut args: Vec<Term> = Vec::with_capacity(arity);
    for pos in 0..arity {
        let later: usize = (pos + 1..arity)
            .map(|k| if k == hole_pos { 1 } else { min_filler })
            .sum();
        let cap = budget_left - later;
        if pos == hole_pos {
            let inner = sample_context_term(rng, spec, pool, min_filler, cap);
            budget_left -= inner.size();
            args.push(inner);
        } else {
            let fits: Vec<&Term> = pool.iter().filter(|t| t.size() <= cap).collect();
            let filler = fits[rng.gen_range(0..fits.len())].clone();
            budget_left -= filler.size();
            args.push(filler);
        }
    }
    Term::op(op, args)
}
