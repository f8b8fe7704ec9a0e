//! Acceptance suite: one test per criterion, each printing a pass line.
//! Oracles (named-term substitution, weak-head spine reduction, coverage
//! prediction) are coded independently of the implementation paths they
//! check.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hosos::bisim::{
    check, check_nd, congruence_probe, replay_witness, CheckConfig, Mismatch, Verdict,
};
use hosos::builtins::{self, omega, theta};
use hosos::engine::{apply_fun, Behavior, BehaviorKind, Session, Terminal};
use hosos::lambda::{
    app_bisim_closed, app_bisim_open, apply_body, coalg_bisim, enumerate_lambda,
    replay_lambda_witness, sample_lambda, step_cbn, step_cbv, subst_sim, Body, LambdaBehavior,
    LambdaCheckConfig, LambdaTerm, LambdaVerdict, Strategy,
};
use hosos::spec::{desugar, parse_spec, Premise, SpecDiagnostic, SugaredRule};
use hosos::term::{enumerate_closed, parse_term, render, Term, TermMode};

fn xcl_term(src: &str) -> Term {
    parse_term(src, &builtins::xcl().sig, TermMode::Closed).unwrap()
}

fn nd_term(src: &str) -> Term {
    parse_term(src, &builtins::xcl_nd().sig, TermMode::Closed).unwrap()
}

fn hosos_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hosos"))
}

fn workspace_asset(name: &str) -> String {
    format!("{}/../../assets/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn id0() -> LambdaTerm {
    LambdaTerm::lam(LambdaTerm::var(1, 0))
}

// ---------------------------------------------------------------------------
// Criterion 1: golden traces for the two combinator chains.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_golden_traces() {
    let spec = builtins::xcl();
    let mut session = Session::new(&spec);
    let t0 = xcl_term("S");

    for (start, mid, second) in [
        ("(S K) I", "S''(K, I)", "I"),
        ("(S K) K", "S''(K, K)", "K"),
    ] {
        let trace = session.trace(&xcl_term(start), 10).unwrap();
        assert_eq!(trace.terminal, Terminal::Fun);
        let kinds: Vec<BehaviorKind> = trace.events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![BehaviorKind::Reduce, BehaviorKind::Reduce, BehaviorKind::Fun]
        );
        let states: Vec<&Term> = trace.events.iter().map(|e| &e.state).collect();
        assert_eq!(states[0], &xcl_term(start));
        assert_eq!(states[1], &xcl_term(&format!("S'(K) {second}")));
        assert_eq!(states[2], &xcl_term(mid));

        // Apply the function template to a fresh argument and keep going:
        // (K t0)(second t0) -> K'(t0) (second t0) -> t0.
        let fun = session.step(&xcl_term(mid)).unwrap();
        let applied = apply_fun(&fun, &t0).unwrap();
        assert_eq!(applied, xcl_term(&format!("(K S) ({second} S)")));
        let s1 = match session.step(&applied).unwrap() {
            Behavior::Reduce(t) => t,
            other => panic!("expected reduce, got {other:?}"),
        };
        assert_eq!(s1, xcl_term(&format!("K'(S) ({second} S)")));
        let s2 = match session.step(&s1).unwrap() {
            Behavior::Reduce(t) => t,
            other => panic!("expected reduce, got {other:?}"),
        };
        assert_eq!(s2, t0);
    }

    // The CLI emits exactly this chain as its machine document.
    let out = hosos_bin()
        .args(["run", "xcl", "(S K) I", "--steps", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["terminal"], "fun");
    let states: Vec<&str> = doc["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["state"].as_str().unwrap())
        .collect();
    assert_eq!(states, vec!["S K I", "S'(K) I", "S''(K, I)"]);
    let kinds: Vec<&str> = doc["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, vec!["reduce", "reduce", "fun"]);

    println!("[acceptance] criterion 1 (golden traces): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 2: spec pipeline — rule count, coverage, gaps, overlaps.
// ---------------------------------------------------------------------------

/// Independent coverage oracle: a sugared rule covers exactly the sets
/// `W = mentioned-reducing ∪ S` for `S` ranging over the unmentioned
/// operands.
fn covered_sets(rule: &SugaredRule) -> BTreeSet<BTreeSet<usize>> {
    let index: BTreeMap<&str, usize> = rule
        .operands
        .iter()
        .enumerate()
        .map(|(k, v)| (v.as_str(), k + 1))
        .collect();
    let mut reducing = BTreeSet::new();
    let mut mentioned = BTreeSet::new();
    for p in &rule.premises {
        match p {
            Premise::Reduce { source, .. } => {
                let i = index[source.as_str()];
                reducing.insert(i);
                mentioned.insert(i);
            }
            Premise::Labeled { source, .. } => {
                mentioned.insert(index[source.as_str()]);
            }
        }
    }
    let unmentioned: Vec<usize> =
        (1..=rule.operands.len()).filter(|i| !mentioned.contains(i)).collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << unmentioned.len()) {
        let mut w = reducing.clone();
        for (bit, &i) in unmentioned.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                w.insert(i);
            }
        }
        out.insert(w);
    }
    out
}

#[test]
fn criterion_02_spec_pipeline() {
    let sugared = parse_spec(builtins::XCL_SRC).unwrap();
    let spec = desugar(&sugared).unwrap();
    assert_eq!(spec.rule_count(), 15);

    // Full (f, W) coverage with singletons.
    for (op, arity) in spec.sig.symbols() {
        for mask in 0u32..(1 << arity) {
            let w: BTreeSet<usize> =
                (1..=arity).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            assert_eq!(spec.lookup(op, &w).len(), 1, "({op}, {w:?})");
        }
    }

    // Deleting any sugared rule produces exactly the predicted gap list.
    for victim in &sugared.rules {
        let predicted: BTreeSet<(String, BTreeSet<usize>)> = {
            let own = covered_sets(victim);
            let others: BTreeSet<BTreeSet<usize>> = sugared
                .rules
                .iter()
                .filter(|r| r.name != victim.name && r.op == victim.op)
                .flat_map(covered_sets)
                .collect();
            own.difference(&others)
                .map(|w| (victim.op.clone(), w.clone()))
                .collect()
        };
        let mut mutilated = sugared.clone();
        mutilated.rules.retain(|r| r.name != victim.name);
        let diags = desugar(&mutilated).unwrap_err();
        let gaps: BTreeSet<(String, BTreeSet<usize>)> = diags
            .iter()
            .filter_map(|d| match d {
                SpecDiagnostic::Gap { op, w } => Some((op.clone(), w.clone())),
                _ => None,
            })
            .collect();
        assert_eq!(gaps, predicted, "deleting {}", victim.name);
        assert_eq!(gaps.len(), diags.len(), "only gap diagnostics expected");
    }

    // Duplicating any sugared rule produces overlap errors on its covered
    // sets.
    for victim in &sugared.rules {
        let mut doubled = sugared.clone();
        let mut copy = victim.clone();
        copy.name = format!("{}_copy", victim.name);
        doubled.rules.push(copy);
        let diags = desugar(&doubled).unwrap_err();
        let overlaps: BTreeSet<BTreeSet<usize>> = diags
            .iter()
            .filter_map(|d| match d {
                SpecDiagnostic::Overlap { op, w, .. } if *op == victim.op => Some(w.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(overlaps, covered_sets(victim), "duplicating {}", victim.name);
    }

    // The CLI agrees and reports the shipped file as complete.
    let out = hosos_bin().args(["check-spec", &workspace_asset("xcl.hos")]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("15 rules, det, complete"));
    let out = hosos_bin().args(["check-spec", &workspace_asset("xcl_nd.hos")]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nd"));

    println!("[acceptance] criterion 2 (spec pipeline): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 3: bisimilarity verdicts, deterministic and nondeterministic.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_bisimilarity_verdicts() {
    let spec = builtins::xcl();
    let pool = enumerate_closed(&spec.sig, 3);

    let cfg = CheckConfig::new(10, pool.clone());
    let v = check(&spec, &xcl_term("(S K) I"), &xcl_term("(S K) K"), &cfg).unwrap();
    assert!(matches!(v, Verdict::NoCounterexampleWithin { .. }), "{v:?}");

    let cfg3 = CheckConfig::new(3, pool);
    let v = check(&spec, &xcl_term("I"), &xcl_term("K"), &cfg3).unwrap();
    match &v {
        Verdict::Distinguished { witness, mismatch } => {
            assert_eq!(*mismatch, Mismatch::Kind);
            assert!(
                replay_witness(&spec, &xcl_term("I"), &xcl_term("K"), witness, &cfg3).unwrap(),
                "witness must replay"
            );
        }
        other => panic!("expected distinguished, got {other:?}"),
    }

    let nd = builtins::xcl_nd();
    let nd_pool = enumerate_closed(&nd.sig, 2);
    let nd_cfg = CheckConfig::new(6, nd_pool);
    let v = check_nd(&nd, &nd_term("plus(I, K)"), &nd_term("plus(K, I)"), &nd_cfg).unwrap();
    assert!(matches!(v, Verdict::NoCounterexampleWithin { .. }), "{v:?}");

    let v = check_nd(&nd, &nd_term("plus(I, K)"), &nd_term("I"), &nd_cfg).unwrap();
    match &v {
        Verdict::Distinguished { witness, .. } => {
            assert!(replay_witness(&nd, &nd_term("plus(I, K)"), &nd_term("I"), witness, &nd_cfg)
                .unwrap());
        }
        other => panic!("expected distinguished, got {other:?}"),
    }

    // CLI exit codes mirror the verdicts.
    let ok = hosos_bin()
        .args(["bisim", "xcl", "(S K) I", "(S K) K", "--depth", "10", "--pool-size", "3"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let distinguished = hosos_bin()
        .args(["bisim", "xcl", "I", "K", "--depth", "3", "--pool-size", "3"])
        .output()
        .unwrap();
    assert_eq!(distinguished.status.code(), Some(3));

    println!("[acceptance] criterion 3 (bisimilarity verdicts): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 4: congruence probes find no anomalies.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_congruence_probe() {
    let spec = builtins::xcl();
    let cfg = CheckConfig::new(5, enumerate_closed(&spec.sig, 3));

    let report = congruence_probe(
        &spec,
        &xcl_term("(S K) I"),
        &xcl_term("(S K) K"),
        500,
        8,
        &cfg,
        42,
    )
    .unwrap();
    assert_eq!(report.contexts_tried, 500);
    assert!(report.anomalies.is_empty(), "{:?}", report.to_json());

    // Diagonal probes on random terms.
    let universe = enumerate_closed(&spec.sig, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for k in 0..100 {
        let p = universe[rng.gen_range(0..universe.len())].clone();
        let report = congruence_probe(&spec, &p, &p, 100, 8, &cfg, 1000 + k).unwrap();
        assert!(
            report.anomalies.is_empty(),
            "diagonal probe on {} found anomalies",
            render(&p)
        );
    }

    println!("[acceptance] criterion 4 (congruence probe): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 5: simultaneous substitution against a named-term oracle.
// ---------------------------------------------------------------------------

/// Named λ-terms with globally unique binder identifiers; the oracle route
/// to capture avoidance is α-renaming every binder during substitution.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Named {
    V(u64),
    L(u64, Box<Named>),
    A(Box<Named>, Box<Named>),
}

const SLOT_BASE: u64 = 1_000_000;
const RESULT_BASE: u64 = 2_000_000;

fn to_named(t: &LambdaTerm, slot_base: u64, fresh: &mut u64) -> Named {
    fn go(b: &Body, env: &[u64], slot_base: u64, fresh: &mut u64) -> Named {
        match b {
            Body::Var(i) => {
                if *i < env.len() {
                    Named::V(env[env.len() - 1 - i])
                } else {
                    Named::V(slot_base + (*i - env.len()) as u64)
                }
            }
            Body::Lam(body) => {
                let id = *fresh;
                *fresh += 1;
                let mut env2 = env.to_vec();
                env2.push(id);
                Named::L(id, Box::new(go(body, &env2, slot_base, fresh)))
            }
            Body::App(f, a) => Named::A(
                Box::new(go(f, env, slot_base, fresh)),
                Box::new(go(a, env, slot_base, fresh)),
            ),
        }
    }
    go(t.body(), &[], slot_base, fresh)
}

/// Capture-avoiding simultaneous substitution on named terms: every binder
/// is α-renamed to a fresh identifier on the way down.
fn subst_named(t: &Named, map: &BTreeMap<u64, Named>, fresh: &mut u64) -> Named {
    match t {
        Named::V(x) => map.get(x).cloned().unwrap_or(Named::V(*x)),
        Named::A(f, a) => Named::A(
            Box::new(subst_named(f, map, fresh)),
            Box::new(subst_named(a, map, fresh)),
        ),
        Named::L(x, b) => {
            let z = *fresh;
            *fresh += 1;
            let mut map2 = map.clone();
            map2.insert(*x, Named::V(z));
            Named::L(z, Box::new(subst_named(b, &map2, fresh)))
        }
    }
}

fn from_named(t: &Named, result_ctx: usize) -> LambdaTerm {
    fn go(t: &Named, env: &[u64]) -> Body {
        match t {
            Named::V(x) => {
                if let Some(k) = env.iter().rev().position(|b| b == x) {
                    Body::Var(k)
                } else {
                    assert!(*x >= RESULT_BASE, "unexpected free name {x}");
                    Body::Var(env.len() + (x - RESULT_BASE) as usize)
                }
            }
            Named::L(x, b) => {
                let mut env2 = env.to_vec();
                env2.push(*x);
                Body::Lam(Box::new(go(b, &env2)))
            }
            Named::A(f, a) => Body::App(Box::new(go(f, env)), Box::new(go(a, env))),
        }
    }
    LambdaTerm::from_body(result_ctx, go(t, &[])).expect("oracle produced a valid term")
}

fn oracle_subst_sim(t: &LambdaTerm, images: &[LambdaTerm]) -> LambdaTerm {
    assert_eq!(images.len(), t.ctx());
    let result_ctx = images.first().map_or(0, LambdaTerm::ctx);
    let mut fresh = 10_000_000u64;
    let named_t = to_named(t, SLOT_BASE, &mut fresh);
    let map: BTreeMap<u64, Named> = images
        .iter()
        .enumerate()
        .map(|(p, u)| (SLOT_BASE + p as u64, to_named(u, RESULT_BASE, &mut fresh)))
        .collect();
    let result = subst_named(&named_t, &map, &mut fresh);
    from_named(&result, result_ctx)
}

#[test]
fn criterion_05_substitution_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for i in 0..1000 {
        let n = rng.gen_range(0..=4usize);
        let m = rng.gen_range(0..=4usize);
        let t = sample_lambda(&mut rng, n, 12);
        let images: Vec<LambdaTerm> = (0..n).map(|_| sample_lambda(&mut rng, m, 8)).collect();
        let got = subst_sim(&t, &images).unwrap();
        let want = oracle_subst_sim(&t, &images);
        assert_eq!(got.body(), want.body(), "instance {i}: {t} with {images:?}");
    }
    println!("[acceptance] criterion 5 (substitution oracle, 1000 instances): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 6: call-by-name trichotomy against a spine-walking reducer.
// ---------------------------------------------------------------------------

enum WhnfClass {
    Reduces(LambdaTerm),
    Abstraction,
    HeadVariable,
}

/// Independent leftmost-outermost weak-head oracle: decompose the spine
/// `h a1 ... ak`; an abstraction head with arguments contracts via the named
/// substitution oracle, a bare abstraction is a value, a variable head is
/// stuck.
fn whnf_oracle(t: &LambdaTerm) -> WhnfClass {
    let ctx = t.ctx();
    let mut spine: Vec<Body> = Vec::new();
    let mut head = t.body().clone();
    while let Body::App(f, a) = head {
        spine.push(*a);
        head = *f;
    }
    spine.reverse();
    match head {
        Body::Var(_) => WhnfClass::HeadVariable,
        Body::Lam(b) => {
            if spine.is_empty() {
                WhnfClass::Abstraction
            } else {
                let body = LambdaTerm::from_body(ctx + 1, *b).unwrap();
                let arg = LambdaTerm::from_body(ctx, spine[0].clone()).unwrap();
                let mut images = vec![arg];
                for i in 0..ctx {
                    images.push(LambdaTerm::var(ctx, i));
                }
                let mut reduced = oracle_subst_sim(&body, &images);
                for rest in &spine[1..] {
                    reduced = LambdaTerm::app(
                        reduced,
                        LambdaTerm::from_body(ctx, rest.clone()).unwrap(),
                    );
                }
                WhnfClass::Reduces(reduced)
            }
        }
        Body::App(..) => unreachable!("spine strips applications"),
    }
}

#[test]
fn criterion_06_cbn_trichotomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut seen_each = [0usize; 3];
    for i in 0..1000 {
        let n = rng.gen_range(0..=3usize);
        let t = sample_lambda(&mut rng, n, 12);
        match (step_cbn(&t), whnf_oracle(&t)) {
            (LambdaBehavior::Reduce(got), WhnfClass::Reduces(want)) => {
                assert_eq!(got.body(), want.body(), "instance {i}: successor mismatch on {t}");
                seen_each[0] += 1;
            }
            (LambdaBehavior::Fun(_), WhnfClass::Abstraction) => seen_each[1] += 1,
            (LambdaBehavior::Stuck, WhnfClass::HeadVariable) => seen_each[2] += 1,
            (got, _) => panic!("instance {i}: classification mismatch on {t}: {got:?}"),
        }
    }
    assert!(seen_each.iter().all(|&k| k > 0), "classes hit: {seen_each:?}");
    println!("[acceptance] criterion 6 (weak-head trichotomy, 1000 instances): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 7: applicative distinctions and identifications.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_applicative_verdicts() {
    // λx. x vs λx. (λy. y) x: distinguished at depth 3 with pool {λ.0}.
    let eta = LambdaTerm::lam(LambdaTerm::app(
        LambdaTerm::lam(LambdaTerm::var(2, 0)),
        LambdaTerm::var(1, 0),
    ));
    let cfg = LambdaCheckConfig::new(3, vec![id0()]);
    let v = app_bisim_closed(&id0(), &eta, Strategy::Cbn, &cfg).unwrap();
    match &v {
        LambdaVerdict::Distinguished { witness, .. } => {
            assert!(replay_lambda_witness(Strategy::Cbn, &id0(), &eta, witness));
        }
        other => panic!("expected distinguished, got {other:?}"),
    }

    // Ω vs Θ: no counterexample at depth 20, and never distinguished at any
    // tested depth up to 50.
    for depth in [5, 10, 20, 35, 50] {
        let cfg = LambdaCheckConfig::new(depth, enumerate_lambda(0, 4));
        let v = app_bisim_closed(&omega(), &theta(), Strategy::Cbn, &cfg).unwrap();
        assert!(!v.is_distinguished(), "depth {depth}: {v:?}");
    }

    // CLI exit codes.
    let out = hosos_bin()
        .args(["bisim", "lambda_cbn", "\\x.x", "\\x.(\\y.y) x", "--depth", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = hosos_bin()
        .args(["bisim", "lambda_cbn", "OMEGA", "THETA", "--depth", "20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    println!("[acceptance] criterion 7 (applicative verdicts): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 8: coalgebraic check agrees with the open extension.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_coincidence_cross_check() {
    // Pool with values of several shapes plus a diverger; the same pool
    // closes open terms and feeds function comparisons.
    let mut pool = enumerate_lambda(0, 3);
    pool.push(omega());
    let cfg = LambdaCheckConfig::new(4, pool.clone());

    // Curated corpus: 50 pairs in contexts <= 2 mixing equal, bisimilar, and
    // distinguishable terms.
    let mut corpus: Vec<(LambdaTerm, LambdaTerm)> = Vec::new();
    let ctx1 = enumerate_lambda(1, 4);
    for i in 0..ctx1.len().min(8) {
        for j in i..ctx1.len().min(8) {
            corpus.push((ctx1[i].clone(), ctx1[j].clone()));
        }
    }
    let ctx2 = enumerate_lambda(2, 3);
    for i in 0..ctx2.len() {
        for j in i..ctx2.len() {
            corpus.push((ctx2[i].clone(), ctx2[j].clone()));
        }
    }
    corpus.truncate(50);
    assert_eq!(corpus.len(), 50);

    let mut agreements = 0;
    for (a, b) in &corpus {
        let open = app_bisim_open(a, b, Strategy::Cbn, &cfg, &pool, 1000).unwrap();
        let coalg = coalg_bisim(a, b, Strategy::Cbn, &cfg, &pool, 2).unwrap();
        assert_eq!(
            open.is_distinguished(),
            coalg.is_distinguished(),
            "disagree on {a} vs {b}: open={open:?} coalg={coalg:?}"
        );
        if let LambdaVerdict::Distinguished { witness, .. } = &coalg {
            assert!(replay_lambda_witness(Strategy::Cbn, a, b, witness));
        }
        agreements += 1;
    }
    assert_eq!(agreements, 50);
    println!("[acceptance] criterion 8 (coincidence cross-check, 50 pairs): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 9: algebraic property suites and witness replay soundness.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_algebraic_suites() {
    use hosos::lambda::rename;

    // Renaming functoriality.
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..1000 {
        let n = rng.gen_range(0..=4usize);
        let t = sample_lambda(&mut rng, n, 12);
        let m = rng.gen_range(1..=5usize);
        let k = rng.gen_range(1..=5usize);
        let r: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
        let s: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let composed: Vec<usize> = r.iter().map(|&i| s[i]).collect();
        assert_eq!(
            rename(&rename(&t, &r, m).unwrap(), &s, k).unwrap(),
            rename(&t, &composed, k).unwrap()
        );
        assert_eq!(rename(&t, &(0..n).collect::<Vec<_>>(), n).unwrap(), t);
    }

    // Substitution composition.
    for _ in 0..1000 {
        let n = rng.gen_range(1..=3usize);
        let k = rng.gen_range(1..=3usize);
        let m = rng.gen_range(1..=3usize);
        let t = sample_lambda(&mut rng, n, 10);
        let us: Vec<LambdaTerm> = (0..n).map(|_| sample_lambda(&mut rng, k, 6)).collect();
        let vs: Vec<LambdaTerm> = (0..k).map(|_| sample_lambda(&mut rng, m, 6)).collect();
        let lhs = subst_sim(&subst_sim(&t, &us).unwrap(), &vs).unwrap();
        let images: Vec<LambdaTerm> = us.iter().map(|u| subst_sim(u, &vs).unwrap()).collect();
        assert_eq!(lhs, subst_sim(&t, &images).unwrap());
    }

    // Parse/render round trips.
    let spec = builtins::xcl();
    for t in enumerate_closed(&spec.sig, 6) {
        assert_eq!(parse_term(&render(&t), &spec.sig, TermMode::Closed).unwrap(), t);
    }

    // Enumeration exactness versus recursive counting for sizes <= 4.
    fn count_exact(sig_arities: &[usize], size: usize, cache: &mut BTreeMap<usize, usize>) -> usize {
        if let Some(&c) = cache.get(&size) {
            return c;
        }
        let mut total = 0;
        for &ar in sig_arities {
            match ar {
                0 => {
                    if size == 1 {
                        total += 1;
                    }
                }
                1 => {
                    if size >= 2 {
                        total += count_exact(sig_arities, size - 1, cache);
                    }
                }
                2 => {
                    for left in 1..size.saturating_sub(1) {
                        total += count_exact(sig_arities, left, cache)
                            * count_exact(sig_arities, size - 1 - left, cache);
                    }
                }
                _ => unreachable!("xCL arities are 0..2"),
            }
        }
        cache.insert(size, total);
        total
    }
    let arities: Vec<usize> = spec.sig.symbols().map(|(_, a)| a).collect();
    let mut cache = BTreeMap::new();
    let expected: usize = (1..=4).map(|s| count_exact(&arities, s, &mut cache)).sum();
    let enumerated = enumerate_closed(&spec.sig, 4);
    assert_eq!(enumerated.len(), expected);
    let as_set: BTreeSet<Term> = enumerated.iter().cloned().collect();
    assert_eq!(as_set.len(), enumerated.len());

    // Witness replay soundness for freshly produced distinguished verdicts,
    // deterministic and λ.
    let cfg = CheckConfig::new(4, enumerate_closed(&spec.sig, 3));
    let mut replayed = 0;
    for (a, b) in [("I", "K"), ("S", "K"), ("I", "S''(K, K)"), ("K'(S)", "K'(K)")] {
        let p = xcl_term(a);
        let q = xcl_term(b);
        if let Verdict::Distinguished { witness, .. } = check(&spec, &p, &q, &cfg).unwrap() {
            assert!(replay_witness(&spec, &p, &q, &witness, &cfg).unwrap(), "{a} vs {b}");
            replayed += 1;
        }
    }
    assert!(replayed >= 3);

    let lcfg = LambdaCheckConfig::new(4, {
        let mut p = enumerate_lambda(0, 4);
        p.push(omega());
        p
    });
    let lambda_pairs = [
        (id0(), LambdaTerm::lam(LambdaTerm::lam(LambdaTerm::var(2, 0)))),
        (id0(), LambdaTerm::app(id0(), id0())),
        (omega(), id0()),
    ];
    for (a, b) in &lambda_pairs {
        if let LambdaVerdict::Distinguished { witness, .. } =
            app_bisim_closed(a, b, Strategy::Cbn, &lcfg).unwrap()
        {
            assert!(replay_lambda_witness(Strategy::Cbn, a, b, &witness), "{a} vs {b}");
            replayed += 1;
        }
    }
    assert!(replayed >= 6);

    println!("[acceptance] criterion 9 (algebraic suites): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 10: call-by-value clause table.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_cbv_clause_table() {
    let var0 = LambdaTerm::var(1, 0);
    let id_in1 = id0().weaken_to(1);
    let two_lam = LambdaTerm::lam(LambdaTerm::var(2, 1)); // λ_. x0 in ctx 1

    // Variable: stuck.
    assert_eq!(step_cbv(&var0), LambdaBehavior::Stuck);

    // Abstraction: function behaviour carrying its body.
    match step_cbv(&id0()) {
        LambdaBehavior::Fun(b) => assert_eq!(b, LambdaTerm::var(1, 0)),
        other => panic!("expected fun, got {other:?}"),
    }

    // Application, left operand reduces: it steps in place.
    let redex = LambdaTerm::app(id0(), id0());
    let t = LambdaTerm::app(redex.clone(), id0());
    assert_eq!(
        step_cbv(&t),
        LambdaBehavior::Reduce(LambdaTerm::app(id0(), id0()))
    );

    // Application, left is a function and the argument reduces: the argument
    // steps first — (λx. x) Ω stays (λx. x) Ω.
    let t = LambdaTerm::app(id0(), omega());
    assert_eq!(step_cbv(&t), LambdaBehavior::Reduce(t.clone()));

    // Application of a function to a function: β on the value.
    let t = LambdaTerm::app(id0(), id0());
    assert_eq!(step_cbv(&t), LambdaBehavior::Reduce(id0()));

    // Application of a function to a stuck argument: β still fires.
    let t = LambdaTerm::app(two_lam, var0.clone());
    assert_eq!(step_cbv(&t), LambdaBehavior::Reduce(var0.clone()));

    // Stuck left operand propagates.
    let t = LambdaTerm::app(var0, id_in1);
    assert_eq!(step_cbv(&t), LambdaBehavior::Stuck);

    // β uses the same application semantics as the behaviour body.
    let body = match step_cbv(&id0()) {
        LambdaBehavior::Fun(b) => b,
        other => panic!("{other:?}"),
    };
    assert_eq!(apply_body(&body, &omega()), omega());

    println!("[acceptance] criterion 10 (call-by-value clause table): PASS");
}
