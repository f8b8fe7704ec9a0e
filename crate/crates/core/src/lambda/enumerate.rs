//! Bounded enumeration and seeded sampling of λ-terms.

use rand::Rng;

use super::{Body, LambdaTerm};

/// All terms of `Λ(n)` with node count <= `max_size`, size-major, ordered
/// `Var < Lam < App` with variable indices ascending and arguments compared
/// recursively.
pub fn enumerate_lambda(ctx: usize, max_size: usize) -> Vec<LambdaTerm> {
    let mut out = Vec::new();
    for s in 1..=max_size {
        for b in exact_size(ctx, s) {
            out.push(LambdaTerm { ctx, body: b });
        }
    }
    out
}

fn exact_size(depth: usize, size: usize) -> Vec<Body> {
    if size == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    if size == 1 {
        for i in 0..depth {
            out.push(Body::Var(i));
        }
        return out;
    }
    for b in exact_size(depth + 1, size - 1) {
        out.push(Body::Lam(Box::new(b)));
    }
    for fsize in 1..size - 1 {
        let asize = size - 1 - fsize;
        for f in exact_size(depth, fsize) {
            for a in exact_size(depth, asize) {
                out.push(Body::App(Box::new(f.clone()), Box::new(a)));
            }
        }
    }
    out
}

/// Seeded random term of `Λ(ctx)` with node count <= `max_size`.
pub fn sample_lambda<R: Rng>(rng: &mut R, ctx: usize, max_size: usize) -> LambdaTerm {
    let body = sample_body(rng, ctx, max_size.max(smallest_size(ctx)));
    LambdaTerm { ctx, body }
}

fn smallest_size(depth: usize) -> usize {
    if depth > 0 {
        1
    } else {
        2 // \a. a
    }
}

fn sample_body<R: Rng>(rng: &mut R, depth: usize, budget: usize) -> Body {
    let can_var = depth > 0;
    let can_lam = budget > smallest_size(depth + 1);
    let can_app = budget > 2 * smallest_size(depth);
    let mut choices: Vec<u8> = Vec::new();
    if can_var {
        choices.push(0);
    }
    if can_lam {
        choices.extend_from_slice(&[1, 1]);
    }
    if can_app {
        choices.extend_from_slice(&[2, 2]);
    }
    match choices[rng.gen_range(0..choices.len())] {
        0 => Body::Var(rng.gen_range(0..depth)),
        1 => Body::Lam(Box::new(sample_body(rng, depth + 1, budget - 1))),
        _ => {
            let fmin = smallest_size(depth);
            let fmax = budget - 1 - fmin;
            let fbudget = rng.gen_range(fmin..=fmax);
            let f = sample_body(rng, depth, fbudget);
            let abudget = budget - 1 - f.size();
            let a = sample_body(rng, depth, abudget);
            Body::App(Box::new(f), Box::new(a))
        }
    }
}
