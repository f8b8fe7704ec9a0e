//! Built-in calculi shipped with the workbench.

use crate::lambda::LambdaTerm;
use crate::spec::{desugar, parse_spec, HoSpec};

/// Source of the extended combinatory logic specification (deterministic).
pub const XCL_SRC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/xcl.hos"));

/// Source of the nondeterministic extension with the binary choice operator
/// `plus`.
pub const XCL_ND_SRC: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/xcl_nd.hos"));

/// The extended combinatory logic specification, desugared and validated.
pub fn xcl() -> HoSpec {
    desugar(&parse_spec(XCL_SRC).expect("shipped xcl.hos parses"))
        .expect("shipped xcl.hos desugars")
}

/// The nondeterministic extension of xCL.
pub fn xcl_nd() -> HoSpec {
    desugar(&parse_spec(XCL_ND_SRC).expect("shipped xcl_nd.hos parses"))
        .expect("shipped xcl_nd.hos desugars")
}

/// Ω = (λx. x x)(λx. x x); reduces to itself in one step under both
/// strategies.
pub fn omega() -> LambdaTerm {
    let dup = LambdaTerm::lam(LambdaTerm::app(
        LambdaTerm::var(1, 0),
        LambdaTerm::var(1, 0),
    ));
    LambdaTerm::app(dup.clone(), dup)
}

/// Θ = B B with B = λx. (x x) x; reduces forever through ever larger terms.
pub fn theta() -> LambdaTerm {
    let b = LambdaTerm::lam(LambdaTerm::app(
        LambdaTerm::app(LambdaTerm::var(1, 0), LambdaTerm::var(1, 0)),
        LambdaTerm::var(1, 0),
    ));
    LambdaTerm::app(b.clone(), b)
}
