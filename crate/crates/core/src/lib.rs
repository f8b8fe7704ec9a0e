//! A workbench for higher-order structural operational semantics.
//!
//! The crate parses and validates rule specifications in a higher-order GSOS
//! format, derives the induced operational model on closed terms (one-step
//! behaviours, deterministic or nondeterministic), and checks bounded strong
//! bisimilarity with replayable witnesses. Extended combinatory logic and its
//! nondeterministic variant ship as built-in specifications; the call-by-name
//! and call-by-value λ-calculus are provided as native de Bruijn steppers with
//! applicative bisimilarity checks.

pub mod bisim;
pub mod builtins;
pub mod engine;
pub mod lambda;
pub mod spec;
pub mod term;
