//! Ex-post stability of random matchings in two-sided markets with weak
//! preferences and priorities.
//!
//! A random matching is an exact-rational bistochastic matrix over agents and
//! items. This crate decides whether such a matrix is a lottery over weakly
//! stable deterministic matchings, computes decompositions that maximise the
//! probability of drawing a weakly stable matching, and tests the stronger
//! notions (robust ex-post stability, ex-post strong stability). Brute-force
//! oracles in [`oracle`] back every fast path with an independent check.
//!
//! Everything is exact: probabilities are [`Rat`] values (arbitrary precision
//! rationals) and no tolerance is ever applied.

#![allow(clippy::needless_range_loop)]

pub mod bipartite;
pub mod error;
pub mod expost;
pub mod formats;
pub mod fractional;
pub mod gen;
pub mod instance;
pub mod lp;
pub mod matching;
pub mod oracle;
pub mod randmatch;
pub mod rational;
pub mod robust;
pub mod strong;

pub use error::{Error, Result};
pub use expost::{
    enumerate_stable_support_matchings, find_consistent_stable, max_stable_decomposition, ExpostResult, DEFAULT_CAP,
};
pub use fractional::{
    check_fractional_stability, check_fractional_strong_stability, Condition, FractionalReport, FractionalViolation,
};
pub use instance::{complete_instance, validate_instance, Instance, ValidationReport, WeakOrder};
pub use matching::{
    deferred_acceptance, is_strongly_stable, is_weakly_stable, BlockKind, BlockingPair, DeterministicMatching,
    StabilityReport, TieBreak,
};
pub use randmatch::{birkhoff_decompose, recombine, validate_random_matching, Decomposition, RandomMatching, Term};
pub use rational::Rat;
pub use robust::{is_robust_expost_stable, RobustResult, RobustWitness};
pub use strong::{expost_strong_decompose, IntervalLayout};
