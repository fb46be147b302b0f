//! Finite-domain workbench for statistical-query (SQ) learning experiments.
//!
//! Everything here operates on explicit, finite objects: a domain is a set of
//! `n` points, a distribution is a probability vector over those points, and a
//! concept is a `±1` labeling. On top of that base the crate provides
//!
//! * correlation/loss arithmetic and multiplicative-neighborhood tests between
//!   distributions ([`domain`]),
//! * SQ oracles — exact, sampling, and an adversarial oracle that maintains a
//!   version space ([`oracle`]),
//! * exact and greedy SQ-dimension search plus a neighborhood maximizer
//!   ([`sqdim`]),
//! * majority boosting with the binomial weighting scheme, in both the
//!   example-stream and query models ([`boost`]),
//! * distribution-transfer reductions: rejection sampling for examples and for
//!   queries, properization, and exact identification ([`reduce`]),
//! * a bit-accounted streaming learner model ([`stream`]),
//! * generators, experiment pipelines, and the acceptance/calibration suites
//!   ([`harness`]).
//!
//! All randomized routines take explicit seeds and are deterministic given the
//! seed. Tunable constants live in [`config::Calibration`] and mirror the
//! checked-in `calibration.toml` at the workspace root.

pub mod boost;
pub mod config;
pub mod domain;
pub mod error;
pub mod harness;
pub mod io;
pub mod oracle;
pub mod reduce;
pub mod sqdim;
pub mod stream;

pub use config::Calibration;
pub use domain::{
    correlation, is_mu_close, loss, mix, Concept, ConceptClass, Distribution, Domain,
    LabeledExample,
};
pub use error::{Error, Result};
pub use oracle::{
    AdversarialOracle, ExactOracle, OracleAccount, SamplingOracle, SqOracle, SqQuery, TraceEvent,
    VersionSpace,
};
pub use sqdim::{
    ball_max_sqdim, sq_dim_exact, sq_dim_greedy, verify_witness, BallEstimate, SqWitness,
};
