//! Analysis toolkit for finite hidden Markov models.
//!
//! The crate answers three kinds of questions about an HMM given as a set of
//! labeled transition matrices:
//!
//! * **Structure** ([`structure`]): are all state pairs path-mergeable, does
//!   every state have a flag symbol, which pairs are incompatible, and can a
//!   flag word be built explicitly?
//! * **Entropy** ([`entropy`]): exact block entropies `H(X_1^t)`, the
//!   conditional estimates `h(t)`, and a certified interval `[L(t), h(t+1)]`
//!   that always contains the entropy rate.
//! * **Convergence** ([`bounds`]): the constants controlling exponential
//!   convergence of `h(t)` for flag-state models, together with enumeration
//!   checks of the intermediate inequalities they rest on.
//!
//! Block models ([`blocks`]) lift path-mergeable models to flag-state ones,
//! [`convert`] moves between state-emitting and edge-emitting presentations,
//! and [`census`] estimates how common path-mergeability is among random
//! topologies.

pub mod blocks;
pub mod bounds;
pub mod census;
pub mod cli;
pub mod convert;
pub mod entropy;
pub mod error;
pub mod hmm;
pub mod io;
pub mod structure;
pub mod topology;

pub use error::{Error, Result};
pub use hmm::{Distribution, EdgeEmittingHmm, Model, StateEmittingHmm, Word};
pub use topology::Topology;

/// Tolerance on row sums of input documents.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Tolerance on internally computed distributions.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;
