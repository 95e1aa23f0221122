//! Incentive-compatible probabilistic selection on directed forests.
//!
//! A selection mechanism assigns every forest a probability distribution
//! over its vertices; it is incentive-compatible (IC) when no vertex can
//! change its own probability by rewiring or deleting its out-edge. This
//! crate implements the two log-ratio mechanisms that approximate the
//! maximal progeny within a constant factor (one fair in limit, the other
//! exact), together with their reference points: the non-IC interval
//! share, the uniform and empty baselines, positive epsilon relaxations,
//! and residual-splitting mechanisms generated by a function of progeny.
//!
//! The [`verify`] module audits the structural guarantees exhaustively
//! over all labeled forests up to a size cap: IC, mass bounds, per-forest
//! quality, fairness, the 4/5 quality ceiling, and the constructive
//! over-distribution argument that rules out mechanisms that are
//! simultaneously IC, fair and exact.

#![forbid(unsafe_code)]

pub mod canonical;
pub mod enumerate;
pub mod error;
pub mod family;
pub mod forest;
pub mod format;
pub mod mechanism;
pub mod verify;

pub use error::{Error, Result};
pub use forest::{candidate_set, CandidatePath, Forest, ProgenyTable, Vertex};
pub use mechanism::{evaluate, Distribution, GeneratorTable, MechanismSpec};
