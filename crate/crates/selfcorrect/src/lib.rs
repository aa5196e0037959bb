//! Probabilistic toolkit for multi-round self-correction dynamics.
//!
//! Models each question as a two-state Markov chain over correct/wrong and
//! provides:
//!
//! - [`theory`]: closed forms and recursions for the accuracy curve
//!   `Acc_t = Upp - alpha^t (Upp - Acc_0)` and its corollaries;
//! - [`simulator`]: seeded, order-invariant Monte Carlo simulation of the
//!   chains, including initial-accuracy forcing and the oracle-verifier
//!   (correct-state-absorbing) regime;
//! - [`estimation`]: plug-in estimation of per-question probabilities and
//!   dataset-level CL/CS from transcripts or label snapshots;
//! - [`fitting`]: curve prediction from a single round of measurements and
//!   inverse fitting of (Upp, alpha, Acc_0) from an observed curve;
//! - [`io`]: TOML profile documents, CSV transcripts, and curve tables.

pub mod error;
pub mod estimation;
pub mod fitting;
pub mod io;
pub mod simulator;
pub mod theory;

pub use error::{Error, Result};
pub use theory::{AccuracyCurve, DatasetProfile, QuestionProfile, TheoryParams};
