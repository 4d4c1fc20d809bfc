//! Workbench for the parallel-composition process algebra PA.
//!
//! Two signatures are supported: [`System::Pa1`] with choice `+`, sequencing `.`
//! and lockstep parallel composition `||`, and [`System::Pa2`] which adds the
//! left merge `|_` and communication merge `|`. The crate executes the
//! structural operational semantics of both, decides step, pomset,
//! history-preserving and hereditary history-preserving bisimilarity on closed
//! terms, normalizes terms with the oriented axiom systems, and runs bounded
//! soundness and completeness sweeps of the axiomatizations.

pub mod axioms;
pub mod config;
pub mod enumerate;
pub mod equiv;
mod error;
pub mod parse;
pub mod sos;
pub mod syntax;

pub use config::{Backtrack, Causality, Policy, SemanticsConfig};
pub use error::{Error, Result};
pub use syntax::{EventLabel, Op, System, Term};
