//! Core of the UCCA toolkit: passages, guideline checks, DAG F1 scoring,
//! lossy approximation conversions and a transition-based baseline parser.
//!
//! Everything here is allocation-only `no_std` code; reading and writing
//! files lives in the `ucca-tools` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod category;
pub mod convert;
pub mod evaluate;
pub mod graph;
mod hash;
pub mod parser;
pub mod samples;
pub mod synth;
pub mod validate;

pub use category::Category;
pub use evaluate::{EvalOptions, EvalReport, ScoreTriple};
pub use graph::{Edge, GraphError, Passage, PassageBuilder, Terminal, Unit, UnitId};
pub use validate::{normalize, validate, Violation};
