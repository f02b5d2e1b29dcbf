//! Tooling around tutor-response classification: corpus preprocessing into
//! per-track instruction files, strict and lenient macro-F1 scoring,
//! disagreement-aware ensemble aggregation, low-rank adapter numerics, and
//! report rendering.

pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod jsonl;
pub mod label;
pub mod lora;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
pub use label::{ClassLabel, Label, LenientLabel, Track};
