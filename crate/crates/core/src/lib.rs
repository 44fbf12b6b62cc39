//! Profiling text-generating systems by the lexical, readability, sentiment
//! and similarity signature of their outputs, and comparing those profiles
//! with rank-based tests.

pub mod corpus;
pub mod error;
pub mod genharness;
mod http;
pub mod lexmetrics;
pub mod report;
pub mod semmetrics;
pub mod stats;
pub mod textseg;

pub use error::{Error, Result};
