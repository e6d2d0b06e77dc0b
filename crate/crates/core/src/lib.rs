//! Count-based estimation and asymptotic inference for finite controlled
//! Markov chains with history-dependent logging policies.
//!
//! Public indices are 1-based at the boundaries (CSV, JSON, 1-based
//! [`model::IndexMap`] methods) and 0-based everywhere else.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod harness;
pub mod inference;
pub mod io;
pub mod mixing;
pub mod model;
pub mod policy;
pub mod reference;
pub mod rl;
pub mod rng;
pub mod simulate;
pub mod special;

pub use error::{CmcError, ExitCode, Result};
