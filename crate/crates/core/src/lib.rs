//! Memory-free approximate message passing driven by semi-random matrices.
//!
//! The crate simulates the iteration `z^{t+1} = M f_{t+1}(z^t)` for structured
//! operators `M = S Ψ S` (random signs around a deterministic orthogonal-ish
//! core), predicts its dynamics with state evolution, and runs the TAP
//! iteration for mean-field Ising models on top of it.
//!
//! Start with the runnable programs under `examples/`; each one exercises one
//! piece of the pipeline end to end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod amp;
pub mod cli;
pub mod ensembles;
pub mod error;
pub mod hermite;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod spectral;
pub mod state_evolution;
pub mod tap;

pub use error::{Error, Result};
