//! Hierarchical coded computation.
//!
//! A linear job is split into `k` small tasks which are clustered into `r`
//! layers. Layer `j` holds `k_j` tasks and is encoded with an `(n, k_j)` MDS
//! code, so every one of the `n` workers receives one coded task per layer and
//! processes its layers in order. Work finished by slow workers still counts:
//! the first layers are covered by many workers, the deeper layers need only a
//! few.
//!
//! The crate is organised as:
//!
//! - [`model`]: system shape, the shifted-exponential straggler law and layer
//!   allocations.
//! - [`analysis`]: exact finishing-time distribution, tails, asymptotic
//!   failure exponents and expected finishing times, for the layered scheme
//!   and the single-layer MDS and uncoded baselines.
//! - [`allocator`]: choice of `(k_1, ..., k_r)` and `r`.
//! - [`codec`]: concrete encode/decode of matrix-vector jobs over the reals or
//!   a prime field.
//! - [`simulator`]: Monte Carlo sampling and a message-passing execution
//!   harness on a virtual clock.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod analysis;
pub mod codec;
pub mod error;
pub mod model;
pub mod numeric;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{LayerAllocation, SchemeId, StragglerModel, SystemShape};
