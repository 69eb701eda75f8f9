//! Numerical building blocks: double-double arithmetic, log-space helpers and
//! adaptive quadrature.

mod dd;
mod logspace;
mod quadrature;

pub use dd::DoubleDouble;
pub use logspace::{log1mexp, log_add_exp, log_sum_exp, LogFactorials};
pub use quadrature::{integrate, QuadratureOptions, QuadratureOutput};
