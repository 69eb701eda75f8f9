//! Finishing-time analytics for the layered scheme and both baselines.
//!
//! The job finishes at the first time every layer `j` has `k_j` completed
//! coded tasks. Worker `i` finishes `s` tasks at `s * T_i`, so at time `t` the
//! number of workers that have completed exactly `s` tasks is multinomial with
//! cell probabilities `Δ_s = F_s(t) - F_{s+1}(t)`.
//!
//! Three evaluation routes are provided:
//!
//! - [`finishing_cdf_nested`]: the literal nested sum over `m_1 >= ... >= m_r`.
//! - [`finishing_cdf_dp`]: suffix-sum memoization, `O(r n^2)`.
//! - [`failure_probability`] / [`ln_failure_probability`]: `Pr(τ > t)` summed
//!   over failing configurations only, in log space. All terms are positive so
//!   the result keeps full relative precision in the deep tail.
//!
//! [`finishing_cdf_extended`] repeats the DP in double-double arithmetic.

mod baselines;
mod expected;
mod exponents;
mod finishing;
mod scheme;

pub use baselines::{
    baseline_lee_cdf, baseline_lee_ln_tail, uncoded_cdf, uncoded_ln_tail,
};
pub use expected::{expected_finishing_time, ExpectedTime, TAIL_CUTOFF};
pub use exponents::{
    baseline_coefficients, exponent_report, failure_tail_asymptotic, leading_coefficient,
    leading_coefficient_exact, scaled_exponent, AsymptoticTerm, BaselineCoefficients,
    ExponentReport,
};
pub use finishing::{
    failure_probability, failure_probability_extended, finishing_cdf_dp, finishing_cdf_extended,
    finishing_cdf_nested, ln_failure_probability, summation_state, stage_probabilities,
    StageProbabilities, SummationState,
};
pub use scheme::{Scheme, SchemeAnalysis};
