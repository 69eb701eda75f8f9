use serde::Serialize;

use super::scheme::SchemeAnalysis;
use crate::error::{Error, Result};
use crate::numeric::{integrate, LogFactorials, QuadratureOptions};

/// Quadrature stops where every asymptotic failure term is below this level.
pub const TAIL_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedTime {
    pub value: f64,
    pub quadrature_error: f64,
    /// Analytic integral of the asymptotic terms beyond `cutoff_time`; an
    /// upper bound on the neglected tail, included in `value`.
    pub tail_bound: f64,
    pub cutoff_time: f64,
    pub evaluations: usize,
}

/// `E[τ] = ∫ Pr(τ > t) dt`.
///
/// Below the earliest finishing time the integrand is 1. From there to the
/// cutoff the exact tail is integrated adaptively; past the cutoff the union
/// bound `Σ_j C(n, k_j - 1)(1 - F_j)^{n - k_j + 1}` is integrated in closed form.
pub fn expected_finishing_time(analysis: &SchemeAnalysis) -> Result<ExpectedTime> {
    let n = analysis.shape().n;
    let model = analysis.model();
    let lf = LogFactorials::new(n);
    let terms = analysis.asymptotic_terms();
    let start = analysis.earliest_finish();
    let cutoff = terms
        .iter()
        .map(|term| term.crossing_time(n, model, TAIL_CUTOFF, &lf))
        .fold(start, f64::max);
    if !cutoff.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "tail cutoff is not finite (rate {}, shift {})",
            model.per_task_rate, model.per_task_shift
        )));
    }
    let tail_bound: f64 = terms
        .iter()
        .map(|term| term.ln_value(n, model, cutoff, &lf).exp() / term.decay_rate(n, model.per_task_rate))
        .sum();

    let mut failure: Option<Error> = None;
    let integrand = |t: f64| match analysis.tail(t) {
        Ok(p) => p,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let opts = QuadratureOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-9,
        ..QuadratureOptions::default()
    };
    let quad = integrate(integrand, start, cutoff, opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let quad = quad?;
    Ok(ExpectedTime {
        value: start + quad.value + tail_bound,
        quadrature_error: quad.error_estimate,
        tail_bound,
        cutoff_time: cutoff,
        evaluations: quad.evaluations,
    })
}
