use crate::error::{Error, Result};
use crate::model::{SchemeId, StragglerModel, SystemShape};
use crate::numeric::{log1mexp, log_sum_exp, LogFactorials};

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// `(ln p, ln(1 - p))` for a worker finishing `s` tasks by `t`.
fn ln_success_failure(model: &StragglerModel, s: usize, t: f64) -> (f64, f64) {
    match model.exponent(s, t) {
        None => (f64::NEG_INFINITY, 0.0),
        Some(x) => (log1mexp(x), -x),
    }
}

fn ln_binomial_mass(n: usize, i: usize, ln_p: f64, ln_q: f64, lf: &LogFactorials) -> f64 {
    let a = if i == 0 { 0.0 } else { i as f64 * ln_p };
    let b = if i == n { 0.0 } else { (n - i) as f64 * ln_q };
    lf.ln_choose(n, i) + a + b
}

/// `Pr(τ_p <= t)` for the single-layer `(n, k/r)` MDS code in which every
/// worker's one task is `r` small tasks long.
pub fn baseline_lee_cdf(shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<f64> {
    SchemeId::MdsBaseline.check(shape)?;
    check_time(t)?;
    let (n, need) = (shape.n, shape.k / shape.r);
    let (ln_p, ln_q) = ln_success_failure(model, shape.r, t);
    let lf = LogFactorials::new(n);
    let ln = log_sum_exp((need..=n).map(|i| ln_binomial_mass(n, i, ln_p, ln_q, &lf)));
    Ok(ln.exp().clamp(0.0, 1.0))
}

/// `ln Pr(τ_p > t)` summed over the failing outcomes only.
pub fn baseline_lee_ln_tail(shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<f64> {
    SchemeId::MdsBaseline.check(shape)?;
    check_time(t)?;
    let (n, need) = (shape.n, shape.k / shape.r);
    let (ln_p, ln_q) = ln_success_failure(model, shape.r, t);
    let lf = LogFactorials::new(n);
    Ok(log_sum_exp((0..need).map(|i| ln_binomial_mass(n, i, ln_p, ln_q, &lf))).min(0.0))
}

/// `Pr(τ_u <= t)`: every worker must finish its `k/n` tasks.
pub fn uncoded_cdf(shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<f64> {
    SchemeId::Uncoded.check(shape)?;
    check_time(t)?;
    let (ln_p, _) = ln_success_failure(model, shape.k / shape.n, t);
    Ok((shape.n as f64 * ln_p).exp())
}

pub fn uncoded_ln_tail(shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<f64> {
    SchemeId::Uncoded.check(shape)?;
    check_time(t)?;
    let (ln_p, _) = ln_success_failure(model, shape.k / shape.n, t);
    let ln_cdf = shape.n as f64 * ln_p;
    // ln(1 - e^{ln_cdf})
    Ok(log1mexp(-ln_cdf))
}
