use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LayerAllocation, SchemeId, StragglerModel, SystemShape};
use crate::numeric::LogFactorials;

/// One term `C(n, needed - 1) exp(-rate (n - needed + 1) (t / depth - shift))`
/// of the large-`t` failure probability: the event that `n - needed + 1`
/// workers have not finished `depth` tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AsymptoticTerm {
    pub depth: usize,
    pub needed: usize,
}

impl AsymptoticTerm {
    pub fn ln_value(&self, n: usize, model: &StragglerModel, t: f64, lf: &LogFactorials) -> f64 {
        let missing = (n - self.needed + 1) as f64;
        lf.ln_choose(n, self.needed - 1)
            - model.per_task_rate * missing * (t / self.depth as f64 - model.per_task_shift)
    }

    /// Slope of `-ln(term)` in `t`.
    pub fn decay_rate(&self, n: usize, rate: f64) -> f64 {
        rate * (n - self.needed + 1) as f64 / self.depth as f64
    }

    /// Time at which the term falls to `level`.
    pub fn crossing_time(&self, n: usize, model: &StragglerModel, level: f64, lf: &LogFactorials) -> f64 {
        let missing = (n - self.needed + 1) as f64;
        let ln_c = lf.ln_choose(n, self.needed - 1);
        self.depth as f64 * (model.per_task_shift + (ln_c - level.ln()) / (model.per_task_rate * missing))
    }
}

pub(crate) fn hierarchical_terms(alloc: &LayerAllocation) -> Vec<AsymptoticTerm> {
    alloc
        .ks
        .iter()
        .enumerate()
        .map(|(j, &kj)| AsymptoticTerm { depth: j + 1, needed: kj })
        .collect()
}

/// Large-`t` approximation `max_j C(n, k_j - 1) e^{-λ (n - k_j + 1)(t/j - a)}`
/// of `Pr(τ > t)`. With `a = 0` this is the familiar shift-free form; the
/// shift only rescales each term by a constant.
pub fn failure_tail_asymptotic(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<f64> {
    alloc.validate_for(shape)?;
    if !(t > 0.0) {
        return Err(Error::invalid(format!("time must be positive, got {t}")));
    }
    let lf = LogFactorials::new(shape.n);
    let ln_max = hierarchical_terms(alloc)
        .iter()
        .map(|term| term.ln_value(shape.n, model, t, &lf))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ln_max.exp())
}

/// `min_j (n - k_j + 1) / j` exactly, with the first layer attaining it
/// (1-based).
pub fn scaled_exponent(alloc: &LayerAllocation, n: usize) -> (Ratio<i64>, usize) {
    alloc
        .ks
        .iter()
        .enumerate()
        .map(|(j, &kj)| (Ratio::new((n + 1 - kj) as i64, (j + 1) as i64), j + 1))
        .fold(None, |best: Option<(Ratio<i64>, usize)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
        .expect("allocation has at least one layer")
}

/// Leading coefficient `L = min_j rate (n - k_j + 1) / j` and its layer.
pub fn leading_coefficient(alloc: &LayerAllocation, n: usize, rate: f64) -> (f64, usize) {
    let (z, j) = scaled_exponent(alloc, n);
    (rate * z.to_f64().expect("small ratio"), j)
}

pub fn leading_coefficient_exact(alloc: &LayerAllocation, n: usize, mu: Ratio<i64>) -> (Ratio<i64>, usize) {
    let (z, j) = scaled_exponent(alloc, n);
    (mu * z, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineCoefficients {
    /// `μ (n - k/r + 1) / r` of the `(n, k/r)` MDS code; `None` unless `r | k`.
    pub l_p: Option<Ratio<i64>>,
    /// `μ n / k` of the uncoded scheme; `None` unless `n | k`.
    pub l_u: Option<Ratio<i64>>,
}

impl BaselineCoefficients {
    pub fn mds(shape: &SystemShape, mu: Ratio<i64>) -> Result<Ratio<i64>> {
        SchemeId::MdsBaseline.check(shape)?;
        let dim = (shape.k / shape.r) as i64;
        Ok(mu * Ratio::new(shape.n as i64 - dim + 1, shape.r as i64))
    }

    pub fn uncoded(shape: &SystemShape, mu: Ratio<i64>) -> Result<Ratio<i64>> {
        SchemeId::Uncoded.check(shape)?;
        Ok(mu * Ratio::new(shape.n as i64, shape.k as i64))
    }
}

/// Baseline coefficients for whichever baselines `shape` admits.
///
/// Fails only when neither baseline is defined.
pub fn baseline_coefficients(shape: &SystemShape, mu: Ratio<i64>) -> Result<BaselineCoefficients> {
    let l_p = BaselineCoefficients::mds(shape, mu);
    let l_u = BaselineCoefficients::uncoded(shape, mu);
    match (l_p, l_u) {
        (Err(e), Err(_)) => Err(e),
        (l_p, l_u) => Ok(BaselineCoefficients {
            l_p: l_p.ok(),
            l_u: l_u.ok(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub l: Ratio<i64>,
    pub l_p: Option<Ratio<i64>>,
    pub l_u: Option<Ratio<i64>>,
    pub argmin_layer: usize,
}

impl ExponentReport {
    /// `L / L_p`, when the baseline is defined.
    pub fn ratio(&self) -> Option<Ratio<i64>> {
        self.l_p.map(|lp| self.l / lp)
    }
}

pub fn exponent_report(alloc: &LayerAllocation, shape: &SystemShape, mu: Ratio<i64>) -> Result<ExponentReport> {
    alloc.validate_for(shape)?;
    let (l, argmin_layer) = leading_coefficient_exact(alloc, shape.n, mu);
    Ok(ExponentReport {
        l,
        l_p: BaselineCoefficients::mds(shape, mu).ok(),
        l_u: BaselineCoefficients::uncoded(shape, mu).ok(),
        argmin_layer,
    })
}
