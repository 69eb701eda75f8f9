use crate::error::{Error, Result};
use crate::model::{LayerAllocation, StragglerModel, SystemShape};
use crate::numeric::{log1mexp, log_sum_exp, DoubleDouble, LogFactorials};

/// Per-stage probabilities at a fixed time for `s = 0..=r`.
///
/// `ln_reach[s] = ln F_s(t)` is the log-probability that a worker has finished
/// at least `s` tasks; `ln_deltas[s]` that it has finished exactly `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageProbabilities {
    pub ln_reach: Vec<f64>,
    pub ln_deltas: Vec<f64>,
}

impl StageProbabilities {
    pub fn deltas(&self) -> Vec<f64> {
        self.ln_deltas.iter().map(|d| d.exp()).collect()
    }

    pub fn reach(&self) -> Vec<f64> {
        self.ln_reach.iter().map(|f| f.exp()).collect()
    }
}

pub fn stage_probabilities(model: &StragglerModel, r: usize, t: f64) -> StageProbabilities {
    let lambda = model.per_task_rate;
    // exponents[s] = rate * (t/s - shift), None before the shift floor.
    let exponents: Vec<Option<f64>> = (0..=r)
        .map(|s| if s == 0 { Some(f64::INFINITY) } else { model.exponent(s, t) })
        .collect();
    let ln_reach: Vec<f64> = exponents
        .iter()
        .map(|x| match x {
            None => f64::NEG_INFINITY,
            Some(x) => log1mexp(*x),
        })
        .collect();
    let ln_deltas = (0..=r)
        .map(|s| {
            if s == r {
                return ln_reach[r];
            }
            match (exponents[s], exponents[s + 1]) {
                (None, _) => f64::NEG_INFINITY,
                (Some(_), None) => ln_reach[s],
                (Some(_), Some(next)) if s == 0 => -next,
                (Some(_), Some(next)) => {
                    // F_s - F_{s+1} = e^{-x_{s+1}} (1 - e^{-(x_s - x_{s+1})})
                    let gap = lambda * t / (s * (s + 1)) as f64;
                    -next + log1mexp(gap)
                }
            }
        })
        .collect();
    StageProbabilities { ln_reach, ln_deltas }
}

fn check_inputs(alloc: &LayerAllocation, shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<()> {
    alloc.validate_for(shape)?;
    model.validate()?;
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// `m * ln(x)` with the convention `0 * ln(0) = 0`.
#[inline]
fn ln_pow(ln_x: f64, m: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        m as f64 * ln_x
    }
}

/// Memo table of the suffix sums together with the stage probabilities.
///
/// `memo[j - 1][m]` holds `H_j(m)`: the probability that, among `m` workers
/// that completed at least `j - 1` tasks, layers `j..=r` all receive enough
/// results. Row `r` is the sentinel `H_{r+1}(v) = Δ_r^v`.
#[derive(Debug, Clone)]
pub struct SummationState {
    pub memo: Vec<Vec<f64>>,
    pub deltas: Vec<f64>,
}

impl SummationState {
    pub fn probability(&self) -> f64 {
        *self.memo[0].last().expect("non-empty memo")
    }
}

pub fn summation_state(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<SummationState> {
    check_inputs(alloc, shape, model, t)?;
    let n = shape.n;
    let r = alloc.layers();
    let stages = stage_probabilities(model, r, t);
    let lf = LogFactorials::new(n);
    let mut memo = vec![vec![0.0; n + 1]; r + 1];
    memo[r] = (0..=n).map(|v| ln_pow(stages.ln_deltas[r], v).exp()).collect();
    for j in (1..=r).rev() {
        let kj = alloc.ks[j - 1];
        let ln_delta = stages.ln_deltas[j - 1];
        for m in 0..=n {
            let mut acc = 0.0;
            for v in kj..=m {
                let w = lf.ln_choose(m, v) + ln_pow(ln_delta, m - v);
                acc += w.exp() * memo[j][v];
            }
            memo[j - 1][m] = acc;
        }
    }
    Ok(SummationState {
        memo,
        deltas: stages.deltas(),
    })
}

/// `Pr(τ <= t)` by suffix-sum memoization in `O(r n^2)`.
pub fn finishing_cdf_dp(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<f64> {
    Ok(summation_state(alloc, shape, model, t)?.probability().clamp(0.0, 1.0))
}

fn choose_f64(m: usize, v: usize) -> f64 {
    let v = v.min(m - v);
    (0..v).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// `Pr(τ <= t)` as the literal nested sum over `n >= m_1 >= ... >= m_r` with
/// `m_j >= k_j`. Cost grows combinatorially; meant for small systems and as a
/// cross-check of [`finishing_cdf_dp`].
pub fn finishing_cdf_nested(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<f64> {
    check_inputs(alloc, shape, model, t)?;
    let r = alloc.layers();
    let deltas = stage_probabilities(model, r, t).deltas();
    // counts[s] = m_s with m_0 = n and m_{r+1} = 0.
    let mut counts = vec![0usize; r + 2];
    counts[0] = shape.n;
    fn recurse(j: usize, ks: &[usize], deltas: &[f64], counts: &mut [usize]) -> f64 {
        let r = ks.len();
        if j > r {
            return (0..=r)
                .map(|s| {
                    let (hi, lo) = (counts[s], counts[s + 1]);
                    choose_f64(hi, lo) * deltas[s].powi((hi - lo) as i32)
                })
                .product();
        }
        let mut total = 0.0;
        for m in ks[j - 1]..=counts[j - 1] {
            counts[j] = m;
            total += recurse(j + 1, ks, deltas, counts);
        }
        counts[j] = 0;
        total
    }
    Ok(recurse(1, &alloc.ks, &deltas, &mut counts))
}

/// `ln Pr(τ > t)`, summing only over configurations in which some layer is
/// short of results.
///
/// With `B_j(m)` the failure mass of layers `j..=r` among `m` workers that
/// completed `j - 1` tasks:
/// `B_j(m) = Σ_v C(m, v) Δ_{j-1}^{m-v} [v < k_j ? F_j^v : B_{j+1}(v)]`.
pub fn ln_failure_probability(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<f64> {
    check_inputs(alloc, shape, model, t)?;
    let n = shape.n;
    let r = alloc.layers();
    let stages = stage_probabilities(model, r, t);
    let lf = LogFactorials::new(n);
    let mut below = vec![f64::NEG_INFINITY; n + 1];
    let mut terms = Vec::with_capacity(n + 1);
    for j in (1..=r).rev() {
        let kj = alloc.ks[j - 1];
        let ln_delta = stages.ln_deltas[j - 1];
        let ln_reach = stages.ln_reach[j];
        let mut current = vec![f64::NEG_INFINITY; n + 1];
        for (m, slot) in current.iter_mut().enumerate() {
            terms.clear();
            for v in 0..=m {
                let inner = if v < kj { ln_pow(ln_reach, v) } else { below[v] };
                if inner == f64::NEG_INFINITY {
                    continue;
                }
                terms.push(lf.ln_choose(m, v) + ln_pow(ln_delta, m - v) + inner);
            }
            *slot = log_sum_exp(terms.iter().copied());
        }
        below = current;
    }
    Ok(below[n].min(0.0))
}

/// `Pr(τ > t)` with full relative precision (subject to `f64` underflow).
pub fn failure_probability(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<f64> {
    Ok(ln_failure_probability(alloc, shape, model, t)?.exp())
}

struct ExtendedStages {
    deltas: Vec<DoubleDouble>,
    reach: Vec<DoubleDouble>,
}

fn extended_stages(model: &StragglerModel, r: usize, t: f64) -> ExtendedStages {
    let rate = DoubleDouble::from(model.per_task_rate);
    let shift = DoubleDouble::from(model.per_task_shift);
    let t_dd = DoubleDouble::from(t);
    // survival[s] = e^{-x_s} = 1 - F_s; reach[s] = F_s.
    let mut survival = vec![DoubleDouble::ZERO; r + 2];
    let mut reach = vec![DoubleDouble::ZERO; r + 2];
    reach[0] = DoubleDouble::ONE;
    for s in 1..=r {
        if model.exponent(s, t).is_none() {
            survival[s] = DoubleDouble::ONE;
            reach[s] = DoubleDouble::ZERO;
            continue;
        }
        let mut slack = t_dd / DoubleDouble::from(s as f64) - shift;
        if slack.hi() < 0.0 {
            slack = DoubleDouble::ZERO;
        }
        let x = rate * slack;
        survival[s] = (-x).exp();
        reach[s] = -(-x).exp_m1();
    }
    let deltas = (0..=r)
        .map(|s| {
            if s == r {
                reach[r]
            } else if s == 0 {
                survival[1]
            } else {
                reach[s] - reach[s + 1]
            }
        })
        .collect();
    reach.truncate(r + 1);
    ExtendedStages { deltas, reach }
}

fn pascal(n: usize) -> Vec<Vec<DoubleDouble>> {
    let mut rows: Vec<Vec<DoubleDouble>> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut row = vec![DoubleDouble::ONE; m + 1];
        for v in 1..m {
            row[v] = rows[m - 1][v - 1] + rows[m - 1][v];
        }
        rows.push(row);
    }
    rows
}

/// [`finishing_cdf_dp`] in double-double arithmetic (about 32 significant
/// digits), so that `1 - cdf` stays meaningful down to roughly `1e-28`.
pub fn finishing_cdf_extended(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<DoubleDouble> {
    check_inputs(alloc, shape, model, t)?;
    let n = shape.n;
    let r = alloc.layers();
    let stages = extended_stages(model, r, t);
    let binom = pascal(n);
    let mut below: Vec<DoubleDouble> = (0..=n).map(|v| stages.deltas[r].powi(v as u32)).collect();
    for j in (1..=r).rev() {
        let kj = alloc.ks[j - 1];
        let delta = stages.deltas[j - 1];
        let powers: Vec<DoubleDouble> = (0..=n).map(|e| delta.powi(e as u32)).collect();
        below = (0..=n)
            .map(|m| {
                let mut acc = DoubleDouble::ZERO;
                for v in kj..=m {
                    acc += binom[m][v] * powers[m - v] * below[v];
                }
                acc
            })
            .collect();
    }
    Ok(below[n])
}

/// Positive-term failure recursion of [`ln_failure_probability`] in
/// double-double arithmetic.
pub fn failure_probability_extended(
    alloc: &LayerAllocation,
    shape: &SystemShape,
    model: &StragglerModel,
    t: f64,
) -> Result<DoubleDouble> {
    check_inputs(alloc, shape, model, t)?;
    let n = shape.n;
    let r = alloc.layers();
    let stages = extended_stages(model, r, t);
    let binom = pascal(n);
    let mut below = vec![DoubleDouble::ZERO; n + 1];
    for j in (1..=r).rev() {
        let kj = alloc.ks[j - 1];
        let delta = stages.deltas[j - 1];
        let powers: Vec<DoubleDouble> = (0..=n).map(|e| delta.powi(e as u32)).collect();
        let reach: Vec<DoubleDouble> = (0..=n).map(|e| stages.reach[j].powi(e as u32)).collect();
        below = (0..=n)
            .map(|m| {
                let mut acc = DoubleDouble::ZERO;
                for v in 0..=m {
                    let inner = if v < kj { reach[v] } else { below[v] };
                    acc += binom[m][v] * powers[m - v] * inner;
                }
                acc
            })
            .collect();
    }
    Ok(below[n])
}
