//! Choice of the per-layer code dimensions `(k_1, ..., k_r)` and of `r`.
//!
//! [`optimize_maximin`] maximizes the smallest scaled failure exponent
//! `z = min_j (n - k_j + 1) / j`. The optimum is one of the finitely many
//! values `(n - v + 1) / j`; for a candidate `z` the largest admissible
//! dimensions are the caps `u_j(z) = min(n - S, floor(n + 1 - j z))`, which
//! are nonincreasing in `j`. `z` is achievable iff every cap is at least 1 and
//! the caps sum to at least `k`, so a binary search over the sorted candidates
//! finds the optimum. The allocation is the caps trimmed from the deepest
//! layer up, which is also the lexicographically largest optimal allocation.

use num_rational::Ratio;
use serde::Serialize;

use crate::analysis::stage_probabilities;
use crate::error::{Error, Result};
use crate::model::{LayerAllocation, StragglerModel, SystemShape};
use crate::numeric::LogFactorials;

/// Upper limit on the number of compositions [`brute_force_maximin`] visits.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximinSolution {
    pub ks: LayerAllocation,
    /// `min_j (n - k_j + 1) / j`, exact.
    pub z: Ratio<i64>,
    pub straggler_margin: usize,
}

fn scaled_exponent(n: usize, ks: &[usize]) -> Ratio<i64> {
    ks.iter()
        .enumerate()
        .map(|(j, &kj)| Ratio::new((n + 1 - kj) as i64, (j + 1) as i64))
        .min()
        .expect("at least one layer")
}

fn check_maximin(shape: &SystemShape, stragglers: usize) -> Result<usize> {
    shape.validate()?;
    if stragglers >= shape.n {
        return Err(Error::invalid(format!(
            "straggler margin S = {stragglers} leaves no usable worker (n = {})",
            shape.n
        )));
    }
    let cap = shape.n - stragglers;
    if shape.k > shape.r * cap {
        return Err(Error::invalid(format!(
            "k = {} exceeds r * (n - S) = {} * {} = {}; no layer may need more than n - S results",
            shape.k,
            shape.r,
            cap,
            shape.r * cap
        )));
    }
    Ok(cap)
}

/// Caps `min(cap, floor(n + 1 - j z))` for `j = 1..=r`, as signed values.
fn caps(n: usize, r: usize, cap: usize, z: Ratio<i64>) -> Vec<i64> {
    (1..=r as i64)
        .map(|j| {
            let bound = (Ratio::from_integer(n as i64 + 1) - z * j).floor().to_integer();
            bound.min(cap as i64)
        })
        .collect()
}

fn achievable(n: usize, k: usize, r: usize, cap: usize, z: Ratio<i64>) -> bool {
    let u = caps(n, r, cap, z);
    u.iter().all(|&x| x >= 1) && u.iter().sum::<i64>() >= k as i64
}

/// Maximizes `min_j (n - k_j + 1) / j` subject to `Σ k_j = k`, nonincreasing
/// integer `k_j` in `[1, n - S]`.
pub fn optimize_maximin(shape: &SystemShape, stragglers: usize) -> Result<MaximinSolution> {
    let cap = check_maximin(shape, stragglers)?;
    let SystemShape { n, k, r } = *shape;
    let mut candidates: Vec<Ratio<i64>> = (1..=n)
        .flat_map(|v| (1..=r).map(move |j| Ratio::new((n - v + 1) as i64, j as i64)))
        .collect();
    candidates.sort();
    candidates.dedup();
    // candidates[0] = 1/r gives caps n - S everywhere, feasible by the check above
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if achievable(n, k, r, cap, candidates[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let z = candidates[lo];
    let mut ks: Vec<usize> = caps(n, r, cap, z).into_iter().map(|u| u as usize).collect();
    let mut excess = ks.iter().sum::<usize>() - k;
    for kj in ks.iter_mut().rev() {
        if excess == 0 {
            break;
        }
        let cut = excess.min(*kj - 1);
        *kj -= cut;
        excess -= cut;
    }
    debug_assert_eq!(scaled_exponent(n, &ks), z);
    Ok(MaximinSolution {
        ks: LayerAllocation::new(ks, n)?,
        z,
        straggler_margin: stragglers,
    })
}

/// Number of nonincreasing sequences of `layers` values in `[1, max]` summing
/// to `sum`.
fn count_compositions(layers: usize, max: usize, sum: usize) -> u128 {
    // table[l][m][s]: l layers, values <= m, total s
    let mut table = vec![vec![vec![0u128; sum + 1]; max + 1]; layers + 1];
    for m in 0..=max {
        table[0][m][0] = 1;
    }
    for l in 1..=layers {
        for m in 1..=max {
            for s in 0..=sum {
                // either no value equals m, or the first value is m
                let mut c = table[l][m - 1][s];
                if s >= m {
                    c = c.saturating_add(table[l - 1][m][s - m]);
                }
                table[l][m][s] = c;
            }
        }
    }
    table[layers][max][sum]
}

/// Exhaustive search over monotone compositions; returns the
/// lexicographically largest allocation among the optima.
pub fn brute_force_maximin(shape: &SystemShape, stragglers: usize) -> Result<MaximinSolution> {
    let cap = check_maximin(shape, stragglers)?;
    let SystemShape { n, k, r } = *shape;
    let size = count_compositions(r, cap, k);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    struct Search {
        n: usize,
        r: usize,
        current: Vec<usize>,
        best: Option<(Ratio<i64>, Vec<usize>)>,
    }

    impl Search {
        // Values are tried in decreasing order, so the first optimum reached
        // is the lexicographically largest one.
        fn visit(&mut self, j: usize, max: usize, remaining: usize, running: Option<Ratio<i64>>) {
            if j == self.r {
                if remaining == 0 {
                    let z = running.expect("r >= 1");
                    if self.best.as_ref().is_none_or(|(b, _)| z > *b) {
                        self.best = Some((z, self.current.clone()));
                    }
                }
                return;
            }
            let left = self.r - j - 1;
            for v in (1..=max.min(remaining)).rev() {
                let rest = remaining - v;
                if rest < left || rest > left * v {
                    continue;
                }
                let term = Ratio::new((self.n + 1 - v) as i64, (j + 1) as i64);
                let z = running.map_or(term, |x| x.min(term));
                if let Some((b, _)) = &self.best {
                    if z <= *b {
                        continue;
                    }
                }
                self.current.push(v);
                self.visit(j + 1, v, rest, Some(z));
                self.current.pop();
            }
        }
    }

    let mut search = Search {
        n,
        r,
        current: Vec::with_capacity(r),
        best: None,
    };
    search.visit(0, cap, k, None);
    let (z, ks) = search
        .best
        .ok_or_else(|| Error::invalid(format!("no monotone composition of k = {k} into r = {r} parts")))?;
    Ok(MaximinSolution {
        ks: LayerAllocation::new(ks, n)?,
        z,
        straggler_margin: stragglers,
    })
}

/// Sweeps `r = 1..=min(r_max, k)` and keeps the best `z`; ties go to the
/// smallest `r`, whose largest layer is the cheapest to decode.
pub fn select_r(n: usize, k: usize, r_max: usize, stragglers: usize) -> Result<(usize, MaximinSolution)> {
    if r_max == 0 {
        return Err(Error::invalid("r_max must be at least 1"));
    }
    let mut best: Option<(usize, MaximinSolution)> = None;
    for r in 1..=r_max.min(k) {
        let Ok(shape) = SystemShape::new(n, k, r) else { continue };
        let Ok(sol) = optimize_maximin(&shape, stragglers) else { continue };
        if best.as_ref().is_none_or(|(_, b)| sol.z > b.z) {
            best = Some((r, sol));
        }
    }
    best.ok_or_else(|| {
        Error::invalid(format!(
            "no layer count up to {r_max} admits k = {k} tasks on n = {n} workers with S = {stragglers}"
        ))
    })
}

/// Linear or log-space arithmetic for the exact search.
trait Arith: Copy {
    const ZERO: Self;
    fn from_ln(ln: f64) -> Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn ln(self) -> f64;
}

#[derive(Clone, Copy)]
struct Linear(f64);

#[derive(Clone, Copy)]
struct LogSpace(f64);

impl Arith for Linear {
    const ZERO: Self = Linear(0.0);
    fn from_ln(ln: f64) -> Self {
        Linear(ln.exp())
    }
    fn add(self, other: Self) -> Self {
        Linear(self.0 + other.0)
    }
    fn mul(self, other: Self) -> Self {
        Linear(self.0 * other.0)
    }
    fn ln(self) -> f64 {
        self.0.ln()
    }
}

impl Arith for LogSpace {
    const ZERO: Self = LogSpace(f64::NEG_INFINITY);
    fn from_ln(ln: f64) -> Self {
        LogSpace(ln)
    }
    fn add(self, other: Self) -> Self {
        LogSpace(crate::numeric::log_add_exp(self.0, other.0))
    }
    fn mul(self, other: Self) -> Self {
        LogSpace(self.0 + other.0)
    }
    fn ln(self) -> f64 {
        self.0
    }
}

struct ExactSearch<'a, T: Arith> {
    n: usize,
    k: usize,
    ks: Vec<usize>,
    // weights[j][m][v] = C(m, v) Δ_j^{m - v}
    weights: &'a [Vec<Vec<T>>],
    // reach[j][v] = F_j^v
    reach: &'a [Vec<T>],
    best: Option<(f64, Vec<usize>)>,
}

impl<T: Arith> ExactSearch<'_, T> {
    /// `below` is the failure mass `B_{j+1}` of the already fixed deeper layers.
    fn visit(&mut self, j: usize, floor: usize, used: usize, below: &[T]) {
        let n = self.n;
        for c in floor..=n {
            let rest = match self.k.checked_sub(used + c) {
                Some(rest) => rest,
                None => break,
            };
            let layers_above = j - 1;
            if rest < layers_above * c || rest > layers_above * n {
                continue;
            }
            self.ks[j - 1] = c;
            let w = &self.weights[j - 1];
            let reach = &self.reach[j];
            let failure_mass = |m: usize| {
                let mut acc = T::ZERO;
                for v in 0..=m {
                    let inner = if v < c { reach[v] } else { below[v] };
                    acc = acc.add(w[m][v].mul(inner));
                }
                acc
            };
            if j == 1 {
                let ln_tail = failure_mass(n).ln();
                let better = match &self.best {
                    None => true,
                    Some((best, ks)) => {
                        let tie = (ln_tail - best).abs() <= 1e-12 * best.abs().max(1.0)
                            || (ln_tail == f64::NEG_INFINITY && *best == f64::NEG_INFINITY);
                        if tie {
                            self.ks > *ks
                        } else {
                            ln_tail < *best
                        }
                    }
                };
                if better {
                    self.best = Some((ln_tail, self.ks.clone()));
                }
            } else {
                let current: Vec<T> = (0..=n).map(failure_mass).collect();
                self.visit(j - 1, c, used + c, &current);
            }
        }
    }
}

fn exact_search<T: Arith>(shape: &SystemShape, model: &StragglerModel, t: f64) -> Option<(f64, Vec<usize>)> {
    let SystemShape { n, k, r } = *shape;
    let stages = stage_probabilities(model, r, t);
    let lf = LogFactorials::new(n);
    let ln_pow = |ln_x: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * ln_x };
    let weights: Vec<Vec<Vec<T>>> = (0..r)
        .map(|s| {
            (0..=n)
                .map(|m| {
                    (0..=m)
                        .map(|v| T::from_ln(lf.ln_choose(m, v) + ln_pow(stages.ln_deltas[s], m - v)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let reach: Vec<Vec<T>> = (0..=r)
        .map(|s| (0..=n).map(|v| T::from_ln(ln_pow(stages.ln_reach[s], v))).collect())
        .collect();
    let mut search = ExactSearch {
        n,
        k,
        ks: vec![0; r],
        weights: &weights,
        reach: &reach,
        best: None,
    };
    let below = vec![T::ZERO; n + 1];
    search.visit(r, 1, 0, &below);
    search.best
}

/// Allocation maximizing `Pr(τ <= t)` over all nonincreasing compositions of
/// `k` into `r` parts in `[1, n]`; ties go to the lexicographically largest.
///
/// Candidates are compared by their failure probability, which is exact in
/// the tail where `1 - Pr(τ <= t)` would round to zero.
pub fn optimize_exact(shape: &SystemShape, model: &StragglerModel, t: f64) -> Result<LayerAllocation> {
    shape.validate()?;
    model.validate()?;
    if shape.k > shape.n * shape.r {
        return Err(Error::invalid(format!(
            "k = {} exceeds n * r = {}",
            shape.k,
            shape.n * shape.r
        )));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("time must be positive, got {t}")));
    }
    let mut best = exact_search::<Linear>(shape, model, t);
    if best.as_ref().is_some_and(|(ln, _)| *ln == f64::NEG_INFINITY) {
        // every candidate underflowed in linear space
        best = exact_search::<LogSpace>(shape, model, t);
    }
    let (_, ks) = best.ok_or_else(|| Error::invalid("no feasible allocation"))?;
    LayerAllocation::new(ks, shape.n)
}
