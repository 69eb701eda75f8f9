use std::collections::HashSet;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::field::{FieldMode, Fp, Scalar};
use crate::model::stream_rng;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Upper limit on subsets examined when checking an explicit generator.
const MDS_CHECK_LIMIT: u128 = 5000;

/// How the parity rows are built.
///
/// Polynomial codes over the reals are badly conditioned: with nodes
/// `0..n` some `k`-subsets of a `(20, 10)` code already have condition
/// numbers near `1e14`. The Gaussian construction draws the parity rows
/// from a seeded standard normal instead, which keeps every subset tried
/// for `n <= 30` well conditioned, at the price of being MDS only with
/// probability one rather than by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Construction {
    #[default]
    Polynomial,
    /// Systematic, parity rows i.i.d. standard normal; real mode only.
    Gaussian { seed: u64 },
}

/// Describes the per-layer encoder: a polynomial-evaluation code on `nodes`,
/// optionally in systematic (Lagrange) form, a seeded Gaussian code, or an
/// explicit generator matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub mode: FieldMode,
    pub nodes: Vec<i64>,
    pub systematic: bool,
    #[serde(default)]
    pub construction: Construction,
    /// Explicit `n x k_j` generator with integer entries; overrides the
    /// polynomial construction and fixes `k_j` to its column count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<Vec<i64>>>,
}

impl GeneratorSpec {
    /// Systematic code on the nodes `0..n`.
    pub fn new(mode: FieldMode, n: usize) -> Self {
        Self::with_nodes(mode, (0..n as i64).collect(), true)
    }

    pub fn with_nodes(mode: FieldMode, nodes: Vec<i64>, systematic: bool) -> Self {
        GeneratorSpec { mode, nodes, systematic, construction: Construction::Polynomial, explicit: None }
    }

    /// Systematic real code with seeded Gaussian parity rows.
    pub fn gaussian(n: usize, seed: u64) -> Self {
        GeneratorSpec { construction: Construction::Gaussian { seed }, ..Self::new(FieldMode::Real, n) }
    }

    pub fn explicit(mode: FieldMode, rows: Vec<Vec<i64>>) -> Self {
        GeneratorSpec {
            mode,
            nodes: (0..rows.len() as i64).collect(),
            systematic: false,
            construction: Construction::Polynomial,
            explicit: Some(rows),
        }
    }

    /// Number of coded outputs, one per worker.
    pub fn n(&self) -> usize {
        self.explicit.as_ref().map_or(self.nodes.len(), Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() == 0 {
            return Err(Error::invalid("generator needs at least one node"));
        }
        if self.mode == FieldMode::Prime && self.n() as u64 >= Fp::MODULUS {
            return Err(Error::invalid("prime modulus must exceed n"));
        }
        if matches!(self.construction, Construction::Gaussian { .. }) && self.mode != FieldMode::Real {
            return Err(Error::invalid("the Gaussian construction needs real arithmetic"));
        }
        let mut seen = HashSet::new();
        for &x in &self.nodes {
            let key = match self.mode {
                FieldMode::Real => x,
                FieldMode::Prime => x.rem_euclid(Fp::MODULUS as i64),
            };
            if !seen.insert(key) {
                return Err(Error::invalid(format!("duplicate evaluation node {x}")));
            }
        }
        if let Some(rows) = &self.explicit {
            let k = rows.first().map_or(0, Vec::len);
            if k == 0 || rows.iter().any(|r| r.len() != k) {
                return Err(Error::invalid("explicit generator rows must be non-empty and equal length"));
            }
        }
        Ok(())
    }

    /// The `n x k` generator matrix. Row `i` holds the coefficients worker
    /// `i` applies to the `k` source tasks of a layer.
    pub fn matrix<T: Scalar>(&self, k: usize) -> Result<Matrix<T>> {
        self.validate()?;
        if T::MODE != self.mode {
            return Err(Error::invalid(format!(
                "generator is {:?} but arithmetic is {:?}",
                self.mode,
                T::MODE
            )));
        }
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("layer size {k} must be in 1..={n}")));
        }
        if let Some(rows) = &self.explicit {
            if rows[0].len() != k {
                return Err(Error::invalid(format!(
                    "explicit generator has {} columns, layer has {k} tasks",
                    rows[0].len()
                )));
            }
            let g = Matrix::from_rows(
                rows.iter().map(|r| r.iter().map(|&v| T::from_i64(v)).collect()).collect(),
            )?;
            check_mds(&g)?;
            return Ok(g);
        }
        let mut g = Matrix::zeros(n, k);
        if let Construction::Gaussian { seed } = self.construction {
            // Stream k, so every layer size has its own fixed matrix.
            let mut rng = stream_rng(seed, k as u64);
            for i in 0..n {
                for l in 0..k {
                    g[(i, l)] = if i < k {
                        if i == l { T::one() } else { T::zero() }
                    } else {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::from_f64(z).expect("real mode checked")
                    };
                }
            }
            return Ok(g);
        }
        let x: Vec<T> = self.nodes.iter().map(|&v| T::from_i64(v)).collect();
        if self.systematic {
            // Lagrange basis on the first k nodes, evaluated at every node.
            let denoms: Vec<T> = (0..k)
                .map(|l| {
                    (0..k)
                        .filter(|&m| m != l)
                        .fold(T::one(), |acc, m| acc * (x[l] - x[m]))
                        .inv()
                        .expect("distinct nodes")
                })
                .collect();
            for i in 0..n {
                if i < k {
                    g[(i, i)] = T::one();
                    continue;
                }
                for l in 0..k {
                    let num =
                        (0..k).filter(|&m| m != l).fold(T::one(), |acc, m| acc * (x[i] - x[m]));
                    g[(i, l)] = num * denoms[l];
                }
            }
        } else {
            for i in 0..n {
                let mut p = T::one();
                for l in 0..k {
                    g[(i, l)] = p;
                    p = p * x[i];
                }
            }
        }
        Ok(g)
    }
}

/// Rejects explicit generators with a singular `k`-row subset, checking every
/// subset when there are at most [`MDS_CHECK_LIMIT`] of them.
fn check_mds<T: Scalar>(g: &Matrix<T>) -> Result<()> {
    let (n, k) = g.shape();
    if binomial(n, k) > MDS_CHECK_LIMIT {
        return Ok(());
    }
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if g.select_rows(&subset).inverse().is_none() {
            return Err(Error::invalid(format!(
                "explicit generator is not MDS: workers {} are dependent",
                one_based(&subset)
            )));
        }
        if !next_subset(&mut subset, n) {
            return Ok(());
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Advances a sorted index subset in lexicographic order.
pub(crate) fn next_subset(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    for pos in (0..k).rev() {
        if s[pos] < n - k + pos {
            s[pos] += 1;
            for q in pos + 1..k {
                s[q] = s[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn one_based(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}
