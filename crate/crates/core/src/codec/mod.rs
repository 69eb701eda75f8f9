//! Encoding and decoding of matrix-vector jobs.
//!
//! The matrix `A` is cut into `k` contiguous row blocks `A_1..A_k` (the
//! tasks). A [`LayerPlan`] clusters the tasks into layers; each layer is
//! encoded into `n` coded blocks, one per worker, by a [`GeneratorSpec`].
//! A worker multiplies its coded block by `x`, and any `k_j` such products
//! recover the layer's task outputs `A_i x`.
//!
//! Arithmetic is generic over [`Scalar`]: `f64` for real data and [`Fp`] for
//! exact checks over the integers mod `2^31 - 1`.

mod bench;
mod field;
mod generator;
mod io;
mod matrix;

pub use bench::{bench_decode, bench_layer_decodes, DecodeTiming, LayerDecodeTiming};
pub use field::{FieldMode, Fp, Scalar};
pub use generator::{Construction, GeneratorSpec};
pub use io::{read_matrix, read_matrix_csv, read_vector_csv, write_matrix, write_matrix_csv};
pub use matrix::Matrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LayerAllocation;
use generator::one_based;

/// A job `g(x) = A x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearJob<T> {
    pub matrix: Matrix<T>,
    pub input: Vec<T>,
}

impl<T: Scalar> LinearJob<T> {
    pub fn new(matrix: Matrix<T>, input: Vec<T>) -> Result<Self> {
        if input.len() != matrix.cols() {
            return Err(Error::invalid(format!(
                "input has length {}, matrix has {} columns",
                input.len(),
                matrix.cols()
            )));
        }
        if !matrix.data().iter().chain(&input).all(|v| v.is_finite()) {
            return Err(Error::invalid("job entries must be finite"));
        }
        Ok(LinearJob { matrix, input })
    }

    /// The uncoded product, for checking decoded results.
    pub fn direct(&self) -> Vec<T> {
        self.matrix.mul_vec(&self.input).expect("shape checked at construction")
    }
}

/// Splits the job matrix into `k` equal contiguous row blocks.
pub fn partition_job<T: Scalar>(job: &LinearJob<T>, k: usize) -> Result<Vec<Matrix<T>>> {
    let q = job.matrix.rows();
    if k == 0 || !q.is_multiple_of(k) {
        return Err(Error::invalid(format!("{q} rows cannot be split into {k} equal tasks")));
    }
    let b = q / k;
    Ok((0..k).map(|i| job.matrix.row_block(i * b, (i + 1) * b)).collect())
}

/// Which tasks (0-based indices into `0..k`) form each layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub assignments: Vec<Vec<usize>>,
    pub alloc: LayerAllocation,
}

impl LayerPlan {
    /// Layer 1 takes tasks `0..k_1`, layer 2 the next `k_2`, and so on.
    pub fn contiguous(alloc: LayerAllocation) -> Self {
        let mut next = 0;
        let assignments = alloc
            .ks
            .iter()
            .map(|&kj| {
                let layer: Vec<usize> = (next..next + kj).collect();
                next += kj;
                layer
            })
            .collect();
        LayerPlan { assignments, alloc }
    }

    pub fn new(assignments: Vec<Vec<usize>>, alloc: LayerAllocation) -> Result<Self> {
        let plan = LayerPlan { assignments, alloc };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.assignments.len() != self.alloc.layers() {
            return Err(Error::invalid(format!(
                "plan has {} layers, allocation has {}",
                self.assignments.len(),
                self.alloc.layers()
            )));
        }
        let k = self.alloc.total();
        let mut seen = vec![false; k];
        for (j, (tasks, &kj)) in self.assignments.iter().zip(&self.alloc.ks).enumerate() {
            if tasks.len() != kj {
                return Err(Error::invalid(format!(
                    "layer {} lists {} tasks, allocation says {kj}",
                    j + 1,
                    tasks.len()
                )));
            }
            for &t in tasks {
                if t >= k || std::mem::replace(&mut seen[t], true) {
                    return Err(Error::invalid(format!(
                        "task {t} is out of range or assigned twice"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn total_tasks(&self) -> usize {
        self.alloc.total()
    }
}

/// One coded block of one layer, or the result computed from it.
///
/// The same type carries a worker's output: [`EncodedTask::compute`] replaces
/// the coded block by its product with the input, and [`decode_layer`]
/// accepts either form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedTask<T> {
    /// 0-based layer index.
    pub layer: usize,
    /// 0-based worker index.
    pub worker: usize,
    pub payload: Matrix<T>,
}

impl<T: Scalar> EncodedTask<T> {
    pub fn compute(&self, x: &[T]) -> Result<EncodedTask<T>> {
        Ok(EncodedTask {
            layer: self.layer,
            worker: self.worker,
            payload: Matrix::column(self.payload.mul_vec(x)?),
        })
    }
}

/// Encodes the `k_j` source blocks of layer `layer` into `n` coded blocks.
pub fn encode_layer<T: Scalar>(
    tasks: &[Matrix<T>],
    layer: usize,
    n: usize,
    gen: &GeneratorSpec,
) -> Result<Vec<EncodedTask<T>>> {
    if gen.n() != n {
        return Err(Error::invalid(format!("generator has {} nodes, expected {n}", gen.n())));
    }
    let g = gen.matrix::<T>(tasks.len())?;
    (0..n)
        .map(|i| {
            Ok(EncodedTask { layer, worker: i, payload: Matrix::linear_combination(g.row(i), tasks)? })
        })
        .collect()
}

/// Partitions the job and encodes every layer. Entry `[j][i]` is worker
/// `i`'s coded block for layer `j`.
pub fn encode_job<T: Scalar>(
    job: &LinearJob<T>,
    plan: &LayerPlan,
    gen: &GeneratorSpec,
) -> Result<Vec<Vec<EncodedTask<T>>>> {
    plan.validate()?;
    let tasks = partition_job(job, plan.total_tasks())?;
    plan.assignments
        .iter()
        .enumerate()
        .map(|(j, idx)| {
            let layer: Vec<Matrix<T>> = idx.iter().map(|&t| tasks[t].clone()).collect();
            encode_layer(&layer, j, gen.n(), gen)
        })
        .collect()
}

/// Recovers the `k_j` source blocks (or task outputs) of one layer from the
/// results of the `k_j` lowest-indexed workers among `results`.
pub fn decode_layer<T: Scalar>(
    results: &[EncodedTask<T>],
    gen: &GeneratorSpec,
    k_j: usize,
) -> Result<Vec<Matrix<T>>> {
    let layer = results.first().map_or(0, |r| r.layer);
    if results.len() < k_j {
        return Err(Error::InsufficientResults {
            layer: layer + 1,
            needed: k_j,
            available: results.len(),
        });
    }
    let mut order: Vec<&EncodedTask<T>> = results.iter().collect();
    order.sort_by_key(|r| r.worker);
    if order.windows(2).any(|w| w[0].worker == w[1].worker) {
        return Err(Error::invalid("decode inputs must come from distinct workers"));
    }
    if order.iter().any(|r| r.layer != layer) {
        return Err(Error::invalid("decode inputs mix layers"));
    }
    if let Some(r) = order.iter().find(|r| r.worker >= gen.n()) {
        return Err(Error::invalid(format!("worker index {} out of range", r.worker)));
    }
    let chosen = &order[..k_j];
    let shape = chosen[0].payload.shape();
    if chosen.iter().any(|r| r.payload.shape() != shape) {
        return Err(Error::invalid("payload shapes differ within a layer"));
    }
    let workers: Vec<usize> = chosen.iter().map(|r| r.worker).collect();
    let g = gen.matrix::<T>(k_j)?.select_rows(&workers);
    let width = shape.0 * shape.1;
    let rhs = Matrix::new(
        k_j,
        width,
        chosen.iter().flat_map(|r| r.payload.data().iter().copied()).collect(),
    )?;
    let solved = g.solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure(format!(
            "layer {}: decode system for workers {} is singular",
            layer + 1,
            one_based(&workers)
        ))
    })?;
    (0..k_j)
        .map(|l| Matrix::new(shape.0, shape.1, solved.row(l).to_vec()))
        .collect()
}

/// Puts decoded task outputs back in task order and stacks them.
pub fn assemble<T: Scalar>(decoded: &[Option<Vec<Matrix<T>>>], plan: &LayerPlan) -> Result<Matrix<T>> {
    plan.validate()?;
    if decoded.len() != plan.assignments.len() {
        return Err(Error::IncompleteJob(format!(
            "{} decoded layers for a {}-layer plan",
            decoded.len(),
            plan.assignments.len()
        )));
    }
    let mut slots: Vec<Option<Matrix<T>>> = vec![None; plan.total_tasks()];
    for (j, (layer, idx)) in decoded.iter().zip(&plan.assignments).enumerate() {
        let layer = layer
            .as_ref()
            .ok_or_else(|| Error::IncompleteJob(format!("layer {} was not decoded", j + 1)))?;
        if layer.len() != idx.len() {
            return Err(Error::IncompleteJob(format!(
                "layer {} decoded {} of {} tasks",
                j + 1,
                layer.len(),
                idx.len()
            )));
        }
        for (out, &t) in layer.iter().zip(idx) {
            slots[t] = Some(out.clone());
        }
    }
    let blocks: Vec<Matrix<T>> = slots.into_iter().map(|s| s.expect("plan is a partition")).collect();
    Matrix::vstack(&blocks)
}
