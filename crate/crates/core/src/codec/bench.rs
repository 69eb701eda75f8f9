use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{FieldMode, Fp, Scalar};
use super::generator::{Construction, GeneratorSpec};
use super::matrix::Matrix;
use super::{decode_layer, encode_layer, EncodedTask};
use crate::error::Result;
use crate::model::LayerAllocation;

#[derive(Debug, Clone, Serialize)]
pub struct DecodeTiming {
    pub k1: usize,
    /// Fastest of the repetitions, in seconds.
    pub seconds: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerDecodeTiming {
    pub layers: usize,
    pub serial_seconds: f64,
    pub parallel_seconds: f64,
}

fn coded_layer(k: usize, width: usize, gen: &GeneratorSpec, seed: u64) -> Result<Vec<EncodedTask<Fp>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src: Vec<Matrix<Fp>> = (0..k)
        .map(|_| {
            let d = (0..width).map(|_| Fp::from_i64(rng.random_range(-1000..=1000))).collect();
            Matrix::new(1, width, d)
        })
        .collect::<Result<_>>()?;
    let mut coded = encode_layer(&src, 0, gen.n(), gen)?;
    // Decode from the last k workers so the system is not the identity.
    Ok(coded.split_off(gen.n() - k))
}

fn prime_spec(gen: &GeneratorSpec) -> GeneratorSpec {
    GeneratorSpec { mode: FieldMode::Prime, construction: Construction::Polynomial, ..gen.clone() }
}

/// Wall time of one layer decode with `k1` tasks of `width` entries each,
/// using the prime field so every size decodes exactly. Decoding solves a
/// `k1 x k1` system, so the time grows roughly like `k1^3 + k1^2 width`.
pub fn bench_decode(k1: usize, gen: &GeneratorSpec, width: usize, repetitions: usize) -> Result<DecodeTiming> {
    let gen = prime_spec(gen);
    let results = coded_layer(k1, width, &gen, k1 as u64)?;
    let mut best = f64::INFINITY;
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        std::hint::black_box(decode_layer(&results, &gen, k1)?);
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(DecodeTiming { k1, seconds: best, repetitions: repetitions.max(1) })
}

/// Decodes every layer of `alloc` one after another and then concurrently.
pub fn bench_layer_decodes(
    alloc: &LayerAllocation,
    gen: &GeneratorSpec,
    width: usize,
    repetitions: usize,
) -> Result<LayerDecodeTiming> {
    let gen = prime_spec(gen);
    let layers: Vec<(usize, Vec<EncodedTask<Fp>>)> = alloc
        .ks
        .iter()
        .enumerate()
        .map(|(j, &k)| Ok((k, coded_layer(k, width, &gen, j as u64)?)))
        .collect::<Result<_>>()?;
    let (mut serial, mut parallel) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        for (k, res) in &layers {
            std::hint::black_box(decode_layer(res, &gen, *k)?);
        }
        serial = serial.min(start.elapsed().as_secs_f64());
        let start = Instant::now();
        layers
            .par_iter()
            .map(|(k, res)| decode_layer(res, &gen, *k).map(std::hint::black_box))
            .collect::<Result<Vec<_>>>()?;
        parallel = parallel.min(start.elapsed().as_secs_f64());
    }
    Ok(LayerDecodeTiming { layers: alloc.layers(), serial_seconds: serial, parallel_seconds: parallel })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_solve() {
        let t = bench_decode(1, &GeneratorSpec::new(FieldMode::Real, 20), 8, 3).unwrap();
        assert!(t.seconds >= 0.0);
    }

    #[test]
    fn decode_time_grows_with_k1() {
        let gen = GeneratorSpec::new(FieldMode::Real, 20);
        let times: Vec<f64> =
            [5, 10, 19].iter().map(|&k| bench_decode(k, &gen, 4096, 15).unwrap().seconds).collect();
        assert!(times[0] < times[1] && times[1] < times[2], "{times:?}");
    }
}
