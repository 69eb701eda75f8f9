use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strata_core::codec::{
    assemble, decode_layer, encode_job, encode_layer, EncodedTask, FieldMode, Fp, GeneratorSpec, LayerPlan, LinearJob,
    Matrix, Scalar,
};
use strata_core::LayerAllocation;

fn blocks<T: Scalar>(rng: &mut ChaCha8Rng, k: usize, rows: usize, cols: usize) -> Vec<Matrix<T>> {
    (0..k)
        .map(|_| {
            let d = (0..rows * cols).map(|_| T::from_i64(rng.random_range(-1000..=1000))).collect();
            Matrix::new(rows, cols, d).unwrap()
        })
        .collect()
}

fn real_blocks(rng: &mut ChaCha8Rng, k: usize, rows: usize, cols: usize) -> Vec<Matrix<f64>> {
    (0..k)
        .map(|_| Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect()
}

fn relative_error(got: &[Matrix<f64>], want: &[Matrix<f64>]) -> f64 {
    let scale = want.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    got.iter()
        .zip(want)
        .flat_map(|(g, w)| g.data().iter().zip(w.data()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
        / scale
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&p| cur[p] < n - k + p) else { return out };
        cur[pos] += 1;
        for q in pos + 1..k {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

fn pick<T: Clone>(coded: &[EncodedTask<T>], idx: &[usize]) -> Vec<EncodedTask<T>> {
    idx.iter().map(|&i| coded[i].clone()).collect()
}

#[test]
fn every_subset_decodes_exactly_in_the_prime_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, k) in [(3, 2), (6, 3), (20, 19), (8, 4)] {
        for systematic in [true, false] {
            let gen = GeneratorSpec::with_nodes(FieldMode::Prime, (0..n as i64).collect(), systematic);
            let src = blocks::<Fp>(&mut rng, k, 2, 3);
            let coded = encode_layer(&src, 0, n, &gen).unwrap();
            let all = subsets(n, k);
            assert_eq!(all.len() as u128, binomial(n, k));
            for s in all {
                assert_eq!(decode_layer(&pick(&coded, &s), &gen, k).unwrap(), src, "({n},{k}) subset {s:?}");
            }
        }
    }
}

#[test]
fn every_subset_decodes_within_tolerance_over_the_reals() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (n, k) in [(3, 2), (6, 3), (20, 19)] {
        let gen = GeneratorSpec::new(FieldMode::Real, n);
        let src = real_blocks(&mut rng, k, 2, 3);
        let coded = encode_layer(&src, 0, n, &gen).unwrap();
        for s in subsets(n, k) {
            let err = relative_error(&decode_layer(&pick(&coded, &s), &gen, k).unwrap(), &src);
            assert!(err <= 1e-6, "({n},{k}) subset {s:?}: {err:e}");
        }
    }
}

#[test]
fn gaussian_code_stays_accurate_up_to_thirty_workers() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in [5, 10, 15, 20, 29] {
        let n = 30;
        let gen = GeneratorSpec::gaussian(n, 99);
        let src = real_blocks(&mut rng, k, 1, 4);
        let coded = encode_layer(&src, 0, n, &gen).unwrap();
        let mut tried = vec![(n - k..n).collect::<Vec<_>>()];
        for _ in 0..1000 {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            tried.push(idx[..k].to_vec());
        }
        for s in tried {
            let err = relative_error(&decode_layer(&pick(&coded, &s), &gen, k).unwrap(), &src);
            assert!(err <= 1e-6, "(30,{k}) subset {s:?}: {err:e}");
        }
    }
}

#[test]
fn three_worker_example() {
    // A = [A_1; A_2]; workers hold A_1, A_2 and A_1 + A_2.
    let gen = GeneratorSpec::explicit(FieldMode::Prime, vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
    let a1 = Matrix::from_rows(vec![vec![Fp::from_i64(1), Fp::from_i64(2)]]).unwrap();
    let a2 = Matrix::from_rows(vec![vec![Fp::from_i64(-3), Fp::from_i64(5)]]).unwrap();
    let x = [Fp::from_i64(4), Fp::from_i64(-1)];
    let coded = encode_layer(&[a1.clone(), a2.clone()], 0, 3, &gen).unwrap();
    let outputs: Vec<EncodedTask<Fp>> = coded.iter().map(|c| c.compute(&x).unwrap()).collect();
    let a1x = a1.mul_vec(&x).unwrap();
    let a2x = a2.mul_vec(&x).unwrap();
    assert_eq!(outputs[0].payload.data(), a1x.as_slice());
    assert_eq!(outputs[1].payload.data(), a2x.as_slice());
    assert_eq!(outputs[2].payload.data(), &[a1x[0] + a2x[0]]);
    for pair in [[0, 1], [0, 2], [1, 2]] {
        let got = decode_layer(&pick(&outputs, &pair), &gen, 2).unwrap();
        assert_eq!(got[0].data(), a1x.as_slice());
        assert_eq!(got[1].data(), a2x.as_slice());
    }
    // From workers 2 and 3: A_1 x is the third result minus the second.
    let third_minus_second = outputs[2].payload.data()[0] - outputs[1].payload.data()[0];
    assert_eq!(third_minus_second, a1x[0]);
}

#[test]
fn any_admissible_pattern_assembles_the_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (rows, cols, n) = (12, 3, 6);
    let a = (0..rows * cols).map(|_| Fp::from_i64(rng.random_range(-50..=50))).collect();
    let x = (0..cols).map(|_| Fp::from_i64(rng.random_range(-50..=50))).collect();
    let job = LinearJob::new(Matrix::new(rows, cols, a).unwrap(), x).unwrap();
    let plan = LayerPlan::contiguous(LayerAllocation { ks: vec![4, 2] });
    let gen = GeneratorSpec::new(FieldMode::Prime, n);
    let coded = encode_job(&job, &plan, &gen).unwrap();
    let results: Vec<Vec<EncodedTask<Fp>>> =
        coded.iter().map(|layer| layer.iter().map(|c| c.compute(&job.input).unwrap()).collect()).collect();
    for s1 in subsets(n, 4) {
        for s2 in subsets(n, 2) {
            let decoded = vec![
                Some(decode_layer(&pick(&results[0], &s1), &gen, 4).unwrap()),
                Some(decode_layer(&pick(&results[1], &s2), &gen, 2).unwrap()),
            ];
            assert_eq!(assemble(&decoded, &plan).unwrap().into_data(), job.direct());
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}
