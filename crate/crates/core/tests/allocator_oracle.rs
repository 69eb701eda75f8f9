use num_rational::Ratio;
use proptest::prelude::*;
use strata_core::allocator::{brute_force_maximin, optimize_exact, optimize_maximin, select_r};
use strata_core::analysis::failure_probability;
use strata_core::{LayerAllocation, StragglerModel, SystemShape};

/// Best `min_j (n - k_j + 1) / j` over every nonincreasing composition of
/// `k` into `r` parts from `[1, n - s]`.
fn enumerate_best(n: usize, k: usize, r: usize, s: usize) -> Option<Ratio<i64>> {
    fn rec(n: usize, left: usize, layer: usize, r: usize, max: usize, cur: Ratio<i64>, best: &mut Option<Ratio<i64>>) {
        if layer > r {
            if left == 0 && best.is_none_or(|b| cur > b) {
                *best = Some(cur);
            }
            return;
        }
        for v in 1..=max.min(left) {
            let term = Ratio::new((n + 1 - v) as i64, layer as i64);
            rec(n, left - v, layer + 1, r, v, cur.min(term), best);
        }
    }
    let mut best = None;
    rec(n, k, 1, r, n - s, Ratio::from_integer(i64::MAX), &mut best);
    best
}

#[test]
fn select_r_reproduces_exponent_table() {
    // (k, r, z) for n = 20 as read off the exponent comparison.
    let table = [
        (12, 2, Ratio::new(10, 1)),
        (20, 2, Ratio::new(7, 1)),
        (22, 3, Ratio::new(20, 3)),
        (40, 4, Ratio::new(17, 4)),
        (60, 5, Ratio::new(3, 1)),
        (80, 8, Ratio::new(7, 3)),
        (100, 10, Ratio::new(2, 1)),
        (150, 15, Ratio::new(4, 3)),
        (165, 15, Ratio::new(6, 5)),
        (176, 16, Ratio::new(9, 8)),
        (180, 18, Ratio::new(10, 9)),
        (190, 19, Ratio::new(20, 19)),
    ];
    for (k, r, z) in table {
        let (got_r, sol) = select_r(20, k, k, 0).unwrap();
        assert_eq!((got_r, sol.z), (r, z), "k = {k}");
        assert_eq!(sol.ks.total(), k);
    }
}

#[test]
fn two_layer_example() {
    let (_, sol) = select_r(20, 20, 20, 0).unwrap();
    assert_eq!(sol.ks.ks, vec![14, 6]);
}

#[test]
fn exact_optimizer_never_loses_to_maximin() {
    let shape = SystemShape::new(20, 100, 10).unwrap();
    let model = StragglerModel::new(10.0, 0.01).unwrap();
    let maximin = optimize_maximin(&shape, 0).unwrap().ks;
    for t in [0.8, 1.2] {
        let exact = optimize_exact(&shape, &model, t).unwrap();
        let pe = failure_probability(&exact, &shape, &model, t).unwrap();
        let pm = failure_probability(&maximin, &shape, &model, t).unwrap();
        assert!(pe <= pm * (1.0 + 1e-9), "t={t}: {pe:e} > {pm:e}");
        exact.validate_for(&shape).unwrap();
    }
}

#[test]
fn exact_optimizer_small_cases_by_enumeration() {
    fn all(n: usize, k: usize, r: usize) -> Vec<LayerAllocation> {
        fn rec(left: usize, layers: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<LayerAllocation>) {
            if layers == 0 {
                if left == 0 {
                    out.push(LayerAllocation { ks: cur.clone() });
                }
                return;
            }
            for v in 1..=max.min(left) {
                cur.push(v);
                rec(left - v, layers - 1, v, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(k, r, n, &mut Vec::new(), &mut out);
        out
    }
    let model = StragglerModel::new(1.5, 0.05).unwrap();
    for (n, k, r) in [(6, 9, 3), (7, 12, 3), (5, 8, 4)] {
        let shape = SystemShape::new(n, k, r).unwrap();
        for t in [0.8, 2.0, 5.0] {
            let best = all(n, k, r)
                .into_iter()
                .map(|a| failure_probability(&a, &shape, &model, t).unwrap())
                .fold(f64::INFINITY, f64::min);
            let got = optimize_exact(&shape, &model, t).unwrap();
            let p = failure_probability(&got, &shape, &model, t).unwrap();
            assert!(p <= best * (1.0 + 1e-9), "({n},{k},{r}) t={t}: {p:e} vs {best:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn maximin_matches_enumeration(n in 1usize..=12, r in 1usize..=4, k_frac in 0.0f64..1.0, s in 0usize..=1) {
        prop_assume!(s < n);
        let kmax = r * (n - s);
        let k = r + ((kmax - r) as f64 * k_frac) as usize;
        prop_assume!(k >= r && k <= kmax);
        let shape = SystemShape::new(n, k, r).unwrap();
        let sol = optimize_maximin(&shape, s).unwrap();
        prop_assert_eq!(Some(sol.z), enumerate_best(n, k, r, s));
        prop_assert_eq!(sol.z, brute_force_maximin(&shape, s).unwrap().z);
        prop_assert!(sol.ks.ks.iter().all(|&v| v <= n - s));
        prop_assert_eq!(sol.ks.total(), k);
    }
}
