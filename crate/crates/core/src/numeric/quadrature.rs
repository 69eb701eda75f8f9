use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (nonnegative half) and weights; odd entries are
// the embedded 7-point Gauss abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Equal-width pieces the range is split into before adapting.
    pub initial_pieces: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_intervals: 4000,
            initial_pieces: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOutput {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Fails with [`Error::NumericalFailure`] if the error target is not reached
/// within `max_intervals` subintervals or the integrand is not finite.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadratureOptions,
) -> Result<QuadratureOutput> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::invalid(format!("bad integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureOutput {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    let pieces = opts.initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::new();
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        heap.push(kronrod(&mut f, lo, hi));
    }
    let mut evaluations = 15 * pieces;
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "integrand not finite on [{a}, {b}] after {evaluations} evaluations"
            )));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadratureOutput {
                value,
                error_estimate: error,
                evaluations,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            let worst = heap.peek().expect("non-empty");
            return Err(Error::NumericalFailure(format!(
                "quadrature on [{a}, {b}] did not converge: estimate {value:.6e} with error {error:.3e} \
                 after {evaluations} evaluations over {} intervals; worst interval [{:.6e}, {:.6e}] error {:.3e}",
                heap.len(),
                worst.a,
                worst.b,
                worst.error
            )));
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let out = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadratureOptions::default()).unwrap();
        assert!((out.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let out = integrate(|x| (-x).exp(), 0.0, 40.0, QuadratureOptions::default()).unwrap();
        assert!((out.value - (1.0 - (-40f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn sharp_transition() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { (-1e3 * (x - 1.0)).exp() };
        let out = integrate(f, 0.0, 30.0, QuadratureOptions::default()).unwrap();
        assert!((out.value - 1.001).abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadratureOptions {
            max_intervals: 20,
            ..QuadratureOptions::default()
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-9, 1.0, opts).unwrap_err();
        match err {
            Error::NumericalFailure(msg) => assert!(msg.contains("did not converge")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
