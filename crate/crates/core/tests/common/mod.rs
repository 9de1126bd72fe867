#![allow(dead_code)]

use monotone_ivp::quadrature::StepFn;
use monotone_ivp::space::{AnchorSeq, CoeffVec, DiagMult, Tail};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Tail accuracy used when comparing seminorms of vectors with symbolic tails.
pub const TAIL_TOL: f64 = 1e-16;

pub fn poly(rng: &mut ChaCha8Rng, nonneg: bool) -> AnchorSeq {
    let degree = rng.gen_range(0..=2);
    let lo = if nonneg { 0.0 } else { -3.0 };
    let coeffs = (0..=degree).map(|_| rng.gen_range(lo..3.0)).collect();
    AnchorSeq::poly(coeffs).unwrap_or_else(AnchorSeq::zero)
}

/// Random element: a prefix of up to 24 coefficients in `[-10, 10]` and, two
/// times in three, a polynomial anchor tail.
pub fn vector(rng: &mut ChaCha8Rng) -> CoeffVec {
    let n = rng.gen_range(0..=24);
    let prefix = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let tail = if rng.gen_range(0..3) == 0 {
        Tail::Zero
    } else {
        Tail::from_anchor(poly(rng, false))
    };
    CoeffVec::new(prefix, tail).unwrap()
}

pub fn nonneg_vector(rng: &mut ChaCha8Rng) -> CoeffVec {
    let n = rng.gen_range(0..=24);
    let prefix = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let tail = if rng.gen_range(0..3) == 0 {
        Tail::Zero
    } else {
        Tail::from_anchor(poly(rng, true))
    };
    CoeffVec::new(prefix, tail).unwrap()
}

/// `a ≤ x ≤ b` built from nonnegative increments.
pub fn ordered_triple(rng: &mut ChaCha8Rng) -> (CoeffVec, CoeffVec, CoeffVec) {
    let a = vector(rng);
    let x = a.add(&nonneg_vector(rng)).unwrap();
    let b = x.add(&nonneg_vector(rng)).unwrap();
    (a, x, b)
}

pub fn multiplier(rng: &mut ChaCha8Rng) -> DiagMult {
    let n = rng.gen_range(1..=24);
    DiagMult::from_values((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

/// Slack allowed when comparing computed seminorm totals: one ulp of the
/// bounding side, plus the certified tail accuracy when a tail is present.
pub fn slack(rhs: f64, has_tail: bool) -> f64 {
    let ulp = rhs.abs().next_up() - rhs.abs();
    if has_tail {
        ulp + TAIL_TOL
    } else {
        ulp
    }
}

pub fn has_tail(x: &CoeffVec) -> bool {
    !matches!(x.tail(), Tail::Zero)
}

/// Random step function on `[0, 1]` with 2 to 8 cells.
pub fn step_fn(rng: &mut ChaCha8Rng) -> StepFn {
    let cells = rng.gen_range(2..=8);
    let mut inner: Vec<f64> = (0..cells - 1).map(|_| rng.gen_range(0.01..0.99)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut breaks = vec![0.0];
    breaks.extend(inner);
    breaks.push(1.0);
    let values = (0..breaks.len() - 1).map(|_| vector(rng)).collect();
    StepFn::new(breaks, values).unwrap()
}

/// Step function with dyadic breakpoints, values and tail coefficients, so
/// every sum and product it takes part in is exact.
pub fn dyadic_step_fn(rng: &mut ChaCha8Rng) -> StepFn {
    let cells = rng.gen_range(1..=6);
    let mut inner: Vec<f64> = (0..cells - 1).map(|_| f64::from(rng.gen_range(1..16)) / 16.0).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut breaks = vec![0.0];
    breaks.extend(inner);
    breaks.push(1.0);
    let values = (0..breaks.len() - 1)
        .map(|_| {
            let n = rng.gen_range(0..=8);
            let prefix = (0..n).map(|_| f64::from(rng.gen_range(-64..64)) / 8.0).collect();
            let tail = if rng.gen_bool(0.5) {
                Tail::Zero
            } else {
                let coeffs = (0..=rng.gen_range(0..=2)).map(|_| f64::from(rng.gen_range(-16..16)) / 4.0).collect();
                Tail::from_anchor(AnchorSeq::poly(coeffs).unwrap_or_else(AnchorSeq::zero))
            };
            CoeffVec::new(prefix, tail).unwrap()
        })
        .collect();
    StepFn::new(breaks, values).unwrap()
}

/// Equality of the first `n` coefficients and of the tails.
pub fn same_vector(a: &CoeffVec, b: &CoeffVec, n: usize) -> bool {
    a.truncated(n) == b.truncated(n)
        && a.expanded(n).map(|v| v.tail().clone()).ok() == b.expanded(n).map(|v| v.tail().clone()).ok()
}
