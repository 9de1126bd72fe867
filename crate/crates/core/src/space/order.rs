use std::fmt;
use std::sync::Arc;

use super::anchor::{AnchorSeq, Sign};
use super::vector::{CoeffVec, Tail};
use super::weights::SpaceSpec;
use super::SpaceError;

/// Default number of tail coordinates sampled when no exact rule applies.
pub const DEFAULT_DEPTH: usize = 10_000;

/// Largest coordinate range scanned exhaustively below a polynomial root bound.
const MAX_ROOT_SCAN: f64 = 1e7;

/// How far an order verdict is exhaustive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    /// Every coordinate is covered.
    Exhaustive,
    /// Coordinates `0..n` are covered.
    UpTo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifiedBool {
    pub holds: bool,
    pub certified_depth: Depth,
}

impl CertifiedBool {
    fn exact(holds: bool) -> CertifiedBool {
        CertifiedBool {
            holds,
            certified_depth: Depth::Exhaustive,
        }
    }
}

fn nonpos(a: &AnchorSeq) -> bool {
    a.is_zero() || a.sign() == Sign::Nonpos
}

fn nonneg(a: &AnchorSeq) -> bool {
    a.is_zero() || a.sign() == Sign::Nonneg
}

/// Decides `a(k) ≤ b(k)` for every `k ≥ from`.
///
/// Rule table, in order: identical anchors; `a ≤ |a|` and `−|b| ≤ b`; lattice
/// operands (`max a_i ≤ b` iff every `a_i ≤ b`, `a ≤ max b_i` when some
/// `a ≤ b_i`, and the duals for min); sign classes (nonpos ≤ nonneg);
/// polynomial difference with a Cauchy root bound; sampled verification to
/// `depth` coordinates. Sampling alone cannot certify mixed-sign anchors.
pub fn anchor_leq(a: &AnchorSeq, b: &AnchorSeq, from: usize, depth: usize) -> Result<CertifiedBool, SpaceError> {
    if a == b || (nonpos(a) && nonneg(b)) || a.abs() == *b || b.abs().neg() == *a {
        return Ok(CertifiedBool::exact(true));
    }
    if let Some(r) = lattice_leq(a, b, from, depth)? {
        return Ok(r);
    }
    if let (Some(pa), Some(pb)) = (a.poly_coeffs(), b.poly_coeffs()) {
        let n = pa.len().max(pb.len());
        let diff: Vec<f64> = (0..n)
            .map(|d| pb.get(d).copied().unwrap_or(0.0) - pa.get(d).copied().unwrap_or(0.0))
            .collect();
        if diff.iter().all(|&c| c >= 0.0) {
            return Ok(CertifiedBool::exact(true));
        }
        // b − a = P(k+1) with a negative coefficient somewhere
        let deg = diff.iter().rposition(|&c| c != 0.0).expect("nonzero difference");
        let lead = diff[deg];
        let root_bound = 1.0 + diff[..deg].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
        // for m = k + 1 > root_bound, sign(P(m)) = sign(lead)
        let last_k = (root_bound.floor() as usize).max(from + 1);
        if lead > 0.0 && root_bound <= MAX_ROOT_SCAN {
            let poly = AnchorSeq::poly(diff).expect("finite");
            for k in from..last_k {
                if poly.eval(k) < 0.0 {
                    return Ok(CertifiedBool {
                        holds: false,
                        certified_depth: Depth::UpTo(k + 1),
                    });
                }
            }
            return Ok(CertifiedBool::exact(true));
        }
        if lead < 0.0 {
            return Ok(CertifiedBool::exact(false));
        }
    }
    for k in from..from.saturating_add(depth) {
        if a.eval(k) > b.eval(k) {
            return Ok(CertifiedBool {
                holds: false,
                certified_depth: Depth::UpTo(k + 1),
            });
        }
    }
    if a.sign() == Sign::Mixed || b.sign() == Sign::Mixed {
        return Err(SpaceError::OrderUndecidable { from });
    }
    Ok(CertifiedBool {
        holds: true,
        certified_depth: Depth::UpTo(from.saturating_add(depth)),
    })
}

fn lattice_leq(a: &AnchorSeq, b: &AnchorSeq, from: usize, depth: usize) -> Result<Option<CertifiedBool>, SpaceError> {
    let all = |items: Vec<AnchorSeq>, f: &dyn Fn(&AnchorSeq) -> Result<CertifiedBool, SpaceError>| {
        let mut worst = CertifiedBool::exact(true);
        for item in &items {
            let r = f(item)?;
            if !r.holds {
                return Ok(r);
            }
            if r.certified_depth != Depth::Exhaustive {
                worst = r;
            }
        }
        Ok::<_, SpaceError>(worst)
    };
    let any_exact = |items: Vec<AnchorSeq>, f: &dyn Fn(&AnchorSeq) -> Result<CertifiedBool, SpaceError>| {
        items
            .iter()
            .any(|item| matches!(f(item), Ok(r) if r.holds && r.certified_depth == Depth::Exhaustive))
    };
    if let Some(items) = a.max_items() {
        return all(items, &|ai| anchor_leq(ai, b, from, depth)).map(Some);
    }
    if let Some(items) = b.min_items() {
        return all(items, &|bi| anchor_leq(a, bi, from, depth)).map(Some);
    }
    if let Some(items) = b.max_items() {
        if items.contains(a) || any_exact(items, &|bi| anchor_leq(a, bi, from, depth)) {
            return Ok(Some(CertifiedBool::exact(true)));
        }
    }
    if let Some(items) = a.min_items() {
        if items.contains(b) || any_exact(items, &|ai| anchor_leq(ai, b, from, depth)) {
            return Ok(Some(CertifiedBool::exact(true)));
        }
    }
    Ok(None)
}

/// `x ≪ y`: every admissible coefficient of `x` is at most the matching one
/// of `y`. Floats are compared exactly.
pub fn leq(x: &CoeffVec, y: &CoeffVec) -> Result<CertifiedBool, SpaceError> {
    leq_with_depth(x, y, DEFAULT_DEPTH)
}

pub fn leq_with_depth(x: &CoeffVec, y: &CoeffVec, depth: usize) -> Result<CertifiedBool, SpaceError> {
    let n = x.len().max(y.len());
    for k in 0..n {
        let (_, x_hi) = x.coord_bounds(k);
        let (y_lo, _) = y.coord_bounds(k);
        if !(x_hi <= y_lo) {
            return Ok(CertifiedBool {
                holds: false,
                certified_depth: Depth::UpTo(k + 1),
            });
        }
    }
    anchor_leq(&x.tail().upper(), &y.tail().lower(), n, depth)
}

/// Coefficientwise absolute value.
pub fn abs(x: &CoeffVec) -> CoeffVec {
    let prefix = x.prefix().iter().map(|v| v.abs()).collect();
    let tail = match x.tail() {
        Tail::Zero => Tail::Zero,
        Tail::Anchor(a) => Tail::Anchor(a.abs()),
        Tail::Pinched { lower, upper } => {
            if nonneg(lower) {
                Tail::between(lower.clone(), upper.clone())
            } else if nonpos(upper) {
                Tail::between(upper.neg(), lower.neg())
            } else {
                Tail::between(AnchorSeq::zero(), AnchorSeq::max_of(&[lower.abs(), upper.abs()]))
            }
        }
    };
    CoeffVec::new_unchecked(prefix, tail)
}

/// Diagonal multiplier `x ↦ Σ λ_k x_k e_k` with `|λ_k| ≤ sup_norm`.
#[derive(Clone)]
pub struct DiagMult {
    lambda: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    sup_norm: f64,
}

impl fmt::Debug for DiagMult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagMult").field("sup_norm", &self.sup_norm).finish_non_exhaustive()
    }
}

impl DiagMult {
    /// Checks the declared sup norm against the first [`DEFAULT_DEPTH`] values.
    pub fn new(
        lambda: impl Fn(usize) -> f64 + Send + Sync + 'static,
        sup_norm: f64,
    ) -> Result<DiagMult, SpaceError> {
        if !(sup_norm.is_finite() && sup_norm >= 0.0) {
            return Err(SpaceError::MultiplierBound(0));
        }
        if let Some(k) = (0..DEFAULT_DEPTH).find(|&k| !(lambda(k).abs() <= sup_norm)) {
            return Err(SpaceError::MultiplierBound(k));
        }
        Ok(DiagMult {
            lambda: Arc::new(lambda),
            sup_norm,
        })
    }

    /// Finitely supported multiplier; `sup_norm` is the exact max.
    pub fn from_values(values: Vec<f64>) -> Result<DiagMult, SpaceError> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpaceError::MultiplierBound(k));
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        DiagMult::new(move |k| values.get(k).copied().unwrap_or(0.0), sup)
    }

    pub fn lambda(&self, k: usize) -> f64 {
        (self.lambda)(k)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }
}

/// Applies the multiplier. The tail becomes the symmetric envelope
/// `±sup_norm·|tail|`.
pub fn diag_apply(m: &DiagMult, x: &CoeffVec) -> CoeffVec {
    let prefix = x.prefix().iter().enumerate().map(|(k, v)| m.lambda(k) * v).collect();
    let tail = match x.tail() {
        Tail::Zero => Tail::Zero,
        t => {
            let env = t.magnitude().scaled_lazy(m.sup_norm());
            if env.is_zero() {
                Tail::Zero
            } else {
                Tail::Pinched {
                    lower: env.neg(),
                    upper: env,
                }
            }
        }
    };
    CoeffVec::new_unchecked(prefix, tail)
}

/// Coefficientwise supremum of `vs`, all of which must lie below `upper`.
pub fn coordwise_sup(vs: &[CoeffVec], upper: &CoeffVec) -> Result<CoeffVec, SpaceError> {
    if vs.is_empty() {
        return Err(SpaceError::EmptySup);
    }
    for (index, v) in vs.iter().enumerate() {
        if !leq(v, upper)?.holds {
            return Err(SpaceError::NoUpperBound { index });
        }
    }
    let n = vs.iter().map(CoeffVec::len).max().unwrap_or(0);
    let expanded = vs.iter().map(|v| v.expanded(n)).collect::<Result<Vec<_>, _>>()?;
    let prefix = (0..n)
        .map(|k| expanded.iter().map(|v| v.prefix()[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let first = vs[0].tail();
    let tail = if !matches!(first, Tail::Pinched { .. }) && vs.iter().all(|v| v.tail() == first) {
        first.clone()
    } else {
        let lowers: Vec<AnchorSeq> = vs.iter().map(|v| v.tail().lower()).collect();
        let uppers: Vec<AnchorSeq> = vs.iter().map(|v| v.tail().upper()).collect();
        Tail::between(AnchorSeq::max_of(&lowers), AnchorSeq::max_of(&uppers))
    };
    // every input sits under `upper` by the checks above
    Ok(CoeffVec::new_unchecked(prefix, tail))
}

/// Order interval `[lo, hi] = {x : lo ≪ x ≪ hi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderInterval {
    lo: CoeffVec,
    hi: CoeffVec,
}

impl OrderInterval {
    pub fn new(lo: CoeffVec, hi: CoeffVec) -> Result<OrderInterval, SpaceError> {
        if !leq(&lo, &hi)?.holds {
            return Err(SpaceError::EmptyInterval);
        }
        Ok(OrderInterval { lo, hi })
    }

    pub fn lo(&self) -> &CoeffVec {
        &self.lo
    }

    pub fn hi(&self) -> &CoeffVec {
        &self.hi
    }

    pub fn contains(&self, x: &CoeffVec) -> Result<bool, SpaceError> {
        Ok(leq(&self.lo, x)?.holds && leq(x, &self.hi)?.holds)
    }

    /// `½(‖lo + hi‖_i + ‖hi − lo‖_i)`, which dominates `‖x‖_i` for every
    /// member when the seminorms are weighted sums.
    pub fn seminorm_estimate(&self, space: &SpaceSpec, i: usize, tail_tol: f64) -> Result<f64, SpaceError> {
        let sum = self.lo.add(&self.hi)?;
        let width = self.hi.sub(&self.lo)?;
        Ok(0.5 * (space.seminorm(&sum, i, tail_tol)?.total() + space.seminorm(&width, i, tail_tol)?.total()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> CoeffVec {
        CoeffVec::from_prefix(xs.to_vec()).unwrap()
    }

    #[test]
    fn leq_on_prefixes() {
        assert!(leq(&v(&[0.0, 0.0]), &v(&[1.0, 2.0])).unwrap().holds);
        let r = leq(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn nonpos_anchor_below_zero() {
        let a = AnchorSeq::power(-1.0, 1);
        let x = CoeffVec::new(vec![-1.0, -2.0], Tail::Anchor(a.clone())).unwrap();
        let r = leq(&x, &CoeffVec::zero()).unwrap();
        assert!(r.holds);
        assert_eq!(r.certified_depth, Depth::Exhaustive);
        // the sign rule agrees with direct sampling
        assert!((0..10_000).all(|k| x.coord(k) <= 0.0));
    }

    #[test]
    fn tail_rule_table() {
        let pos = AnchorSeq::power(2.0, 2);
        let neg = AnchorSeq::power(-3.0, 0);
        let zero = AnchorSeq::zero();
        for (a, b) in [(&zero, &pos), (&neg, &zero), (&pos, &pos), (&neg, &pos)] {
            assert!(anchor_leq(a, b, 0, 100).unwrap().holds);
        }
        assert!(!anchor_leq(&pos, &zero, 0, 100).unwrap().holds);
    }

    #[test]
    fn polynomial_root_bound_decides() {
        // (k+1)² − 10 ≥ 0 from k = 3 on, fails at k = 2
        let a = AnchorSeq::constant(10.0);
        let b = AnchorSeq::power(1.0, 2);
        let r = anchor_leq(&a, &b, 3, 0).unwrap();
        assert_eq!(r, CertifiedBool::exact(true));
        assert!(!anchor_leq(&a, &b, 0, 0).unwrap().holds);
        // linear beats quadratic eventually: never certifiable as ≤
        assert!(!anchor_leq(&b, &a, 100, 0).unwrap().holds);
    }

    #[test]
    fn mixed_tails_without_rule_are_undecidable() {
        // a = |1 − m|, b = |1 − m| + 3 − m with m = k + 1
        let a = AnchorSeq::poly(vec![1.0, -1.0]).unwrap().abs();
        let b = a.add(&AnchorSeq::poly(vec![3.0, -1.0]).unwrap());
        assert_eq!(anchor_leq(&a, &b, 0, 3), Err(SpaceError::OrderUndecidable { from: 0 }));
        // sampling deep enough finds the crossing at k = 3
        assert!(!anchor_leq(&a, &b, 0, 4).unwrap().holds);
    }

    #[test]
    fn lattice_operands_are_decided() {
        let m = AnchorSeq::power(1.0, 1);
        let mixed = AnchorSeq::poly(vec![5.0, -1.0]).unwrap();
        let hi = AnchorSeq::max_of(&[m.clone(), mixed.clone()]);
        assert_eq!(anchor_leq(&mixed, &hi, 0, 0), Ok(CertifiedBool::exact(true)));
        assert_eq!(anchor_leq(&hi, &hi.abs(), 0, 0), Ok(CertifiedBool::exact(true)));
        let lo = AnchorSeq::min_of(&[m.clone(), mixed.clone()]);
        assert_eq!(anchor_leq(&lo, &m, 0, 0), Ok(CertifiedBool::exact(true)));
        // max(m, 5 − m) ≤ 2m fails at k = 0
        assert!(!anchor_leq(&hi, &m.scale(2.0), 0, 8).unwrap().holds);
    }

    #[test]
    fn abs_examples() {
        assert_eq!(abs(&v(&[-1.0, 2.0, -3.0])).prefix(), &[1.0, 2.0, 3.0]);
        let x = CoeffVec::from_anchor(AnchorSeq::power(-1.0, 2));
        let y = abs(&x);
        assert_eq!(y.tail(), &Tail::Anchor(AnchorSeq::power(1.0, 2)));
        assert_eq!(y.tail().upper().sign(), Sign::Nonneg);
        assert_eq!(abs(&CoeffVec::zero()), CoeffVec::zero());
    }

    #[test]
    fn diag_examples() {
        let id = DiagMult::new(|_| 1.0, 1.0).unwrap();
        let x = CoeffVec::new(vec![1.0, -2.0], Tail::Anchor(AnchorSeq::power(1.0, 1))).unwrap();
        let y = diag_apply(&id, &x);
        assert_eq!(y.prefix(), x.prefix());
        for k in 2..50 {
            let (lo, hi) = y.coord_bounds(k);
            assert!(lo <= x.coord(k) && x.coord(k) <= hi);
        }

        let alt = DiagMult::new(|k| if k % 2 == 0 { 1.0 } else { -1.0 }, 1.0).unwrap();
        assert_eq!(diag_apply(&alt, &v(&[1.0; 4])).prefix(), &[1.0, -1.0, 1.0, -1.0]);

        let harmonic = DiagMult::new(|k| 1.0 / (k as f64 + 1.0), 1.0).unwrap();
        let x = v(&[2.0, 4.0, 6.0]);
        let y = diag_apply(&harmonic, &x);
        assert_eq!(y.prefix(), &[2.0, 2.0, 2.0]);
        let sp = SpaceSpec::power_series();
        for i in 1..=3 {
            let lhs = sp.seminorm(&y, i, 1e-12).unwrap().value;
            let rhs = sp.seminorm(&x, i, 1e-12).unwrap().value;
            // both sides by hand: Σ r^k·2 versus Σ r^k·2(k+1)
            let r = 1.0 - 1.0 / (i as f64 + 1.0);
            let hand_lhs: f64 = (0..3).map(|k| 2.0 * r.powi(k)).sum();
            let hand_rhs: f64 = (0..3).map(|k| 2.0 * (k as f64 + 1.0) * r.powi(k)).sum();
            assert!((lhs - hand_lhs).abs() < 1e-14 && (rhs - hand_rhs).abs() < 1e-14);
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn multiplier_bound_is_checked() {
        assert!(DiagMult::new(|k| k as f64, 5.0).is_err());
    }

    #[test]
    fn sup_examples() {
        let s = coordwise_sup(&[v(&[1.0, 5.0]), v(&[3.0, 2.0])], &v(&[10.0, 10.0])).unwrap();
        assert_eq!(s.prefix(), &[3.0, 5.0]);

        let x = v(&[0.5, -4.0]);
        assert_eq!(coordwise_sup(std::slice::from_ref(&x), &v(&[1.0, 0.0])).unwrap(), x);

        let s = coordwise_sup(&[v(&[0.0, -1.0, 2.0]), v(&[1.0, -3.0, 2.0])], &v(&[1.0, 0.0, 2.0])).unwrap();
        assert_eq!(s.prefix(), &[1.0, -1.0, 2.0]);
    }

    #[test]
    fn sup_errors() {
        assert_eq!(coordwise_sup(&[], &v(&[1.0])), Err(SpaceError::EmptySup));
        assert_eq!(
            coordwise_sup(&[v(&[0.0]), v(&[2.0])], &v(&[1.0])),
            Err(SpaceError::NoUpperBound { index: 1 })
        );
    }

    #[test]
    fn sup_tail_is_pointwise_max() {
        let a = CoeffVec::from_anchor(AnchorSeq::power(-1.0, 1));
        let b = CoeffVec::from_anchor(AnchorSeq::power(-2.0, 1));
        let upper = CoeffVec::from_anchor(AnchorSeq::power(1.0, 1));
        let s = coordwise_sup(&[a, b], &upper).unwrap();
        assert!(leq(&s, &upper).unwrap().holds);
        assert_eq!(s.coord_bounds(3), (-4.0, -4.0));
    }

    #[test]
    fn interval_membership() {
        let iv = OrderInterval::new(v(&[-1.0, -1.0]), v(&[1.0, 2.0])).unwrap();
        assert!(iv.contains(&v(&[0.0, 2.0])).unwrap());
        assert!(!iv.contains(&v(&[0.0, 3.0])).unwrap());
        assert_eq!(OrderInterval::new(v(&[1.0]), v(&[0.0])), Err(SpaceError::EmptyInterval));
    }
}
