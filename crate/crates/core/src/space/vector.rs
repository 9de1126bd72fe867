use super::anchor::AnchorSeq;
use super::SpaceError;

/// Coefficients beyond the explicit prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    Zero,
    Anchor(AnchorSeq),
    /// Any sequence with `lower(k) ≤ x_k ≤ upper(k)`.
    Pinched { lower: AnchorSeq, upper: AnchorSeq },
}

impl Tail {
    pub fn lower(&self) -> AnchorSeq {
        match self {
            Tail::Zero => AnchorSeq::zero(),
            Tail::Anchor(a) => a.clone(),
            Tail::Pinched { lower, .. } => lower.clone(),
        }
    }

    pub fn upper(&self) -> AnchorSeq {
        match self {
            Tail::Zero => AnchorSeq::zero(),
            Tail::Anchor(a) => a.clone(),
            Tail::Pinched { upper, .. } => upper.clone(),
        }
    }

    /// Pointwise bound on `|x_k|` for every admissible tail.
    pub fn magnitude(&self) -> AnchorSeq {
        match self {
            Tail::Zero => AnchorSeq::zero(),
            Tail::Anchor(a) => a.abs(),
            Tail::Pinched { lower, upper } => AnchorSeq::max_of(&[lower.abs(), upper.abs()]),
        }
    }

    /// Builds the tail spanned by `[lower, upper]`, collapsing degenerate cases.
    pub fn between(lower: AnchorSeq, upper: AnchorSeq) -> Tail {
        if lower == upper {
            Tail::from_anchor(lower)
        } else {
            Tail::Pinched { lower, upper }
        }
    }

    pub fn from_anchor(a: AnchorSeq) -> Tail {
        if a.is_zero() {
            Tail::Zero
        } else {
            Tail::Anchor(a)
        }
    }

    fn exact(&self) -> Option<AnchorSeq> {
        match self {
            Tail::Zero => Some(AnchorSeq::zero()),
            Tail::Anchor(a) => Some(a.clone()),
            Tail::Pinched { .. } => None,
        }
    }

    fn add(&self, other: &Tail) -> Tail {
        match (self.exact(), other.exact()) {
            (Some(a), Some(b)) => Tail::from_anchor(a.add(&b)),
            _ => Tail::between(self.lower().add(&other.lower()), self.upper().add(&other.upper())),
        }
    }

    fn scale(&self, s: f64) -> Tail {
        match self {
            Tail::Zero => Tail::Zero,
            Tail::Anchor(a) => Tail::from_anchor(a.scale(s)),
            Tail::Pinched { lower, upper } => {
                if s >= 0.0 {
                    Tail::between(lower.scale(s), upper.scale(s))
                } else {
                    Tail::between(upper.scale(s), lower.scale(s))
                }
            }
        }
    }
}

/// A truncated coefficient sequence: `N` explicit coefficients followed by a
/// symbolic tail. Coordinates are numbered from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVec {
    prefix: Vec<f64>,
    tail: Tail,
}

impl CoeffVec {
    pub fn new(prefix: Vec<f64>, tail: Tail) -> Result<CoeffVec, SpaceError> {
        if let Some(index) = prefix.iter().position(|x| !x.is_finite()) {
            return Err(SpaceError::NonFinite { index });
        }
        if let Tail::Pinched { lower, upper } = &tail {
            let from = prefix.len();
            let ok = super::order::anchor_leq(lower, upper, from, super::order::DEFAULT_DEPTH)?;
            if !ok.holds {
                return Err(SpaceError::PinchedOrder);
            }
        }
        Ok(CoeffVec { prefix, tail })
    }

    /// Skips the pinch-order check; callers guarantee `lower ≤ upper`.
    pub(crate) fn new_unchecked(prefix: Vec<f64>, tail: Tail) -> CoeffVec {
        debug_assert!(prefix.iter().all(|x| x.is_finite()));
        CoeffVec { prefix, tail }
    }

    /// Finite vector with zero tail.
    pub fn from_prefix(prefix: Vec<f64>) -> Result<CoeffVec, SpaceError> {
        CoeffVec::new(prefix, Tail::Zero)
    }

    pub fn from_anchor(a: AnchorSeq) -> CoeffVec {
        CoeffVec {
            prefix: Vec::new(),
            tail: Tail::from_anchor(a),
        }
    }

    pub fn zero() -> CoeffVec {
        CoeffVec {
            prefix: Vec::new(),
            tail: Tail::Zero,
        }
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Length of the explicit prefix.
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    /// The `k`-th coefficient. For a pinched tail this is the least admissible
    /// value.
    pub fn coord(&self, k: usize) -> f64 {
        match self.prefix.get(k) {
            Some(&x) => x,
            None => match &self.tail {
                Tail::Zero => 0.0,
                Tail::Anchor(a) => a.eval(k),
                Tail::Pinched { lower, .. } => lower.eval(k),
            },
        }
    }

    /// Smallest and largest admissible values of the `k`-th coefficient.
    pub fn coord_bounds(&self, k: usize) -> (f64, f64) {
        match self.prefix.get(k) {
            Some(&x) => (x, x),
            None => match &self.tail {
                Tail::Zero => (0.0, 0.0),
                Tail::Anchor(a) => {
                    let v = a.eval(k);
                    (v, v)
                }
                Tail::Pinched { lower, upper } => (lower.eval(k), upper.eval(k)),
            },
        }
    }

    /// The first `n` coefficients.
    pub fn truncated(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.coord(k)).collect()
    }

    /// Replaces the leading coefficients with `values`, keeping everything else.
    pub fn with_leading(&self, values: &[f64]) -> CoeffVec {
        let mut prefix = values.to_vec();
        if self.prefix.len() > values.len() {
            prefix.extend_from_slice(&self.prefix[values.len()..]);
        }
        CoeffVec {
            prefix,
            tail: self.tail.clone(),
        }
    }

    /// Extends the prefix to at least `n` explicit coefficients.
    pub fn expanded(&self, n: usize) -> Result<CoeffVec, SpaceError> {
        if n <= self.prefix.len() {
            return Ok(self.clone());
        }
        if matches!(self.tail, Tail::Pinched { .. }) {
            return Err(SpaceError::PinchedExtension);
        }
        Ok(CoeffVec {
            prefix: self.truncated(n),
            tail: self.tail.clone(),
        })
    }

    pub fn add(&self, other: &CoeffVec) -> Result<CoeffVec, SpaceError> {
        let n = self.len().max(other.len());
        let a = self.expanded(n)?;
        let b = other.expanded(n)?;
        let prefix = a.prefix.iter().zip(&b.prefix).map(|(x, y)| x + y).collect();
        Ok(CoeffVec {
            prefix,
            tail: a.tail.add(&b.tail),
        })
    }

    pub fn sub(&self, other: &CoeffVec) -> Result<CoeffVec, SpaceError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> CoeffVec {
        CoeffVec {
            prefix: self.prefix.iter().map(|x| s * x).collect(),
            tail: self.tail.scale(s),
        }
    }
}
