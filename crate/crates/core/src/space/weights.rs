use super::anchor::AnchorSeq;
use super::vector::CoeffVec;
use super::SpaceError;

/// How the weighted coefficients are combined into a seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeminormKind {
    /// `‖x‖_i = Σ_k w_i(k)·|x_k|`
    WeightedSum,
    /// `‖x‖_i = sup_k w_i(k)·|x_k|`
    WeightedSup,
}

/// Weight matrix `w_i(k)`, index `i ≥ 1`, coordinate `k ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// `w_i(k) = r_i^k` with `r_i = 1 − 1/(i+1)`.
    PowerSeries,
    /// `w_i(k) = rows[i-1][k]` for `k` inside the table, continued
    /// geometrically with ratio `tail_ratios[i-1]` past the last column.
    /// Indices past the last row reuse the last row.
    Table {
        rows: Vec<Vec<f64>>,
        tail_ratios: Vec<f64>,
    },
}

/// Geometric regime of one weight row: `w_i(k) = scale · ratio^(k − start)`
/// for every `k ≥ start`.
#[derive(Debug, Clone, Copy)]
struct GeometricTail {
    start: usize,
    scale: f64,
    ratio: f64,
}

/// Result of a seminorm evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    /// Contribution of the explicit prefix.
    pub value: f64,
    /// Upper bound on the contribution of any admissible tail.
    pub tail_bound: f64,
}

impl Seminorm {
    /// Upper bound on the full seminorm.
    pub fn total(&self) -> f64 {
        self.value + self.tail_bound
    }
}

const MAX_TAIL_TERMS: usize = 10_000_000;

/// A Köthe-type sequence space given by a monotone weight family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    name: String,
    kind: SeminormKind,
    weights: WeightRule,
}

impl SpaceSpec {
    pub fn new(
        name: impl Into<String>,
        kind: SeminormKind,
        weights: WeightRule,
    ) -> Result<SpaceSpec, SpaceError> {
        if let WeightRule::Table { rows, tail_ratios } = &weights {
            validate_table(rows, tail_ratios)?;
        }
        Ok(SpaceSpec {
            name: name.into(),
            kind,
            weights,
        })
    }

    /// Power-series space with weighted-sum seminorms.
    pub fn power_series() -> SpaceSpec {
        SpaceSpec {
            name: "power-series".into(),
            kind: SeminormKind::WeightedSum,
            weights: WeightRule::PowerSeries,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SeminormKind {
        self.kind
    }

    pub fn weights(&self) -> &WeightRule {
        &self.weights
    }

    pub fn weight(&self, i: usize, k: usize) -> f64 {
        let g = self.geometric_tail(i);
        match &self.weights {
            WeightRule::PowerSeries => g.ratio.powi(k as i32),
            WeightRule::Table { rows, .. } => {
                let row = &rows[(i.max(1) - 1).min(rows.len() - 1)];
                if k < row.len() {
                    row[k]
                } else {
                    g.scale * g.ratio.powi((k - g.start) as i32)
                }
            }
        }
    }

    fn geometric_tail(&self, i: usize) -> GeometricTail {
        match &self.weights {
            WeightRule::PowerSeries => GeometricTail {
                start: 0,
                scale: 1.0,
                ratio: 1.0 - 1.0 / (i as f64 + 1.0),
            },
            WeightRule::Table { rows, tail_ratios } => {
                let r = (i.max(1) - 1).min(rows.len() - 1);
                let row = &rows[r];
                GeometricTail {
                    start: row.len() - 1,
                    scale: row[row.len() - 1],
                    ratio: tail_ratios[r],
                }
            }
        }
    }

    /// Confirms that `a` has a finite weighted tail for every index.
    pub fn summability_witness(&self, a: &AnchorSeq) -> Result<(), SpaceError> {
        let g = a.growth();
        if g.coeff == 0.0 {
            return Ok(());
        }
        match &self.weights {
            // r_i < 1 for every i and anchors grow polynomially
            WeightRule::PowerSeries => Ok(()),
            WeightRule::Table { tail_ratios, .. } => {
                for (idx, &r) in tail_ratios.iter().enumerate() {
                    let ok = match self.kind {
                        SeminormKind::WeightedSum => r < 1.0,
                        SeminormKind::WeightedSup => r < 1.0 || (r == 1.0 && g.degree == 0),
                    };
                    if !ok {
                        return Err(SpaceError::TailNotSummable { index: idx + 1 });
                    }
                }
                Ok(())
            }
        }
    }

    /// Seminorm of index `i` split into the prefix value and a certified
    /// bound on the tail, accurate to `tail_tol`.
    pub fn seminorm(&self, x: &CoeffVec, i: usize, tail_tol: f64) -> Result<Seminorm, SpaceError> {
        if i == 0 {
            return Err(SpaceError::ZeroIndex);
        }
        if !(tail_tol > 0.0) {
            return Err(SpaceError::BadTolerance);
        }
        let pairs = x.prefix().iter().enumerate().map(|(k, v)| (self.weight(i, k), v.abs()));
        let value = match self.kind {
            SeminormKind::WeightedSum => pairs
                .fold(CompensatedSum::default(), |s, (w, v)| s.add_product(w, v))
                .value(),
            SeminormKind::WeightedSup => pairs.map(|(w, v)| w * v).fold(0.0, f64::max),
        };
        let magnitude = x.tail().magnitude();
        let tail_bound = self.tail_bound(&magnitude, x.len(), i, tail_tol)?;
        Ok(Seminorm { value, tail_bound })
    }

    /// Bound on `Σ_{k ≥ from} w_i(k)·a(k)` (or the sup) for a nonnegative anchor.
    fn tail_bound(&self, a: &AnchorSeq, from: usize, i: usize, tol: f64) -> Result<f64, SpaceError> {
        let (factor, a) = a.split_factor();
        if factor != 1.0 {
            return Ok(factor * self.tail_bound(&a, from, i, tol / factor.max(1.0))?);
        }
        let a = &a;
        let growth = a.growth();
        if growth.coeff == 0.0 {
            return Ok(0.0);
        }
        let geo = self.geometric_tail(i);
        let d = growth.degree as i32;
        // envelope e_k = w_i(k)·coeff·(k+1)^d; for k ≥ start its successive
        // ratio q_k = r·((k+2)/(k+1))^d decreases towards r
        let ratio_at = |k: usize| geo.ratio * ((k as f64 + 2.0) / (k as f64 + 1.0)).powi(d);
        let mut acc = 0.0f64;
        let mut sum = CompensatedSum::default();
        for k in from..from.saturating_add(MAX_TAIL_TERMS) {
            if k >= geo.start {
                let q = ratio_at(k);
                let e = self.weight(i, k) * growth.at(k);
                match self.kind {
                    SeminormKind::WeightedSum => {
                        if q < 1.0 {
                            let rest = e / (1.0 - q);
                            if rest <= tol {
                                return Ok(sum.add(rest).value());
                            }
                        } else if geo.ratio >= 1.0 {
                            return Err(SpaceError::TailNotSummable { index: i });
                        }
                    }
                    SeminormKind::WeightedSup => {
                        if q <= 1.0 && (e <= acc || e <= tol) {
                            return Ok(acc.max(e));
                        }
                        if geo.ratio == 1.0 && d == 0 {
                            return Ok(acc.max(e));
                        }
                        if geo.ratio > 1.0 || (geo.ratio == 1.0 && d > 0) {
                            return Err(SpaceError::TailNotSummable { index: i });
                        }
                    }
                }
            }
            let (w, v) = (self.weight(i, k), a.eval(k));
            match self.kind {
                SeminormKind::WeightedSum => sum = sum.add_product(w, v),
                SeminormKind::WeightedSup => acc = acc.max(w * v),
            }
        }
        Err(SpaceError::TailNotSummable { index: i })
    }
}

/// Neumaier summation; products are split exactly with a fused multiply-add.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(self, x: f64) -> CompensatedSum {
        let t = self.sum + x;
        let carry = if self.sum.abs() >= x.abs() {
            self.carry + ((self.sum - t) + x)
        } else {
            self.carry + ((x - t) + self.sum)
        };
        CompensatedSum { sum: t, carry }
    }

    fn add_product(self, a: f64, b: f64) -> CompensatedSum {
        let p = a * b;
        let mut s = self.add(p);
        s.carry += a.mul_add(b, -p);
        s
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

fn validate_table(rows: &[Vec<f64>], ratios: &[f64]) -> Result<(), SpaceError> {
    let bad = |msg: &str| Err(SpaceError::InvalidWeights(msg.to_string()));
    if rows.is_empty() || rows[0].is_empty() {
        return bad("weight table must have at least one row and one column");
    }
    if rows.len() != ratios.len() {
        return bad("one tail ratio per weight row is required");
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return bad("weight rows must have equal length");
    }
    if rows.iter().flatten().chain(ratios).any(|w| !w.is_finite() || *w < 0.0) {
        return bad("weights must be finite and nonnegative");
    }
    for i in 1..rows.len() {
        if rows[i - 1].iter().zip(&rows[i]).any(|(a, b)| a > b) || ratios[i - 1] > ratios[i] {
            return bad("weight family must be nondecreasing in the index");
        }
    }
    // monotone family: the last row dominates, so it alone decides separation
    let last = rows.len() - 1;
    if rows[last].contains(&0.0) || ratios[last] == 0.0 {
        return bad("every coordinate needs a positive weight for some index");
    }
    Ok(())
}
