//! Closed-form coefficient rules used as symbolic tails.
//!
//! An anchor is a pure rule `k ↦ a(k)` built from polynomials in `m = k + 1`
//! and a few lattice/linear combinators. Every anchor carries two pieces of
//! metadata derived from its structure:
//!
//! * a [`Sign`] class, used by the order rule table;
//! * a [`Growth`] envelope `|a(k)| ≤ coeff · (k+1)^degree`, used by tail-sum
//!   routines to bound remainders.

use std::fmt;

/// Sign class of an anchor over all `k ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Nonneg,
    Nonpos,
    Mixed,
}

/// Envelope `|a(k)| ≤ coeff · (k+1)^degree` valid for every `k ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub coeff: f64,
    pub degree: u32,
}

impl Growth {
    pub fn at(&self, k: usize) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        self.coeff * ((k + 1) as f64).powi(self.degree as i32)
    }

    fn join(self, other: Growth) -> Growth {
        Growth {
            coeff: self.coeff.max(other.coeff),
            degree: self.degree.max(other.degree),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    /// `Σ_d coeffs[d] · (k+1)^d`
    Poly(Vec<f64>),
    Abs(Box<Rule>),
    Max(Vec<Rule>),
    Min(Vec<Rule>),
    Scale(f64, Box<Rule>),
    Sum(Vec<Rule>),
}

impl Rule {
    fn eval(&self, k: usize) -> f64 {
        match self {
            Rule::Poly(c) => {
                let m = (k + 1) as f64;
                c.iter().rev().fold(0.0, |acc, &ci| acc * m + ci)
            }
            Rule::Abs(r) => r.eval(k).abs(),
            Rule::Max(rs) => rs.iter().map(|r| r.eval(k)).fold(f64::NEG_INFINITY, f64::max),
            Rule::Min(rs) => rs.iter().map(|r| r.eval(k)).fold(f64::INFINITY, f64::min),
            Rule::Scale(s, r) => s * r.eval(k),
            Rule::Sum(rs) => rs.iter().map(|r| r.eval(k)).sum(),
        }
    }

    fn sign(&self) -> Sign {
        match self {
            Rule::Poly(c) => {
                if c.iter().all(|&x| x >= 0.0) {
                    Sign::Nonneg
                } else if c.iter().all(|&x| x <= 0.0) {
                    Sign::Nonpos
                } else {
                    Sign::Mixed
                }
            }
            Rule::Abs(_) => Sign::Nonneg,
            Rule::Max(rs) => {
                let signs: Vec<Sign> = rs.iter().map(Rule::sign).collect();
                if signs.contains(&Sign::Nonneg) {
                    Sign::Nonneg
                } else if signs.iter().all(|&s| s == Sign::Nonpos) {
                    Sign::Nonpos
                } else {
                    Sign::Mixed
                }
            }
            Rule::Min(rs) => {
                let signs: Vec<Sign> = rs.iter().map(Rule::sign).collect();
                if signs.contains(&Sign::Nonpos) {
                    Sign::Nonpos
                } else if signs.iter().all(|&s| s == Sign::Nonneg) {
                    Sign::Nonneg
                } else {
                    Sign::Mixed
                }
            }
            Rule::Scale(s, r) => match (r.sign(), *s >= 0.0) {
                (Sign::Mixed, _) => Sign::Mixed,
                (sign, true) => sign,
                (Sign::Nonneg, false) => Sign::Nonpos,
                (Sign::Nonpos, false) => Sign::Nonneg,
            },
            Rule::Sum(rs) => {
                let signs: Vec<Sign> = rs.iter().map(Rule::sign).collect();
                if signs.iter().all(|&s| s == Sign::Nonneg) {
                    Sign::Nonneg
                } else if signs.iter().all(|&s| s == Sign::Nonpos) {
                    Sign::Nonpos
                } else {
                    Sign::Mixed
                }
            }
        }
    }

    fn growth(&self) -> Growth {
        match self {
            Rule::Poly(c) => Growth {
                coeff: c.iter().map(|x| x.abs()).sum(),
                degree: c.iter().rposition(|&x| x != 0.0).unwrap_or(0) as u32,
            },
            Rule::Abs(r) => r.growth(),
            Rule::Max(rs) | Rule::Min(rs) => rs
                .iter()
                .map(Rule::growth)
                .fold(Growth { coeff: 0.0, degree: 0 }, Growth::join),
            Rule::Scale(s, r) => {
                let g = r.growth();
                Growth {
                    coeff: s.abs() * g.coeff,
                    degree: g.degree,
                }
            }
            Rule::Sum(rs) => rs.iter().map(Rule::growth).fold(
                Growth { coeff: 0.0, degree: 0 },
                |acc, g| Growth {
                    coeff: acc.coeff + g.coeff,
                    degree: acc.degree.max(g.degree),
                },
            ),
        }
    }

    fn as_poly(&self) -> Option<&[f64]> {
        match self {
            Rule::Poly(c) => Some(c),
            _ => None,
        }
    }
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|d| a.get(d).copied().unwrap_or(0.0) + b.get(d).copied().unwrap_or(0.0))
        .collect()
}

/// A symbolic coefficient sequence `k ↦ a(k)`, `k ≥ 0`.
///
/// Polynomial anchors are kept in normal form, so sums and scalings of
/// polynomials stay polynomials and compare structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSeq {
    rule: Rule,
}

impl AnchorSeq {
    /// `Σ_d coeffs[d] · (k+1)^d`. Non-finite coefficients are rejected.
    pub fn poly(coeffs: Vec<f64>) -> Option<AnchorSeq> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(AnchorSeq {
            rule: Rule::Poly(trim(coeffs)),
        })
    }

    pub fn zero() -> AnchorSeq {
        AnchorSeq {
            rule: Rule::Poly(Vec::new()),
        }
    }

    pub fn constant(c: f64) -> AnchorSeq {
        AnchorSeq::poly(vec![c]).expect("finite constant")
    }

    /// `scale · (k+1)^degree`
    pub fn power(scale: f64, degree: u32) -> AnchorSeq {
        let mut c = vec![0.0; degree as usize + 1];
        c[degree as usize] = scale;
        AnchorSeq::poly(c).expect("finite scale")
    }

    pub fn eval(&self, k: usize) -> f64 {
        self.rule.eval(k)
    }

    pub fn sign(&self) -> Sign {
        self.rule.sign()
    }

    pub fn growth(&self) -> Growth {
        self.rule.growth()
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.rule, Rule::Poly(c) if c.is_empty())
    }

    /// Polynomial coefficients in `m = k + 1`, when the anchor is a polynomial.
    pub fn poly_coeffs(&self) -> Option<&[f64]> {
        self.rule.as_poly()
    }

    pub fn abs(&self) -> AnchorSeq {
        match self.sign() {
            Sign::Nonneg => self.clone(),
            Sign::Nonpos => self.scale(-1.0),
            Sign::Mixed => AnchorSeq {
                rule: Rule::Abs(Box::new(self.rule.clone())),
            },
        }
    }

    pub fn scale(&self, s: f64) -> AnchorSeq {
        if s == 0.0 {
            return AnchorSeq::zero();
        }
        match &self.rule {
            Rule::Poly(c) => AnchorSeq {
                rule: Rule::Poly(trim(c.iter().map(|x| s * x).collect())),
            },
            Rule::Scale(t, r) => AnchorSeq {
                rule: Rule::Scale(s * t, r.clone()),
            },
            r => AnchorSeq {
                rule: Rule::Scale(s, Box::new(r.clone())),
            },
        }
    }

    /// `s·a` with the factor kept symbolic, so bounds computed from the result
    /// can take it out of the sum. Polynomials are not rescaled coefficientwise.
    pub fn scaled_lazy(&self, s: f64) -> AnchorSeq {
        if s == 0.0 || self.is_zero() {
            return AnchorSeq::zero();
        }
        match &self.rule {
            Rule::Scale(t, r) => AnchorSeq {
                rule: Rule::Scale(s * t, r.clone()),
            },
            r => AnchorSeq {
                rule: Rule::Scale(s, Box::new(r.clone())),
            },
        }
    }

    /// Operands of a top-level pointwise maximum.
    pub fn max_items(&self) -> Option<Vec<AnchorSeq>> {
        match &self.rule {
            Rule::Max(rs) => Some(rs.iter().map(|r| AnchorSeq { rule: r.clone() }).collect()),
            _ => None,
        }
    }

    /// Operands of a top-level pointwise minimum.
    pub fn min_items(&self) -> Option<Vec<AnchorSeq>> {
        match &self.rule {
            Rule::Min(rs) => Some(rs.iter().map(|r| AnchorSeq { rule: r.clone() }).collect()),
            _ => None,
        }
    }

    /// Splits off a top-level positive factor: `a = f·rest`.
    pub fn split_factor(&self) -> (f64, AnchorSeq) {
        match &self.rule {
            Rule::Scale(s, r) if *s > 0.0 => (*s, AnchorSeq { rule: (**r).clone() }),
            _ => (1.0, self.clone()),
        }
    }

    pub fn neg(&self) -> AnchorSeq {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &AnchorSeq) -> AnchorSeq {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        match (&self.rule, &other.rule) {
            (Rule::Poly(a), Rule::Poly(b)) => AnchorSeq {
                rule: Rule::Poly(trim(poly_add(a, b))),
            },
            (a, b) => AnchorSeq {
                rule: Rule::Sum(vec![a.clone(), b.clone()]),
            },
        }
    }

    pub fn sub(&self, other: &AnchorSeq) -> AnchorSeq {
        self.add(&other.neg())
    }

    /// Pointwise maximum. Structurally equal inputs collapse to one.
    pub fn max_of(items: &[AnchorSeq]) -> AnchorSeq {
        Self::lattice(items, true)
    }

    /// Pointwise minimum.
    pub fn min_of(items: &[AnchorSeq]) -> AnchorSeq {
        Self::lattice(items, false)
    }

    fn lattice(items: &[AnchorSeq], is_max: bool) -> AnchorSeq {
        let mut uniq: Vec<&AnchorSeq> = Vec::new();
        for a in items {
            if !uniq.contains(&a) {
                uniq.push(a);
            }
        }
        match uniq.len() {
            0 => AnchorSeq::zero(),
            1 => uniq[0].clone(),
            _ => {
                let rules = uniq.iter().map(|a| a.rule.clone()).collect();
                AnchorSeq {
                    rule: if is_max { Rule::Max(rules) } else { Rule::Min(rules) },
                }
            }
        }
    }
}

impl fmt::Display for AnchorSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(r: &Rule, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match r {
                Rule::Poly(c) if c.is_empty() => write!(f, "0"),
                Rule::Poly(c) => {
                    let mut first = true;
                    for (d, &ci) in c.iter().enumerate() {
                        if ci == 0.0 {
                            continue;
                        }
                        if !first {
                            write!(f, " + ")?;
                        }
                        first = false;
                        match d {
                            0 => write!(f, "{ci}")?,
                            1 => write!(f, "{ci}·(k+1)")?,
                            _ => write!(f, "{ci}·(k+1)^{d}")?,
                        }
                    }
                    Ok(())
                }
                Rule::Abs(r) => {
                    write!(f, "|")?;
                    go(r, f)?;
                    write!(f, "|")
                }
                Rule::Max(rs) | Rule::Min(rs) => {
                    write!(f, "{}(", if matches!(r, Rule::Max(_)) { "max" } else { "min" })?;
                    for (i, x) in rs.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        go(x, f)?;
                    }
                    write!(f, ")")
                }
                Rule::Scale(s, r) => {
                    write!(f, "{s}·(")?;
                    go(r, f)?;
                    write!(f, ")")
                }
                Rule::Sum(rs) => {
                    write!(f, "(")?;
                    for (i, x) in rs.iter().enumerate() {
                        if i > 0 {
                            write!(f, " + ")?;
                        }
                        go(x, f)?;
                    }
                    write!(f, ")")
                }
            }
        }
        go(&self.rule, f)
    }
}
