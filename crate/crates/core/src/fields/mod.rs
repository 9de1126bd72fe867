//! Right-hand sides `f = Σ f_k e_k`, evaluated one coordinate at a time,
//! together with samplers that try to falsify the existence hypotheses.

mod checks;

use std::fmt;

use crate::quadrature::PiecewiseConst;
use crate::space::{AnchorSeq, CoeffVec};

pub use checks::{
    check_bound, check_ladder, check_left_continuity, check_monotone, check_subsolution, CheckConfig,
    CheckReport, Witness,
};

/// A coordinatewise vector field `f(t, x)`.
///
/// Implementations must be pure: `eval_coord` may read only the coordinates
/// listed by `depends_on(k)`.
pub trait Field: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn eval_coord(&self, t: f64, x: &CoeffVec, k: usize) -> f64;

    fn depends_on(&self, k: usize) -> Vec<usize>;

    /// The uniform upper bound `C` with `f(t, x) ≪ C`, when one is known.
    fn declared_bound(&self) -> Option<&AnchorSeq> {
        None
    }

    fn declared_monotone(&self) -> bool;

    fn declared_order_left_continuous(&self) -> bool;

    /// `∫_{t0}^{t1} f_k(ξ, x) dξ` with `x` held fixed. The default freezes
    /// time at `t0` as well.
    fn cell_integral(&self, t0: f64, t1: f64, x: &CoeffVec, k: usize) -> f64 {
        (t1 - t0) * self.eval_coord(t0, x, k)
    }

    /// Pairs `(j, v)`: `f_k(t, ·)` jumps when `x_j` crosses `v`.
    fn switch_points(&self, _t: f64, _k: usize) -> Vec<(usize, f64)> {
        Vec::new()
    }

    /// True when `f_k(t, ·)` takes finitely many values.
    fn piecewise_constant(&self) -> bool {
        false
    }
}

/// `H(η) = −1` for `η ≤ 0`, `+1` for `η > 0`.
pub fn heaviside(eta: f64) -> f64 {
    if eta > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Index map `k ↦ n(k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexMap {
    Identity,
    /// `⌊k/2⌋`
    Half,
    /// Explicit values for the first coordinates, identity beyond.
    Table(Vec<usize>),
}

impl IndexMap {
    pub fn apply(&self, k: usize) -> usize {
        match self {
            IndexMap::Identity => k,
            IndexMap::Half => k / 2,
            IndexMap::Table(t) => t.get(k).copied().unwrap_or(k),
        }
    }
}

/// Time dependence `ρ_k(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoRule {
    /// Same function for every coordinate.
    Uniform(PiecewiseConst),
    /// `ρ_k = (−1)^k · base`.
    Alternating(PiecewiseConst),
    /// Per-coordinate functions, `default` past the table.
    Table {
        entries: Vec<PiecewiseConst>,
        default: PiecewiseConst,
    },
}

impl RhoRule {
    fn for_coord(&self, k: usize) -> (f64, &PiecewiseConst) {
        match self {
            RhoRule::Uniform(p) => (1.0, p),
            RhoRule::Alternating(p) => (if k.is_multiple_of(2) { 1.0 } else { -1.0 }, p),
            RhoRule::Table { entries, default } => (1.0, entries.get(k).unwrap_or(default)),
        }
    }

    pub fn value(&self, k: usize, t: f64) -> f64 {
        let (sign, p) = self.for_coord(k);
        sign * p.value(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavisideFieldParams {
    pub p: u32,
    pub n: IndexMap,
    pub rho: RhoRule,
}

/// `f_k(t, x) = (k+1)^p · H(x_{n(k)} + ρ_k(t))`.
#[derive(Debug, Clone)]
pub struct HeavisideField {
    params: HeavisideFieldParams,
    bound: AnchorSeq,
}

pub fn heaviside_field(params: HeavisideFieldParams) -> HeavisideField {
    let bound = AnchorSeq::power(1.0, params.p);
    HeavisideField { params, bound }
}

impl HeavisideField {
    pub fn params(&self) -> &HeavisideFieldParams {
        &self.params
    }

    fn amplitude(&self, k: usize) -> f64 {
        ((k + 1) as f64).powi(self.params.p as i32)
    }
}

impl Field for HeavisideField {
    fn name(&self) -> &str {
        "heaviside"
    }

    fn eval_coord(&self, t: f64, x: &CoeffVec, k: usize) -> f64 {
        let shift = x.coord(self.params.n.apply(k));
        self.amplitude(k) * heaviside(shift + self.params.rho.value(k, t))
    }

    fn depends_on(&self, k: usize) -> Vec<usize> {
        vec![self.params.n.apply(k)]
    }

    fn declared_bound(&self) -> Option<&AnchorSeq> {
        Some(&self.bound)
    }

    fn declared_monotone(&self) -> bool {
        true
    }

    fn declared_order_left_continuous(&self) -> bool {
        true
    }

    fn cell_integral(&self, t0: f64, t1: f64, x: &CoeffVec, k: usize) -> f64 {
        let shift = x.coord(self.params.n.apply(k));
        let (sign, rho) = self.params.rho.for_coord(k);
        self.amplitude(k) * rho.integrate(t0, t1, |r| heaviside(shift + sign * r))
    }

    fn switch_points(&self, t: f64, k: usize) -> Vec<(usize, f64)> {
        vec![(self.params.n.apply(k), -self.params.rho.value(k, t))]
    }

    fn piecewise_constant(&self) -> bool {
        true
    }
}

/// `f_k(x) = q(x_k) + 1/(k+1)` with `q(ξ) = √ξ` for `ξ ≥ 0`, else 0.
/// Coordinate 0 carries the forcing `1`.
#[derive(Debug, Clone, Default)]
pub struct DieudonneField;

pub fn dieudonne_field() -> DieudonneField {
    DieudonneField
}

pub(crate) fn dieudonne_q(xi: f64) -> f64 {
    if xi >= 0.0 {
        xi.sqrt()
    } else {
        0.0
    }
}

impl Field for DieudonneField {
    fn name(&self) -> &str {
        "dieudonne"
    }

    fn eval_coord(&self, _t: f64, x: &CoeffVec, k: usize) -> f64 {
        dieudonne_q(x.coord(k)) + 1.0 / (k as f64 + 1.0)
    }

    fn depends_on(&self, k: usize) -> Vec<usize> {
        vec![k]
    }

    fn declared_monotone(&self) -> bool {
        true
    }

    fn declared_order_left_continuous(&self) -> bool {
        true
    }
}

/// One-coordinate field `h(x_0) = 1` for `x_0 ≤ 1`, `−1` otherwise.
/// Every other coordinate is identically zero.
#[derive(Debug, Clone)]
pub struct ScalarHField {
    bound: AnchorSeq,
}

pub fn scalar_h_field() -> ScalarHField {
    ScalarHField {
        bound: AnchorSeq::constant(1.0),
    }
}

impl Field for ScalarHField {
    fn name(&self) -> &str {
        "scalar-h"
    }

    fn eval_coord(&self, _t: f64, x: &CoeffVec, k: usize) -> f64 {
        match k {
            0 if x.coord(0) <= 1.0 => 1.0,
            0 => -1.0,
            _ => 0.0,
        }
    }

    fn depends_on(&self, k: usize) -> Vec<usize> {
        if k == 0 {
            vec![0]
        } else {
            Vec::new()
        }
    }

    fn declared_bound(&self) -> Option<&AnchorSeq> {
        Some(&self.bound)
    }

    fn declared_monotone(&self) -> bool {
        false
    }

    fn declared_order_left_continuous(&self) -> bool {
        true
    }

    fn switch_points(&self, _t: f64, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            vec![(0, 1.0)]
        } else {
            Vec::new()
        }
    }

    fn piecewise_constant(&self) -> bool {
        true
    }
}

/// `f(t, x) ≡ c`.
#[derive(Debug, Clone)]
pub struct ConstantField {
    value: CoeffVec,
}

impl ConstantField {
    pub fn new(value: CoeffVec) -> ConstantField {
        ConstantField { value }
    }
}

impl Field for ConstantField {
    fn name(&self) -> &str {
        "constant"
    }

    fn eval_coord(&self, _t: f64, _x: &CoeffVec, k: usize) -> f64 {
        self.value.coord(k)
    }

    fn depends_on(&self, _k: usize) -> Vec<usize> {
        Vec::new()
    }

    fn declared_monotone(&self) -> bool {
        true
    }

    fn declared_order_left_continuous(&self) -> bool {
        true
    }

    fn piecewise_constant(&self) -> bool {
        true
    }
}
