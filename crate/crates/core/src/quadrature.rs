//! Time grids, piecewise-constant time functions, step functions in the
//! sequence space, and the discrete integral operator `Φ`.

use thiserror::Error;

use crate::fields::Field;
use crate::space::{CoeffVec, OrderInterval, SpaceError, SpaceSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid piecewise-constant function: {0}")]
    InvalidPiecewise(String),
    #[error("invalid step function: {0}")]
    InvalidStep(String),
    #[error("non-finite integrand on cell {cell}, coordinate {coord}")]
    NonFinite { cell: usize, coord: usize },
    #[error("trajectory shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A real function of time, constant on `(-∞, b_0), [b_0, b_1), …, [b_last, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConst {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConst {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<PiecewiseConst, QuadratureError> {
        if values.len() != breaks.len() + 1 {
            return Err(QuadratureError::InvalidPiecewise(format!(
                "{} breaks need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if breaks.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(QuadratureError::InvalidPiecewise("non-finite entry".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuadratureError::InvalidPiecewise("breaks must increase strictly".into()));
        }
        Ok(PiecewiseConst { breaks, values })
    }

    pub fn constant(c: f64) -> PiecewiseConst {
        PiecewiseConst {
            breaks: Vec::new(),
            values: vec![c],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn piece(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.values[self.piece(t)]
    }

    /// `∫_{t0}^{t1} g(ρ(ξ)) dξ`, summed piece by piece.
    pub fn integrate(&self, t0: f64, t1: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut idx = self.piece(t0);
        let mut a = t0;
        let mut sum = 0.0;
        while a < t1 {
            let end = self.breaks.get(idx).map_or(t1, |&b| b.min(t1));
            sum += g(self.values[idx]) * (end - a);
            a = end;
            idx += 1;
        }
        sum
    }

    /// Least value taken on `[a, b)`.
    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        let first = self.piece(a);
        let last = if b > a { self.breaks.partition_point(|&x| x < b) } else { first };
        self.values[first..=last.max(first)]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodes `0 = t_0 < … < t_M = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<TimeGrid, QuadratureError> {
        if nodes.len() < 2 {
            return Err(QuadratureError::InvalidGrid("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(QuadratureError::InvalidGrid("first node must be 0".into()));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuadratureError::InvalidGrid("nodes must be finite and strictly increasing".into()));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn uniform(horizon: f64, cells: usize) -> Result<TimeGrid, QuadratureError> {
        if !(horizon > 0.0 && horizon.is_finite()) || cells == 0 {
            return Err(QuadratureError::InvalidGrid("need T > 0 and M ≥ 1".into()));
        }
        let mut nodes: Vec<f64> = (0..=cells).map(|j| j as f64 * horizon / cells as f64).collect();
        nodes[cells] = horizon;
        TimeGrid::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Inserts every cell midpoint.
    pub fn refine(&self) -> TimeGrid {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.horizon());
        TimeGrid { nodes }
    }
}

/// A grid function: the first `N` coordinates at each node, with coordinates
/// `k ≥ N` read from the lower end of `tail_envelope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    values: Vec<Vec<f64>>,
    tail_envelope: OrderInterval,
    /// Set once every node has been checked against the enclosure.
    pub enclosed: bool,
}

impl Trajectory {
    pub fn new(
        grid: TimeGrid,
        values: Vec<Vec<f64>>,
        tail_envelope: OrderInterval,
    ) -> Result<Trajectory, QuadratureError> {
        if values.len() != grid.nodes.len() {
            return Err(QuadratureError::Shape(format!(
                "{} rows for {} nodes",
                values.len(),
                grid.nodes.len()
            )));
        }
        let n = values[0].len();
        if values.iter().any(|r| r.len() != n) {
            return Err(QuadratureError::Shape("ragged rows".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(QuadratureError::Shape("non-finite value".into()));
        }
        Ok(Trajectory {
            grid,
            values,
            tail_envelope,
            enclosed: false,
        })
    }

    /// `u(t) ≡ x` on every node.
    pub fn constant(grid: TimeGrid, x: &CoeffVec, n: usize, tail_envelope: OrderInterval) -> Trajectory {
        let row = x.truncated(n);
        let values = vec![row; grid.nodes.len()];
        Trajectory {
            grid,
            values,
            tail_envelope,
            enclosed: false,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn truncation(&self) -> usize {
        self.values[0].len()
    }

    pub fn tail_envelope(&self) -> &OrderInterval {
        &self.tail_envelope
    }

    /// Full state at node `j`.
    pub fn state(&self, j: usize) -> CoeffVec {
        self.tail_envelope.lo().with_leading(&self.values[j])
    }

    pub(crate) fn with_values(&self, grid: TimeGrid, values: Vec<Vec<f64>>) -> Trajectory {
        Trajectory {
            grid,
            values,
            tail_envelope: self.tail_envelope.clone(),
            enclosed: false,
        }
    }
}

/// `(Φu)(t_j) = x̂ + Σ_{l<j} ∫_{t_l}^{t_{l+1}} f(ξ, u(t_l)) dξ`, computed on the
/// first `N` coordinates.
pub fn phi_apply(f: &dyn Field, x_hat: &CoeffVec, u: &Trajectory) -> Result<Trajectory, QuadratureError> {
    let n = u.truncation();
    let grid = &u.grid;
    let mut out = Vec::with_capacity(grid.nodes.len());
    out.push(x_hat.truncated(n));
    for l in 0..grid.cells() {
        let state = u.state(l);
        let (t0, t1) = (grid.nodes[l], grid.nodes[l + 1]);
        let mut row = out[l].clone();
        for (k, slot) in row.iter_mut().enumerate() {
            let inc = f.cell_integral(t0, t1, &state, k);
            if !inc.is_finite() {
                return Err(QuadratureError::NonFinite { cell: l, coord: k });
            }
            *slot += inc;
        }
        out.push(row);
    }
    Ok(u.with_values(grid.clone(), out))
}

/// Refines the grid, extending each node value to the new midpoint.
pub fn refine(u: &Trajectory) -> Trajectory {
    let grid = u.grid.refine();
    let mut values = Vec::with_capacity(grid.nodes.len());
    for row in &u.values[..u.values.len() - 1] {
        values.push(row.clone());
        values.push(row.clone());
    }
    values.push(u.values[u.values.len() - 1].clone());
    u.with_values(grid, values)
}

/// A step function `[0, T] → E`, constant on each `[b_c, b_{c+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    breaks: Vec<f64>,
    values: Vec<CoeffVec>,
}

impl StepFn {
    pub fn new(breaks: Vec<f64>, values: Vec<CoeffVec>) -> Result<StepFn, QuadratureError> {
        if breaks.len() < 2 || values.len() != breaks.len() - 1 {
            return Err(QuadratureError::InvalidStep(format!(
                "{} breakpoints need {} values, got {}",
                breaks.len(),
                breaks.len().saturating_sub(1),
                values.len()
            )));
        }
        if breaks[0] != 0.0 || breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuadratureError::InvalidStep(
                "breakpoints must start at 0 and increase strictly".into(),
            ));
        }
        Ok(StepFn { breaks, values })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[CoeffVec] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    fn cell_of(&self, t: f64) -> usize {
        (self.breaks.partition_point(|&b| b <= t) - 1).min(self.values.len() - 1)
    }

    pub fn value_at(&self, t: f64) -> &CoeffVec {
        &self.values[self.cell_of(t)]
    }

    /// `α·self + β·other` on the common refinement of both partitions.
    pub fn linear_combination(&self, alpha: f64, other: &StepFn, beta: f64) -> Result<StepFn, QuadratureError> {
        if self.horizon() != other.horizon() {
            return Err(QuadratureError::InvalidStep("step functions live on different intervals".into()));
        }
        let mut breaks: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut values = Vec::with_capacity(breaks.len() - 1);
        for &a in &breaks[..breaks.len() - 1] {
            let v = self.value_at(a).scale(alpha).add(&other.value_at(a).scale(beta))?;
            values.push(v);
        }
        StepFn::new(breaks, values)
    }

    /// `∫‖s(t)‖_i dt`.
    pub fn seminorm_integral(&self, space: &SpaceSpec, i: usize, tail_tol: f64) -> Result<f64, QuadratureError> {
        let mut sum = 0.0;
        for (c, v) in self.values.iter().enumerate() {
            sum += (self.breaks[c + 1] - self.breaks[c]) * space.seminorm(v, i, tail_tol)?.total();
        }
        Ok(sum)
    }
}

/// `∫_0^T s(t) dt = Σ_c (b_{c+1} − b_c)·v_c`.
pub fn step_integral(s: &StepFn) -> Result<CoeffVec, QuadratureError> {
    let mut acc = CoeffVec::zero();
    for (c, v) in s.values.iter().enumerate() {
        acc = acc.add(&v.scale(s.breaks[c + 1] - s.breaks[c]))?;
    }
    Ok(acc)
}

/// Outcome of [`dominated_convergence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DominatedReport {
    /// `gaps[n][i-1] = ‖∫s_n − ∫s‖_i`.
    pub gaps: Vec<Vec<f64>>,
    pub monotone_decrease: bool,
    pub below_tol: bool,
    /// First `(n, i, t)` with `‖s_n(t)‖_i > g_i(t)`.
    pub dominator_violation: Option<(usize, usize, f64)>,
}

impl DominatedReport {
    pub fn ok(&self) -> bool {
        self.monotone_decrease && self.below_tol && self.dominator_violation.is_none()
    }
}

/// Checks a sequence of step functions converging to `limit` under
/// per-seminorm scalar dominators `g_i` (`dominators[i-1]`).
pub fn dominated_convergence_check(
    space: &SpaceSpec,
    seq: &[StepFn],
    limit: &StepFn,
    dominators: &[PiecewiseConst],
    tol: f64,
) -> Result<DominatedReport, QuadratureError> {
    let tail_tol = tol * 1e-3;
    let target = step_integral(limit)?;
    let mut gaps = Vec::with_capacity(seq.len());
    let mut dominator_violation = None;
    for (n, s) in seq.iter().enumerate() {
        let diff = step_integral(s)?.sub(&target)?;
        let mut row = Vec::with_capacity(dominators.len());
        for (idx, g) in dominators.iter().enumerate() {
            let i = idx + 1;
            row.push(space.seminorm(&diff, i, tail_tol)?.total());
            if dominator_violation.is_none() {
                for (c, v) in s.values.iter().enumerate() {
                    let (a, b) = (s.breaks[c], s.breaks[c + 1]);
                    if space.seminorm(v, i, tail_tol)?.total() > g.min_on(a, b) {
                        dominator_violation = Some((n, i, a));
                        break;
                    }
                }
            }
        }
        gaps.push(row);
    }
    let monotone_decrease = gaps
        .windows(2)
        .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b <= a));
    let below_tol = gaps.last().is_some_and(|r| r.iter().all(|&g| g <= tol));
    Ok(DominatedReport {
        gaps,
        monotone_decrease,
        below_tol,
        dominator_violation,
    })
}
