//! Monotone Picard iteration `u ↦ Φu` started from a subsolution, the nodewise
//! supremum of solutions, and the derivative and nonexistence diagnostics.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::fields::{
    check_bound, check_left_continuity, check_monotone, check_subsolution, CheckConfig, CheckReport, Field,
};
use crate::oracle::{dieudonne_mode_solve, OracleError};
use crate::quadrature::{phi_apply, refine, QuadratureError, TimeGrid, Trajectory};
use crate::space::{abs, coordwise_sup, leq, CoeffVec, OrderInterval, SpaceError, SpaceSpec};

/// Seminorm indices reported by [`residual`].
pub const RESIDUAL_INDICES: usize = 8;

const PLATEAU_RUN: usize = 5;
const PLATEAU_REL: f64 = 0.1;
const REPAIR_CAP: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("hypothesis checks failed: {}", failed_names(.0))]
    Hypotheses(Vec<CheckReport>),
    #[error("monotonicity violated during iteration {iteration} at node {node}, coordinate {coord}")]
    MonotonicityViolated { iteration: usize, node: usize, coord: usize },
    #[error("grid mismatch")]
    GridMismatch,
    #[error("input {index} is not a solution: residual {residual:e}")]
    NotASolution { index: usize, residual: f64 },
    #[error("no trajectories given")]
    EmptyInput,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn failed_names(reports: &[CheckReport]) -> String {
    let names: Vec<&str> = reports.iter().filter(|r| !r.ok).map(|r| r.name).collect();
    if names.is_empty() {
        "field is not declared monotone".to_string()
    } else {
        names.join(", ")
    }
}

/// An initial value problem `x' = f(t, x)`, `x(0) = x̂` on the grid's horizon.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: SpaceSpec,
    pub field: Arc<dyn Field>,
    pub x_hat: CoeffVec,
    /// Subsolution the iteration starts from.
    pub x_star: CoeffVec,
    /// Uniform upper bound on the field.
    pub bound_c: CoeffVec,
    pub truncation: usize,
    pub grid: TimeGrid,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub max_refines: usize,
    pub override_hypotheses: bool,
    pub rng_seed: u64,
    pub check_trials: usize,
}

impl Problem {
    /// Builds a problem with default solver settings and validates it.
    pub fn new(
        space: SpaceSpec,
        field: Arc<dyn Field>,
        x_hat: CoeffVec,
        x_star: CoeffVec,
        bound_c: CoeffVec,
        grid: TimeGrid,
        truncation: usize,
    ) -> Result<Problem, SolveError> {
        let p = Problem {
            space,
            field,
            x_hat,
            x_star,
            bound_c,
            truncation,
            grid,
            tol_residual: 1e-12,
            max_iters: 100,
            max_refines: 2,
            override_hypotheses: false,
            rng_seed: 0,
            check_trials: 200,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// `x̂ + t·|C|`.
    pub fn ceiling(&self, t: f64) -> Result<CoeffVec, SolveError> {
        Ok(self.x_hat.add(&abs(&self.bound_c).scale(t))?)
    }

    /// The order interval `[x_*, x̂ + T·|C|]`.
    pub fn envelope(&self) -> Result<OrderInterval, SolveError> {
        Ok(OrderInterval::new(self.x_star.clone(), self.ceiling(self.horizon())?)?)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.truncation == 0 {
            return Err(SolveError::InvalidProblem("truncation depth must be at least 1".into()));
        }
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return Err(SolveError::InvalidProblem("tol_residual must be positive".into()));
        }
        for (name, v) in [("x_hat", &self.x_hat), ("x_star", &self.x_star), ("C", &self.bound_c)] {
            self.space
                .seminorm(v, 1, 1e-12)
                .map_err(|e| SolveError::InvalidProblem(format!("{name} is not in the space: {e}")))?;
        }
        let top = self.ceiling(self.horizon())?;
        let ok = leq(&self.x_star, &top)
            .map_err(|e| SolveError::InvalidProblem(format!("cannot compare x_star with x_hat + T|C|: {e}")))?;
        if !ok.holds {
            return Err(SolveError::InvalidProblem("x_star is not below x_hat + T|C|".into()));
        }
        Ok(())
    }

    fn check_config(&self) -> CheckConfig {
        let mut cfg = CheckConfig::new(self.horizon(), self.truncation, self.rng_seed);
        cfg.trials = self.check_trials;
        cfg
    }
}

/// Runs the four hypothesis samplers on the box `[x_*, x̂ + T|C|]`.
pub fn hypothesis_reports(p: &Problem) -> Result<Vec<CheckReport>, SolveError> {
    let b = p.envelope()?;
    let cfg = p.check_config();
    let f = p.field.as_ref();
    Ok(vec![
        check_monotone(f, &b, &cfg),
        check_bound(f, &b, &p.bound_c, &cfg),
        check_left_continuity(f, &b, &cfg),
        check_subsolution(f, &p.x_star, &p.x_hat, &p.grid, p.truncation)?,
    ])
}

/// One line per coordinate below `N` that reads a coordinate at or beyond `N`.
pub fn truncation_warnings(p: &Problem) -> Vec<String> {
    let n = p.truncation;
    (0..n)
        .filter_map(|k| {
            let beyond: Vec<usize> = p.field.depends_on(k).into_iter().filter(|&j| j >= n).collect();
            (!beyond.is_empty()).then(|| {
                let list: Vec<String> = beyond.iter().map(|j| format!("x_{j}")).collect();
                format!(
                    "coordinate {k} depends on {} beyond truncation depth {n}; held at the subsolution",
                    list.join(", ")
                )
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `max_j ‖(Φu − u)(t_j)‖_i` for `i = 1..=8`.
    pub per_index: Vec<f64>,
    pub coord_max: f64,
}

/// Per-iteration record of `u^{m+1} − u^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cells: usize,
    pub max_increment: f64,
    pub final_node_increment: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub refines: usize,
    pub residual_per_index: Vec<f64>,
    pub coordinate_residual_max: f64,
    pub monotone_certificate: bool,
    pub enclosure_certificate: bool,
    pub converged: bool,
    pub hypothesis_reports: Vec<CheckReport>,
    pub history: Vec<IterationRecord>,
    pub warnings: Vec<String>,
    /// Downward corrections applied after refinements.
    pub repairs: usize,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "converged: {}", self.converged)?;
        writeln!(f, "iterations: {}", self.iterations)?;
        writeln!(f, "refines: {}", self.refines)?;
        writeln!(f, "grid cells: {}", self.trajectory.grid().cells())?;
        writeln!(f, "coordinate residual max: {:e}", self.coordinate_residual_max)?;
        let per: Vec<String> = self.residual_per_index.iter().map(|r| format!("{r:e}")).collect();
        writeln!(f, "seminorm residuals i=1..{}: {}", per.len(), per.join(" "))?;
        writeln!(f, "monotone certificate: {}", self.monotone_certificate)?;
        write!(f, "enclosure certificate: {}", self.enclosure_certificate)
    }
}

struct Step {
    max_abs: f64,
    first_decrease: Option<(usize, usize)>,
    final_node: Vec<f64>,
}

fn compare(u: &Trajectory, next: &Trajectory) -> Step {
    let mut max_abs: f64 = 0.0;
    let mut first_decrease = None;
    for (j, (a, b)) in u.values().iter().zip(next.values()).enumerate() {
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            max_abs = max_abs.max((y - x).abs());
            if y < x && first_decrease.is_none() {
                first_decrease = Some((j, k));
            }
        }
    }
    let last = u.values().len() - 1;
    let final_node = u.row(last).iter().zip(next.row(last)).map(|(x, y)| y - x).collect();
    Step { max_abs, first_decrease, final_node }
}

fn encloses(p: &Problem, u: &Trajectory) -> Result<bool, SolveError> {
    let n = p.truncation;
    let lower = p.x_star.truncated(n);
    let x_hat = p.x_hat.truncated(n);
    let c: Vec<f64> = p.bound_c.truncated(n).iter().map(|v| v.abs()).collect();
    for (j, row) in u.values().iter().enumerate() {
        let t = u.grid().node(j);
        for k in 0..n {
            if row[k] < lower[k] || row[k] > x_hat[k] + t * c[k] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Moves `u` onto the refined grid, then lowers it until `v ≤ Φv` holds so
/// that the ascent can resume.
fn refine_iterate(p: &Problem, u: &Trajectory) -> Result<(Trajectory, usize), SolveError> {
    let f = p.field.as_ref();
    let mut v = refine(u);
    if !p.field.declared_monotone() {
        return Ok((v, 0));
    }
    for r in 0..REPAIR_CAP {
        let w = phi_apply(f, &p.x_hat, &v)?;
        if compare(&v, &w).first_decrease.is_none() {
            return Ok((v, r));
        }
        let lowered = v
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.min(*y)).collect())
            .collect();
        v = Trajectory::new(v.grid().clone(), lowered, v.tail_envelope().clone())?;
    }
    let restart = Trajectory::constant(v.grid().clone(), &p.x_star, p.truncation, v.tail_envelope().clone());
    Ok((restart, REPAIR_CAP))
}

/// Iterates `u^{m+1} = Φu^m` from `u^0 ≡ x_*` until the largest coordinate
/// increment is at most `tol_residual`.
///
/// On convergence the returned trajectory is the last iterate whose image is
/// known, so its residual equals the final increment.
pub fn solve(p: &Problem) -> Result<SolveReport, SolveError> {
    p.validate()?;
    let hypothesis_reports = hypothesis_reports(p)?;
    let hypotheses_hold = hypothesis_reports.iter().all(|r| r.ok) && p.field.declared_monotone();
    if !hypotheses_hold && !p.override_hypotheses {
        return Err(SolveError::Hypotheses(hypothesis_reports));
    }
    let warnings = truncation_warnings(p);

    let f = p.field.as_ref();
    let mut u = Trajectory::constant(p.grid.clone(), &p.x_star, p.truncation, p.envelope()?);
    let mut monotone = true;
    let mut enclosed = encloses(p, &u)?;
    let mut history = Vec::new();
    let (mut iterations, mut refines, mut repairs) = (0, 0, 0);
    let mut plateau = 0;
    let mut prev: Option<f64> = None;
    let mut converged = false;

    while iterations < p.max_iters {
        let next = phi_apply(f, &p.x_hat, &u)?;
        iterations += 1;
        let step = compare(&u, &next);
        history.push(IterationRecord {
            iteration: iterations,
            cells: u.grid().cells(),
            max_increment: step.max_abs,
            final_node_increment: step.final_node,
        });
        if let Some((node, coord)) = step.first_decrease {
            if !p.override_hypotheses {
                return Err(SolveError::MonotonicityViolated { iteration: iterations, node, coord });
            }
            monotone = false;
        }
        if step.max_abs <= p.tol_residual {
            converged = true;
            break;
        }
        enclosed &= encloses(p, &next)?;
        u = next;

        plateau = match prev {
            Some(d) if (step.max_abs - d).abs() <= PLATEAU_REL * d => plateau + 1,
            _ => 0,
        };
        prev = Some(step.max_abs);
        if plateau >= PLATEAU_RUN && refines < p.max_refines {
            let (v, r) = refine_iterate(p, &u)?;
            u = v;
            repairs += r;
            refines += 1;
            plateau = 0;
            prev = None;
            enclosed &= encloses(p, &u)?;
        }
    }

    let res = residual(p, &u)?;
    u.enclosed = enclosed;
    Ok(SolveReport {
        trajectory: u,
        iterations,
        refines,
        converged: converged && res.coord_max <= p.tol_residual,
        residual_per_index: res.per_index,
        coordinate_residual_max: res.coord_max,
        monotone_certificate: monotone,
        enclosure_certificate: enclosed,
        hypothesis_reports,
        history,
        warnings,
        repairs,
    })
}

/// Nodewise size of `Φu − u`.
pub fn residual(p: &Problem, u: &Trajectory) -> Result<Residual, SolveError> {
    let phi = phi_apply(p.field.as_ref(), &p.x_hat, u)?;
    let tail_tol = p.tol_residual * 1e-3;
    let mut per_index = vec![0.0f64; RESIDUAL_INDICES];
    let mut coord_max: f64 = 0.0;
    for (a, b) in u.values().iter().zip(phi.values()) {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        coord_max = diff.iter().fold(coord_max, |m, d| m.max(d.abs()));
        let d = CoeffVec::from_prefix(diff)?;
        for (idx, slot) in per_index.iter_mut().enumerate() {
            *slot = slot.max(p.space.seminorm(&d, idx + 1, tail_tol)?.total());
        }
    }
    Ok(Residual { per_index, coord_max })
}

/// Nodewise coordinatewise supremum of verified solutions.
pub fn sup_solutions(p: &Problem, sols: &[Trajectory]) -> Result<(Trajectory, Residual), SolveError> {
    let first = sols.first().ok_or(SolveError::EmptyInput)?;
    if sols
        .iter()
        .any(|s| s.grid() != first.grid() || s.truncation() != p.truncation)
    {
        return Err(SolveError::GridMismatch);
    }
    for (index, s) in sols.iter().enumerate() {
        let r = residual(p, s)?;
        if r.coord_max > p.tol_residual {
            return Err(SolveError::NotASolution { index, residual: r.coord_max });
        }
    }
    let envelope = p.envelope()?;
    let upper = envelope.hi();
    let mut rows = Vec::with_capacity(first.values().len());
    for j in 0..first.values().len() {
        let states: Vec<CoeffVec> = sols.iter().map(|s| envelope.lo().with_leading(s.row(j))).collect();
        rows.push(coordwise_sup(&states, upper)?.truncated(p.truncation));
    }
    let sup = Trajectory::new(first.grid().clone(), rows, envelope)?;
    let res = residual(p, &sup)?;
    Ok((sup, res))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakDerivativeReport {
    pub fraction_ok: f64,
    /// Node-coordinate pairs skipped because the field switches nearby.
    pub excluded_nodes: usize,
    pub compared: usize,
}

/// Compares central differences of `u_k` at interior nodes with
/// `f_k(t_j, u(t_j))`.
pub fn weak_derivative_diagnostic(p: &Problem, u: &Trajectory, tol: f64) -> WeakDerivativeReport {
    let f = p.field.as_ref();
    let grid = u.grid();
    let m = grid.cells();
    let states: Vec<CoeffVec> = (0..=m).map(|j| u.state(j)).collect();
    let (mut ok, mut compared, mut excluded) = (0usize, 0usize, 0usize);
    for j in 1..m {
        for k in 0..u.truncation() {
            let fv = [j - 1, j, j + 1].map(|l| f.eval_coord(grid.node(l), &states[l], k));
            if fv[0] != fv[1] || fv[1] != fv[2] {
                excluded += 1;
                continue;
            }
            let slope = (u.row(j + 1)[k] - u.row(j - 1)[k]) / (grid.node(j + 1) - grid.node(j - 1));
            compared += 1;
            if (slope - fv[1]).abs() <= tol {
                ok += 1;
            }
        }
    }
    let fraction_ok = if compared == 0 { 1.0 } else { ok as f64 / compared as f64 };
    WeakDerivativeReport { fraction_ok, excluded_nodes: excluded, compared }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DieudonneReport {
    pub values: Vec<(usize, f64)>,
    pub inf_value: f64,
}

/// Lower bounds on `x_k(T)` for decoupled modes of the Dieudonné system.
pub fn dieudonne_diagnostic(horizon: f64, modes: &[usize], fine_m: usize) -> Result<DieudonneReport, SolveError> {
    let values = modes
        .iter()
        .map(|&k| Ok((k, dieudonne_mode_solve(k, horizon, fine_m)?)))
        .collect::<Result<Vec<_>, OracleError>>()?;
    let inf_value = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    Ok(DieudonneReport { values, inf_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{heaviside_field, scalar_h_field, ConstantField, HeavisideFieldParams, IndexMap, RhoRule};
    use crate::quadrature::PiecewiseConst;
    use crate::space::AnchorSeq;

    fn anchor(scale: f64, degree: u32) -> CoeffVec {
        CoeffVec::from_anchor(AnchorSeq::power(scale, degree))
    }

    fn decoupled(rho: f64, n: usize, m: usize) -> Problem {
        let f = heaviside_field(HeavisideFieldParams {
            p: 1,
            n: IndexMap::Identity,
            rho: RhoRule::Uniform(PiecewiseConst::constant(rho)),
        });
        Problem::new(
            SpaceSpec::power_series(),
            Arc::new(f),
            CoeffVec::zero(),
            anchor(-1.0, 1),
            anchor(1.0, 1),
            TimeGrid::uniform(1.0, m).unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn decoupled_heaviside_converges_to_linear_growth() {
        let p = decoupled(1.0, 16, 256);
        let rep = solve(&p).unwrap();
        assert!(rep.converged, "{rep}");
        assert!(rep.iterations <= 20, "{rep}");
        assert_eq!(rep.refines, 0);
        assert!(rep.monotone_certificate && rep.enclosure_certificate);
        for j in 0..=256 {
            for k in 0..16 {
                let exact = (k + 1) as f64 * p.grid.node(j);
                assert!((rep.trajectory.row(j)[k] - exact).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_returns_after_one_iteration() {
        let c = CoeffVec::zero();
        let x = CoeffVec::from_prefix(vec![3.0, -1.0]).unwrap();
        let p = Problem::new(
            SpaceSpec::power_series(),
            Arc::new(ConstantField::new(c.clone())),
            x.clone(),
            x,
            c,
            TimeGrid::uniform(1.0, 8).unwrap(),
            2,
        )
        .unwrap();
        let rep = solve(&p).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.coordinate_residual_max, 0.0);
        assert!(rep.trajectory.values().iter().all(|r| r == &vec![3.0, -1.0]));
    }

    #[test]
    fn residual_of_exact_and_perturbed_trajectories() {
        let c = CoeffVec::from_prefix(vec![1.0, 0.5]).unwrap();
        let x_hat = CoeffVec::from_prefix(vec![0.25, -1.0]).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let p = Problem::new(
            SpaceSpec::power_series(),
            Arc::new(ConstantField::new(c.clone())),
            x_hat.clone(),
            x_hat.clone(),
            c,
            grid.clone(),
            2,
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = grid.nodes().iter().map(|&t| vec![0.25 + t, -1.0 + 0.5 * t]).collect();
        let u = Trajectory::new(grid.clone(), rows.clone(), p.envelope().unwrap()).unwrap();
        let r = residual(&p, &u).unwrap();
        assert_eq!(r.coord_max, 0.0);
        assert!(r.per_index.iter().all(|&v| v == 0.0));

        let mut bumped = rows;
        bumped[2][1] += 1e-3;
        let u = Trajectory::new(grid, bumped, p.envelope().unwrap()).unwrap();
        assert!(residual(&p, &u).unwrap().coord_max >= 1e-3);
    }

    #[test]
    fn non_monotone_field_is_refused_without_override() {
        let p = Problem::new(
            SpaceSpec::power_series(),
            Arc::new(scalar_h_field()),
            CoeffVec::from_prefix(vec![1.0]).unwrap(),
            CoeffVec::zero(),
            CoeffVec::from_prefix(vec![1.0]).unwrap(),
            TimeGrid::uniform(1.0, 64).unwrap(),
            1,
        )
        .unwrap();
        match solve(&p) {
            Err(SolveError::Hypotheses(reps)) => assert!(!reps[0].ok),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn upward_dependencies_warn() {
        let f = heaviside_field(HeavisideFieldParams {
            p: 1,
            n: IndexMap::Table((1..=8).collect()),
            rho: RhoRule::Uniform(PiecewiseConst::constant(1.0)),
        });
        let mut p = decoupled(1.0, 4, 16);
        p.field = Arc::new(f);
        let w = truncation_warnings(&p);
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("coordinate 3 depends on x_4"));
    }

    #[test]
    fn sup_of_singleton_and_copies() {
        let p = decoupled(1.0, 4, 32);
        let u = solve(&p).unwrap().trajectory;
        let (s, r) = sup_solutions(&p, std::slice::from_ref(&u)).unwrap();
        assert_eq!(s.values(), u.values());
        assert_eq!(r.coord_max, residual(&p, &u).unwrap().coord_max);
        let (s2, _) = sup_solutions(&p, &[u.clone(), u.clone()]).unwrap();
        assert_eq!(s2.values(), u.values());

        let other = decoupled(1.0, 4, 16);
        let v = solve(&other).unwrap().trajectory;
        assert_eq!(sup_solutions(&p, &[u, v]).unwrap_err(), SolveError::GridMismatch);
    }

    #[test]
    fn weak_derivative_on_constant_field() {
        let c = CoeffVec::from_prefix(vec![2.0]).unwrap();
        let p = Problem::new(
            SpaceSpec::power_series(),
            Arc::new(ConstantField::new(c.clone())),
            CoeffVec::zero(),
            CoeffVec::zero(),
            c,
            TimeGrid::uniform(1.0, 16).unwrap(),
            1,
        )
        .unwrap();
        let rep = solve(&p).unwrap();
        let d = weak_derivative_diagnostic(&p, &rep.trajectory, 1e-12);
        assert_eq!((d.fraction_ok, d.excluded_nodes), (1.0, 0));
    }

    #[test]
    fn weak_derivative_excludes_nodes_near_a_rho_flip() {
        let f = heaviside_field(HeavisideFieldParams {
            p: 0,
            n: IndexMap::Identity,
            rho: RhoRule::Uniform(PiecewiseConst::new(vec![0.5], vec![1.0, -10.0]).unwrap()),
        });
        let mut p = decoupled(1.0, 1, 16);
        p.field = Arc::new(f);
        p.x_star = CoeffVec::from_prefix(vec![-1.0]).unwrap();
        let rep = solve(&p).unwrap();
        let d = weak_derivative_diagnostic(&p, &rep.trajectory, 1e-12);
        assert_eq!(d.fraction_ok, 1.0);
        // node 8 sits at t = 0.5; its left neighbour sees the other branch
        assert_eq!(d.excluded_nodes, 2);
    }

    #[test]
    fn dieudonne_examples() {
        let r = dieudonne_diagnostic(0.0, &[0, 5], 100).unwrap();
        assert_eq!(r.inf_value, 0.0);
        let r = dieudonne_diagnostic(2.0, &[0], 100_000).unwrap();
        assert!(r.values[0].1 >= 1.0);
    }
}
