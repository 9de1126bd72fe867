//! Problem-file format and its conversion into a [`Problem`].

use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::fields::{dieudonne_field, heaviside_field, scalar_h_field, Field, HeavisideFieldParams, IndexMap, RhoRule};
use crate::quadrature::{PiecewiseConst, TimeGrid};
use crate::solver::Problem;
use crate::space::{AnchorSeq, CoeffVec, SeminormKind, SpaceSpec, Tail, WeightRule};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: at `{location}`: {msg}")]
    Schema { path: String, location: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub description: Option<String>,
    pub space: SpaceSection,
    pub field: FieldSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub name: String,
    pub kind: KindSpec,
    pub weights: WeightsSpec,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindSpec {
    WeightedSum,
    WeightedSup,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightsSpec {
    PowerSeries,
    Table { rows: Vec<Vec<f64>>, tail_ratios: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSection {
    Heaviside { params: HeavisideSpec },
    Dieudonne,
    ScalarH,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavisideSpec {
    pub p: u32,
    pub n: IndexSpec,
    pub rho: RhoSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IndexSpec {
    Identity,
    Half,
    Table { table: Vec<usize> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RhoSpec {
    Constant {
        value: f64,
        #[serde(default)]
        alternating: bool,
    },
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        alternating: bool,
    },
    Table { entries: Vec<PieceSpec>, default: PieceSpec },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ValueSpec {
    Zero,
    /// Explicit leading coefficients, optionally followed by an anchor tail.
    Table {
        values: Vec<f64>,
        #[serde(default)]
        tail_coeffs: Option<Vec<f64>>,
    },
    /// `Σ_d coeffs[d]·(k+1)^d`.
    Anchor { coeffs: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub truncation: usize,
    #[serde(rename = "M", default)]
    pub cells: Option<usize>,
    #[serde(default)]
    pub nodes: Option<Vec<f64>>,
    pub x_hat: ValueSpec,
    pub x_star: ValueSpec,
    #[serde(rename = "C")]
    pub bound_c: ValueSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub max_refines: usize,
    pub override_hypotheses: bool,
    pub rng_seed: u64,
    pub check_trials: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol_residual: 1e-12,
            max_iters: 100,
            max_refines: 2,
            override_hypotheses: false,
            rng_seed: 0,
            check_trials: 200,
        }
    }
}

/// Parses and validates a problem file held in memory.
pub fn parse_problem(path: &str, text: &str) -> Result<Problem, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let location = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            LoadError::Syntax {
                path: path.to_string(),
                line: inner.line(),
                column: inner.column(),
                msg: inner.to_string(),
            }
        } else {
            LoadError::Schema {
                path: path.to_string(),
                location,
                msg: inner.to_string(),
            }
        }
    })?;
    build(&file).map_err(|(location, msg)| LoadError::Schema {
        path: path.to_string(),
        location: location.to_string(),
        msg,
    })
}

pub fn load_problem(path: &str) -> Result<Problem, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_string(),
        source,
    })?;
    parse_problem(path, &text)
}

type Located<T> = Result<T, (&'static str, String)>;

fn at<T, E: ToString>(location: &'static str, r: Result<T, E>) -> Located<T> {
    r.map_err(|e| (location, e.to_string()))
}

fn finite(location: &'static str, values: &[f64]) -> Located<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err((location, "numbers must be finite".into()))
    }
}

fn anchor(location: &'static str, coeffs: &[f64]) -> Located<AnchorSeq> {
    finite(location, coeffs)?;
    Ok(AnchorSeq::poly(coeffs.to_vec()).unwrap_or_else(AnchorSeq::zero))
}

fn value(location: &'static str, v: &ValueSpec) -> Located<CoeffVec> {
    match v {
        ValueSpec::Zero => Ok(CoeffVec::zero()),
        ValueSpec::Anchor { coeffs } => Ok(CoeffVec::from_anchor(anchor(location, coeffs)?)),
        ValueSpec::Table { values, tail_coeffs } => {
            finite(location, values)?;
            let tail = match tail_coeffs {
                Some(c) => Tail::from_anchor(anchor(location, c)?),
                None => Tail::Zero,
            };
            at(location, CoeffVec::new(values.clone(), tail))
        }
    }
}

fn piece(location: &'static str, breaks: &[f64], values: &[f64]) -> Located<PiecewiseConst> {
    at(location, PiecewiseConst::new(breaks.to_vec(), values.to_vec()))
}

fn rho(spec: &RhoSpec) -> Located<RhoRule> {
    const LOC: &str = "field.params.rho";
    let wrap = |p: PiecewiseConst, alternating: bool| {
        if alternating {
            RhoRule::Alternating(p)
        } else {
            RhoRule::Uniform(p)
        }
    };
    match spec {
        RhoSpec::Constant { value, alternating } => {
            finite(LOC, &[*value])?;
            Ok(wrap(PiecewiseConst::constant(*value), *alternating))
        }
        RhoSpec::Piecewise { breaks, values, alternating } => Ok(wrap(piece(LOC, breaks, values)?, *alternating)),
        RhoSpec::Table { entries, default } => Ok(RhoRule::Table {
            entries: entries
                .iter()
                .map(|e| piece(LOC, &e.breaks, &e.values))
                .collect::<Located<_>>()?,
            default: piece(LOC, &default.breaks, &default.values)?,
        }),
    }
}

fn build(file: &ProblemFile) -> Located<Problem> {
    let kind = match file.space.kind {
        KindSpec::WeightedSum => SeminormKind::WeightedSum,
        KindSpec::WeightedSup => SeminormKind::WeightedSup,
    };
    let weights = match &file.space.weights {
        WeightsSpec::PowerSeries => WeightRule::PowerSeries,
        WeightsSpec::Table { rows, tail_ratios } => WeightRule::Table {
            rows: rows.clone(),
            tail_ratios: tail_ratios.clone(),
        },
    };
    let space = at("space.weights", SpaceSpec::new(file.space.name.clone(), kind, weights))?;

    let field: Arc<dyn Field> = match &file.field {
        FieldSection::Heaviside { params } => Arc::new(heaviside_field(HeavisideFieldParams {
            p: params.p,
            n: match &params.n {
                IndexSpec::Identity => IndexMap::Identity,
                IndexSpec::Half => IndexMap::Half,
                IndexSpec::Table { table } => IndexMap::Table(table.clone()),
            },
            rho: rho(&params.rho)?,
        })),
        FieldSection::Dieudonne => Arc::new(dieudonne_field()),
        FieldSection::ScalarH => Arc::new(scalar_h_field()),
    };

    let pr = &file.problem;
    let grid = match (&pr.nodes, pr.cells) {
        (Some(nodes), None) => at("problem.nodes", TimeGrid::new(nodes.clone()))?,
        (None, Some(m)) => at("problem.M", TimeGrid::uniform(pr.horizon, m))?,
        _ => return Err(("problem", "give exactly one of `M` or `nodes`".into())),
    };
    if grid.horizon() != pr.horizon {
        return Err(("problem.nodes", "last node must equal T".into()));
    }
    let mut p = at(
        "problem",
        Problem::new(
            space,
            field,
            value("problem.x_hat", &pr.x_hat)?,
            value("problem.x_star", &pr.x_star)?,
            value("problem.C", &pr.bound_c)?,
            grid,
            pr.truncation,
        ),
    )?;
    let s = &file.solver;
    p.tol_residual = s.tol_residual;
    p.max_iters = s.max_iters;
    p.max_refines = s.max_refines;
    p.override_hypotheses = s.override_hypotheses;
    p.rng_seed = s.rng_seed;
    p.check_trials = s.check_trials;
    at("solver", p.validate())?;
    Ok(p)
}
