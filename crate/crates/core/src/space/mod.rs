//! Weighted sequence spaces with the coordinatewise partial order.
//!
//! Elements are [`CoeffVec`]s: an explicit coefficient prefix followed by a
//! symbolic [`Tail`] built from [`AnchorSeq`] rules. Seminorms come from a
//! monotone weight family described by [`SpaceSpec`].

mod anchor;
mod order;
mod vector;
mod weights;

use thiserror::Error;

pub use anchor::{AnchorSeq, Growth, Sign};
pub use order::{
    abs, anchor_leq, coordwise_sup, diag_apply, leq, leq_with_depth, CertifiedBool, Depth, DiagMult,
    OrderInterval, DEFAULT_DEPTH,
};
pub use vector::{CoeffVec, Tail};
pub use weights::{SeminormKind, Seminorm, SpaceSpec, WeightRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("tail not summable at index {index}")]
    TailNotSummable { index: usize },
    #[error("order undecidable beyond prefix (tail from coordinate {from})")]
    OrderUndecidable { from: usize },
    #[error("sup of empty set undefined")]
    EmptySup,
    #[error("no upper bound: element {index} is not below the given bound")]
    NoUpperBound { index: usize },
    #[error("non-finite coefficient at position {index}")]
    NonFinite { index: usize },
    #[error("pinched tail cannot be expanded into explicit coefficients")]
    PinchedExtension,
    #[error("pinched tail has lower anchor above upper anchor")]
    PinchedOrder,
    #[error("order interval is empty: lower end is not below upper end")]
    EmptyInterval,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("seminorm index must be at least 1")]
    ZeroIndex,
    #[error("tail tolerance must be positive")]
    BadTolerance,
    #[error("multiplier exceeds its sup norm at coordinate {0}")]
    MultiplierBound(usize),
}
