use thiserror::Error;

use crate::geometry::FanVerdict;

/// Errors raised by the geometric and algebraic operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    BadInput(String),

    #[error("degenerate simplex: |det V| = {det:e} is below tolerance (scale {scale:e})")]
    DegenerateSimplex { det: f64, scale: f64 },

    #[error("invalid normal fan: {0:?}")]
    InvalidFan(FanVerdict),

    #[error("normal fan does not determine a positively oriented simplex (radicand {0:e})")]
    NonPositiveRadicand(f64),

    #[error("normal fan is not normalized: row 0 of the recovered vertex matrix deviates from 1 by {0:e}")]
    UnnormalizedFan(f64),

    #[error("sum of kappa is {0:e}, no convex body is consistent with these normals and contacts")]
    NonNegativeKappaSum(f64),

    #[error("contact {face} is off the hyperplane of its face (residual {residual:e})")]
    OffFace { face: usize, residual: f64 },

    #[error("contact {face} lies outside its face (barycentric weight of vertex {vertex} is {weight:e})")]
    OutsideFace { face: usize, vertex: usize, weight: f64 },

    #[error("displaced contact {face} left its face (barycentric weight of vertex {vertex} is {weight:e})")]
    LeftFace { face: usize, vertex: usize, weight: f64 },

    #[error("not a valid barycentric matrix: {0}")]
    BadStochastic(String),

    #[error("penetration matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("point is not the centre of a feasible centred contact set: negative weights at {weights:?}, non-positive offsets at {offsets:?}")]
    NotCentredFeasible { weights: Vec<(usize, usize)>, offsets: Vec<usize> },

    #[error("displacement does not preserve symmetry (wedge defect {wedge_defect:e}, residual {residual:e})")]
    NotInSpace { wedge_defect: f64, residual: f64 },

    #[error("translation must be non-zero")]
    ZeroTranslation,

    #[error("matrix is singular")]
    Singular,

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
