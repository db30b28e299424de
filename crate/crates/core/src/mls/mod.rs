//! Coordinate-free moving least squares on point clouds.
//!
//! For an evaluation point `x` the pipeline is: stencil of sites within
//! `delta`, Wendland weights, weighted Vandermonde matrix in the ambient
//! monomial basis centred at `x` and scaled by `delta`, truncated SVD, and
//! finally the shape-function row `b(., x)`. The truncation discovers the
//! dimension of the polynomials restricted to the sampled surface without
//! any parametrization of it.

mod engine;
mod fit;
mod noise;
mod weight;

pub use engine::{
    lebesgue_constant, mls_evaluate, select_delta, DeltaPolicy, LebesgueResult, MlsConfig, MlsEvaluation,
    PointDiagnostics, ShapeOperator, DELTA_PAD,
};
pub use fit::{local_fit, shape_functions, LocalFit, ShapeFunctionRow, Stencil, EPS_MACHINE};
pub use noise::{noise_study, trial_seed, NoiseStats, PolarGaussian};
pub use weight::{wendland_weight, WeightKind, WeightSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlsError {
    #[error("need {needed} sites for the support selection, have {available}")]
    TooFewPoints { needed: usize, available: usize },
    #[error("no sites within the support radius")]
    EmptyStencil,
    #[error("all stencil weights vanish")]
    AllWeightsZero,
    #[error("retained singular value below 1e-300")]
    DegenerateFit,
    #[error("SVD did not produce singular vectors")]
    SvdFailed,
    #[error("support radius must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("no evaluation points")]
    NoEvalPoints,
    #[error("evaluation points and cloud differ in dimension")]
    DimensionMismatch,
    #[error("data vector has length {got}, expected {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("{0}")]
    InvalidArgument(String),
}
