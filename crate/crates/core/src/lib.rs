//! Moving least squares and kernel interpolation on point clouds sampled
//! from algebraic surfaces.
//!
//! The approximation works directly in ambient coordinates. Polynomials of
//! degree `m` in `R^N` are fitted with a truncated SVD, and the numerical
//! rank recovers the dimension of their restriction to the surface.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod geometry;
pub mod mls;
pub mod polybasis;
pub mod rbf;
pub mod stats;

pub use geometry::{
    AlgebraicSurface, BallRestriction, DensityStats, GeometryError, PointCloud, PointSet, Polynomial, TriMesh,
};
pub use mls::{lebesgue_constant, mls_evaluate, noise_study, DeltaPolicy, MlsConfig, MlsError, ShapeOperator};
pub use polybasis::{basis_size, hilbert_dim_hypersurface, MonomialBasis};
pub use rbf::{
    fit_power_rate, matern_eval, power_field, power_function, power_rate_study, power_rung, KernelSpec, RbfError,
};
