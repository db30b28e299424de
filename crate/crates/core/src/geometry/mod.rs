//! Surfaces, meshes, point clouds and spatial queries.

mod cloud;
mod csv;
mod kdtree;
mod mesh;
mod sampling;
mod surface;

pub use cloud::{distance, BallRestriction, DensityStats, PointCloud, PointSet};
pub use csv::{format_f64, read_points_csv, write_points_csv, write_values_csv};
pub use kdtree::KdTree;
pub use mesh::{sample_mesh, TriMesh};
pub use sampling::{sample_probes, sample_quasi_uniform, sample_quasi_uniform_with, SampleOptions};
pub use surface::{Aabb, AlgebraicSurface, Polynomial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate or coefficient")]
    NonFinite,
    #[error("defining polynomial is identically zero")]
    ZeroPolynomial,
    #[error("bounding box must have min < max on every axis")]
    InvalidBox,
    #[error("gradient vanishes during projection")]
    GradientTooSmall,
    #[error("projection did not converge (|P| = {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("sampling failed: {0}")]
    SamplingFailed(String),
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("k = {k} exceeds cloud size {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("separation radius undefined for fewer than two points")]
    SinglePoint,
    #[error("probe set is empty")]
    EmptyProbes,
    #[error("empty result")]
    EmptyResult,
    #[error("ball radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("point {0} duplicates an earlier point")]
    DuplicatePoint(usize),
    #[error("OBJ: {0}")]
    Obj(String),
    #[error("CSV: {0}")]
    Csv(String),
    #[error("I/O: {0}")]
    Io(String),
}
