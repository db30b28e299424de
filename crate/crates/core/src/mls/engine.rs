use rayon::prelude::*;

use crate::geometry::{PointCloud, PointSet};
use crate::polybasis::{MonomialBasis, ScaledBasis};

use super::fit::{local_fit, shape_functions, LocalFit, ShapeFunctionRow, Stencil};
use super::weight::{WeightKind, WeightSpec};
use super::MlsError;

/// Relative pad applied to the selected support radius so the farthest of
/// the `2M` neighbours is strictly inside.
pub const DELTA_PAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// Largest distance from an evaluation point to its `2M`-th neighbour.
    Auto2M,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlsConfig {
    pub degree: usize,
    pub delta_policy: DeltaPolicy,
    /// Multiplies `N_x * sigma_1 * eps` in the rank threshold.
    pub rank_threshold_factor: f64,
    pub weight: WeightKind,
    /// Double the local support while the rank keeps growing (at most four
    /// times). Off by default.
    pub escalate_delta: bool,
}

impl MlsConfig {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            delta_policy: DeltaPolicy::Auto2M,
            rank_threshold_factor: 1.0,
            weight: WeightKind::WendlandC4,
            escalate_delta: false,
        }
    }

    pub fn with_delta(mut self, policy: DeltaPolicy) -> Self {
        self.delta_policy = policy;
        self
    }
}

/// `(1 + pad) * max_x dist(x, 2M-th nearest site)`.
pub fn select_delta(cloud: &PointCloud, eval_points: &PointSet, basis_len: usize) -> Result<f64, MlsError> {
    let k = 2 * basis_len;
    if cloud.len() < k {
        return Err(MlsError::TooFewPoints {
            needed: k,
            available: cloud.len(),
        });
    }
    if eval_points.is_empty() {
        return Err(MlsError::NoEvalPoints);
    }
    let radius = eval_points
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| {
            cloud
                .knn(x, k)
                .map(|nn| nn.last().map_or(0.0, |l| l.1))
                .unwrap_or(f64::INFINITY)
        })
        .reduce(|| 0.0, f64::max);
    Ok(radius * (1.0 + DELTA_PAD))
}

/// Per-evaluation-point report.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnostics {
    pub rank: usize,
    pub n_neighbors: usize,
    pub lebesgue_value: f64,
    pub cond_estimate: f64,
    pub delta: f64,
    pub error: Option<MlsError>,
}

impl PointDiagnostics {
    fn failed(delta: f64, n_neighbors: usize, error: MlsError) -> Self {
        Self {
            rank: 0,
            n_neighbors,
            lebesgue_value: f64::NAN,
            cond_estimate: f64::NAN,
            delta,
            error: Some(error),
        }
    }
}

/// Shape-function rows for a fixed cloud and evaluation set; applying it to
/// data is a sparse mat-vec.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    delta: f64,
    basis_len: usize,
    n_sites: usize,
    rows: Vec<Option<ShapeFunctionRow>>,
    diagnostics: Vec<PointDiagnostics>,
}

fn fit_point(
    cloud: &PointCloud,
    basis: &MonomialBasis,
    x: &[f64],
    delta: f64,
    config: &MlsConfig,
) -> Result<LocalFit, MlsError> {
    let stencil = Stencil::build(cloud, x, delta)?;
    let scaled = ScaledBasis::new(basis, x, delta);
    let weight = WeightSpec::new(config.weight, delta)?;
    local_fit(stencil, &scaled, &weight, config.rank_threshold_factor)
}

impl ShapeOperator {
    pub fn build(cloud: &PointCloud, eval_points: &PointSet, config: &MlsConfig) -> Result<Self, MlsError> {
        if eval_points.dim() != cloud.dim() {
            return Err(MlsError::DimensionMismatch);
        }
        let basis = MonomialBasis::new(cloud.dim(), config.degree);
        let delta = match config.delta_policy {
            DeltaPolicy::Auto2M => select_delta(cloud, eval_points, basis.len())?,
            DeltaPolicy::Fixed(d) if d > 0.0 && d.is_finite() => d,
            DeltaPolicy::Fixed(d) => return Err(MlsError::InvalidDelta(d)),
        };
        let points: Vec<&[f64]> = eval_points.iter().collect();
        let results: Vec<(Option<ShapeFunctionRow>, PointDiagnostics)> = points
            .par_iter()
            .map(|x| Self::point(cloud, &basis, x, delta, config))
            .collect();
        let (rows, diagnostics) = results.into_iter().unzip();
        Ok(Self {
            delta,
            basis_len: basis.len(),
            n_sites: cloud.len(),
            rows,
            diagnostics,
        })
    }

    fn point(
        cloud: &PointCloud,
        basis: &MonomialBasis,
        x: &[f64],
        delta: f64,
        config: &MlsConfig,
    ) -> (Option<ShapeFunctionRow>, PointDiagnostics) {
        let mut used = delta;
        let mut fit = match fit_point(cloud, basis, x, delta, config) {
            Ok(f) => f,
            Err(e) => {
                let n = cloud.ball_query(x, delta).len();
                return (None, PointDiagnostics::failed(delta, n, e));
            }
        };
        if config.escalate_delta {
            for _ in 0..4 {
                match fit_point(cloud, basis, x, 2.0 * used, config) {
                    Ok(wider) if wider.rank() > fit.rank() => {
                        fit = wider;
                        used *= 2.0;
                    }
                    _ => break,
                }
            }
        }
        let n_neighbors = fit.stencil.len();
        match shape_functions(&fit) {
            Ok(row) => {
                let diag = PointDiagnostics {
                    rank: fit.rank(),
                    n_neighbors,
                    lebesgue_value: row.l1(),
                    cond_estimate: fit.cond_estimate(),
                    delta: used,
                    error: None,
                };
                (Some(row), diag)
            }
            Err(e) => (None, PointDiagnostics::failed(used, n_neighbors, e)),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `M`, the ambient basis size.
    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn rows(&self) -> &[Option<ShapeFunctionRow>] {
        &self.rows
    }

    pub fn diagnostics(&self) -> &[PointDiagnostics] {
        &self.diagnostics
    }

    pub fn n_failed(&self) -> usize {
        self.rows.iter().filter(|r| r.is_none()).count()
    }

    /// `sum_xi b(xi, x) f(xi)` per evaluation point; NaN where the local fit failed.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>, MlsError> {
        if f.len() != self.n_sites {
            return Err(MlsError::DataLength {
                expected: self.n_sites,
                got: f.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.as_ref().map_or(f64::NAN, |row| row.apply(f)))
            .collect())
    }

    /// Lebesgue function `sum |b|` per evaluation point.
    pub fn lebesgue_function(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.lebesgue_value).collect()
    }

    /// Max of the Lebesgue function over successful points.
    pub fn lebesgue_constant(&self) -> f64 {
        self.diagnostics
            .iter()
            .filter(|d| d.error.is_none())
            .map(|d| d.lebesgue_value)
            .fold(f64::NAN, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct MlsEvaluation {
    pub values: Vec<f64>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub delta: f64,
}

pub fn mls_evaluate(
    cloud: &PointCloud,
    f_values: &[f64],
    eval_points: &PointSet,
    config: &MlsConfig,
) -> Result<MlsEvaluation, MlsError> {
    if f_values.len() != cloud.len() {
        return Err(MlsError::DataLength {
            expected: cloud.len(),
            got: f_values.len(),
        });
    }
    let op = ShapeOperator::build(cloud, eval_points, config)?;
    let values = op.apply(f_values)?;
    Ok(MlsEvaluation {
        values,
        delta: op.delta,
        diagnostics: op.diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct LebesgueResult {
    pub constant: f64,
    pub function: Vec<f64>,
    pub delta: f64,
}

pub fn lebesgue_constant(
    cloud: &PointCloud,
    eval_points: &PointSet,
    config: &MlsConfig,
) -> Result<LebesgueResult, MlsError> {
    let op = ShapeOperator::build(cloud, eval_points, config)?;
    Ok(LebesgueResult {
        constant: op.lebesgue_constant(),
        function: op.lebesgue_function(),
        delta: op.delta,
    })
}
