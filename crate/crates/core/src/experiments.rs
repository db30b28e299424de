//! Presets and per-cell drivers shared by the command line runner and the
//! acceptance tests.

use std::time::Instant;

use rayon::prelude::*;

use crate::geometry::{
    sample_probes, sample_quasi_uniform, sample_quasi_uniform_with, AlgebraicSurface, BallRestriction, GeometryError,
    PointCloud, PointSet, Polynomial, SampleOptions,
};
use crate::mls::{MlsConfig, MlsError, ShapeOperator};
use crate::stats::median;

/// Cyclide parameters `(a, b, d)` of the standard test surface.
pub const CYCLIDE_PARAMS: (f64, f64, f64) = (2.0, 1.9, 1.0);
/// Torus radii `(R, r)` of the standard kernel test surface.
pub const TORUS_PARAMS: (f64, f64) = (1.0, 1.0 / 3.0);
/// Radius of the cyclide patch around its axis point.
pub const PATCH_RADIUS: f64 = 1.0;

pub fn cyclide_surface() -> AlgebraicSurface {
    let (a, b, d) = CYCLIDE_PARAMS;
    AlgebraicSurface::cyclide(a, b, d)
}

pub fn torus_surface() -> AlgebraicSurface {
    AlgebraicSurface::torus(TORUS_PARAMS.0, TORUS_PARAMS.1)
}

/// Unit ball around the point of the standard cyclide on the positive `y` axis.
pub fn cyclide_patch() -> BallRestriction {
    let (a, b, d) = CYCLIDE_PARAMS;
    let c = AlgebraicSurface::cyclide_axis_point(a, b, d).expect("standard cyclide meets the y axis");
    BallRestriction::new(c.to_vec(), PATCH_RADIUS).expect("positive radius")
}

/// Target functions sampled at the sites.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// `cos(pi(x-0.3)) sin(2pi(y-0.2)) cos(3pi(z-0.1))`.
    CyclideWave,
    /// `cos(6pi x) sin(9pi(y-0.1)) cos(7pi z)`.
    SpotWave,
    Polynomial(Polynomial),
    Constant(f64),
}

impl Target {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cyclide_wave" => Some(Self::CyclideWave),
            "spot_wave" => Some(Self::SpotWave),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            Self::CyclideWave => {
                (PI * (x[0] - 0.3)).cos() * (2.0 * PI * (x[1] - 0.2)).sin() * (3.0 * PI * (x[2] - 0.1)).cos()
            }
            Self::SpotWave => (6.0 * PI * x[0]).cos() * (9.0 * PI * (x[1] - 0.1)).sin() * (7.0 * PI * x[2]).cos(),
            Self::Polynomial(p) => p.eval(x),
            Self::Constant(c) => *c,
        }
    }

    /// Degree when the target is a polynomial.
    pub fn polynomial_degree(&self) -> Option<u32> {
        match self {
            Self::Polynomial(p) => Some(p.degree()),
            Self::Constant(_) => Some(0),
            _ => None,
        }
    }

    pub fn sample(&self, points: &PointSet) -> Vec<f64> {
        points.iter().map(|x| self.eval(x)).collect()
    }
}

/// A surface, optionally cut down to a ball.
#[derive(Debug, Clone)]
pub struct Domain {
    pub surface: AlgebraicSurface,
    pub region: Option<BallRestriction>,
}

impl Domain {
    pub fn new(surface: AlgebraicSurface, region: Option<BallRestriction>) -> Self {
        Self { surface, region }
    }

    /// Quasi-uniform cloud of `n` points on the whole surface, restricted to
    /// the region afterwards. The restricted count is therefore roughly
    /// `n * area(region) / area(surface)`.
    pub fn sites(&self, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
        let global = sample_quasi_uniform(&self.surface, n, seed)?;
        match &self.region {
            None => Ok(global),
            Some(ball) => {
                let stats = global.stats();
                let mut cloud = global.restrict(ball);
                if cloud.is_empty() {
                    return Err(GeometryError::EmptyResult);
                }
                if let Some(s) = stats {
                    cloud.set_stats(s);
                }
                Ok(cloud)
            }
        }
    }

    /// Quasi-uniform evaluation points inside the region.
    pub fn eval_points(&self, n: usize, seed: u64) -> Result<PointSet, GeometryError> {
        let opts = SampleOptions {
            region: self.region.clone(),
            ..SampleOptions::default()
        };
        Ok(sample_quasi_uniform_with(&self.surface, n, seed, &opts)?.into_points())
    }

    /// Dense unthinned points inside the region, for fill distances.
    pub fn probes(&self, n: usize, seed: u64) -> Result<PointSet, GeometryError> {
        sample_probes(&self.surface, n, seed, self.region.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSummary {
    pub min: usize,
    pub median: usize,
    pub max: usize,
}

impl RankSummary {
    pub fn from_operator(op: &ShapeOperator) -> Option<Self> {
        let ranks: Vec<usize> = op
            .diagnostics()
            .iter()
            .filter(|d| d.error.is_none())
            .map(|d| d.rank)
            .collect();
        Some(Self {
            min: *ranks.iter().min()?,
            median: median(&ranks)?,
            max: *ranks.iter().max()?,
        })
    }
}

/// One (degree, cardinality) cell of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub degree: usize,
    pub n_requested: usize,
    pub n_sites: usize,
    pub delta: f64,
    pub h: f64,
    pub q: f64,
    pub max_error: f64,
    pub rms_error: f64,
    pub lebesgue_constant: f64,
    pub ranks: Option<RankSummary>,
    pub n_failed: usize,
    pub wall_secs: f64,
}

/// Everything a cell needs besides the degree.
pub struct CellInput<'a> {
    pub cloud: &'a PointCloud,
    pub eval_points: &'a PointSet,
    /// Fill-distance probes; `h` is NaN when absent.
    pub probes: Option<&'a PointSet>,
    pub target: &'a Target,
}

/// Builds the operator and reports errors, Lebesgue constant and ranks.
pub fn run_cell(
    input: &CellInput<'_>,
    n_requested: usize,
    config: &MlsConfig,
) -> Result<(CellReport, ShapeOperator), MlsError> {
    let start = Instant::now();
    let op = ShapeOperator::build(input.cloud, input.eval_points, config)?;
    let f = input.target.sample(input.cloud.points());
    let exact = input.target.sample(input.eval_points);
    let approx = op.apply(&f)?;
    let errs: Vec<f64> = approx
        .iter()
        .zip(&exact)
        .filter(|(a, _)| !a.is_nan())
        .map(|(a, e)| (a - e).abs())
        .collect();
    let max_error = errs.iter().copied().fold(0.0, f64::max);
    let rms_error = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64).sqrt();
    let h = input.probes.map_or(f64::NAN, |p| input.cloud.fill_distance(p));
    let q = input.cloud.separation().unwrap_or(f64::NAN);
    let report = CellReport {
        degree: config.degree,
        n_requested,
        n_sites: input.cloud.len(),
        delta: op.delta(),
        h,
        q,
        max_error,
        rms_error,
        lebesgue_constant: op.lebesgue_constant(),
        ranks: RankSummary::from_operator(&op),
        n_failed: op.n_failed(),
        wall_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, op))
}

/// Largest `|sum b - 1|` over the successful evaluation points.
pub fn partition_of_unity_defect(op: &ShapeOperator) -> f64 {
    op.rows()
        .par_iter()
        .flatten()
        .map(|r| (r.sum() - 1.0).abs())
        .reduce(|| 0.0, f64::max)
}

/// Number of shape-function entries at distance `>= delta` from their
/// evaluation point. Zero by construction.
pub fn support_violations(op: &ShapeOperator, cloud: &PointCloud) -> usize {
    op.rows()
        .par_iter()
        .flatten()
        .map(|r| {
            r.entries
                .iter()
                .filter(|&&(i, b)| b != 0.0 && crate::geometry::distance(cloud.point(i), &r.eval_point) >= op.delta())
                .count()
        })
        .sum()
}
