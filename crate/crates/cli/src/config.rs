//! Experiment configuration: a strict JSON schema, validated before any
//! computation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use mfmls::experiments::{cyclide_patch, Target, CYCLIDE_PARAMS, TORUS_PARAMS};
use mfmls::geometry::Aabb;
use mfmls::{AlgebraicSurface, BallRestriction, Polynomial, TriMesh};

pub const CONFIG_VERSION: u32 = 1;
/// Evaluation points when the domain is the whole surface.
pub const DEFAULT_EVAL_GLOBAL: usize = 1 << 16;
/// Evaluation points inside a restriction ball.
pub const DEFAULT_EVAL_RESTRICTED: usize = 8000;
/// Fill-distance probes per site.
pub const DEFAULT_PROBE_FACTOR: usize = 16;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub degrees: Vec<usize>,
    pub cardinalities: Vec<usize>,
    #[serde(default)]
    pub restriction: Option<RestrictionConfig>,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub eval_points: Option<usize>,
    #[serde(default)]
    pub probe_factor: Option<usize>,
    #[serde(default)]
    pub sigma_list: Vec<f64>,
    #[serde(default)]
    pub trials: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub kernel_order: Option<u32>,
    #[serde(default)]
    pub rank_threshold_factor: Option<f64>,
    #[serde(default)]
    pub escalate_delta: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Sphere {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Torus {
        #[serde(default = "torus_major")]
        major: f64,
        #[serde(default = "torus_minor")]
        minor: f64,
    },
    Cyclide {
        #[serde(default = "cyclide_a")]
        a: f64,
        #[serde(default = "cyclide_b")]
        b: f64,
        #[serde(default = "one")]
        d: f64,
    },
    Mesh {
        path: PathBuf,
    },
    /// Zero set of `sum coeff * x^exponents` inside a box.
    Polynomial {
        terms: Vec<TermConfig>,
        bbox_min: Vec<f64>,
        bbox_max: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RestrictionConfig {
    /// Unit ball around the cyclide's point on the positive `y` axis.
    CyclidePatch,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    CyclideWave,
    SpotWave,
    Constant(f64),
    Polynomial(Vec<TermConfig>),
}

fn default_dim() -> usize {
    3
}
fn one() -> f64 {
    1.0
}
fn torus_major() -> f64 {
    TORUS_PARAMS.0
}
fn torus_minor() -> f64 {
    TORUS_PARAMS.1
}
fn cyclide_a() -> f64 {
    CYCLIDE_PARAMS.0
}
fn cyclide_b() -> f64 {
    CYCLIDE_PARAMS.1
}

/// The study a command runs, used to pick which fields are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Sample,
    Convergence,
    Lebesgue,
    Noise,
    Power,
    Info,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self, study: Study) -> Result<()> {
        ensure!(
            self.version == CONFIG_VERSION,
            "config version {} is not supported (expected {CONFIG_VERSION})",
            self.version
        );
        ensure!(!self.cardinalities.is_empty(), "cardinalities must be nonempty");
        ensure!(
            self.cardinalities.iter().all(|&n| n > 0),
            "cardinalities must be positive"
        );
        if matches!(study, Study::Convergence | Study::Lebesgue | Study::Noise | Study::Info) {
            ensure!(!self.degrees.is_empty(), "degrees must be nonempty");
        }
        match study {
            Study::Convergence => ensure!(
                self.cardinalities.len() >= 3,
                "convergence needs at least 3 cardinalities, got {}",
                self.cardinalities.len()
            ),
            Study::Noise => {
                ensure!(!self.sigma_list.is_empty(), "sigma_list must be nonempty");
                ensure!(
                    self.sigma_list.iter().all(|s| s.is_finite() && *s >= 0.0),
                    "sigma values must be finite and >= 0"
                );
                match self.trials {
                    Some(t) if t >= 2 => {}
                    Some(t) => bail!("noise needs trials >= 2, got {t}"),
                    None => bail!("noise needs trials"),
                }
            }
            Study::Power => {
                ensure!(self.kernel_order.is_some(), "power needs kernel_order");
                ensure!(
                    self.cardinalities.len() >= 3,
                    "power needs at least 3 cardinalities, got {}",
                    self.cardinalities.len()
                );
            }
            Study::Sample | Study::Lebesgue | Study::Info => {}
        }
        if let Some(n) = self.eval_points {
            ensure!(n > 0, "eval_points must be positive");
        }
        if let Some(f) = self.probe_factor {
            ensure!(f > 0, "probe_factor must be positive");
        }
        if let Some(f) = self.rank_threshold_factor {
            ensure!(f.is_finite() && f > 0.0, "rank_threshold_factor must be positive");
        }
        Ok(())
    }

    pub fn target(&self) -> Result<Target> {
        let n_vars = 3;
        Ok(match &self.target {
            None | Some(TargetConfig::CyclideWave) => Target::CyclideWave,
            Some(TargetConfig::SpotWave) => Target::SpotWave,
            Some(TargetConfig::Constant(c)) => Target::Constant(*c),
            Some(TargetConfig::Polynomial(terms)) => Target::Polynomial(polynomial(n_vars, terms)?),
        })
    }

    pub fn restriction(&self) -> Result<Option<BallRestriction>> {
        match &self.restriction {
            None => Ok(None),
            Some(RestrictionConfig::CyclidePatch) => Ok(Some(cyclide_patch())),
            Some(RestrictionConfig::Ball { center, radius }) => {
                Ok(Some(BallRestriction::new(center.clone(), *radius)?))
            }
        }
    }

    pub fn eval_count(&self) -> usize {
        self.eval_points.unwrap_or(if self.restriction.is_some() {
            DEFAULT_EVAL_RESTRICTED
        } else {
            DEFAULT_EVAL_GLOBAL
        })
    }

    pub fn probe_factor(&self) -> usize {
        self.probe_factor.unwrap_or(DEFAULT_PROBE_FACTOR)
    }
}

fn polynomial(n_vars: usize, terms: &[TermConfig]) -> Result<Polynomial> {
    Ok(Polynomial::from_terms(
        n_vars,
        terms.iter().map(|t| (t.exponents.clone(), t.coeff)),
    )?)
}

pub enum SurfaceKind {
    Algebraic(AlgebraicSurface),
    Mesh(TriMesh),
}

impl SurfaceConfig {
    pub fn build(&self) -> Result<SurfaceKind> {
        Ok(match self {
            Self::Sphere { dim, radius } => {
                ensure!(*dim >= 2 && *radius > 0.0, "sphere needs dim >= 2 and radius > 0");
                SurfaceKind::Algebraic(AlgebraicSurface::sphere(*dim, *radius))
            }
            Self::Torus { major, minor } => {
                ensure!(*major > *minor && *minor > 0.0, "torus needs major > minor > 0");
                SurfaceKind::Algebraic(AlgebraicSurface::torus(*major, *minor))
            }
            Self::Cyclide { a, b, d } => {
                ensure!(*a > *b && *b > 0.0 && *d > 0.0, "cyclide needs a > b > 0 and d > 0");
                SurfaceKind::Algebraic(AlgebraicSurface::cyclide(*a, *b, *d))
            }
            Self::Mesh { path } => SurfaceKind::Mesh(TriMesh::load_obj(path)?),
            Self::Polynomial {
                terms,
                bbox_min,
                bbox_max,
            } => {
                let poly = polynomial(bbox_min.len(), terms)?;
                let bbox = Aabb::new(bbox_min.clone(), bbox_max.clone())?;
                SurfaceKind::Algebraic(AlgebraicSurface::new(poly, bbox)?)
            }
        })
    }
}
