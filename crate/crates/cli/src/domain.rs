//! Point generation for algebraic and meshed surfaces, with deterministic
//! seed streams per role.

use mfmls::experiments::Domain;
use mfmls::geometry::{sample_mesh, GeometryError};
use mfmls::{BallRestriction, PointCloud, PointSet, TriMesh};

use crate::config::SurfaceKind;

/// Independent seed streams derived from the run seed.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Sites = 1,
    Eval = 2,
    Probes = 3,
    Noise = 4,
    PowerProbes = 5,
}

/// SplitMix64 finaliser over `(seed, stream, index)`.
pub fn stream_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add((stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub enum StudyDomain {
    Algebraic(Domain),
    Mesh {
        mesh: TriMesh,
        region: Option<BallRestriction>,
    },
}

impl StudyDomain {
    pub fn new(kind: SurfaceKind, region: Option<BallRestriction>) -> Self {
        match kind {
            SurfaceKind::Algebraic(s) => Self::Algebraic(Domain::new(s, region)),
            SurfaceKind::Mesh(mesh) => Self::Mesh { mesh, region },
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Algebraic(d) => d.surface.n_ambient(),
            Self::Mesh { .. } => 3,
        }
    }

    /// Degree of the defining polynomial; `None` for meshes.
    pub fn surface_degree(&self) -> Option<u32> {
        match self {
            Self::Algebraic(d) => Some(d.surface.degree()),
            Self::Mesh { .. } => None,
        }
    }

    pub fn region(&self) -> Option<&BallRestriction> {
        match self {
            Self::Algebraic(d) => d.region.as_ref(),
            Self::Mesh { region, .. } => region.as_ref(),
        }
    }

    /// Quasi-uniform sites over the whole surface, then restricted.
    pub fn sites(&self, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
        match self {
            Self::Algebraic(d) => d.sites(n, seed),
            Self::Mesh { mesh, region } => restrict(sample_mesh(mesh, n, seed)?, region.as_ref()),
        }
    }

    /// Quasi-uniform evaluation points. On a mesh with a region they are
    /// drawn globally and restricted, so fewer than `n` remain.
    pub fn eval_points(&self, n: usize, seed: u64) -> Result<PointSet, GeometryError> {
        match self {
            Self::Algebraic(d) => d.eval_points(n, seed),
            Self::Mesh { mesh, region } => Ok(restrict(sample_mesh(mesh, n, seed)?, region.as_ref())?.into_points()),
        }
    }

    /// Dense random points for fill distances.
    pub fn probes(&self, n: usize, seed: u64) -> Result<PointSet, GeometryError> {
        match self {
            Self::Algebraic(d) => d.probes(n, seed),
            Self::Mesh { mesh, region } => {
                let raw = mesh.random_points(n, seed)?;
                let Some(ball) = region else { return Ok(raw) };
                let mut out = PointSet::empty(3);
                for p in raw.iter().filter(|p| ball.contains(p)) {
                    out.push(p);
                }
                if out.is_empty() {
                    return Err(GeometryError::EmptyResult);
                }
                Ok(out)
            }
        }
    }
}

fn restrict(cloud: PointCloud, region: Option<&BallRestriction>) -> Result<PointCloud, GeometryError> {
    let Some(ball) = region else { return Ok(cloud) };
    let stats = cloud.stats();
    let mut out = cloud.restrict(ball);
    if out.is_empty() {
        return Err(GeometryError::EmptyResult);
    }
    if let Some(s) = stats {
        out.set_stats(s);
    }
    Ok(out)
}
