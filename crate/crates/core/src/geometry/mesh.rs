//! Triangle meshes: OBJ ingestion and area-weighted sampling.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cloud::{PointCloud, PointSet};
use super::sampling::thin_pool;
use super::GeometryError;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl TriMesh {
    /// Validates indices and drops zero-area faces.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if let Some(&bad) = faces.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(GeometryError::Obj(format!("face index {bad} out of range")));
        }
        let mut mesh = Self {
            vertices,
            faces: Vec::new(),
        };
        let scale = mesh.diagonal();
        let min_area = f64::EPSILON * scale * scale;
        mesh.faces = faces.into_iter().filter(|f| mesh.face_area(f) > min_area).collect();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    fn diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (0..3).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn face_area(&self, f: &[usize; 3]) -> f64 {
        let [a, b, c] = f.map(|i| self.vertices[i]);
        let n = cross(sub(b, a), sub(c, a));
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    pub fn area(&self) -> f64 {
        self.faces.iter().map(|f| self.face_area(f)).sum()
    }

    /// Parses `v` and `f` records; other records are ignored. Polygonal faces
    /// are fan-triangulated, `f` tokens may carry `/vt/vn` suffixes and
    /// negative (relative) indices.
    pub fn parse_obj(text: &str) -> Result<Self, GeometryError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let xyz: Vec<f64> = tok
                        .take(3)
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .map_err(|e| GeometryError::Obj(format!("line {}: {e}", lineno + 1)))?;
                    if xyz.len() != 3 {
                        return Err(GeometryError::Obj(format!(
                            "line {}: vertex needs 3 coordinates",
                            lineno + 1
                        )));
                    }
                    vertices.push([xyz[0], xyz[1], xyz[2]]);
                }
                Some("f") => {
                    let idx = tok
                        .map(|t| {
                            let head = t.split('/').next().unwrap_or("");
                            let i: i64 = head
                                .parse()
                                .map_err(|e| GeometryError::Obj(format!("line {}: {e}", lineno + 1)))?;
                            let resolved = match i {
                                i if i > 0 => i - 1,
                                i if i < 0 => vertices.len() as i64 + i,
                                _ => -1,
                            };
                            usize::try_from(resolved)
                                .map_err(|_| GeometryError::Obj(format!("line {}: bad index {i}", lineno + 1)))
                        })
                        .collect::<Result<Vec<usize>, _>>()?;
                    if idx.len() < 3 {
                        return Err(GeometryError::Obj(format!(
                            "line {}: face needs at least 3 vertices",
                            lineno + 1
                        )));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn load_obj(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_obj(&text)
    }

    /// `count` area-weighted uniform random points on the faces.
    pub fn random_points(&self, count: usize, seed: u64) -> Result<PointSet, GeometryError> {
        if self.faces.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let mut cumulative = Vec::with_capacity(self.faces.len());
        let mut total = 0.0;
        for f in &self.faces {
            total += self.face_area(f);
            cumulative.push(total);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(count * 3);
        for _ in 0..count {
            let t = rng.random::<f64>() * total;
            let fi = cumulative.partition_point(|&c| c <= t).min(self.faces.len() - 1);
            let [a, b, c] = self.faces[fi].map(|i| self.vertices[i]);
            let u = rng.random::<f64>().sqrt();
            let v = rng.random::<f64>();
            for k in 0..3 {
                coords.push((1.0 - u) * a[k] + u * (1.0 - v) * b[k] + u * v * c[k]);
            }
        }
        PointSet::new(3, coords)
    }
}

/// `n` quasi-uniform points on the mesh: area-weighted candidates, thinned.
pub fn sample_mesh(mesh: &TriMesh, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
    if mesh.faces.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    if n == 0 {
        return Err(GeometryError::SamplingFailed("n must be at least 1".into()));
    }
    let pool = mesh.random_points(20 * n, seed)?;
    thin_pool(&pool, n, 2)
}
