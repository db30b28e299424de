//! Quasi-uniform point generation on implicit surfaces.
//!
//! Candidates are drawn uniformly in a thin shell around the surface,
//! Newton-projected onto it, then thinned greedily: a candidate is kept iff
//! it lies at least `r` from every kept point. `r` is bisected so the greedy
//! pass reaches the requested count.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cloud::{distance, BallRestriction, DensityStats, PointCloud, PointSet};
use super::surface::AlgebraicSurface;
use super::GeometryError;

#[derive(Debug, Clone)]
pub struct SampleOptions {
    /// Candidates generated per requested point.
    pub oversample: usize,
    /// Only sample the part of the surface inside this ball.
    pub region: Option<BallRestriction>,
    /// A posteriori bound on `h / q`.
    pub max_mesh_ratio: f64,
    pub max_iter: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            oversample: 20,
            region: None,
            max_mesh_ratio: 4.0,
            max_iter: 50,
        }
    }
}

/// `n_target` quasi-uniform points on `surface`, deterministic in `seed`.
pub fn sample_quasi_uniform(
    surface: &AlgebraicSurface,
    n_target: usize,
    seed: u64,
) -> Result<PointCloud, GeometryError> {
    sample_quasi_uniform_with(surface, n_target, seed, &SampleOptions::default())
}

pub fn sample_quasi_uniform_with(
    surface: &AlgebraicSurface,
    n_target: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<PointCloud, GeometryError> {
    if n_target == 0 {
        return Err(GeometryError::SamplingFailed("n_target must be at least 1".into()));
    }
    let mut oversample = opts.oversample.max(2);
    for _attempt in 0..3 {
        let pool = surface_candidates(surface, oversample * n_target, seed, opts)?;
        let cloud = thin_pool(&pool, n_target, surface.n_ambient() - 1)?;
        if let Some(st) = cloud.stats() {
            if st.q.is_finite() && st.mesh_ratio() > opts.max_mesh_ratio {
                oversample *= 2;
                continue;
            }
        }
        return Ok(cloud);
    }
    Err(GeometryError::SamplingFailed(format!(
        "mesh ratio above {} after densifying candidates",
        opts.max_mesh_ratio
    )))
}

/// Dense, unthinned on-surface points for fill-distance estimation.
pub fn sample_probes(
    surface: &AlgebraicSurface,
    n: usize,
    seed: u64,
    region: Option<&BallRestriction>,
) -> Result<PointSet, GeometryError> {
    let opts = SampleOptions {
        region: region.cloned(),
        ..SampleOptions::default()
    };
    surface_candidates(surface, n, seed ^ 0x9e37_79b9_7f4a_7c15, &opts)
}

fn sampling_box(surface: &AlgebraicSurface, region: Option<&BallRestriction>) -> (Vec<f64>, Vec<f64>) {
    let bbox = surface.bbox();
    let mut lo = bbox.min.clone();
    let mut hi = bbox.max.clone();
    if let Some(ball) = region {
        for a in 0..lo.len() {
            lo[a] = lo[a].max(ball.center()[a] - ball.radius());
            hi[a] = hi[a].min(ball.center()[a] + ball.radius());
        }
    }
    (lo, hi)
}

/// Draws uniform shell points and projects them, keeping generation order.
fn surface_candidates(
    surface: &AlgebraicSurface,
    count: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<PointSet, GeometryError> {
    let dim = surface.n_ambient();
    let region = opts.region.as_ref();
    let (lo, hi) = sampling_box(surface, region);
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(GeometryError::SamplingFailed("region misses the bounding box".into()));
    }
    let diag = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let band = 0.02 * diag;
    let tol = surface.default_tol();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PointSet::empty(dim);
    let batch = (4 * count).clamp(1024, 1 << 20);
    let max_draws = 2000usize.saturating_mul(count).max(1 << 22);
    let mut draws = 0usize;
    while out.len() < count {
        if draws > max_draws {
            return Err(GeometryError::SamplingFailed(format!(
                "only {} of {count} candidates after {draws} draws",
                out.len()
            )));
        }
        let raw: Vec<f64> = (0..batch * dim)
            .map(|j| {
                let a = j % dim;
                rng.random_range(lo[a]..hi[a])
            })
            .collect();
        draws += batch;
        let projected: Vec<Option<Vec<f64>>> = raw
            .par_chunks_exact(dim)
            .map(|x| {
                if let Some(ball) = region {
                    if !ball.contains(x) {
                        return None;
                    }
                }
                let (v, g) = surface.eval(x);
                let gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                if !(v.abs() < band * gn) {
                    return None;
                }
                let p = surface.project(x, tol, opts.max_iter).ok()?;
                if distance(&p, x) > 4.0 * band {
                    return None;
                }
                match region {
                    Some(ball) if !ball.contains(&p) => None,
                    _ => Some(p),
                }
            })
            .collect();
        for p in projected.into_iter().flatten() {
            if out.len() == count {
                break;
            }
            out.push(&p);
        }
    }
    Ok(out)
}

/// Thins a dense candidate pool to about `n` separated points and records
/// `(h, q)` with the pool itself as the probe set.
pub(crate) fn thin_pool(pool: &PointSet, n: usize, manifold_dim: usize) -> Result<PointCloud, GeometryError> {
    if pool.len() < n {
        return Err(GeometryError::SamplingFailed(format!(
            "candidate pool of {} cannot reach {n}",
            pool.len()
        )));
    }
    let keep = thin_to_count(pool, n, manifold_dim);
    let points = pool.select(&keep);
    let mut cloud = PointCloud::new(points)?;
    let h = cloud.fill_distance(pool);
    let q = cloud.separation().unwrap_or(f64::INFINITY);
    cloud.set_stats(DensityStats { h, q });
    Ok(cloud)
}

/// Indices picked by greedy separation thinning with the largest radius
/// (to ~0.1%) that still yields `n` points. The count is at least `n` and
/// at most `1.1 n`.
fn thin_to_count(pool: &PointSet, n: usize, manifold_dim: usize) -> Vec<usize> {
    if n <= 1 || pool.len() <= n {
        return (0..n.min(pool.len())).collect();
    }
    let k = manifold_dim.max(1) as f64;
    let extent = pool.bbox_diagonal();
    let mut r_ok = 0.0;
    let mut r_bad = extent.max(f64::MIN_POSITIVE);
    let mut guess = extent * (1.0 / n as f64).powf(1.0 / k);
    for _ in 0..60 {
        let count = greedy(pool, guess, n).len();
        if count >= n {
            r_ok = guess;
            guess *= 2.0;
            if guess >= r_bad {
                break;
            }
        } else {
            r_bad = guess;
            break;
        }
    }
    if r_ok == 0.0 {
        // Shrink until feasible.
        let mut r = r_bad;
        loop {
            r *= 0.5;
            if greedy(pool, r, n).len() >= n {
                r_ok = r;
                break;
            }
            r_bad = r;
        }
    }
    while (r_bad - r_ok) > 1e-3 * r_ok {
        let mid = 0.5 * (r_ok + r_bad);
        if greedy(pool, mid, n).len() >= n {
            r_ok = mid;
        } else {
            r_bad = mid;
        }
    }
    // The full pass at r_ok is a maximal r_ok-net of the pool; cutting it to
    // exactly n would leave holes where the dropped points were.
    let full = greedy(pool, r_ok, usize::MAX);
    if full.len() as f64 <= 1.1 * n as f64 {
        full
    } else {
        greedy(pool, r_ok, n)
    }
}

#[derive(Default)]
struct CellHasher(u64);

impl Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(u64::from(b));
        }
    }
    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
}

type CellMap = HashMap<u64, Vec<u32>, BuildHasherDefault<CellHasher>>;

fn cell_key(cell: &[i64]) -> u64 {
    cell.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &c| {
        (h.rotate_left(17) ^ c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    })
}

/// Greedy pass in pool order, stopping once `limit` points are accepted.
fn greedy(pool: &PointSet, r: f64, limit: usize) -> Vec<usize> {
    let dim = pool.dim();
    let mut grid = CellMap::default();
    let mut accepted = Vec::with_capacity(limit.min(pool.len()));
    let mut cell = vec![0i64; dim];
    let mut probe = vec![0i64; dim];
    let n_neighbours = 3usize.pow(dim as u32);
    'cand: for i in 0..pool.len() {
        let p = pool.point(i);
        for (c, x) in cell.iter_mut().zip(p) {
            *c = (x / r).floor() as i64;
        }
        for code in 0..n_neighbours {
            let mut rest = code;
            for a in 0..dim {
                probe[a] = cell[a] + (rest % 3) as i64 - 1;
                rest /= 3;
            }
            if let Some(bucket) = grid.get(&cell_key(&probe)) {
                for &j in bucket {
                    if distance(pool.point(j as usize), p) < r {
                        continue 'cand;
                    }
                }
            }
        }
        grid.entry(cell_key(&cell)).or_default().push(i as u32);
        accepted.push(i);
        if accepted.len() == limit {
            break;
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_sample_is_quasi_uniform() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let c = sample_quasi_uniform(&s, 100, 7).unwrap();
        assert!((100..=110).contains(&c.len()), "{}", c.len());
        for p in c.points().iter() {
            assert!(s.value(p).abs() <= s.default_tol());
        }
        let st = c.stats().unwrap();
        assert!(st.q <= st.h * 4.0 && st.mesh_ratio() <= 4.0, "{st:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let a = sample_quasi_uniform(&s, 60, 3).unwrap();
        let b = sample_quasi_uniform(&s, 60, 3).unwrap();
        let c = sample_quasi_uniform(&s, 60, 4).unwrap();
        assert_eq!(a.points(), b.points());
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn single_point() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let c = sample_quasi_uniform(&s, 1, 1).unwrap();
        assert_eq!(c.len(), 1);
        let st = c.stats().unwrap();
        assert!(st.q.is_infinite());
        assert!(st.h > 1.0 && st.h <= 2.0 + 1e-9);
    }

    #[test]
    fn region_sampling_stays_inside() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let ball = BallRestriction::new(vec![1.0, 0.0, 0.0], 0.5).unwrap();
        let opts = SampleOptions {
            region: Some(ball.clone()),
            ..SampleOptions::default()
        };
        let c = sample_quasi_uniform_with(&s, 50, 2, &opts).unwrap();
        assert!((50..=55).contains(&c.len()), "{}", c.len());
        assert!(c.points().iter().all(|p| ball.contains(p)));
    }
}
