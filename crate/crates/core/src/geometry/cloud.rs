use super::kdtree::KdTree;
use super::GeometryError;

/// Flat list of points in `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self, GeometryError> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self, GeometryError> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, coords }
    }

    /// Multiplies every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    /// Largest pairwise distance bound: diagonal of the bounding box.
    pub fn bbox_diagonal(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.dim)
            .map(|a| {
                let (lo, hi) = self.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[a]), hi.max(p[a]))
                });
                (hi - lo) * (hi - lo)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Open ball `{x : |x - center| < radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRestriction {
    center: Vec<f64>,
    radius: f64,
}

impl BallRestriction {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidRadius(radius));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(x, &self.center) < self.radius
    }
}

/// Fill distance and separation radius of a cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    /// Largest probe-to-cloud distance.
    pub h: f64,
    /// Smallest distance from a point to its nearest other point
    /// (`+inf` for a single point).
    pub q: f64,
}

impl DensityStats {
    pub fn mesh_ratio(&self) -> f64 {
        self.h / self.q
    }
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Sample sites with a k-d tree index.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: PointSet,
    index: KdTree,
    stats: Option<DensityStats>,
}

impl PointCloud {
    /// Indexes `points`; fails if two points coincide.
    pub fn new(points: PointSet) -> Result<Self, GeometryError> {
        let index = KdTree::build(points.dim(), points.coords());
        let cloud = Self {
            points,
            index,
            stats: None,
        };
        if cloud.len() > 1 {
            for i in 0..cloud.len() {
                let nn = cloud.index.knn(cloud.points.coords(), cloud.points.point(i), 2);
                if nn[1].1 == 0.0 {
                    return Err(GeometryError::DuplicatePoint(i.max(nn[1].0)));
                }
            }
        }
        Ok(cloud)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn into_points(self) -> PointSet {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    pub fn stats(&self) -> Option<DensityStats> {
        self.stats
    }

    pub fn set_stats(&mut self, stats: DensityStats) {
        self.stats = Some(stats);
    }

    /// Exact `k` nearest neighbours, ascending by distance, ties by index.
    pub fn knn(&self, x: &[f64], k: usize) -> Result<Vec<(usize, f64)>, GeometryError> {
        if k > self.len() {
            return Err(GeometryError::KTooLarge { k, len: self.len() });
        }
        Ok(self.index.knn(self.points.coords(), x, k))
    }

    /// Indices with `|xi - x| < r`, in knn order.
    pub fn ball_query(&self, x: &[f64], r: f64) -> Vec<usize> {
        self.ball_query_with_distances(x, r)
            .into_iter()
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ball_query_with_distances(&self, x: &[f64], r: f64) -> Vec<(usize, f64)> {
        self.index.within(self.points.coords(), x, r)
    }

    /// Separation radius: minimum nearest-other-point distance.
    pub fn separation(&self) -> Result<f64, GeometryError> {
        if self.len() < 2 {
            return Err(GeometryError::SinglePoint);
        }
        Ok((0..self.len())
            .map(|i| self.index.knn(self.points.coords(), self.point(i), 2)[1].1)
            .fold(f64::INFINITY, f64::min))
    }

    /// Largest distance from a probe to its nearest cloud point.
    pub fn fill_distance(&self, probes: &PointSet) -> f64 {
        probes
            .iter()
            .map(|p| self.index.knn(self.points.coords(), p, 1)[0].1)
            .fold(0.0, f64::max)
    }

    /// `(h, q)` with `h` estimated over `probes`.
    pub fn density_stats(&self, probes: &PointSet) -> Result<DensityStats, GeometryError> {
        if probes.is_empty() {
            return Err(GeometryError::EmptyProbes);
        }
        if self.is_empty() {
            return Err(GeometryError::EmptyResult);
        }
        let q = self.separation()?;
        Ok(DensityStats {
            h: self.fill_distance(probes),
            q,
        })
    }

    /// Points strictly inside `ball`, re-indexed. An empty result is
    /// returned as an empty cloud; callers check `is_empty`.
    pub fn restrict(&self, ball: &BallRestriction) -> PointCloud {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| ball.contains(self.point(i))).collect();
        let points = self.points.select(&keep);
        let index = KdTree::build(points.dim(), points.coords());
        PointCloud {
            points,
            index,
            stats: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> PointCloud {
        PointCloud::new(PointSet::new(1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap()
    }

    #[test]
    fn knn_on_line() {
        let c = line();
        let nn = c.knn(&[2.0], 4).unwrap();
        assert_eq!(nn, vec![(2, 0.0), (1, 1.0), (3, 1.0), (0, 2.0)]);
        // Excluding the site itself: {1,3,0,4} at (1,1,2,2).
        let off = PointCloud::new(PointSet::new(1, vec![0.0, 1.0, 3.0, 4.0]).unwrap()).unwrap();
        let nn = off.knn(&[2.0], 4).unwrap();
        assert_eq!(nn, vec![(1, 1.0), (2, 1.0), (0, 2.0), (3, 2.0)]);
        assert_eq!(c.knn(&[2.0], 5).unwrap().len(), 5);
        assert!(matches!(c.knn(&[2.0], 6), Err(GeometryError::KTooLarge { .. })));
    }

    #[test]
    fn ball_query_on_line() {
        let c = line();
        let mut hits = c.ball_query(&[2.0], 1.5);
        hits.sort_unstable();
        assert_eq!(hits, vec![1, 2, 3]);
        assert!(c.ball_query(&[0.5], 0.4).is_empty());
        assert_eq!(c.ball_query(&[2.0], 8.0).len(), 5);
    }

    #[test]
    fn density_on_grid() {
        let s = 0.25;
        let mut pts = Vec::new();
        let mut probes = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                pts.extend([i as f64 * s, j as f64 * s, 0.0]);
                if i < 7 && j < 7 {
                    probes.extend([(i as f64 + 0.5) * s, (j as f64 + 0.5) * s, 0.0]);
                }
            }
        }
        let cloud = PointCloud::new(PointSet::new(3, pts.clone()).unwrap()).unwrap();
        let st = cloud.density_stats(&PointSet::new(3, probes).unwrap()).unwrap();
        assert!((st.q - s).abs() < 1e-15);
        assert!((st.h - s / 2f64.sqrt()).abs() < 1e-15);
        let st = cloud.density_stats(&PointSet::new(3, pts).unwrap()).unwrap();
        assert_eq!(st.h, 0.0);
    }

    #[test]
    fn single_point_has_no_separation() {
        let c = PointCloud::new(PointSet::new(2, vec![1.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(c.separation(), Err(GeometryError::SinglePoint)));
        let two = PointCloud::new(PointSet::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(two.separation().unwrap(), 1.0);
    }

    #[test]
    fn duplicates_rejected() {
        let r = PointCloud::new(PointSet::new(1, vec![0.0, 1.0, 0.0]).unwrap());
        assert!(matches!(r, Err(GeometryError::DuplicatePoint(2))));
    }

    #[test]
    fn restrict_ball() {
        let c = line();
        assert!(matches!(
            BallRestriction::new(vec![0.0], 0.0),
            Err(GeometryError::InvalidRadius(_))
        ));
        let all = c.restrict(&BallRestriction::new(vec![2.0], 10.0).unwrap());
        assert_eq!(all.points(), c.points());
        let b = BallRestriction::new(vec![2.0], 1.5).unwrap();
        let r = c.restrict(&b);
        assert_eq!(r.points().coords(), &[1.0, 2.0, 3.0]);
        assert_eq!(r.restrict(&b).points(), r.points());
        assert!(c.restrict(&BallRestriction::new(vec![10.0], 1.0).unwrap()).is_empty());
    }
}
