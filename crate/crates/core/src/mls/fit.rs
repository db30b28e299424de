//! Local weighted fits and Backus-Gilbert shape functions.
//!
//! With `A = diag(sqrt w) P` (P the centred, scaled Vandermonde matrix) and
//! its truncated SVD `A ~ U_K S_K V_K^T`, the shape functions are
//! `b = diag(sqrt w) U_K S_K^{-1} V_K^T p(x)`. The basis is centred at the
//! evaluation point, so `p(x) = e_1` and only the first row of `V_K` enters.

use nalgebra::DMatrix;

use crate::geometry::{distance, PointCloud, PointSet};
use crate::polybasis::ScaledBasis;

use super::weight::WeightSpec;
use super::MlsError;

/// Machine epsilon `2^-52` used in the rank threshold.
pub const EPS_MACHINE: f64 = f64::EPSILON;

/// Sites strictly inside `B(center, delta)`, with their coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    center: Vec<f64>,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
    points: PointSet,
    delta: f64,
}

impl Stencil {
    pub fn build(cloud: &PointCloud, x: &[f64], delta: f64) -> Result<Self, MlsError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(MlsError::InvalidDelta(delta));
        }
        let hits = cloud.ball_query_with_distances(x, delta);
        if hits.is_empty() {
            return Err(MlsError::EmptyStencil);
        }
        let (neighbors, distances): (Vec<usize>, Vec<f64>) = hits.into_iter().unzip();
        let points = cloud.points().select(&neighbors);
        Ok(Self {
            center: x.to_vec(),
            neighbors,
            distances,
            points,
            delta,
        })
    }

    /// Stencil over explicit points (labelled `0..n`), keeping those with
    /// `|p - center| < delta`.
    pub fn from_points(center: &[f64], points: &PointSet, delta: f64) -> Result<Self, MlsError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(MlsError::InvalidDelta(delta));
        }
        let mut neighbors = Vec::new();
        let mut distances = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let d = distance(p, center);
            if d < delta {
                neighbors.push(i);
                distances.push(d);
            }
        }
        if neighbors.is_empty() {
            return Err(MlsError::EmptyStencil);
        }
        Ok(Self {
            center: center.to_vec(),
            points: points.select(&neighbors),
            neighbors,
            distances,
            delta,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Rank-truncated SVD of the weighted local Vandermonde matrix.
#[derive(Debug, Clone)]
pub struct LocalFit {
    pub stencil: Stencil,
    /// `N_x x K`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// `K` retained singular values, descending.
    pub s: Vec<f64>,
    /// `M x K`, orthonormal columns.
    pub v: DMatrix<f64>,
    pub sqrt_weights: Vec<f64>,
    /// Largest singular value of the untruncated matrix.
    pub sigma_max: f64,
    pub threshold: f64,
}

impl LocalFit {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `sigma_1 / sigma_K`.
    pub fn cond_estimate(&self) -> f64 {
        match self.s.last() {
            Some(&last) => self.s[0] / last,
            None => f64::INFINITY,
        }
    }
}

/// Weighted truncated-SVD fit. Singular values not exceeding
/// `threshold_factor * N_x * sigma_1 * eps` are dropped.
pub fn local_fit(
    stencil: Stencil,
    basis: &ScaledBasis<'_>,
    weight: &WeightSpec,
    threshold_factor: f64,
) -> Result<LocalFit, MlsError> {
    if stencil.is_empty() {
        return Err(MlsError::EmptyStencil);
    }
    debug_assert_eq!(basis.center(), stencil.center());
    let sqrt_weights: Vec<f64> = stencil.distances.iter().map(|&r| weight.eval(r).sqrt()).collect();
    if sqrt_weights.iter().all(|&w| w == 0.0) {
        return Err(MlsError::AllWeightsZero);
    }

    let mut a = basis.vandermonde(&stencil.points);
    for (mut row, &sw) in a.row_iter_mut().zip(&sqrt_weights) {
        row *= sw;
    }
    let n_rows = a.nrows();
    let m = a.ncols();
    // nalgebra's bidiagonal SVD occasionally returns inaccurate singular
    // vectors on these matrices; faer's does not.
    let svd = faer::Mat::<f64>::from_fn(n_rows, m, |i, j| a[(i, j)])
        .thin_svd()
        .map_err(|_| MlsError::SvdFailed)?;
    let sv = svd.S().column_vector();
    let sigma_max = sv[0];
    let threshold = threshold_factor * n_rows as f64 * sigma_max * EPS_MACHINE;
    let rank = (0..sv.nrows()).take_while(|&i| sv[i] > threshold).count();
    let u = DMatrix::from_fn(n_rows, rank, |i, k| svd.U()[(i, k)]);
    let v = DMatrix::from_fn(m, rank, |i, k| svd.V()[(i, k)]);
    let s = (0..rank).map(|i| sv[i]).collect();
    Ok(LocalFit {
        stencil,
        u,
        s,
        v,
        sqrt_weights,
        sigma_max,
        threshold,
    })
}

/// Sparse row of shape-function values `b(xi, x)` over the stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFunctionRow {
    pub eval_point: Vec<f64>,
    pub entries: Vec<(usize, f64)>,
}

impl ShapeFunctionRow {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Lebesgue function value `sum |b|`.
    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|e| e.1.abs()).sum()
    }

    pub fn apply(&self, f: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, b)| b * f[i]).sum()
    }
}

/// `b = diag(sqrt w) U_K S_K^{-1} (row 1 of V_K)^T`.
pub fn shape_functions(fit: &LocalFit) -> Result<ShapeFunctionRow, MlsError> {
    if fit.s.iter().any(|&s| s < 1e-300) {
        return Err(MlsError::DegenerateFit);
    }
    let coeff: Vec<f64> = fit.s.iter().enumerate().map(|(k, &s)| fit.v[(0, k)] / s).collect();
    let entries = fit
        .stencil
        .neighbors
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            let dot: f64 = coeff.iter().enumerate().map(|(k, c)| fit.u[(i, k)] * c).sum();
            (idx, fit.sqrt_weights[i] * dot)
        })
        .collect();
    Ok(ShapeFunctionRow {
        eval_point: fit.stencil.center.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mls::weight::{wendland_weight, WeightKind};
    use crate::polybasis::MonomialBasis;

    fn fit_at(center: &[f64], pts: &PointSet, delta: f64, m: usize) -> LocalFit {
        let st = Stencil::from_points(center, pts, delta).unwrap();
        let b = MonomialBasis::new(pts.dim(), m);
        let sb = ScaledBasis::new(&b, center, delta);
        local_fit(st, &sb, &WeightSpec::new(WeightKind::WendlandC4, delta).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn constant_basis_is_shepard() {
        let pts = PointSet::new(1, vec![0.2, -0.5]).unwrap();
        let fit = fit_at(&[0.0], &pts, 1.0, 0);
        assert_eq!(fit.rank(), 1);
        let w1 = wendland_weight(0.2, 1.0);
        let w2 = wendland_weight(0.5, 1.0);
        assert!((fit.s[0] - (w1 + w2).sqrt()).abs() < 1e-15);
        let row = shape_functions(&fit).unwrap();
        let got: Vec<f64> = row.entries.iter().map(|e| e.1).collect();
        assert!((got[0] - w1 / (w1 + w2)).abs() < 1e-14);
        assert!((got[1] - w2 / (w1 + w2)).abs() < 1e-14);
    }

    #[test]
    fn symmetric_linear_stencil() {
        let pts = PointSet::new(1, vec![-0.3, 0.3, -0.6, 0.6]).unwrap();
        let row = shape_functions(&fit_at(&[0.0], &pts, 1.0, 1)).unwrap();
        let b: Vec<f64> = row.entries.iter().map(|e| e.1).collect();
        // from_points keeps input order.
        assert!((b[0] - b[1]).abs() < 1e-14);
        assert!((b[2] - b[3]).abs() < 1e-14);
        // Symmetric weights make the linear term inert: Shepard values.
        let (w1, w2) = (wendland_weight(0.3, 1.0), wendland_weight(0.6, 1.0));
        assert!((b[0] - w1 / (2.0 * (w1 + w2))).abs() < 1e-14);
        assert!((row.sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicated_row_keeps_rank() {
        let pts = PointSet::new(2, vec![0.1, 0.0, 0.0, 0.2, -0.15, -0.1, 0.3, 0.3, -0.2, 0.25]).unwrap();
        let base = fit_at(&[0.0, 0.0], &pts, 1.0, 1).rank();
        let mut dup = pts.clone();
        dup.push(pts.point(2));
        assert_eq!(fit_at(&[0.0, 0.0], &dup, 1.0, 1).rank(), base);
    }

    #[test]
    fn factors_are_orthonormal() {
        let pts = PointSet::new(2, (0..40).map(|i| (i * 37 % 23) as f64 / 23.0 - 0.5).collect()).unwrap();
        let fit = fit_at(&[0.01, -0.02], &pts, 0.9, 2);
        let k = fit.rank();
        let utu = fit.u.transpose() * &fit.u;
        let vtv = fit.v.transpose() * &fit.v;
        let eye = DMatrix::<f64>::identity(k, k);
        assert!((utu - &eye).amax() < 1e-12);
        assert!((vtv - &eye).amax() < 1e-12);
        assert!(fit.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(fit.s.iter().all(|&s| s > fit.threshold));
    }

    #[test]
    fn errors() {
        let pts = PointSet::new(1, vec![2.0]).unwrap();
        assert!(matches!(
            Stencil::from_points(&[0.0], &pts, 1.0),
            Err(MlsError::EmptyStencil)
        ));
        assert!(matches!(
            Stencil::from_points(&[0.0], &pts, 0.0),
            Err(MlsError::InvalidDelta(_))
        ));
    }
}
