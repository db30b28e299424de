//! Fixtures shared by the criterion benchmarks under `benches/`.

use mfmls::experiments::cyclide_surface;
use mfmls::geometry::sample_quasi_uniform;
use mfmls::{PointCloud, PointSet};

/// Quasi-uniform cyclide sites and a separate set of evaluation points.
pub fn cyclide_fixture(n_sites: usize, n_eval: usize, seed: u64) -> (PointCloud, PointSet) {
    let surface = cyclide_surface();
    let cloud = sample_quasi_uniform(&surface, n_sites, seed).expect("cyclide sampling");
    let eval = sample_quasi_uniform(&surface, n_eval, seed + 1)
        .expect("cyclide sampling")
        .into_points();
    (cloud, eval)
}
