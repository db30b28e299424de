//! Restricted Matérn kernels and the power function of kernel interpolation.
//!
//! For integer order `s >= 2` the kernel `phi(r) = r^{s-3/2} K_{s-3/2}(r)` has
//! a half-integer Bessel index and reduces to
//! `sqrt(pi/2) e^{-r} sum_{k=0}^{n} (n+k)! / (k! (n-k)!) 2^{-k} r^{n-k}`
//! with `n = s - 2`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;

use crate::geometry::{
    distance, sample_probes, sample_quasi_uniform, AlgebraicSurface, GeometryError, PointCloud, PointSet,
};
use crate::stats::fit_line;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RbfError {
    #[error("Matérn order must be at least 2, got {0}")]
    InvalidOrder(u32),
    #[error("Gram matrix not positive definite even with jitter {jitter:e}")]
    FactorizationFailed { jitter: f64 },
    #[error("need at least {0} ladder rungs")]
    LadderTooShort(usize),
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    order: u32,
    coeffs: [f64; 16],
}

impl KernelSpec {
    pub fn matern(order: u32) -> Result<Self, RbfError> {
        if !(2..=17).contains(&order) {
            return Err(RbfError::InvalidOrder(order));
        }
        let n = (order - 2) as usize;
        let mut coeffs = [0.0; 16];
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        for (k, c) in coeffs.iter_mut().enumerate().take(n + 1) {
            *c = fact(n + k) / (fact(k) * fact(n - k)) / 2f64.powi(k as i32);
        }
        Ok(Self { order, coeffs })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Half-integer Bessel index offset `n = s - 2` (the index is `n + 1/2`).
    pub fn n(&self) -> usize {
        (self.order - 2) as usize
    }

    /// Smoothness `k = 2s - 3` of the kernel at the origin.
    pub fn smoothness(&self) -> u32 {
        2 * self.order - 3
    }

    /// `phi(r)`, including the finite limit at `r = 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.n();
        // Horner in r over c_k r^{n-k}, highest power first (k = 0).
        let poly = self.coeffs[..=n].iter().fold(0.0, |acc, &c| acc * r + c);
        (std::f64::consts::PI / 2.0).sqrt() * (-r).exp() * poly
    }

    pub fn at_origin(&self) -> f64 {
        self.eval(0.0)
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn matern_eval(spec: &KernelSpec, r: f64) -> f64 {
    spec.eval(r)
}

/// Cholesky-factored kernel Gram matrix over a site set.
#[derive(Debug, Clone)]
pub struct InterpSystem {
    spec: KernelSpec,
    sites: PointSet,
    factor: Option<Cholesky<f64, Dyn>>,
    jitter: f64,
}

impl InterpSystem {
    /// Factors `K + jitter I`, escalating `jitter` through `0, 1e-12 phi(0), 1e-10 phi(0)`.
    pub fn new(spec: KernelSpec, sites: &PointSet) -> Result<Self, RbfError> {
        let n = sites.len();
        if n == 0 {
            return Ok(Self {
                spec,
                sites: sites.clone(),
                factor: None,
                jitter: 0.0,
            });
        }
        let gram = gram_matrix(&spec, sites);
        let phi0 = spec.at_origin();
        let mut last = 0.0;
        for jitter in [0.0, 1e-12 * phi0, 1e-10 * phi0] {
            last = jitter;
            let mut k = gram.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::new(k) {
                return Ok(Self {
                    spec,
                    sites: sites.clone(),
                    factor: Some(ch),
                    jitter,
                });
            }
        }
        Err(RbfError::FactorizationFailed { jitter: last })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sites(&self) -> &PointSet {
        &self.sites
    }

    pub fn lower_factor(&self) -> Option<DMatrix<f64>> {
        self.factor.as_ref().map(|c| c.l())
    }

    /// `P(x) = sqrt(max(0, phi(0) - k_x^T K^{-1} k_x))`.
    pub fn power_function(&self, x: &[f64]) -> f64 {
        self.power_batch(&[x])[0]
    }

    fn power_batch(&self, xs: &[&[f64]]) -> Vec<f64> {
        let phi0 = self.spec.at_origin();
        let Some(ch) = &self.factor else {
            return vec![phi0.sqrt(); xs.len()];
        };
        let n = self.sites.len();
        let mut rhs = DMatrix::from_fn(n, xs.len(), |i, j| self.spec.eval(distance(self.sites.point(i), xs[j])));
        ch.l_dirty().solve_lower_triangular_unchecked_mut(&mut rhs);
        rhs.column_iter()
            .map(|c| (phi0 - c.norm_squared()).max(0.0).sqrt())
            .collect()
    }

    /// Power function over many points, in parallel chunks.
    pub fn power_field(&self, eval_points: &PointSet) -> Vec<f64> {
        let pts: Vec<&[f64]> = eval_points.iter().collect();
        pts.par_chunks(128)
            .flat_map_iter(|chunk| self.power_batch(chunk))
            .collect()
    }
}

/// Symmetric Gram matrix, upper triangle mirrored.
pub fn gram_matrix(spec: &KernelSpec, sites: &PointSet) -> DMatrix<f64> {
    let n = sites.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = spec.at_origin();
        for j in i + 1..n {
            let v = spec.eval(distance(sites.point(i), sites.point(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

pub fn power_function(spec: &KernelSpec, sites: &PointSet, x: &[f64]) -> Result<f64, RbfError> {
    Ok(InterpSystem::new(*spec, sites)?.power_function(x))
}

pub fn power_field(spec: &KernelSpec, sites: &PointSet, eval_points: &PointSet) -> Result<Vec<f64>, RbfError> {
    Ok(InterpSystem::new(*spec, sites)?.power_field(eval_points))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRung {
    pub n_sites: usize,
    pub h: f64,
    pub q: f64,
    pub sup_power: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRateStudy {
    pub rungs: Vec<PowerRung>,
    /// Least-squares slope of `log sup P` against `log h`.
    pub slope: f64,
    /// RMS residual of that fit.
    pub residual: f64,
}

/// Probe clouds are this many times denser than the site cloud.
pub const PROBE_FACTOR: usize = 8;

/// Sup of the power function over dense probes, for quasi-uniform site
/// clouds of increasing size.
pub fn power_rate_study(
    spec: &KernelSpec,
    surface: &AlgebraicSurface,
    ladder: &[usize],
    seed: u64,
) -> Result<PowerRateStudy, RbfError> {
    if ladder.len() < 3 {
        return Err(RbfError::LadderTooShort(3));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for (i, &n) in ladder.iter().enumerate() {
        let cloud: PointCloud = sample_quasi_uniform(surface, n, seed.wrapping_add(i as u64))?;
        let probes = sample_probes(surface, PROBE_FACTOR * n, seed.wrapping_add(1000 + i as u64), None)?;
        rungs.push(power_rung(spec, &cloud, &probes)?.0);
    }
    Ok(fit_power_rate(rungs))
}

/// One rung of a rate study, plus the power function at every probe.
pub fn power_rung(spec: &KernelSpec, cloud: &PointCloud, probes: &PointSet) -> Result<(PowerRung, Vec<f64>), RbfError> {
    let stats = cloud.density_stats(probes)?;
    let system = InterpSystem::new(*spec, cloud.points())?;
    let field = system.power_field(probes);
    let sup_power = field.iter().copied().fold(0.0, f64::max);
    let rung = PowerRung {
        n_sites: cloud.len(),
        h: stats.h,
        q: stats.q,
        sup_power,
        jitter: system.jitter(),
    };
    Ok((rung, field))
}

/// Fits `log sup P` against `log h` over the rungs.
pub fn fit_power_rate(rungs: Vec<PowerRung>) -> PowerRateStudy {
    let xs: Vec<f64> = rungs.iter().map(|r| r.h.ln()).collect();
    let ys: Vec<f64> = rungs.iter().map(|r| r.sup_power.ln()).collect();
    let line = fit_line(&xs, &ys);
    PowerRateStudy {
        rungs,
        slope: line.slope,
        residual: line.rms_residual,
    }
}
