//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use mfmls::geometry::{distance, PointSet, Polynomial};
use mfmls::mls::wendland_weight;
use mfmls::polybasis::MonomialBasis;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `r^nu K_nu(r)` from `K_nu(r) = int_0^inf exp(-r cosh t) cosh(nu t) dt`,
/// by the trapezoid rule. The integrand is analytic and decays
/// doubly exponentially, so a fixed small step converges geometrically.
pub fn matern_by_quadrature(order: u32, r: f64) -> f64 {
    let nu = order as f64 - 1.5;
    let step = 1.0 / 128.0;
    let log_term = |t: f64| -r * t.cosh() + (nu * t).cosh().ln();
    let mut sum = 0.5 * log_term(0.0).exp();
    let mut peak = sum;
    let mut i = 1;
    loop {
        let v = log_term(i as f64 * step).exp();
        sum += v;
        peak = peak.max(v);
        if v < 1e-20 * peak && i as f64 * step > 1.0 {
            break;
        }
        i += 1;
    }
    r.powf(nu) * sum * step
}

/// Shape functions from the normal equations `W P (P^T W P)^{-1} e_1`,
/// with `P` the Vandermonde matrix in `(xi - x) / delta`.
pub fn normal_equation_shape(points: &PointSet, x: &[f64], delta: f64, degree: usize) -> Vec<f64> {
    let basis = MonomialBasis::new(points.dim(), degree);
    let n = points.len();
    let m = basis.len();
    let mut p = DMatrix::zeros(n, m);
    let mut w = DVector::zeros(n);
    for (i, xi) in points.iter().enumerate() {
        let y: Vec<f64> = xi.iter().zip(x).map(|(a, b)| (a - b) / delta).collect();
        for (j, v) in basis.eval(&y).into_iter().enumerate() {
            p[(i, j)] = v;
        }
        w[i] = wendland_weight(distance(xi, x), delta);
    }
    // P^T W P = R^T R with R from the QR factorization of sqrt(W) P, which
    // avoids forming the Gram matrix explicitly.
    let swp = DMatrix::from_fn(n, m, |i, j| w[i].sqrt() * p[(i, j)]);
    let r = swp.qr().r();
    let mut c = DVector::zeros(m);
    c[0] = 1.0;
    assert!(r.tr_solve_upper_triangular_mut(&mut c), "full-rank stencil");
    assert!(r.solve_upper_triangular_mut(&mut c), "full-rank stencil");
    let wp = DMatrix::from_fn(n, m, |i, j| w[i] * p[(i, j)]);
    (wp * c).iter().copied().collect()
}

/// Polynomial with every coefficient of degree `<= m` uniform in `[-1, 1]`.
pub fn random_polynomial(n_vars: usize, degree: usize, seed: u64) -> Polynomial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = MonomialBasis::new(n_vars, degree);
    let mut p = Polynomial::zero(n_vars);
    for e in basis.exponents() {
        p.add_term(e.clone(), rng.random_range(-1.0..1.0));
    }
    p
}

pub fn random_points(dim: usize, n: usize, half_width: f64, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..dim * n)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect();
    PointSet::new(dim, coords).expect("finite coordinates")
}

/// Uniform points in `[-half_width, half_width]^dim` with pairwise distance
/// at least `min_sep`, by rejection.
pub fn separated_points(dim: usize, n: usize, half_width: f64, min_sep: f64, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = PointSet::empty(dim);
    while pts.len() < n {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-half_width..half_width)).collect();
        if pts.iter().all(|q| distance(q, &p) >= min_sep) {
            pts.push(&p);
        }
    }
    pts
}
