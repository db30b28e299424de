//! Implicit algebraic hypersurfaces `P(x) = 0` with sparse polynomial `P`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::GeometryError;

/// Sparse multivariate polynomial, keyed by exponent multi-index.
///
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn variable(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index out of range");
        let mut e = vec![0; n_vars];
        e[i] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, 1.0);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self, GeometryError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(GeometryError::DimensionMismatch {
                    expected: n_vars,
                    got: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn add_term(&mut self, exponents: Vec<u32>, coeff: f64) {
        debug_assert_eq!(exponents.len(), self.n_vars);
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree among the nonzero terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.n_vars, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Exact partial derivative with respect to `x_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * f64::from(e[i]));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let powers = PowerTable::new(x, self.degree());
        self.eval_with(&powers)
    }

    fn eval_with(&self, powers: &PowerTable) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().enumerate().fold(*c, |acc, (i, &k)| acc * powers.get(i, k)))
            .sum()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars);
        let mut out = Polynomial::zero(self.n_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// `powers[i][k] = x_i^k` for `k <= max_degree`.
struct PowerTable {
    stride: usize,
    values: Vec<f64>,
}

impl PowerTable {
    fn new(x: &[f64], max_degree: u32) -> Self {
        let stride = max_degree as usize + 1;
        let mut values = vec![1.0; x.len() * stride];
        for (i, &xi) in x.iter().enumerate() {
            for k in 1..stride {
                values[i * stride + k] = values[i * stride + k - 1] * xi;
            }
        }
        Self { stride, values }
    }

    #[inline]
    fn get(&self, i: usize, k: u32) -> f64 {
        self.values[i * self.stride + k as usize]
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self, GeometryError> {
        if min.len() != max.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        if min.iter().zip(&max).any(|(a, b)| !(a < b)) {
            return Err(GeometryError::InvalidBox);
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).product()
    }

    pub fn diagonal(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

/// The hypersurface `{x : P(x) = 0}` in `R^N`.
#[derive(Debug, Clone)]
pub struct AlgebraicSurface {
    poly: Polynomial,
    gradient: Vec<Polynomial>,
    bbox: Aabb,
}

impl AlgebraicSurface {
    pub fn new(poly: Polynomial, bbox: Aabb) -> Result<Self, GeometryError> {
        if poly.is_zero() {
            return Err(GeometryError::ZeroPolynomial);
        }
        if bbox.dim() != poly.n_vars() {
            return Err(GeometryError::DimensionMismatch {
                expected: poly.n_vars(),
                got: bbox.dim(),
            });
        }
        let gradient = (0..poly.n_vars()).map(|i| poly.partial(i)).collect();
        Ok(Self { poly, gradient, bbox })
    }

    /// `|x|^2 - radius^2 = 0` in `R^n`.
    pub fn sphere(n: usize, radius: f64) -> Self {
        let mut p = Polynomial::constant(n, -radius * radius);
        for i in 0..n {
            let xi = Polynomial::variable(n, i);
            p = &p + &(&xi * &xi);
        }
        let m = 1.1 * radius;
        let bbox = Aabb::new(vec![-m; n], vec![m; n]).expect("positive radius");
        Self::new(p, bbox).expect("sphere polynomial is nonzero")
    }

    /// Ring torus about the `x3` axis: `(|x|^2 + R^2 - r^2)^2 - 4R^2(x1^2 + x2^2) = 0`.
    pub fn torus(major: f64, minor: f64) -> Self {
        let x = Polynomial::variable(3, 0);
        let y = Polynomial::variable(3, 1);
        let z = Polynomial::variable(3, 2);
        let planar = &(&x * &x) + &(&y * &y);
        let r2 = &planar + &(&z * &z);
        let inner = &r2 + &Polynomial::constant(3, major * major - minor * minor);
        let p = &inner.pow(2) - &planar.scale(4.0 * major * major);
        let e = 1.1 * (major + minor);
        let h = 1.1 * minor;
        let bbox = Aabb::new(vec![-e, -e, -h], vec![e, e, h]).expect("positive radii");
        Self::new(p, bbox).expect("torus polynomial is nonzero")
    }

    /// Cyclide of Dupin
    /// `(|x|^2 - d^2 + b^2)^2 - 4(a x1 + c d)^2 - 4 b^2 x2^2 = 0`, `c^2 = a^2 - b^2`.
    pub fn cyclide(a: f64, b: f64, d: f64) -> Self {
        let c = (a * a - b * b).sqrt();
        let x = Polynomial::variable(3, 0);
        let y = Polynomial::variable(3, 1);
        let z = Polynomial::variable(3, 2);
        let r2 = &(&(&x * &x) + &(&y * &y)) + &(&z * &z);
        let first = (&r2 + &Polynomial::constant(3, b * b - d * d)).pow(2);
        let lin = &x.scale(a) + &Polynomial::constant(3, c * d);
        let second = (&lin * &lin).scale(4.0);
        let third = (&y * &y).scale(4.0 * b * b);
        let p = &(&first - &second) - &third;
        // Loose enclosing box; sampling only needs containment.
        let ex = a + b + d;
        let ey = a + b + d;
        let ez = b + d;
        let bbox = Aabb::new(vec![-ex, -ey, -ez], vec![ex, ey, ez]).expect("valid cyclide box");
        Self::new(p, bbox).expect("cyclide polynomial is nonzero")
    }

    /// Point of the cyclide on the positive `x2` axis: `x2^2 = b^2 + d^2 - 2ad`.
    pub fn cyclide_axis_point(a: f64, b: f64, d: f64) -> Option<[f64; 3]> {
        let u = b * b + d * d - 2.0 * a * d;
        (u >= 0.0).then(|| [0.0, u.sqrt(), 0.0])
    }

    pub fn n_ambient(&self) -> usize {
        self.poly.n_vars()
    }

    /// Total degree `k` of the defining polynomial.
    pub fn degree(&self) -> u32 {
        self.poly.degree()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn coeff_scale(&self) -> f64 {
        self.poly.max_abs_coeff()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    /// `(P(x), grad P(x))`.
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let powers = PowerTable::new(x, self.poly.degree());
        let value = self.poly.eval_with(&powers);
        let grad = self.gradient.iter().map(|g| g.eval_with(&powers)).collect();
        (value, grad)
    }

    /// Damped Newton projection `x <- x - P(x) grad P(x) / |grad P(x)|^2`,
    /// halving the step whenever `|P|` fails to decrease.
    pub fn project(&self, x0: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, GeometryError> {
        const GRAD_EPS: f64 = 1e-8;
        let mut x = x0.to_vec();
        let (mut value, mut grad) = self.eval(&x);
        let mut trial = vec![0.0; x.len()];
        for _ in 0..max_iter {
            if value.abs() <= tol {
                // One extra step usually lands on the rounding floor.
                self.polish(&mut x, &mut value, &mut grad, &mut trial);
                return Ok(x);
            }
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2.sqrt() < GRAD_EPS {
                return Err(GeometryError::GradientTooSmall);
            }
            let step = value / g2;
            let mut t = 1.0;
            loop {
                for ((ti, xi), gi) in trial.iter_mut().zip(&x).zip(&grad) {
                    *ti = xi - t * step * gi;
                }
                let (v, g) = self.eval(&trial);
                if v.abs() < value.abs() || t < 1e-6 {
                    x.copy_from_slice(&trial);
                    value = v;
                    grad = g;
                    break;
                }
                t *= 0.5;
            }
        }
        if value.abs() <= tol {
            Ok(x)
        } else {
            Err(GeometryError::NoConvergence { residual: value.abs() })
        }
    }

    fn polish(&self, x: &mut [f64], value: &mut f64, grad: &mut Vec<f64>, trial: &mut [f64]) {
        for _ in 0..2 {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 == 0.0 || *value == 0.0 {
                return;
            }
            let step = *value / g2;
            for ((ti, xi), gi) in trial.iter_mut().zip(x.iter()).zip(grad.iter()) {
                *ti = xi - step * gi;
            }
            let (v, g) = self.eval(trial);
            if v.abs() >= value.abs() {
                return;
            }
            x.copy_from_slice(trial);
            *value = v;
            *grad = g;
        }
    }

    /// Default projection tolerance: `1e-12` relative to the largest coefficient.
    pub fn default_tol(&self) -> f64 {
        1e-12 * self.coeff_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_values() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let (v, g) = s.eval(&[1.0, 0.0, 0.0]);
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![2.0, 0.0, 0.0]);
        let (v, g) = s.eval(&[2.0, 0.0, 0.0]);
        assert_eq!(v, 3.0);
        assert_eq!(g, vec![4.0, 0.0, 0.0]);
        assert_eq!(s.degree(), 2);
    }

    #[test]
    fn cyclide_axis_point_is_on_surface() {
        let s = AlgebraicSurface::cyclide(2.0, 1.9, 1.0);
        assert_eq!(s.degree(), 4);
        let p = AlgebraicSurface::cyclide_axis_point(2.0, 1.9, 1.0).unwrap();
        assert!((p[1] - 0.61f64.sqrt()).abs() < 1e-15);
        assert!(s.value(&p).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = AlgebraicSurface::cyclide(2.0, 1.9, 1.0);
        let x = [0.3, -1.2, 0.7];
        let (_, g) = s.eval(&x);
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (s.value(&xp) - s.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn projection() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        let p = s.project(&[2.0, 0.0, 0.0], 1e-12, 50).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(matches!(
            s.project(&[0.0, 0.0, 0.0], 1e-12, 50),
            Err(GeometryError::GradientTooSmall)
        ));

        let c = AlgebraicSurface::cyclide(2.0, 1.9, 1.0);
        let xc = AlgebraicSurface::cyclide_axis_point(2.0, 1.9, 1.0).unwrap();
        let p = c.project(&[xc[0], xc[1] + 0.05, xc[2]], c.default_tol(), 50).unwrap();
        assert!(c.value(&p).abs() <= 1e-12);
    }

    #[test]
    fn no_convergence_reported() {
        let s = AlgebraicSurface::sphere(3, 1.0);
        assert!(matches!(
            s.project(&[50.0, 1.0, 0.0], 1e-14, 2),
            Err(GeometryError::NoConvergence { .. })
        ));
    }

    #[test]
    fn zero_polynomial_rejected() {
        let bbox = Aabb::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        assert!(matches!(
            AlgebraicSurface::new(Polynomial::zero(2), bbox),
            Err(GeometryError::ZeroPolynomial)
        ));
    }

    #[test]
    fn torus_contains_outer_equator() {
        let t = AlgebraicSurface::torus(1.0, 1.0 / 3.0);
        assert!(t.value(&[4.0 / 3.0, 0.0, 0.0]).abs() < 1e-14);
        assert!(t.value(&[0.0, 2.0 / 3.0, 0.0]).abs() < 1e-14);
        assert_eq!(t.degree(), 4);
    }
}
