//! Ambient monomial bases, centred/scaled evaluation and Vandermonde
//! assembly, plus the Hilbert-function dimension of a hypersurface.

use nalgebra::DMatrix;

use crate::geometry::PointSet;

/// `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `dim P_m(R^N) = C(N + m, N)`.
pub fn basis_size(n_ambient: usize, degree: usize) -> usize {
    binomial(n_ambient + degree, n_ambient)
}

/// Dimension of degree-`m` polynomials restricted to an irreducible
/// degree-`k` hypersurface in `R^N`: `C(N+m,N) - C(N+m-k,N)` once `m >= k`.
///
/// Irreducibility of the defining polynomial is the caller's responsibility.
pub fn hilbert_dim_hypersurface(n_ambient: usize, k: usize, m: usize) -> usize {
    if m >= k {
        basis_size(n_ambient, m) - basis_size(n_ambient, m - k)
    } else {
        basis_size(n_ambient, m)
    }
}

/// Monomials of total degree `<= m` in `N` variables, graded
/// lexicographically with the constant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    n_ambient: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(n_ambient: usize, degree: usize) -> Self {
        assert!(n_ambient >= 1, "ambient dimension must be positive");
        let mut exponents = Vec::with_capacity(basis_size(n_ambient, degree));
        for d in 0..=degree {
            let mut current = vec![0u32; n_ambient];
            push_degree(&mut exponents, &mut current, 0, d as u32);
        }
        Self {
            n_ambient,
            degree,
            exponents,
        }
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Monomial values at `y`, written into `out` (length `M`).
    pub fn eval_into(&self, y: &[f64], powers: &mut Vec<f64>, out: &mut [f64]) {
        let stride = self.degree + 1;
        powers.clear();
        powers.resize(self.n_ambient * stride, 1.0);
        for (a, &v) in y.iter().enumerate() {
            for k in 1..stride {
                powers[a * stride + k] = powers[a * stride + k - 1] * v;
            }
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = e
                .iter()
                .enumerate()
                .fold(1.0, |acc, (a, &k)| acc * powers[a * stride + k as usize]);
        }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(y, &mut Vec::new(), &mut out);
        out
    }
}

/// Lexicographic (first variable highest) enumeration of exponents of total degree `d`.
fn push_degree(out: &mut Vec<Vec<u32>>, current: &mut [u32], var: usize, remaining: u32) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(current.to_vec());
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k;
        push_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

/// The basis `p_j((x - center) / scale)`.
#[derive(Debug, Clone)]
pub struct ScaledBasis<'a> {
    base: &'a MonomialBasis,
    center: &'a [f64],
    scale: f64,
}

impl<'a> ScaledBasis<'a> {
    pub fn new(base: &'a MonomialBasis, center: &'a [f64], scale: f64) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        assert_eq!(center.len(), base.n_ambient());
        Self { base, center, scale }
    }

    pub fn base(&self) -> &MonomialBasis {
        self.base
    }

    pub fn center(&self) -> &[f64] {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn local(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), ci) in y.iter_mut().zip(x).zip(self.center) {
            *yi = (xi - ci) / self.scale;
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.local(x, &mut y);
        self.base.eval(&y)
    }

    /// Rows are `eval(points[i])`.
    pub fn vandermonde(&self, points: &PointSet) -> DMatrix<f64> {
        self.vandermonde_rows(points.iter())
    }

    pub fn vandermonde_rows<'p, I>(&self, rows: I) -> DMatrix<f64>
    where
        I: ExactSizeIterator<Item = &'p [f64]>,
    {
        let m = self.base.len();
        let mut out = DMatrix::zeros(rows.len(), m);
        let mut y = vec![0.0; self.base.n_ambient()];
        let mut powers = Vec::new();
        let mut row = vec![0.0; m];
        for (i, x) in rows.enumerate() {
            self.local(x, &mut y);
            self.base.eval_into(&y, &mut powers, &mut row);
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        out
    }
}
