//! Linear algebra over real and complex spaces with indefinite inner products.
//!
//! Negative-signature slots are always the leading coordinates: `R^d_i` has
//! metric `-x_1 y_1 - ... - x_i y_i + x_{i+1} y_{i+1} + ... + x_d y_d`, and
//! `C^{n+2}_2` carries the Hermitian form whose first two slots are negative.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{GeomError, Result};

/// Absolute tolerance used for algebraic identities unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Real coordinate vector living in `R^d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndefVector {
    coords: Vec<f64>,
    index: usize,
}

impl IndefVector {
    pub fn new(coords: Vec<f64>, index: usize) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeomError::Contract(
                "IndefVector needs dimension >= 1".into(),
            ));
        }
        if index > coords.len() {
            return Err(GeomError::Contract(format!(
                "index {} exceeds dimension {}",
                index,
                coords.len()
            )));
        }
        Ok(Self { coords, index })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The indefinite squared norm `⟨x, x⟩_i`.
    pub fn norm_sq(&self) -> f64 {
        signed_dot(self.index, &self.coords, &self.coords)
    }
}

impl Index<usize> for IndefVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// `⟨x, y⟩_i` on raw slices. Callers guarantee equal lengths.
pub fn signed_dot(index: usize, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| if k < index { -a * b } else { a * b })
        .sum()
}

/// The pseudo-Euclidean inner product of two vectors of the same space.
pub fn inner_real(x: &IndefVector, y: &IndefVector) -> Result<f64> {
    if x.dim() != y.dim() || x.index != y.index {
        return Err(GeomError::Contract(format!(
            "inner_real on R^{}_{} and R^{}_{}",
            x.dim(),
            x.index,
            y.dim(),
            y.index
        )));
    }
    Ok(signed_dot(x.index, &x.coords, &y.coords))
}

/// Gram matrix `T^T η T` of the columns of `t` under the metric of index `index`.
pub fn gram(index: usize, t: &DMatrix<f64>) -> DMatrix<f64> {
    let mut eta_t = t.clone();
    for r in 0..index.min(t.nrows()) {
        eta_t.row_mut(r).neg_mut();
    }
    t.transpose() * eta_t
}

/// Complex coordinate vector in `C^{n+2}_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<Complex64>);

/// Number of negative slots of the Hermitian form on `C^{n+2}_2`.
pub const COMPLEX_INDEX: usize = 2;

impl CVector {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(GeomError::Contract(format!(
                "CVector needs length >= 3, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    /// `re + i·im`.
    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(GeomError::Contract(
                "real and imaginary parts differ in length".into(),
            ));
        }
        Self::new(
            re.iter()
                .zip(im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
        )
    }

    /// Decode a real vector laid out as `[re_0..re_m, im_0..im_m]`.
    pub fn from_stacked(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(GeomError::Contract(
                "stacked complex vector has odd length".into(),
            ));
        }
        let m = v.len() / 2;
        Self::from_parts(&v[..m], &v[m..])
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.im).collect()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|c| c.conj()).collect())
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        Self(self.0.iter().map(|c| Complex64::new(-c.im, c.re)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    /// Euclidean norm on the underlying `R^{2n+4}`.
    pub fn norm_euclid(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Euclidean Hermitian pairing `Σ z_k conj(w_k)`.
    pub fn dot_euclid(&self, w: &CVector) -> Complex64 {
        self.0.iter().zip(&w.0).map(|(a, b)| a * b.conj()).sum()
    }

    /// Realification `(re, im)` as an [`IndefVector`] of `R^{2n+4}_4`, with the
    /// four negative slots moved to the front.
    pub fn realify(&self) -> IndefVector {
        let mut coords = Vec::with_capacity(2 * self.len());
        for c in &self.0[..COMPLEX_INDEX] {
            coords.push(c.re);
            coords.push(c.im);
        }
        for c in &self.0[COMPLEX_INDEX..] {
            coords.push(c.re);
            coords.push(c.im);
        }
        IndefVector {
            coords,
            index: 2 * COMPLEX_INDEX,
        }
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for CVector {
    type Output = CVector;
    fn add(self, rhs: CVector) -> CVector {
        &self + &rhs
    }
}

impl Sub for CVector {
    type Output = CVector;
    fn sub(self, rhs: CVector) -> CVector {
        &self - &rhs
    }
}

impl Neg for CVector {
    type Output = CVector;
    fn neg(self) -> CVector {
        CVector(self.0.into_iter().map(|c| -c).collect())
    }
}

impl Mul<f64> for &CVector {
    type Output = CVector;
    fn mul(self, s: f64) -> CVector {
        self.scale_re(s)
    }
}

impl Mul<Complex64> for &CVector {
    type Output = CVector;
    fn mul(self, s: Complex64) -> CVector {
        self.scale(s)
    }
}

/// Unchecked `h(z, w) = -z_0 w̄_0 - z_1 w̄_1 + Σ_{j≥2} z_j w̄_j`.
pub fn herm(z: &CVector, w: &CVector) -> Complex64 {
    debug_assert_eq!(z.len(), w.len());
    z.0.iter()
        .zip(&w.0)
        .enumerate()
        .map(|(k, (a, b))| {
            let t = a * b.conj();
            if k < COMPLEX_INDEX {
                -t
            } else {
                t
            }
        })
        .sum()
}

/// The full Hermitian form of `C^{n+2}_2`; its real part is `⟨⟨z, w⟩⟩_2`.
pub fn hermitian_form(z: &CVector, w: &CVector) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(GeomError::Contract(format!(
            "hermitian_form on lengths {} and {}",
            z.len(),
            w.len()
        )));
    }
    Ok(herm(z, w))
}

/// Real part of the Hermitian form, the metric `⟨⟨·,·⟩⟩_2`.
pub fn herm_re(z: &CVector, w: &CVector) -> f64 {
    herm(z, w).re
}

/// `q(z) = -z_0² - z_1² + Σ_{j≥2} z_j²`.
pub fn quadric_residual(z: &CVector) -> Complex64 {
    z.0.iter()
        .enumerate()
        .map(|(k, c)| if k < COMPLEX_INDEX { -c * c } else { c * c })
        .sum()
}

/// A metric `G` on a tangent space together with a `G`-self-adjoint operator `S`.
#[derive(Debug, Clone)]
pub struct SymPair {
    g: DMatrix<f64>,
    s: DMatrix<f64>,
}

impl SymPair {
    pub fn new(g: DMatrix<f64>, s: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !g.is_square() || g.shape() != s.shape() {
            return Err(GeomError::Contract(
                "SymPair needs square matrices of equal shape".into(),
            ));
        }
        let asym = (&g - g.transpose()).amax();
        if asym > tol {
            return Err(GeomError::Contract(format!(
                "G is not symmetric ({asym:e})"
            )));
        }
        let gs = &g * &s;
        let asym = (&gs - gs.transpose()).amax();
        if asym > tol {
            return Err(GeomError::Contract(format!(
                "S is not G-self-adjoint ({asym:e})"
            )));
        }
        Ok(Self { g, s })
    }

    /// Build from a metric and the symmetric bilinear form `Π = G S`.
    pub fn from_forms(g: DMatrix<f64>, pi: &DMatrix<f64>) -> Result<Self> {
        let g = symmetrize(&g);
        let pi = symmetrize(pi);
        let ginv = g
            .clone()
            .cholesky()
            .ok_or_else(|| GeomError::Signature("metric has no Cholesky factor".into()))?
            .inverse();
        let s = ginv * pi;
        Ok(Self { g, s })
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a `G`-self-adjoint operator.
#[derive(Debug, Clone)]
pub struct GEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Columns are `G`-orthonormal eigenvectors, matching `values`.
    pub vectors: DMatrix<f64>,
}

/// Solve `S v = λ v` with `v` orthonormal for the positive definite metric `G`.
///
/// Uses the Cholesky factor `G = L Lᵀ` to reduce to the symmetric problem
/// `L⁻¹ (G S) L⁻ᵀ`.
pub fn g_selfadjoint_eigen(pair: &SymPair) -> Result<GEigen> {
    let n = pair.g.nrows();
    let chol = pair
        .g
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::Signature("metric is not positive definite".into()))?;
    let l = chol.l();
    let diag_min = (0..n).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    let scale = pair.g.amax().max(1.0);
    if diag_min * diag_min <= DEFAULT_TOL * scale {
        return Err(GeomError::Signature(format!(
            "metric is numerically degenerate (pivot {diag_min:e})"
        )));
    }
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Signature("singular Cholesky factor".into()))?;
    let k = symmetrize(&(&pair.g * &pair.s));
    let m = symmetrize(&(&linv * k * linv.transpose()));
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let q = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = linv.transpose() * q;
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(GEigen { values, vectors })
}
