//! The complex hyperbolic quadric, carried by unit lifts in `C^{n+2}_2`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{GeomError, Result};
use crate::indefinite::{herm, herm_re, quadric_residual, CVector};

/// Tolerance on the unit-lift conditions.
pub const LIFT_TOL: f64 = 1e-8;
/// Euclidean fiber distance below which two lifts name the same point.
pub const SAME_POINT_TOL: f64 = 1e-6;

/// A point `[z]` given by a lift with `h(z,z) = -1` and `q(z) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricPoint {
    z: CVector,
}

impl QuadricPoint {
    pub fn new(z: CVector) -> Result<Self> {
        let r = lift_residual(&z);
        if r > LIFT_TOL {
            return Err(GeomError::InvalidLift(format!("lift residual {r:e}")));
        }
        Ok(Self { z })
    }

    /// `(a + i b)/√2` for real vectors `a, b`.
    pub fn from_real_pair(a: &[f64], b: &[f64]) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re: Vec<f64> = a.iter().map(|x| x * s).collect();
        let im: Vec<f64> = b.iter().map(|x| x * s).collect();
        Self::new(CVector::from_parts(&re, &im)?)
    }

    pub fn lift(&self) -> &CVector {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.len() - 2
    }

    /// Another lift of the same point, `e^{it} z`.
    pub fn rephased(&self, t: f64) -> Self {
        Self {
            z: self.z.scale(Complex64::from_polar(1.0, t)),
        }
    }
}

/// Largest violation of `h(z,z) = -1`, `q(z) = 0`.
pub fn lift_residual(z: &CVector) -> f64 {
    let h = herm(z, z);
    (h.re + 1.0)
        .abs()
        .max(h.im.abs())
        .max(quadric_residual(z).norm())
}

/// Outcome of a fiber comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamePoint {
    pub equal: bool,
    /// `min_t ‖w − e^{it} z‖`.
    pub residual: f64,
    /// The optimal `t`.
    pub phase: f64,
}

/// Whether two lifts lie on the same Hopf fiber.
pub fn same_point(z: &QuadricPoint, w: &QuadricPoint) -> SamePoint {
    same_point_tol(z, w, SAME_POINT_TOL)
}

pub fn same_point_tol(z: &QuadricPoint, w: &QuadricPoint, tol: f64) -> SamePoint {
    if z.z.len() != w.z.len() {
        return SamePoint {
            equal: false,
            residual: f64::INFINITY,
            phase: 0.0,
        };
    }
    let pair = w.z.dot_euclid(&z.z);
    let nz = z.z.norm_euclid();
    let nw = w.z.norm_euclid();
    let residual = (nw * nw + nz * nz - 2.0 * pair.norm()).max(0.0).sqrt();
    SamePoint {
        equal: residual <= tol,
        residual,
        phase: pair.arg(),
    }
}

/// A horizontal tangent vector at a lift.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalVector {
    base: QuadricPoint,
    w: CVector,
}

impl HorizontalVector {
    pub fn base(&self) -> &QuadricPoint {
        &self.base
    }

    pub fn w(&self) -> &CVector {
        &self.w
    }

    pub fn zero(base: &QuadricPoint) -> Self {
        Self {
            base: base.clone(),
            w: CVector::zeros(base.z.len()),
        }
    }

    /// Largest `|Re h(w, v)|` over `v ∈ {z, iz, z̄, iz̄}`.
    pub fn horizontality_residual(&self) -> f64 {
        vertical_residual(&self.base, &self.w)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_base(self, other)?;
        Ok(Self {
            base: self.base.clone(),
            w: &self.w + &other.w,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            w: self.w.scale_re(s),
        }
    }

    pub fn norm(&self) -> f64 {
        herm_re(&self.w, &self.w).max(0.0).sqrt()
    }

    /// Linear combination `Σ c_k X_k` over a common base.
    pub fn combine(terms: &[(f64, &HorizontalVector)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| GeomError::Contract("empty combination".into()))?
            .1;
        let mut w = CVector::zeros(first.w.len());
        for (c, x) in terms {
            same_base(first, x)?;
            w = &w + &x.w.scale_re(*c);
        }
        Ok(Self {
            base: first.base.clone(),
            w,
        })
    }
}

fn same_base(x: &HorizontalVector, y: &HorizontalVector) -> Result<()> {
    if x.base != y.base {
        return Err(GeomError::Contract(
            "horizontal vectors live over different lifts".into(),
        ));
    }
    Ok(())
}

fn vertical_basis(z: &CVector) -> [CVector; 4] {
    let zb = z.conj();
    [z.clone(), z.mul_i(), zb.mul_i(), zb]
}

/// Largest `|Re h(w, v)|` over `v ∈ {z, iz, z̄, iz̄}` for a raw vector `w`.
pub fn vertical_residual(z: &QuadricPoint, w: &CVector) -> f64 {
    vertical_basis(&z.z)
        .iter()
        .map(|v| herm_re(w, v).abs())
        .fold(0.0, f64::max)
}

/// Remove the components along `z, iz, z̄, iz̄`.
pub fn horizontal_project(z: &QuadricPoint, w: &CVector) -> HorizontalVector {
    HorizontalVector {
        base: z.clone(),
        w: project_raw(&z.z, w),
    }
}

/// Projection onto the orthogonal complement of `span_R{z, iz, z̄, iz̄}`.
pub(crate) fn project_raw(z: &CVector, w: &CVector) -> CVector {
    let basis = vertical_basis(z);
    let gram = Matrix4::from_fn(|r, c| herm_re(&basis[r], &basis[c]));
    let rhs = Vector4::from_fn(|r, _| herm_re(w, &basis[r]));
    let coef = gram.lu().solve(&rhs).unwrap_or_else(|| -rhs);
    let mut out = w.clone();
    for (k, v) in basis.iter().enumerate() {
        out = &out - &v.scale_re(coef[k]);
    }
    out
}

/// `g(X, Y) = Re h(X, Y)`.
pub fn quadric_metric(x: &HorizontalVector, y: &HorizontalVector) -> Result<f64> {
    same_base(x, y)?;
    Ok(herm_re(&x.w, &y.w))
}

/// The complex structure, multiplication by `i`.
pub fn apply_j(x: &HorizontalVector) -> HorizontalVector {
    HorizontalVector {
        base: x.base.clone(),
        w: x.w.mul_i(),
    }
}

/// An almost product structure on the quadric at one lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductStructure {
    /// `A w = −w̄`, projected to the horizontal space.
    CanonicalFromLift,
    /// `cos φ · A₀ + sin φ · J A₀` with `A₀` the canonical structure.
    Rotated { phase: f64 },
}

impl ProductStructure {
    pub fn phase(&self) -> f64 {
        match self {
            ProductStructure::CanonicalFromLift => 0.0,
            ProductStructure::Rotated { phase } => *phase,
        }
    }

    /// Compose with a further rotation by `dphi`.
    pub fn rotated(&self, dphi: f64) -> Self {
        ProductStructure::Rotated {
            phase: self.phase() + dphi,
        }
    }
}

pub(crate) fn apply_a_raw(p: ProductStructure, z: &CVector, w: &CVector) -> CVector {
    let a0 = project_raw(z, &(-w.conj()));
    match p {
        ProductStructure::CanonicalFromLift => a0,
        ProductStructure::Rotated { phase } => {
            &a0.scale_re(phase.cos()) + &a0.mul_i().scale_re(phase.sin())
        }
    }
}

pub fn apply_a(p: ProductStructure, x: &HorizontalVector) -> HorizontalVector {
    HorizontalVector {
        base: x.base.clone(),
        w: apply_a_raw(p, &x.base.z, &x.w),
    }
}

/// Riemann curvature `R(X,Y)Z` of the quadric.
pub fn curvature_qstar(
    p: ProductStructure,
    x: &HorizontalVector,
    y: &HorizontalVector,
    z: &HorizontalVector,
) -> Result<HorizontalVector> {
    same_base(x, y)?;
    same_base(x, z)?;
    let g = |u: &HorizontalVector, v: &HorizontalVector| herm_re(&u.w, &v.w);
    let (jx, jy, jz) = (apply_j(x), apply_j(y), apply_j(z));
    let (ax, ay) = (apply_a(p, x), apply_a(p, y));
    let (jax, jay) = (apply_j(&ax), apply_j(&ay));
    HorizontalVector::combine(&[
        (-g(y, z), x),
        (g(x, z), y),
        (-g(x, &jz), &jy),
        (g(y, &jz), &jx),
        (-2.0 * g(x, &jy), &jz),
        (-g(&ay, z), &ax),
        (g(&ax, z), &ay),
        (-g(&jay, z), &jax),
        (g(&jax, z), &jay),
    ])
}

/// `g(R(X,Y)Y, X) / (g(X,X) g(Y,Y) − g(X,Y)²)`.
pub fn sectional_curvature_qstar(
    p: ProductStructure,
    x: &HorizontalVector,
    y: &HorizontalVector,
) -> Result<f64> {
    let r = curvature_qstar(p, x, y, y)?;
    let num = quadric_metric(&r, x)?;
    let den = quadric_metric(x, x)? * quadric_metric(y, y)? - quadric_metric(x, y)?.powi(2);
    if den.abs() < 1e-14 {
        return Err(GeomError::Contract(
            "sectional curvature of a degenerate plane".into(),
        ));
    }
    Ok(num / den)
}
