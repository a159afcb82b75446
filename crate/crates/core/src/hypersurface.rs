//! Spacelike hypersurfaces of anti-de Sitter space `H^{n+1}_1(-1) ⊂ R^{n+2}_2`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diff::{hessian, tangent, DiffConfig, Domain, SmoothMap};
use crate::error::{GeomError, Result};
use crate::indefinite::{g_selfadjoint_eigen, gram, signed_dot, symmetrize, IndefVector, SymPair};

/// Metric index of the ambient space `R^{n+2}_2`.
pub const AMBIENT_INDEX: usize = 2;

/// Finite-difference schemes used by the geometric layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumConfig {
    /// First derivatives of charts and lifts.
    pub first: DiffConfig,
    /// Second derivatives, and derivatives of derived fields.
    pub second: DiffConfig,
}

impl NumConfig {
    /// Both schemes at the first-derivative step, for quantities that are
    /// differentiated again downstream.
    pub fn fine(&self) -> Self {
        Self {
            first: self.first,
            second: self.first,
        }
    }
}

impl Default for NumConfig {
    fn default() -> Self {
        Self {
            first: DiffConfig::with_step(1e-3),
            second: DiffConfig::with_step(5e-3),
        }
    }
}

/// Which of the two unit normals to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Orientation::Positive => "positive",
            Orientation::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone)]
enum NormalSource {
    /// Signed generalized cross product of `a, ∂_1 a, …, ∂_n a`.
    Cofactor(Orientation),
    /// A normal field supplied alongside the chart.
    Explicit(SmoothMap),
}

/// A chart `a: U ⊂ R^n → R^{n+2}_2` landing in `H^{n+1}_1(-1)`.
#[derive(Debug, Clone)]
pub struct HypersurfacePatch {
    chart: SmoothMap,
    sample: Domain,
    normal: NormalSource,
}

impl HypersurfacePatch {
    /// `sample` is the box grid points are drawn from; it must sit inside the
    /// chart's domain so stencils have room.
    pub fn new(chart: SmoothMap, sample: Domain, orientation: Orientation) -> Result<Self> {
        Self::validate_shapes(&chart, &sample)?;
        Ok(Self {
            chart,
            sample,
            normal: NormalSource::Cofactor(orientation),
        })
    }

    pub fn with_normal(chart: SmoothMap, sample: Domain, normal: SmoothMap) -> Result<Self> {
        Self::validate_shapes(&chart, &sample)?;
        if normal.out_dim() != chart.out_dim() || normal.in_dim() != chart.in_dim() {
            return Err(GeomError::Contract(
                "normal field does not match the chart".into(),
            ));
        }
        Ok(Self {
            chart,
            sample,
            normal: NormalSource::Explicit(normal),
        })
    }

    fn validate_shapes(chart: &SmoothMap, sample: &Domain) -> Result<()> {
        if chart.out_dim() != chart.in_dim() + 2 {
            return Err(GeomError::Contract(format!(
                "chart maps R^{} to R^{}, expected R^{}",
                chart.in_dim(),
                chart.out_dim(),
                chart.in_dim() + 2
            )));
        }
        if sample.dim() != chart.in_dim() {
            return Err(GeomError::Contract(
                "sample box has the wrong dimension".into(),
            ));
        }
        let dom = chart.domain();
        let inside = (0..sample.dim())
            .all(|i| dom.lo()[i] <= sample.lo()[i] && sample.hi()[i] <= dom.hi()[i]);
        if !inside {
            return Err(GeomError::Contract(
                "sample box leaves the chart domain".into(),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.chart.in_dim()
    }

    pub fn chart(&self) -> &SmoothMap {
        &self.chart
    }

    pub fn sample(&self) -> &Domain {
        &self.sample
    }

    /// `None` when the normal is supplied explicitly.
    pub fn orientation(&self) -> Option<Orientation> {
        match &self.normal {
            NormalSource::Cofactor(o) => Some(*o),
            NormalSource::Explicit(_) => None,
        }
    }

    /// Same chart with the opposite normal.
    pub fn flipped(&self) -> Self {
        let normal = match &self.normal {
            NormalSource::Cofactor(o) => NormalSource::Cofactor(o.flipped()),
            NormalSource::Explicit(b) => {
                let f = b.eval_fn();
                NormalSource::Explicit(SmoothMap::from_fn(
                    b.domain().clone(),
                    b.out_dim(),
                    move |p| Ok(f(p)?.into_iter().map(|x| -x).collect()),
                ))
            }
        };
        Self {
            normal,
            ..self.clone()
        }
    }

    pub fn with_sample(&self, sample: Domain) -> Result<Self> {
        Self::validate_shapes(&self.chart, &sample)?;
        Ok(Self {
            sample,
            ..self.clone()
        })
    }

    pub fn point(&self, p: &[f64]) -> Result<IndefVector> {
        IndefVector::new(self.chart.eval(p)?, AMBIENT_INDEX)
    }

    /// `a(p)` and the `(n+2) × n` matrix of `∂_i a`.
    pub fn frame(&self, p: &[f64], cfg: &NumConfig) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let a = self.chart.eval(p)?;
        let da = tangent(&self.chart, p, &cfg.first)?;
        Ok((a, da))
    }

    /// The unit normal as a map, suitable for differentiation.
    pub fn normal_map(&self, cfg: &NumConfig) -> SmoothMap {
        match &self.normal {
            NormalSource::Explicit(b) => b.clone(),
            NormalSource::Cofactor(_) => {
                let (me, me2) = (self.clone(), self.clone());
                let cfg = *cfg;
                let eval = Arc::new(move |p: &[f64]| Ok(me.unit_normal(p, &cfg)?.into_coords()));
                let jet = Arc::new(move |p: &[f64]| {
                    let sd = shape_operator(&me2, p, &cfg.fine())?;
                    let db = sd.normal_derivative();
                    Ok((sd.normal.into_coords(), db))
                });
                SmoothMap::with_jacobian(
                    self.chart.domain().clone(),
                    self.chart.out_dim(),
                    eval,
                    jet,
                )
            }
        }
    }

    /// Largest `|⟨a,a⟩ + 1|` and smallest induced-metric eigenvalue over a grid.
    pub fn check_invariants(&self, m: usize, cfg: &NumConfig) -> Result<(f64, f64)> {
        let mut worst_norm: f64 = 0.0;
        let mut min_eig = f64::INFINITY;
        for p in self.sample.grid(m) {
            let a = self.chart.eval(&p)?;
            worst_norm = worst_norm.max((signed_dot(AMBIENT_INDEX, &a, &a) + 1.0).abs());
            let g = induced_metric(self, &p, cfg)?;
            let e = SymmetricEigen::new(g).eigenvalues.min();
            min_eig = min_eig.min(e);
        }
        if worst_norm > 1e-8 {
            return Err(GeomError::Contract(format!(
                "chart leaves H^(n+1)_1(-1): |<a,a>+1| = {worst_norm:e}"
            )));
        }
        Ok((worst_norm, min_eig))
    }
}

/// Eigenvalue floor below which an induced metric is treated as degenerate.
pub const SPACELIKE_TOL: f64 = 1e-10;

fn metric_from_frame(da: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = symmetrize(&gram(AMBIENT_INDEX, da));
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    let min = e.min();
    if !(min > SPACELIKE_TOL * e.amax().max(1.0)) {
        return Err(GeomError::Signature(format!(
            "induced metric has eigenvalue {min:e}"
        )));
    }
    Ok(g)
}

/// First fundamental form `G_ij = ⟨∂_i a, ∂_j a⟩_2`.
pub fn induced_metric(
    patch: &HypersurfacePatch,
    p: &[f64],
    cfg: &NumConfig,
) -> Result<DMatrix<f64>> {
    let (_, da) = patch.frame(p, cfg)?;
    metric_from_frame(&da)
}

/// Vector orthogonal to `a` and every `∂_i a`, from signed maximal minors.
fn cofactor_normal(a: &[f64], da: &DMatrix<f64>) -> DVector<f64> {
    let d = a.len();
    let n = d - 2;
    // Rows of η·[a, ∂a]ᵀ, so that M c = 0 means ⟨c, ·⟩_2 = 0.
    let mut m = DMatrix::zeros(n + 1, d);
    for k in 0..d {
        let s = if k < AMBIENT_INDEX { -1.0 } else { 1.0 };
        m[(0, k)] = s * a[k];
        for i in 0..n {
            m[(i + 1, k)] = s * da[(k, i)];
        }
    }
    DVector::from_fn(d, |k, _| {
        let minor = m.clone().remove_column(k).determinant();
        if (n + 1 + k).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    })
}

/// Unit normal `b` tangent to anti-de Sitter space, `⟨b,b⟩_2 = -1`.
pub fn unit_normal(patch: &HypersurfacePatch, p: &[f64], cfg: &NumConfig) -> Result<IndefVector> {
    patch.unit_normal(p, cfg)
}

impl HypersurfacePatch {
    fn unit_normal(&self, p: &[f64], cfg: &NumConfig) -> Result<IndefVector> {
        match &self.normal {
            NormalSource::Explicit(b) => IndefVector::new(b.eval(p)?, AMBIENT_INDEX),
            NormalSource::Cofactor(o) => {
                let (a, da) = self.frame(p, cfg)?;
                metric_from_frame(&da)?;
                normal_from_frame(&a, &da, *o)
            }
        }
    }
}

fn normal_from_frame(a: &[f64], da: &DMatrix<f64>, o: Orientation) -> Result<IndefVector> {
    let c = cofactor_normal(a, da);
    let scale = c.amax();
    if scale == 0.0 {
        return Err(GeomError::NormalDegenerate(0.0));
    }
    let c = c / scale;
    let nn = signed_dot(AMBIENT_INDEX, c.as_slice(), c.as_slice());
    if !(nn < -1e-12) {
        return Err(GeomError::NormalDegenerate(nn));
    }
    let f = o.sign() / (-nn).sqrt();
    IndefVector::new(c.iter().map(|x| x * f).collect(), AMBIENT_INDEX)
}

/// Extrinsic data of a patch at one point.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub point: Vec<f64>,
    pub a: Vec<f64>,
    pub da: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub normal: IndefVector,
    /// Second fundamental form `Π_ij = ⟨∂_i∂_j a, b⟩_2`.
    pub second: DMatrix<f64>,
    /// `S = G⁻¹ Π`.
    pub shape: DMatrix<f64>,
    /// Ascending principal curvatures.
    pub lambdas: Vec<f64>,
    /// `G`-orthonormal principal directions as columns, matching `lambdas`.
    pub directions: DMatrix<f64>,
}

impl ShapeData {
    /// `‖GS − (GS)ᵀ‖_max`.
    pub fn self_adjoint_residual(&self) -> f64 {
        let gs = &self.metric * &self.shape;
        (&gs - gs.transpose()).amax()
    }

    /// `∂_i b = −Σ_k S_ki ∂_k a`, as an `(n+2) × n` matrix.
    pub fn normal_derivative(&self) -> DMatrix<f64> {
        -(&self.da * &self.shape)
    }

    /// Largest violation among `⟨b,b⟩ = -1`, `⟨b,a⟩ = 0`, `⟨b,∂_i a⟩ = 0`.
    pub fn normal_residual(&self) -> f64 {
        let b = self.normal.coords();
        let mut r = (signed_dot(AMBIENT_INDEX, b, b) + 1.0).abs();
        r = r.max(signed_dot(AMBIENT_INDEX, b, &self.a).abs());
        for i in 0..self.da.ncols() {
            let col: Vec<f64> = self.da.column(i).iter().copied().collect();
            r = r.max(signed_dot(AMBIENT_INDEX, b, &col).abs());
        }
        r
    }
}

/// Shape operator and principal curvatures at `p`.
pub fn shape_operator(patch: &HypersurfacePatch, p: &[f64], cfg: &NumConfig) -> Result<ShapeData> {
    let (a, da) = patch.frame(p, cfg)?;
    let metric = metric_from_frame(&da)?;
    let normal = patch.unit_normal(p, cfg)?;
    let hess = hessian(patch.chart(), p, &cfg.second)?.symmetrized();
    let n = patch.n();
    let b = normal.coords();
    let second = DMatrix::from_fn(n, n, |i, j| signed_dot(AMBIENT_INDEX, hess.second(i, j), b));
    let pair = SymPair::from_forms(metric.clone(), &second)?;
    let eig = g_selfadjoint_eigen(&pair)?;
    Ok(ShapeData {
        point: p.to_vec(),
        a,
        da,
        metric: pair.g().clone(),
        normal,
        second,
        shape: pair.s().clone(),
        lambdas: eig.values,
        directions: eig.vectors,
    })
}

/// The parallel hypersurface `cos t · a + sin t · b` with normal
/// `-sin t · a + cos t · b`.
pub fn parallel_patch(
    patch: &HypersurfacePatch,
    t: f64,
    cfg: &NumConfig,
) -> Result<HypersurfacePatch> {
    let a = patch.chart().eval_fn();
    let b = patch.normal_map(cfg).eval_fn();
    let (c, s) = (t.cos(), t.sin());
    let dom = patch.chart().domain().clone();
    let d = patch.chart().out_dim();
    let (a1, b1) = (Arc::clone(&a), Arc::clone(&b));
    let chart = SmoothMap::from_fn(dom.clone(), d, move |p| {
        let (av, bv) = (a1(p)?, b1(p)?);
        Ok(av.iter().zip(&bv).map(|(x, y)| c * x + s * y).collect())
    });
    let normal = SmoothMap::from_fn(dom, d, move |p| {
        let (av, bv) = (a(p)?, b(p)?);
        Ok(av.iter().zip(&bv).map(|(x, y)| -s * x + c * y).collect())
    });
    let out = HypersurfacePatch::with_normal(chart, patch.sample().clone(), normal)?;
    induced_metric(&out, &out.sample().center(), cfg)?;
    Ok(out)
}
