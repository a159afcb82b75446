//! Central finite differences over boxes in `R^k`, with an optional exact
//! first-derivative path for maps that can be evaluated on dual numbers.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::dual::{Dual, Scalar};
use crate::error::{GeomError, Result};

/// Axis-aligned closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(GeomError::Contract(
                "domain bounds must be non-empty and equal length".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(GeomError::Contract(format!(
                "degenerate box {lo:?}..{hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn shortest_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    /// Box grown by `by` on every side (negative values shrink it).
    pub fn expand(&self, by: f64) -> Result<Self> {
        Self::new(
            self.lo.iter().map(|a| a - by).collect(),
            self.hi.iter().map(|b| b + by).collect(),
        )
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Ok iff `p` is at least `margin` away from every face.
    pub fn check_margin(&self, p: &[f64], margin: f64) -> Result<()> {
        if p.len() != self.dim() {
            return Err(GeomError::Contract(format!(
                "point of dimension {} in a {}-dimensional domain",
                p.len(),
                self.dim()
            )));
        }
        let ok = p
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| x - a >= margin * (1.0 - 1e-12) && b - x >= margin * (1.0 - 1e-12));
        if ok {
            Ok(())
        } else {
            Err(GeomError::Domain {
                point: p.to_vec(),
                required: margin,
            })
        }
    }

    /// Tensor grid with `m` points per axis, first axis varying slowest.
    pub fn grid(&self, m: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                if m == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..m)
                        .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&x| {
                        let mut q = prefix.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
pub type DualEvalFn = Arc<dyn Fn(&[Dual]) -> Result<Vec<Dual>> + Send + Sync>;
/// Value together with the `m × k` Jacobian at a point.
pub type JetFn = Arc<dyn Fn(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> + Send + Sync>;

/// A function that can be evaluated on any [`Scalar`].
pub trait GenericFn: Send + Sync + 'static {
    fn call<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>>;
}

/// A smooth map from a box in `R^k` to `R^m`.
///
/// Complex-valued maps are stored with real parts first, then imaginary parts.
#[derive(Clone)]
pub struct SmoothMap {
    domain: Domain,
    out_dim: usize,
    eval: EvalFn,
    dual: Option<DualEvalFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain", &self.domain)
            .field("out_dim", &self.out_dim)
            .field("exact_tangent", &self.dual.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new(domain: Domain, out_dim: usize, eval: EvalFn) -> Self {
        Self {
            domain,
            out_dim,
            eval,
            dual: None,
        }
    }

    pub fn from_fn<F>(domain: Domain, out_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self::new(domain, out_dim, Arc::new(f))
    }

    pub fn with_dual(domain: Domain, out_dim: usize, eval: EvalFn, dual: DualEvalFn) -> Self {
        Self {
            domain,
            out_dim,
            eval,
            dual: Some(dual),
        }
    }

    /// A map whose first derivative is supplied by `jet`; dual inputs are
    /// pushed through the Jacobian by the chain rule.
    pub fn with_jacobian(domain: Domain, out_dim: usize, eval: EvalFn, jet: JetFn) -> Self {
        let dual: DualEvalFn = Arc::new(move |p: &[Dual]| {
            let vals: Vec<f64> = p.iter().map(|d| d.v).collect();
            let (v, jac) = jet(&vals)?;
            let width = p.iter().map(|d| d.g.len()).max().unwrap_or(0);
            Ok((0..v.len())
                .map(|r| {
                    let mut g = vec![0.0; width];
                    for (i, d) in p.iter().enumerate() {
                        for (gk, dk) in g.iter_mut().zip(&d.g) {
                            *gk += jac[(r, i)] * dk;
                        }
                    }
                    Dual::new(v[r], g)
                })
                .collect())
        });
        Self {
            domain,
            out_dim,
            eval,
            dual: Some(dual),
        }
    }

    /// Both the plain and the dual evaluator come from one generic function.
    pub fn generic<F: GenericFn>(domain: Domain, out_dim: usize, f: F) -> Self {
        let f = Arc::new(f);
        let f2 = Arc::clone(&f);
        Self {
            domain,
            out_dim,
            eval: Arc::new(move |p: &[f64]| f.call(p)),
            dual: Some(Arc::new(move |p: &[Dual]| f2.call(p))),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn in_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn has_exact_tangent(&self) -> bool {
        self.dual.is_some()
    }

    pub fn eval_fn(&self) -> EvalFn {
        Arc::clone(&self.eval)
    }

    pub fn dual_fn(&self) -> Option<DualEvalFn> {
        self.dual.clone()
    }

    /// Same evaluators on another box.
    pub fn with_domain(&self, domain: Domain) -> Self {
        Self {
            domain,
            ..self.clone()
        }
    }

    /// Evaluate with dimension and finiteness checks. Points may lie up to a
    /// stencil width outside the box; only finiteness is enforced there.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.in_dim() {
            return Err(GeomError::Contract(format!(
                "map expects {} parameters, got {}",
                self.in_dim(),
                p.len()
            )));
        }
        let v = (self.eval)(p)?;
        if v.len() != self.out_dim {
            return Err(GeomError::Contract(format!(
                "evaluator returned {} values, expected {}",
                v.len(),
                self.out_dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Domain {
                point: p.to_vec(),
                required: 0.0,
            });
        }
        Ok(v)
    }

    /// Value and exact Jacobian (`m × k`) through the dual evaluator.
    pub fn eval_dual(&self, p: &[f64]) -> Option<Result<(Vec<f64>, DMatrix<f64>)>> {
        let dual = self.dual.as_ref()?;
        let k = self.in_dim();
        Some((|| {
            let out = dual(&Dual::seed(p))?;
            if out.len() != self.out_dim {
                return Err(GeomError::Contract(
                    "dual evaluator has the wrong output size".into(),
                ));
            }
            let vals: Vec<f64> = out.iter().map(|d| d.v).collect();
            let jac = DMatrix::from_fn(self.out_dim, k, |r, c| {
                out[r].g.get(c).copied().unwrap_or(0.0)
            });
            if vals.iter().chain(jac.iter()).any(|x| !x.is_finite()) {
                return Err(GeomError::Domain {
                    point: p.to_vec(),
                    required: 0.0,
                });
            }
            Ok((vals, jac))
        })())
    }
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub step: f64,
    pub order: u8,
    pub richardson: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            order: 4,
            richardson: false,
        }
    }
}

impl DiffConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if self.order != 2 && self.order != 4 {
            return Err(GeomError::Contract(format!(
                "difference order must be 2 or 4, got {}",
                self.order
            )));
        }
        if !(self.step > 0.0) || self.step >= 0.5 * domain.shortest_side() {
            return Err(GeomError::Contract(format!(
                "step {} must be positive and below half the shortest box side {}",
                self.step,
                domain.shortest_side()
            )));
        }
        Ok(())
    }

    /// Reach of one first-difference stencil.
    pub fn reach(&self) -> f64 {
        if self.order == 4 {
            2.0 * self.step
        } else {
            self.step
        }
    }
}

fn shifted(p: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(dir).map(|(x, d)| x + t * d).collect()
}

fn raw_derivative<F>(f: &F, p: &[f64], dir: &[f64], h: f64, order: u8) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    // Antisymmetric pairs (offset, weight); differencing each pair first keeps
    // constants exact.
    let pairs: &[(f64, f64)] = if order == 4 {
        &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)]
    } else {
        &[(1.0, 0.5)]
    };
    let mut acc: Option<Vec<f64>> = None;
    for &(off, w) in pairs {
        let plus = f(&shifted(p, dir, off * h))?;
        let minus = f(&shifted(p, dir, -off * h))?;
        let a = acc.get_or_insert_with(|| vec![0.0; plus.len()]);
        if a.len() != plus.len() || plus.len() != minus.len() {
            return Err(GeomError::Contract("evaluator changed output size".into()));
        }
        for ((x, u), v) in a.iter_mut().zip(&plus).zip(&minus) {
            *x += w * (u - v) / h;
        }
    }
    Ok(acc.unwrap_or_default())
}

/// Directional derivative of an arbitrary vector-valued function along `dir`.
///
/// No domain check is performed; callers own the margin contract.
pub fn derivative_along<F>(f: &F, p: &[f64], dir: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let d = raw_derivative(f, p, dir, cfg.step, cfg.order)?;
    if !cfg.richardson {
        return Ok(d);
    }
    let half = raw_derivative(f, p, dir, 0.5 * cfg.step, cfg.order)?;
    let r = 2f64.powi(cfg.order as i32);
    Ok(half
        .iter()
        .zip(&d)
        .map(|(a, b)| (r * a - b) / (r - 1.0))
        .collect())
}

/// Partial derivative along coordinate axis `i`.
pub fn partial<F>(f: &F, p: &[f64], i: usize, cfg: &DiffConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let mut e = vec![0.0; p.len()];
    e[i] = 1.0;
    derivative_along(f, p, &e, cfg)
}

/// Finite-difference Jacobian, `m × k` with column `i` equal to `∂_i f`.
pub fn jacobian(f: &SmoothMap, p: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    cfg.validate(f.domain())?;
    f.domain().check_margin(p, 2.0 * cfg.step)?;
    let k = f.in_dim();
    let eval = |q: &[f64]| f.eval(q);
    let mut jac = DMatrix::zeros(f.out_dim(), k);
    for i in 0..k {
        let col = partial(&eval, p, i, cfg)?;
        jac.set_column(i, &nalgebra::DVector::from_vec(col));
    }
    Ok(jac)
}

/// First derivative, exact when the map carries a dual evaluator.
pub fn tangent(f: &SmoothMap, p: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    match f.eval_dual(p) {
        Some(r) => {
            f.domain().check_margin(p, 0.0)?;
            r.map(|(_, j)| j)
        }
        None => jacobian(f, p, cfg),
    }
}

/// Second partials `∂_i∂_j f` for every output component.
#[derive(Debug, Clone)]
pub struct Hessian {
    k: usize,
    m: usize,
    data: Vec<f64>,
}

impl Hessian {
    fn zeros(k: usize, m: usize) -> Self {
        Self {
            k,
            m,
            data: vec![0.0; k * k * m],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.k
    }

    pub fn out_dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(i * self.k + j) * self.m + c]
    }

    /// The vector `∂_i∂_j f`.
    pub fn second(&self, i: usize, j: usize) -> &[f64] {
        let s = (i * self.k + j) * self.m;
        &self.data[s..s + self.m]
    }

    fn set_second(&mut self, i: usize, j: usize, v: &[f64]) {
        let s = (i * self.k + j) * self.m;
        self.data[s..s + self.m].copy_from_slice(v);
    }

    /// The `k × k` matrix of one output component.
    pub fn component(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |i, j| self.get(c, i, j))
    }

    /// Largest `|∂_i∂_j f − ∂_j∂_i f|` before symmetrization.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..i {
                for c in 0..self.m {
                    worst = worst.max((self.get(c, i, j) - self.get(c, j, i)).abs());
                }
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.k {
            for j in 0..self.k {
                for c in 0..self.m {
                    out.data[(i * self.k + j) * self.m + c] =
                        0.5 * (self.get(c, i, j) + self.get(c, j, i));
                }
            }
        }
        out
    }
}

/// Hessian by nested first differences, or by differencing the exact tangent
/// when one is available. The result is not symmetrized.
pub fn hessian(f: &SmoothMap, p: &[f64], cfg: &DiffConfig) -> Result<Hessian> {
    cfg.validate(f.domain())?;
    f.domain().check_margin(p, 4.0 * cfg.step)?;
    let k = f.in_dim();
    let m = f.out_dim();
    let mut out = Hessian::zeros(k, m);
    if let Some(dual) = f.dual_fn() {
        // Column j of the tangent, flattened row-major as (c, i).
        let tan = |q: &[f64]| -> Result<Vec<f64>> {
            let o = dual(&Dual::seed(q))?;
            Ok(o.iter().flat_map(|d| d.grad(k)).collect())
        };
        for j in 0..k {
            let d = partial(&tan, p, j, cfg)?;
            for i in 0..k {
                let v: Vec<f64> = (0..m).map(|c| d[c * k + i]).collect();
                out.set_second(i, j, &v);
            }
        }
        return Ok(out);
    }
    let eval = |q: &[f64]| f.eval(q);
    for i in 0..k {
        let di = |q: &[f64]| partial(&eval, q, i, cfg);
        for j in 0..k {
            let v = partial(&di, p, j, cfg)?;
            out.set_second(i, j, &v);
        }
    }
    Ok(out)
}

/// `∇φ · v` for a scalar field.
pub fn directional_derivative(
    phi: &SmoothMap,
    p: &[f64],
    v: &[f64],
    cfg: &DiffConfig,
) -> Result<f64> {
    if phi.out_dim() != 1 {
        return Err(GeomError::Contract(format!(
            "directional_derivative needs a scalar field, got {} outputs",
            phi.out_dim()
        )));
    }
    Ok(directional_derivative_vec(phi, p, v, cfg)?[0])
}

/// `Df(p) v` for a vector-valued map.
pub fn directional_derivative_vec(
    f: &SmoothMap,
    p: &[f64],
    v: &[f64],
    cfg: &DiffConfig,
) -> Result<Vec<f64>> {
    if v.len() != f.in_dim() {
        return Err(GeomError::Contract(
            "direction has the wrong dimension".into(),
        ));
    }
    cfg.validate(f.domain())?;
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        f.domain().check_margin(p, 0.0)?;
        return Ok(vec![0.0; f.out_dim()]);
    }
    f.domain().check_margin(p, 2.0 * cfg.step * scale)?;
    let eval = |q: &[f64]| f.eval(q);
    derivative_along(&eval, p, v, cfg)
}

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_16();
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let mid = lo + 0.5 * w;
        for (x, wt) in nodes.iter().zip(weights) {
            sum += wt * f(mid + 0.5 * w * x);
        }
    }
    0.5 * w * sum
}

fn gauss_legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(legendre_rule)
}

fn legendre_rule() -> (Vec<f64>, Vec<f64>) {
    const N: usize = 16;
    let mut nodes = Vec::with_capacity(N);
    let mut weights = Vec::with_capacity(N);
    for i in 0..N {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=N {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}
