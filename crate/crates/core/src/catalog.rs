//! Closed-form hypersurface families with known principal curvatures.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::diff::{derivative_along, integrate, DiffConfig, Domain, GenericFn, SmoothMap};
use crate::dual::{Dual, Scalar};
use crate::error::{GeomError, Result};
use crate::hypersurface::{unit_normal, HypersurfacePatch, NumConfig, Orientation, AMBIENT_INDEX};
use crate::indefinite::signed_dot;

/// Tolerance on profile constraints.
pub const PROFILE_TOL: f64 = 1e-7;
/// Smallest admissible radicand or denominator in the closed forms.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Catalog family identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Umbilic,
    Product,
    RotationPlusMinus,
    RotationMinusMinus,
    RotationMinusNull,
}

impl FamilyId {
    pub const ALL: [FamilyId; 5] = [
        FamilyId::Umbilic,
        FamilyId::Product,
        FamilyId::RotationPlusMinus,
        FamilyId::RotationMinusMinus,
        FamilyId::RotationMinusNull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::Umbilic => "umbilic",
            FamilyId::Product => "product",
            FamilyId::RotationPlusMinus => "rotation_sig_plus_minus",
            FamilyId::RotationMinusMinus => "rotation_sig_minus_minus",
            FamilyId::RotationMinusNull => "rotation_sig_minus_null",
        }
    }

    pub fn rotation_kind(self) -> Option<RotationKind> {
        match self {
            FamilyId::RotationPlusMinus => Some(RotationKind::PlusMinus),
            FamilyId::RotationMinusMinus => Some(RotationKind::MinusMinus),
            FamilyId::RotationMinusNull => Some(RotationKind::Null),
            _ => None,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = GeomError;
    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| GeomError::Contract(format!("unknown catalog family `{s}`")))
    }
}

/// Signature of the rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RotationKind {
    /// Orbits are hyperbolic spaces; profile `(f, g, h)` with `−f² − g² + h² = −1`.
    PlusMinus,
    /// Orbits are spheres; same profile constraint.
    MinusMinus,
    /// Orbits are flat; profile in a null basis with `−f² + 4gh = −1`.
    Null,
}

impl RotationKind {
    pub fn family(self) -> FamilyId {
        match self {
            RotationKind::PlusMinus => FamilyId::RotationPlusMinus,
            RotationKind::MinusMinus => FamilyId::RotationMinusMinus,
            RotationKind::Null => FamilyId::RotationMinusNull,
        }
    }

    /// The quadratic form both constraints are written in.
    pub fn form(self, x: &[f64; 3]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn bilinear(self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        match self {
            RotationKind::PlusMinus | RotationKind::MinusMinus => {
                -x[0] * y[0] - x[1] * y[1] + x[2] * y[2]
            }
            RotationKind::Null => -x[0] * y[0] + 2.0 * (x[1] * y[2] + x[2] * y[1]),
        }
    }
}

/// Value and first two arc-length derivatives of a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: [f64; 3],
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

/// Analytic seed curves, not yet unit speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    /// `g = g0 + g1 sin(ωσ)`, `f = √(1−g²) cosh σ`, `h = √(1−g²) sinh σ`.
    PlusMinusWave {
        g0: f64,
        g1: f64,
        omega: f64,
        lo: f64,
        hi: f64,
    },
    /// `h = c cosh σ`, `f = √(1+h²) cos κσ`, `g = √(1+h²) sin κσ`.
    MinusMinus {
        c: f64,
        kappa: f64,
        lo: f64,
        hi: f64,
    },
    /// `h = e^σ`, `f = c + εσ`, `g = (f² − 1)/(4h)`.
    Null { c: f64, eps: f64, lo: f64, hi: f64 },
}

impl Seed {
    pub fn kind(&self) -> RotationKind {
        match self {
            Seed::PlusMinusWave { .. } => RotationKind::PlusMinus,
            Seed::MinusMinus { .. } => RotationKind::MinusMinus,
            Seed::Null { .. } => RotationKind::Null,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match *self {
            Seed::PlusMinusWave { lo, hi, .. }
            | Seed::MinusMinus { lo, hi, .. }
            | Seed::Null { lo, hi, .. } => (lo, hi),
        }
    }

    fn eval<S: Scalar>(&self, x: &S) -> [S; 3] {
        match *self {
            Seed::PlusMinusWave { g0, g1, omega, .. } => {
                let g = x.scale(omega).sin().scale(g1).offset(g0);
                let r = (-(g.clone() * g.clone())).offset(1.0).sqrt();
                [r.clone() * x.cosh(), g, r * x.sinh()]
            }
            Seed::MinusMinus { c, kappa, .. } => {
                let h = x.cosh().scale(c);
                let r = (h.clone() * h.clone()).offset(1.0).sqrt();
                let k = x.scale(kappa);
                [r.clone() * k.cos(), r * k.sin(), h]
            }
            Seed::Null { c, eps, .. } => {
                let h = x.exp();
                let f = x.scale(eps).offset(c);
                let g = (f.clone() * f.clone()).offset(-1.0) / h.scale(4.0);
                [f, g, h]
            }
        }
    }

    /// Unit-speed version of the seed.
    pub fn curve(&self) -> Result<SmoothMap> {
        let (lo, hi) = self.range();
        let domain = Domain::new(vec![lo], vec![hi])?;
        Ok(SmoothMap::generic(domain, 3, SeedCurve(*self)))
    }
}

struct SeedCurve(Seed);

impl GenericFn for SeedCurve {
    fn call<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>> {
        Ok(self.0.eval(&p[0]).to_vec())
    }
}

struct ConstantG {
    g: f64,
}

impl GenericFn for ConstantG {
    fn call<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>> {
        let rho = (1.0 - self.g * self.g).sqrt();
        let x = p[0].scale(1.0 / rho);
        Ok(vec![
            x.cosh().scale(rho),
            S::constant(self.g),
            x.sinh().scale(rho),
        ])
    }
}

fn to3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// Cumulative arc length of a curve and its inverse.
struct ArcLength {
    kind: RotationKind,
    curve: SmoothMap,
    knots: Vec<f64>,
    cum: Vec<f64>,
    fd: DiffConfig,
}

impl ArcLength {
    const PANELS: usize = 64;

    fn build(curve: SmoothMap, kind: RotationKind) -> Result<Self> {
        let (lo, hi) = (curve.domain().lo()[0], curve.domain().hi()[0]);
        let sigma0 = 0.5 * (lo + hi);
        let fd = DiffConfig {
            step: 1e-4_f64.min(0.01 * (hi - lo)),
            order: 4,
            richardson: false,
        };
        let mut me = Self {
            kind,
            curve,
            knots: Vec::new(),
            cum: Vec::new(),
            fd,
        };
        let knots: Vec<f64> = (0..=Self::PANELS)
            .map(|i| lo + (hi - lo) * i as f64 / Self::PANELS as f64)
            .collect();
        for &k in &knots {
            me.speed(k)?;
        }
        let mut cum = vec![0.0];
        for w in knots.windows(2) {
            let last = *cum.last().unwrap_or(&0.0);
            cum.push(last + me.segment(w[0], w[1])?);
        }
        me.knots = knots;
        me.cum = cum;
        let offset = me.raw_length(sigma0)?;
        for c in &mut me.cum {
            *c -= offset;
        }
        Ok(me)
    }

    fn velocity(&self, sigma: f64) -> Result<[f64; 3]> {
        match self.curve.eval_dual(&[sigma]) {
            Some(r) => {
                let (_, j) = r?;
                Ok([j[(0, 0)], j[(1, 0)], j[(2, 0)]])
            }
            None => {
                let eval = |q: &[f64]| self.curve.eval(q);
                Ok(to3(&derivative_along(&eval, &[sigma], &[1.0], &self.fd)?))
            }
        }
    }

    fn speed(&self, sigma: f64) -> Result<f64> {
        let v = self.velocity(sigma)?;
        let q = self.kind.form(&v);
        if !(q > 1e-12) {
            return Err(GeomError::Regularity(format!(
                "squared speed {q:e} at parameter {sigma}"
            )));
        }
        Ok(q.sqrt())
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        let mut err = None;
        let v = integrate(
            |x| match self.speed(x) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            a,
            b,
            1,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn panel_of(&self, sigma: f64) -> usize {
        let k = self.knots.partition_point(|&x| x <= sigma);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Arc length from the first knot; used only while building.
    fn raw_length(&self, sigma: f64) -> Result<f64> {
        let k = self.panel_of(sigma);
        Ok(self.cum[k] + self.segment(self.knots[k], sigma)?)
    }

    fn length(&self, sigma: f64) -> Result<f64> {
        self.raw_length(sigma)
    }

    fn s_range(&self) -> (f64, f64) {
        (self.cum[0], *self.cum.last().unwrap_or(&0.0))
    }

    fn inverse(&self, s: f64) -> Result<f64> {
        let k = self
            .cum
            .partition_point(|&c| c <= s)
            .saturating_sub(1)
            .min(self.knots.len() - 2);
        let (c0, c1) = (self.cum[k], self.cum[k + 1]);
        let (k0, k1) = (self.knots[k], self.knots[k + 1]);
        let mut sigma = k0 + (k1 - k0) * (s - c0) / (c1 - c0);
        for _ in 0..50 {
            let r = self.length(sigma)? - s;
            let step = r / self.speed(sigma)?;
            sigma -= step;
            if step.abs() < 1e-15 * (1.0 + sigma.abs()) {
                return Ok(sigma);
            }
        }
        Ok(sigma)
    }
}

/// Reparametrize a regular profile curve by arc length, with `s = 0` at the
/// center of its parameter interval.
///
/// The speed is measured in the quadratic form of `kind`.
pub fn arc_length_reparametrize(curve: &SmoothMap, kind: RotationKind) -> Result<SmoothMap> {
    if curve.in_dim() != 1 || curve.out_dim() != 3 {
        return Err(GeomError::Contract("profile curves map R to R^3".into()));
    }
    let table = Arc::new(ArcLength::build(curve.clone(), kind)?);
    let (s0, s1) = table.s_range();
    let domain = Domain::new(vec![s0], vec![s1])?;
    let t1 = Arc::clone(&table);
    let eval = Arc::new(move |p: &[f64]| -> Result<Vec<f64>> {
        let sigma = t1.inverse(p[0])?;
        t1.curve.eval(&[sigma])
    });
    let t2 = table;
    let dual = Arc::new(move |p: &[Dual]| -> Result<Vec<Dual>> {
        let sigma = t2.inverse(p[0].v)?;
        let vals = t2.curve.eval(&[sigma])?;
        let vel = t2.velocity(sigma)?;
        let v = t2.speed(sigma)?;
        Ok((0..3).map(|c| p[0].chain(vals[c], vel[c] / v)).collect())
    });
    Ok(SmoothMap::with_dual(domain, 3, eval, dual))
}

/// A unit-speed profile of a rotation family.
#[derive(Debug, Clone)]
pub struct Profile {
    kind: RotationKind,
    curve: SmoothMap,
    label: String,
}

impl Profile {
    /// Wrap an arc-length parametrized curve after checking both constraints.
    pub fn from_curve(
        kind: RotationKind,
        curve: SmoothMap,
        label: impl Into<String>,
    ) -> Result<Self> {
        if curve.in_dim() != 1 || curve.out_dim() != 3 {
            return Err(GeomError::Contract("profile curves map R to R^3".into()));
        }
        let me = Self {
            kind,
            curve,
            label: label.into(),
        };
        me.check_constraints(41)?;
        Ok(me)
    }

    /// The isoparametric `+−` profile with constant `g`.
    pub fn constant_g(g: f64) -> Result<Self> {
        if !(g.abs() > DEGENERACY_TOL && g.abs() < 1.0) {
            return Err(GeomError::DegenerateProfile(format!(
                "constant g = {g} must satisfy 0 < |g| < 1"
            )));
        }
        let domain = Domain::new(vec![-1.5], vec![1.5])?;
        let curve = SmoothMap::generic(domain, 3, ConstantG { g });
        Self::from_curve(RotationKind::PlusMinus, curve, format!("constant g = {g}"))
    }

    pub fn from_seed(seed: Seed) -> Result<Self> {
        let curve = arc_length_reparametrize(&seed.curve()?, seed.kind())?;
        Self::from_curve(seed.kind(), curve, format!("{seed:?}"))
    }

    pub fn kind(&self) -> RotationKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn curve(&self) -> &SmoothMap {
        &self.curve
    }

    pub fn s_domain(&self) -> &Domain {
        self.curve.domain()
    }

    pub fn jet(&self, s: f64) -> Result<Jet> {
        let first = |q: &[f64]| -> Result<Vec<f64>> {
            match self.curve.eval_dual(q) {
                Some(r) => Ok(r?.1.column(0).iter().copied().collect()),
                None => Err(GeomError::Contract(
                    "profile curve lacks an exact tangent".into(),
                )),
            }
        };
        let d1 = first(&[s])?;
        let d2 = derivative_along(&first, &[s], &[1.0], &DiffConfig::with_step(1e-3))?;
        Ok(Jet {
            v: to3(&self.curve.eval(&[s])?),
            d1: to3(&d1),
            d2: to3(&d2),
        })
    }

    /// Largest violation of the value and unit-speed constraints on `m` points.
    pub fn constraint_residual(&self, m: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in self.s_domain().grid(m) {
            let j = self.jet(p[0])?;
            worst = worst.max((self.kind.form(&j.v) + 1.0).abs());
            worst = worst.max((self.kind.form(&j.d1) - 1.0).abs());
        }
        Ok(worst)
    }

    fn check_constraints(&self, m: usize) -> Result<()> {
        let r = self.constraint_residual(m)?;
        if r > PROFILE_TOL {
            return Err(GeomError::Constraint(format!(
                "profile `{}` violates its constraints by {r:e}",
                self.label
            )));
        }
        if self.kind == RotationKind::Null {
            let r = self.null_identity_residual(m)?;
            if r > PROFILE_TOL {
                return Err(GeomError::Constraint(format!(
                    "profile `{}` violates (hf' − fh')² = h'² − h² by {r:e}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// `|(hf' − fh')² − (h'² − h²)|`, relevant to the null family.
    pub fn null_identity_residual(&self, m: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in self.s_domain().grid(m) {
            let j = self.jet(p[0])?;
            let (f, h, df, dh) = (j.v[0], j.v[2], j.d1[0], j.d1[2]);
            worst = worst.max(((h * df - f * dh).powi(2) - (dh * dh - h * h)).abs());
        }
        Ok(worst)
    }
}

/// Parameters of a catalog entry.
#[derive(Debug, Clone)]
pub enum Family {
    Umbilic { alpha: f64 },
    Product { alpha: f64, k: usize },
    Rotation(Arc<Profile>),
}

/// A catalog family instance together with its dimension.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub n: usize,
    pub family: Family,
}

impl CatalogEntry {
    pub fn umbilic(alpha: f64, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(GeomError::Contract("n must be at least 1".into()));
        }
        if alpha.sin().abs() < DEGENERACY_TOL {
            return Err(GeomError::Contract(format!(
                "umbilic family needs sin α ≠ 0, got α = {alpha}"
            )));
        }
        Ok(Self {
            n,
            family: Family::Umbilic { alpha },
        })
    }

    pub fn product(alpha: f64, k: usize, n: usize) -> Result<Self> {
        if n < 2 || k < 1 || k >= n {
            return Err(GeomError::Contract(format!(
                "product family needs 1 ≤ k < n, got k = {k}, n = {n}"
            )));
        }
        if (alpha.sin() * alpha.cos()).abs() < DEGENERACY_TOL {
            return Err(GeomError::Contract(format!(
                "product family needs sin α cos α ≠ 0, got α = {alpha}"
            )));
        }
        Ok(Self {
            n,
            family: Family::Product { alpha, k },
        })
    }

    pub fn rotation(profile: Profile, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(GeomError::Contract("n must be at least 1".into()));
        }
        Ok(Self {
            n,
            family: Family::Rotation(Arc::new(profile)),
        })
    }

    /// Shipped default for a family: α = π/3 (π/4 for the product), k = 1.
    pub fn default_for(id: FamilyId, n: usize) -> Result<Self> {
        match id {
            FamilyId::Umbilic => Self::umbilic(PI / 3.0, n),
            FamilyId::Product => Self::product(PI / 4.0, 1, n),
            FamilyId::RotationPlusMinus => Self::rotation(Profile::constant_g(0.5)?, n),
            FamilyId::RotationMinusMinus => Self::rotation(
                Profile::from_seed(default_seed(RotationKind::MinusMinus))?,
                n,
            ),
            FamilyId::RotationMinusNull => {
                Self::rotation(Profile::from_seed(default_seed(RotationKind::Null))?, n)
            }
        }
    }

    pub fn id(&self) -> FamilyId {
        match &self.family {
            Family::Umbilic { .. } => FamilyId::Umbilic,
            Family::Product { .. } => FamilyId::Product,
            Family::Rotation(p) => p.kind().family(),
        }
    }

    pub fn profile(&self) -> Option<&Profile> {
        match &self.family {
            Family::Rotation(p) => Some(p),
            _ => None,
        }
    }

    /// Sampling box for grid points.
    pub fn sample_box(&self) -> Result<Domain> {
        let n = self.n;
        let bounds: Vec<(f64, f64)> = match &self.family {
            Family::Umbilic { .. } => hyperboloid_box(n),
            Family::Product { k, .. } => {
                let mut b = hyperboloid_box(*k);
                b.extend(hyperboloid_box(n - k));
                b
            }
            Family::Rotation(p) => {
                let d = p.s_domain();
                let (lo, hi) = (d.lo()[0] + 0.15, d.hi()[0] - 0.15);
                let (lo, hi) = (lo.max(-0.5), hi.min(0.5));
                if !(hi - lo > 0.05) {
                    return Err(GeomError::DegenerateProfile(
                        "profile interval is too short to sample".into(),
                    ));
                }
                let mut b = vec![(lo, hi)];
                b.extend(match p.kind() {
                    RotationKind::PlusMinus => hyperboloid_box(n - 1),
                    RotationKind::MinusMinus => sphere_box(n - 1),
                    RotationKind::Null => vec![(-0.5, 0.5); n - 1],
                });
                b
            }
        };
        Domain::from_bounds(&bounds)
    }

    fn chart_domain(&self, sample: &Domain) -> Result<Domain> {
        let mut lo: Vec<f64> = sample.lo().iter().map(|x| x - 0.25).collect();
        let mut hi: Vec<f64> = sample.hi().iter().map(|x| x + 0.25).collect();
        if let Family::Rotation(p) = &self.family {
            let d = p.s_domain();
            lo[0] = lo[0].max(d.lo()[0] + 0.02);
            hi[0] = hi[0].min(d.hi()[0] - 0.02);
        }
        Domain::new(lo, hi)
    }
}

fn default_seed(kind: RotationKind) -> Seed {
    match kind {
        RotationKind::PlusMinus => Seed::PlusMinusWave {
            g0: 0.5,
            g1: 0.1,
            omega: 1.0,
            lo: -1.5,
            hi: 1.5,
        },
        RotationKind::MinusMinus => Seed::MinusMinus {
            c: 0.5,
            kappa: 0.1,
            lo: 0.8,
            hi: 2.4,
        },
        RotationKind::Null => Seed::Null {
            c: 0.3,
            eps: 0.2,
            lo: 0.5,
            hi: 2.0,
        },
    }
}

/// A non-isoparametric `+−` profile, where the principal curvatures vary.
pub fn wave_profile() -> Result<Profile> {
    Profile::from_seed(default_seed(RotationKind::PlusMinus))
}

/// A profile with randomly drawn seed parameters.
pub fn random_profile<R: Rng + ?Sized>(kind: RotationKind, rng: &mut R) -> Result<Profile> {
    let seed = match kind {
        RotationKind::PlusMinus => Seed::PlusMinusWave {
            g0: rng.gen_range(0.35..0.65),
            g1: rng.gen_range(0.05..0.15),
            omega: rng.gen_range(0.5..1.5),
            lo: -1.5,
            hi: 1.5,
        },
        RotationKind::MinusMinus => Seed::MinusMinus {
            c: rng.gen_range(0.4..0.6),
            kappa: rng.gen_range(0.07..0.13),
            lo: 0.8,
            hi: 2.4,
        },
        RotationKind::Null => Seed::Null {
            c: rng.gen_range(0.25..0.35),
            eps: rng.gen_range(0.15..0.25),
            lo: 0.5,
            hi: 2.0,
        },
    };
    Profile::from_seed(seed)
}

fn sphere_box(m: usize) -> Vec<(f64, f64)> {
    if m == 0 {
        return Vec::new();
    }
    let mut b = vec![(1.0, 2.0); m - 1];
    b.push((0.0, 1.0));
    b
}

fn hyperboloid_box(m: usize) -> Vec<(f64, f64)> {
    if m == 0 {
        return Vec::new();
    }
    let mut b = vec![(0.5, 1.5)];
    b.extend(sphere_box(m - 1));
    b
}

/// Standard angular chart of the unit sphere `S^m ⊂ R^{m+1}`.
pub fn sphere<S: Scalar>(t: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(t.len() + 1);
    let mut prod = S::constant(1.0);
    for a in t {
        out.push(prod.clone() * a.cos());
        prod = prod * a.sin();
    }
    out.push(prod);
    out
}

/// Polar chart of `H^m(-1) ⊂ R^{m+1}_1`.
pub fn hyperboloid<S: Scalar>(t: &[S]) -> Vec<S> {
    let Some(r) = t.first() else {
        return vec![S::constant(1.0)];
    };
    let mut out = vec![r.cosh()];
    let sh = r.sinh();
    out.extend(sphere(&t[1..]).into_iter().map(|x| x * sh.clone()));
    out
}

/// `ψ(p, q) = (p_1, q_1, p_2, …, p_{k+1}, q_2, …)`.
pub fn interleave<T: Clone>(p: &[T], q: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(p.len() + q.len());
    out.push(p[0].clone());
    out.push(q[0].clone());
    out.extend_from_slice(&p[1..]);
    out.extend_from_slice(&q[1..]);
    out
}

struct CatalogChart {
    entry: CatalogEntry,
}

impl CatalogChart {
    fn profile_at<S: Scalar>(profile: &Profile, s: &S) -> Result<[S; 3]> {
        match profile.curve.eval_dual(&[s.value()]) {
            Some(r) => {
                let (v, j) = r?;
                Ok([
                    s.chain(v[0], j[(0, 0)]),
                    s.chain(v[1], j[(1, 0)]),
                    s.chain(v[2], j[(2, 0)]),
                ])
            }
            None => Err(GeomError::Contract(
                "profile curve lacks an exact tangent".into(),
            )),
        }
    }
}

impl GenericFn for CatalogChart {
    fn call<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>> {
        let n = self.entry.n;
        match &self.entry.family {
            Family::Umbilic { alpha } => {
                let mut out = vec![S::constant(alpha.cos())];
                out.extend(hyperboloid(p).into_iter().map(|x| x.scale(alpha.sin())));
                Ok(out)
            }
            Family::Product { alpha, k } => {
                let hp: Vec<S> = hyperboloid(&p[..*k])
                    .into_iter()
                    .map(|x| x.scale(alpha.cos()))
                    .collect();
                let hq: Vec<S> = hyperboloid(&p[*k..])
                    .into_iter()
                    .map(|x| x.scale(alpha.sin()))
                    .collect();
                Ok(interleave(&hp, &hq))
            }
            Family::Rotation(profile) => {
                let [f, g, h] = Self::profile_at(profile, &p[0])?;
                let t = &p[1..];
                match profile.kind() {
                    RotationKind::PlusMinus => {
                        let mut out = vec![f];
                        out.extend(hyperboloid(t).into_iter().map(|x| x * g.clone()));
                        out.push(h);
                        Ok(out)
                    }
                    RotationKind::MinusMinus => {
                        let mut out = vec![f, g];
                        out.extend(sphere(t).into_iter().map(|x| x * h.clone()));
                        Ok(out)
                    }
                    RotationKind::Null => {
                        let mut tt = S::constant(0.0);
                        for x in t {
                            tt = tt + x.clone() * x.clone();
                        }
                        let gg =
                            (f.clone() * f.clone() - S::constant(1.0) - h.clone() * h.clone() * tt)
                                / h.scale(4.0);
                        let mut out = vec![f, gg.clone() - h.clone(), gg + h.clone()];
                        out.extend(t.iter().map(|x| x.clone() * h.clone()));
                        debug_assert_eq!(out.len(), n + 2);
                        Ok(out)
                    }
                }
            }
        }
    }
}

/// Build the hypersurface patch of a catalog entry. The orientation is the
/// one whose normal agrees with the closed-form normal of the family.
pub fn instantiate(entry: &CatalogEntry) -> Result<HypersurfacePatch> {
    let sample = entry.sample_box()?;
    let domain = entry.chart_domain(&sample)?;
    let chart = SmoothMap::generic(
        domain,
        entry.n + 2,
        CatalogChart {
            entry: entry.clone(),
        },
    );
    let patch = HypersurfacePatch::new(chart, sample, Orientation::Positive)?;
    let center = patch.sample().center();
    let b = unit_normal(&patch, &center, &NumConfig::default())?;
    let gold = golden_normal(entry, &center)?;
    if signed_dot(AMBIENT_INDEX, b.coords(), &gold) < 0.0 {
        Ok(patch)
    } else {
        Ok(patch.flipped())
    }
}

fn profile_and_t<'a>(
    entry: &'a CatalogEntry,
    p: &'a [f64],
) -> Option<(&'a Profile, f64, &'a [f64])> {
    match &entry.family {
        Family::Rotation(profile) => Some((profile, p[0], &p[1..])),
        _ => None,
    }
}

fn checked_sqrt(x: f64, what: &str) -> Result<f64> {
    if !(x >= DEGENERACY_TOL) {
        return Err(GeomError::DegenerateProfile(format!("{what} = {x:e}")));
    }
    Ok(x.sqrt())
}

fn checked_div(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den.abs() >= DEGENERACY_TOL) {
        return Err(GeomError::DegenerateProfile(format!("{what} = {den:e}")));
    }
    Ok(num / den)
}

/// Closed-form principal curvatures in chart-coordinate order.
pub fn golden_lambdas(entry: &CatalogEntry, p: &[f64]) -> Result<Vec<f64>> {
    let n = entry.n;
    match &entry.family {
        Family::Umbilic { alpha } => Ok(vec![1.0 / alpha.tan(); n]),
        Family::Product { alpha, k } => {
            let mut l = vec![-alpha.tan(); *k];
            l.extend(vec![1.0 / alpha.tan(); n - k]);
            Ok(l)
        }
        Family::Rotation(profile) => {
            let j = profile.jet(p[0])?;
            let (l1, lj) = match profile.kind() {
                RotationKind::PlusMinus => {
                    let (g, dg, ddg) = (j.v[1], j.d1[1], j.d2[1]);
                    let r = checked_sqrt(1.0 + dg * dg - g * g, "1 + g'² − g²")?;
                    (
                        checked_div(g - ddg, r, "radical")?,
                        -checked_div(r, g, "g")?,
                    )
                }
                RotationKind::MinusMinus => {
                    let (h, dh, ddh) = (j.v[2], j.d1[2], j.d2[2]);
                    let r = checked_sqrt(dh * dh - h * h - 1.0, "h'² − h² − 1")?;
                    (
                        checked_div(h - ddh, r, "radical")?,
                        -checked_div(r, h, "h")?,
                    )
                }
                RotationKind::Null => {
                    let (h, dh, ddh) = (j.v[2], j.d1[2], j.d2[2]);
                    let r = checked_sqrt(dh * dh - h * h, "h'² − h²")?;
                    (checked_div(ddh - h, r, "radical")?, checked_div(r, h, "h")?)
                }
            };
            let mut l = vec![l1];
            l.extend(vec![lj; n - 1]);
            Ok(l)
        }
    }
}

/// `θ` in `(0, π)` with `cot θ = λ`.
pub fn arccot(lambda: f64) -> f64 {
    1.0f64.atan2(lambda)
}

/// Closed-form angle functions of the canonical lift, in chart order.
pub fn golden_angles(entry: &CatalogEntry, p: &[f64]) -> Result<Vec<f64>> {
    Ok(golden_lambdas(entry, p)?.into_iter().map(arccot).collect())
}

/// Closed-form unit normal of the family.
pub fn golden_normal(entry: &CatalogEntry, p: &[f64]) -> Result<Vec<f64>> {
    match &entry.family {
        Family::Umbilic { alpha } => {
            let mut out = vec![alpha.sin()];
            out.extend(hyperboloid(p).into_iter().map(|x| -alpha.cos() * x));
            Ok(out)
        }
        Family::Product { alpha, k } => {
            let hp: Vec<f64> = hyperboloid(&p[..*k])
                .into_iter()
                .map(|x| alpha.sin() * x)
                .collect();
            let hq: Vec<f64> = hyperboloid(&p[*k..])
                .into_iter()
                .map(|x| -alpha.cos() * x)
                .collect();
            Ok(interleave(&hp, &hq))
        }
        Family::Rotation(_) => {
            let (profile, s, t) = profile_and_t(entry, p).expect("rotation family");
            let j = profile.jet(s)?;
            let ([f, g, h], [df, dg, dh]) = (j.v, j.d1);
            match profile.kind() {
                RotationKind::PlusMinus => {
                    let mut out = vec![h * dg - g * dh];
                    out.extend(hyperboloid(t).into_iter().map(|x| (f * dh - h * df) * x));
                    out.push(f * dg - g * df);
                    Ok(out)
                }
                RotationKind::MinusMinus => {
                    let mut out = vec![h * dg - g * dh, f * dh - h * df];
                    out.extend(sphere(t).into_iter().map(|x| (f * dg - g * df) * x));
                    Ok(out)
                }
                RotationKind::Null => {
                    let q = dh * dh - h * h;
                    let root = checked_sqrt(q, "h'² − h²")?;
                    let tt: f64 = t.iter().map(|x| x * x).sum();
                    let c1 = (dh * df - h * f) / q;
                    // fixed by orthogonality to the position vector
                    let c2 = (2.0 * h * f * c1 + 1.0 - f * f - h * h * tt) / (4.0 * h * h);
                    // c1 u1 + c2 u2 + u3 + Σ t_i u_{3+i} in standard coordinates.
                    let mut out = vec![c1, c2 - 1.0, c2 + 1.0];
                    out.extend_from_slice(t);
                    Ok(out.into_iter().map(|x| -root * x).collect())
                }
            }
        }
    }
}
