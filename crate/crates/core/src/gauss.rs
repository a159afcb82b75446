//! The Gauss map `p ↦ [a(p) + i b(p)]` of a spacelike hypersurface into the
//! quadric, its angle functions and second fundamental form, and the
//! identities relating them to the principal curvatures of `a`.

use std::cell::RefCell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::diff::{derivative_along, hessian, partial, tangent, SmoothMap};
use crate::error::{GeomError, Result};
use crate::hypersurface::{shape_operator, unit_normal, HypersurfacePatch, NumConfig};
use crate::indefinite::{herm_re, CVector};
use crate::quadric::{
    apply_a_raw, lift_residual, project_raw, vertical_residual, HorizontalVector, ProductStructure,
    QuadricPoint, LIFT_TOL,
};

/// Commutator `‖BC − CB‖` above which joint diagonalization is refused.
pub const COMMUTATOR_TOL: f64 = 1e-5;
/// Eigenvalues (and angles, mod π) closer than this are one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;
/// A cluster whose angles spread further than this under a stencil shift is
/// treated as a crossing rather than a persistent multiplicity.
pub const SPLIT_TOL: f64 = 1e-8;
/// Pairs with `|sin(θ_j − θ_k)|` below this are skipped in the connection relation.
pub const SINE_FLOOR: f64 = 1e-4;
/// Pairs with `|λ_j − λ_k|` below this are skipped in the gauge-free relation.
pub const LAMBDA_GAP: f64 = 1e-6;

/// The Gauss map of a patch, carried by its lift into `C^{n+2}`.
#[derive(Debug, Clone)]
pub struct GaussMapField {
    patch: HypersurfacePatch,
    cfg: NumConfig,
    /// Stacked `[Re, Im]` of the lift, `2(n+2)` outputs.
    lift: SmoothMap,
}

/// Lift and its first derivatives at one point.
#[derive(Debug, Clone)]
pub struct LiftFrame {
    pub point: Vec<f64>,
    pub z: QuadricPoint,
    /// `∂_i G̃`.
    pub dz: Vec<CVector>,
}

impl LiftFrame {
    pub fn n(&self) -> usize {
        self.dz.len()
    }

    /// `dG̃(v) = Σ v_i ∂_i G̃`.
    pub fn push(&self, v: &[f64]) -> CVector {
        let mut w = CVector::zeros(self.z.lift().len());
        for (c, d) in v.iter().zip(&self.dz) {
            w = &w + &d.scale_re(*c);
        }
        w
    }

    /// `dG̃(v)` with vertical and quadric-normal noise removed.
    pub fn horizontal(&self, v: &[f64]) -> HorizontalVector {
        crate::quadric::horizontal_project(&self.z, &self.push(v))
    }

    /// Metric induced by the Gauss map, `g_ij = Re h(∂_i G̃, ∂_j G̃)`.
    pub fn metric(&self) -> DMatrix<f64> {
        let n = self.n();
        let g = DMatrix::from_fn(n, n, |i, j| herm_re(&self.dz[i], &self.dz[j]));
        (&g + g.transpose()) * 0.5
    }

    /// Largest vertical or quadric-normal component of any `∂_i G̃`.
    pub fn horizontality_residual(&self) -> f64 {
        self.dz
            .iter()
            .map(|d| vertical_residual(&self.z, d))
            .fold(0.0, f64::max)
    }
}

impl GaussMapField {
    /// Wrap an arbitrary lift, rejecting it if it leaves `V*` on the sample grid.
    pub fn from_lift(patch: HypersurfacePatch, lift: SmoothMap, cfg: NumConfig) -> Result<Self> {
        let d = patch.n() + 2;
        if lift.out_dim() != 2 * d || lift.in_dim() != patch.n() {
            return Err(GeomError::Contract(format!(
                "lift must map R^{} to C^{d}, got {} -> {} reals",
                patch.n(),
                lift.in_dim(),
                lift.out_dim()
            )));
        }
        let gm = Self { patch, cfg, lift };
        gm.check_lifts(3)?;
        Ok(gm)
    }

    /// Worst lift residual over an `m`-per-axis sample grid.
    pub fn check_lifts(&self, m: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in self.patch.sample().grid(m) {
            let z = CVector::from_stacked(&self.lift.eval(&p)?)?;
            let r = lift_residual(&z);
            if !(r <= LIFT_TOL) {
                return Err(GeomError::InvalidLift(format!(
                    "lift residual {r:e} at {p:?}"
                )));
            }
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn patch(&self) -> &HypersurfacePatch {
        &self.patch
    }

    pub fn cfg(&self) -> &NumConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.patch.n()
    }

    pub fn lift_map(&self) -> &SmoothMap {
        &self.lift
    }

    pub fn point(&self, p: &[f64]) -> Result<QuadricPoint> {
        QuadricPoint::new(CVector::from_stacked(&self.lift.eval(p)?)?)
    }

    pub fn frame(&self, p: &[f64]) -> Result<LiftFrame> {
        let z = self.point(p)?;
        let jac = tangent(&self.lift, p, &self.cfg.first)?;
        let dz = (0..self.n())
            .map(|i| CVector::from_stacked(jac.column(i).as_slice()))
            .collect::<Result<Vec<_>>>()?;
        Ok(LiftFrame {
            point: p.to_vec(),
            z,
            dz,
        })
    }

    /// Coordinate components `g(h(∂_i, ∂_j), J ∂_l)`, flattened as `(i, j, l)`.
    pub fn coordinate_sff(&self, p: &[f64]) -> Result<Vec<f64>> {
        let fr = self.frame(p)?;
        let hs = hessian(&self.lift, p, &self.cfg.second)?.symmetrized();
        let n = self.n();
        let jdz: Vec<CVector> = fr.dz.iter().map(|d| d.mul_i()).collect();
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let h = project_raw(fr.z.lift(), &CVector::from_stacked(hs.second(i, j))?);
                for l in 0..n {
                    out[(i * n + j) * n + l] = herm_re(&h, &jdz[l]);
                }
            }
        }
        Ok(out)
    }
}

/// The canonical lift `(a + i b)/√2`, with its tangent from `∂b = −da·S`.
pub fn build_gauss_map(patch: &HypersurfacePatch, cfg: &NumConfig) -> Result<GaussMapField> {
    let cfg = *cfg;
    let n = patch.n();
    let d = n + 2;
    let (pa, pb) = (patch.clone(), patch.clone());
    let eval = Arc::new(move |p: &[f64]| {
        let a = pa.chart().eval(p)?;
        let b = unit_normal(&pa, p, &cfg)?;
        Ok(a.iter()
            .chain(b.coords())
            .map(|x| x * FRAC_1_SQRT_2)
            .collect())
    });
    let jet = Arc::new(move |p: &[f64]| {
        let sd = shape_operator(&pb, p, &cfg.fine())?;
        let db = sd.normal_derivative();
        let v: Vec<f64> =
            sd.a.iter()
                .chain(sd.normal.coords())
                .map(|x| x * FRAC_1_SQRT_2)
                .collect();
        let jac = DMatrix::from_fn(2 * d, n, |r, c| {
            FRAC_1_SQRT_2 * if r < d { sd.da[(r, c)] } else { db[(r - d, c)] }
        });
        Ok((v, jac))
    });
    let lift = SmoothMap::with_jacobian(patch.chart().domain().clone(), 2 * d, eval, jet);
    GaussMapField::from_lift(patch.clone(), lift, cfg)
}

/// Largest vertical or quadric-normal component of `∂_i G̃`.
pub fn horizontality_residual(gm: &GaussMapField, p: &[f64]) -> Result<f64> {
    Ok(gm.frame(p)?.horizontality_residual())
}

/// `max |g(J dG e_a, dG e_b)|` over an orthonormal frame.
pub fn lagrangian_residual(gm: &GaussMapField, p: &[f64]) -> Result<f64> {
    let fr = gm.frame(p)?;
    let e = orthonormal_frame(&fr.metric())?;
    let ys = horizontal_frame(&fr, &e);
    let mut worst: f64 = 0.0;
    for x in &ys {
        let jx = x.mul_i();
        for y in &ys {
            worst = worst.max(herm_re(&jx, y).abs());
        }
    }
    Ok(worst)
}

/// Columns `E` with `Eᵀ g E = I`.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::Signature("Gauss-map metric is not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| GeomError::Signature("Gauss-map metric is singular".into()))?;
    Ok(linv.transpose())
}

fn horizontal_frame(fr: &LiftFrame, e: &DMatrix<f64>) -> Vec<CVector> {
    (0..e.ncols())
        .map(|a| project_raw(fr.z.lift(), &fr.push(e.column(a).as_slice())))
        .collect()
}

fn reduce_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// `x + kπ` closest to `target`.
fn unwrap_near(x: f64, target: f64) -> f64 {
    x + PI * ((target - x) / PI).round()
}

/// Distance between two angles modulo π.
pub fn angle_distance(x: f64, y: f64) -> f64 {
    (x - unwrap_near(y, x)).abs()
}

/// Angle functions and adapted frame at one point.
#[derive(Debug, Clone)]
pub struct AngleSpectrum {
    pub point: Vec<f64>,
    pub gauge: ProductStructure,
    /// `θ_j ∈ [0, π)`, ascending.
    pub angles: Vec<f64>,
    /// Columns are `e_j` as coordinate vectors, orthonormal for the Gauss-map metric.
    pub frame: DMatrix<f64>,
    /// `g(B e_b, e_a)` in the frame.
    pub b: DMatrix<f64>,
    /// `g(C e_b, e_a)` in the frame.
    pub c: DMatrix<f64>,
    /// `‖BC − CB‖_max` before diagonalization.
    pub commutator: f64,
}

impl AngleSpectrum {
    pub fn n(&self) -> usize {
        self.angles.len()
    }

    /// `max_j ‖A e_j − cos(2θ_j) e_j + sin(2θ_j) J e_j‖`.
    pub fn frame_residual(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|j| {
                let (c2, s2) = ((2.0 * self.angles[j]).cos(), (2.0 * self.angles[j]).sin());
                let mut sq = 0.0;
                for a in 0..n {
                    let (tb, tc) = if a == j { (c2, s2) } else { (0.0, 0.0) };
                    sq += (self.b[(a, j)] - tb).powi(2) + (self.c[(a, j)] - tc).powi(2);
                }
                sq.sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Groups of indices whose angles agree mod π to [`CLUSTER_TOL`].
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for j in 0..n {
            match out.last_mut() {
                Some(last)
                    if angle_distance(self.angles[*last.last().unwrap()], self.angles[j])
                        < CLUSTER_TOL =>
                {
                    last.push(j)
                }
                _ => out.push(vec![j]),
            }
        }
        if out.len() > 1 && angle_distance(self.angles[0], self.angles[n - 1]) < CLUSTER_TOL {
            let last = out.pop().unwrap();
            out[0].extend(last);
        }
        out
    }
}

/// Tangential and normal parts of `A` on an orthonormal horizontal frame.
fn bc_matrices(
    z: &QuadricPoint,
    ys: &[CVector],
    gauge: ProductStructure,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ys.len();
    let ays: Vec<CVector> = ys.iter().map(|y| apply_a_raw(gauge, z.lift(), y)).collect();
    let jays: Vec<CVector> = ays.iter().map(|v| v.mul_i()).collect();
    let b = DMatrix::from_fn(n, n, |a, c| herm_re(&ays[c], &ys[a]));
    let c = DMatrix::from_fn(n, n, |a, c| herm_re(&jays[c], &ys[a]));
    (b, c)
}

fn split_clusters(m: &DMatrix<f64>, other: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut q = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    let mut score = f64::INFINITY;
    let mut start = 0;
    for k in 1..=n {
        let gap = if k < n {
            vals[k] - vals[k - 1]
        } else {
            f64::INFINITY
        };
        if gap >= CLUSTER_TOL {
            if k < n {
                score = score.min(gap);
            }
            if k - start > 1 {
                let v = q.columns(start, k - start).into_owned();
                let sub = v.transpose() * other * &v;
                let sub = (&sub + sub.transpose()) * 0.5;
                let w = SymmetricEigen::new(sub).eigenvectors;
                q.columns_mut(start, k - start).copy_from(&(v * w));
            }
            start = k;
        }
    }
    (q, score)
}

/// Orthogonal `Q` diagonalizing the commuting symmetric pair `(B, C)`:
/// diagonalize `B`, then `C` on each `B`-eigenspace. When `B` has nearly but
/// not exactly repeated eigenvalues, a rotated combination of `B` and `C`
/// with better separated spectrum is used instead.
fn joint_eigenframe(b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for beta in [0.0f64, 0.61, 1.37, 2.23, 2.89] {
        let m = b * beta.cos() + c * beta.sin();
        let other = c * beta.cos() - b * beta.sin();
        let (q, score) = split_clusters(&m, &other);
        if score > 1e-3 {
            return q;
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, q));
        }
    }
    best.expect("at least one candidate").1
}

fn spectrum_from_frame(fr: &LiftFrame, gauge: ProductStructure) -> Result<AngleSpectrum> {
    let n = fr.n();
    let e0 = orthonormal_frame(&fr.metric())?;
    let ys = horizontal_frame(fr, &e0);
    let (b, c) = bc_matrices(&fr.z, &ys, gauge);
    let commutator = (&b * &c - &c * &b).amax();
    if !(commutator <= COMMUTATOR_TOL) {
        return Err(GeomError::JointDiagonalization(commutator));
    }
    let bs = (&b + b.transpose()) * 0.5;
    let cs = (&c + c.transpose()) * 0.5;
    let q = joint_eigenframe(&bs, &cs);
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            let v = q.column(j);
            let bj = (v.transpose() * &bs * v)[(0, 0)];
            let cj = (v.transpose() * &cs * v)[(0, 0)];
            reduce_pi(0.5 * cj.atan2(bj))
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| raw[x].total_cmp(&raw[y]));
    let q = DMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    Ok(AngleSpectrum {
        point: fr.point.clone(),
        gauge,
        angles: order.iter().map(|&k| raw[k]).collect(),
        frame: &e0 * &q,
        b: q.transpose() * &b * &q,
        c: q.transpose() * &c * &q,
        commutator,
    })
}

/// Angle functions of the Gauss map with respect to `gauge`.
pub fn angle_spectrum(
    gm: &GaussMapField,
    gauge: ProductStructure,
    p: &[f64],
) -> Result<AngleSpectrum> {
    spectrum_from_frame(&gm.frame(p)?, gauge)
}

/// Algebraic identities of `A`, `B` and `C` on the tangent space at `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureResiduals {
    /// `‖A²X − X‖`.
    pub involution: f64,
    /// `|g(AX, Y) − g(X, AY)|`.
    pub symmetry: f64,
    /// `‖AJX + JAX‖`.
    pub anticommute: f64,
    /// `‖B² + C² − I‖_max`.
    pub pythagoras: f64,
    /// `‖BC − CB‖_max`.
    pub commutator: f64,
    /// `max(‖B − Bᵀ‖, ‖C − Cᵀ‖)`.
    pub bc_symmetry: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        [
            self.involution,
            self.symmetry,
            self.anticommute,
            self.pythagoras,
            self.commutator,
            self.bc_symmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn structure_residuals(
    gm: &GaussMapField,
    gauge: ProductStructure,
    p: &[f64],
) -> Result<StructureResiduals> {
    let fr = gm.frame(p)?;
    let e = orthonormal_frame(&fr.metric())?;
    let ys = horizontal_frame(&fr, &e);
    let z = fr.z.lift();
    let a = |w: &CVector| apply_a_raw(gauge, z, w);
    let norm = |w: &CVector| herm_re(w, w).abs().sqrt();
    let mut r = StructureResiduals {
        involution: 0.0,
        symmetry: 0.0,
        anticommute: 0.0,
        pythagoras: 0.0,
        commutator: 0.0,
        bc_symmetry: 0.0,
    };
    let mut probes = ys.clone();
    probes.extend(ys.iter().map(|y| y.mul_i()));
    for x in &probes {
        let ax = a(x);
        r.involution = r.involution.max(norm(&(&a(&ax) - x)));
        r.anticommute = r.anticommute.max(norm(&(&a(&x.mul_i()) + &ax.mul_i())));
        for y in &probes {
            r.symmetry = r.symmetry.max((herm_re(&ax, y) - herm_re(x, &a(y))).abs());
        }
    }
    let (b, c) = bc_matrices(&fr.z, &ys, gauge);
    let id = DMatrix::identity(ys.len(), ys.len());
    r.pythagoras = (&b * &b + &c * &c - id).amax();
    r.commutator = (&b * &c - &c * &b).amax();
    r.bc_symmetry = (&b - b.transpose()).amax().max((&c - c.transpose()).amax());
    Ok(r)
}

/// The spectrum in the gauge rotated by `φ = 2(θ_1 + … + θ_n)/n`, where the
/// angles sum to `0 mod π`.
pub fn gauge_normalize(spec: &AngleSpectrum) -> AngleSpectrum {
    let n = spec.n();
    // Σθ is only defined mod π, so the result is fixed up to a common shift by π/n
    let phi = 2.0 * spec.angles.iter().sum::<f64>() / n as f64;
    rotate_spectrum(spec, phi)
}

/// The same frame seen through the gauge rotated by `phi`: `θ_j ↦ θ_j − φ/2`.
pub fn rotate_spectrum(spec: &AngleSpectrum, phi: f64) -> AngleSpectrum {
    let n = spec.n();
    let (c, s) = (phi.cos(), phi.sin());
    let b = &spec.b * c + &spec.c * s;
    let cm = &spec.c * c - &spec.b * s;
    let raw: Vec<f64> = spec
        .angles
        .iter()
        .map(|t| reduce_pi(t - 0.5 * phi))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| raw[x].total_cmp(&raw[y]));
    let perm = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |r, k| m[(order[r], order[k])]);
    AngleSpectrum {
        point: spec.point.clone(),
        gauge: spec.gauge.rotated(phi),
        angles: order.iter().map(|&k| raw[k]).collect(),
        frame: DMatrix::from_fn(spec.frame.nrows(), n, |r, k| spec.frame[(r, order[k])]),
        b: perm(&b),
        c: perm(&cm),
        commutator: spec.commutator,
    }
}

/// `|λ_j − cot θ_j|` for one sorted pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePair {
    pub lambda: f64,
    pub cot_theta: f64,
    pub residual: f64,
}

/// `cot(θ_j − θ_k)` against `±(λ_jλ_k + 1)/(λ_j − λ_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFreePair {
    pub j: usize,
    pub k: usize,
    pub lambda_gap: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `min_± |lhs ∓ rhs| / max(1, |rhs|)`.
    pub residual: f64,
    /// `θ_j ≡ θ_k mod π` although `λ_j ≠ λ_k`.
    pub infinite: bool,
}

#[derive(Debug, Clone)]
pub struct ThetaLambda {
    pub pairs: Vec<CurvaturePair>,
    pub gauge_free: Vec<GaugeFreePair>,
}

impl ThetaLambda {
    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Worst gauge-free residual over pairs with `|λ_j − λ_k| ≥ min_gap`.
    pub fn max_gauge_free(&self, min_gap: f64) -> f64 {
        self.gauge_free
            .iter()
            .filter(|p| p.lambda_gap >= min_gap)
            .map(|p| {
                if p.infinite {
                    f64::INFINITY
                } else {
                    p.residual
                }
            })
            .fold(0.0, f64::max)
    }
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// Principal curvatures of `a` against the angle functions of its Gauss map
/// in the canonical gauge: `λ_j = cot θ_j`.
pub fn verify_theta_lambda(gm: &GaussMapField, p: &[f64]) -> Result<ThetaLambda> {
    let sd = shape_operator(gm.patch(), p, gm.cfg())?;
    let spec = angle_spectrum(gm, ProductStructure::CanonicalFromLift, p)?;
    let mut lambdas = sd.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    // cot is decreasing on (0, π): ascending cot means descending θ.
    let mut thetas = spec.angles.clone();
    thetas.sort_by(|x, y| y.total_cmp(x));
    let pairs = lambdas
        .iter()
        .zip(&thetas)
        .map(|(&l, &t)| {
            let c = cot(t);
            CurvaturePair {
                lambda: l,
                cot_theta: c,
                residual: (l - c).abs(),
            }
        })
        .collect();
    let mut gauge_free = Vec::new();
    let n = lambdas.len();
    for j in 0..n {
        for k in j + 1..n {
            let gap = (lambdas[j] - lambdas[k]).abs();
            if gap < LAMBDA_GAP {
                continue;
            }
            let rhs = (lambdas[j] * lambdas[k] + 1.0) / (lambdas[j] - lambdas[k]);
            let d = thetas[j] - thetas[k];
            let infinite = d.sin().abs() < 1e-12;
            let lhs = cot(d);
            let residual = if infinite {
                f64::INFINITY
            } else {
                (lhs - rhs).abs().min((lhs + rhs).abs()) / rhs.abs().max(1.0)
            };
            gauge_free.push(GaugeFreePair {
                j,
                k,
                lambda_gap: gap,
                lhs,
                rhs,
                residual,
                infinite,
            });
        }
    }
    Ok(ThetaLambda { pairs, gauge_free })
}

/// Components `h_{ij}^k = g(h(e_i, e_j), J e_k)` in the frame of a spectrum.
#[derive(Debug, Clone)]
pub struct LagrangianSff {
    n: usize,
    h: Vec<f64>,
    /// `g(H, J e_k) = (1/n) Σ_i h_{ii}^k`; note `g(JH, e_k) = −mean[k]`.
    pub mean: Vec<f64>,
}

impl LagrangianSff {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.h[(i * self.n + j) * self.n + k]
    }

    pub fn components(&self) -> &[f64] {
        &self.h
    }

    pub fn max_abs(&self) -> f64 {
        self.h.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Largest deviation from total symmetry in the three indices.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(j, i, k),
                        self.get(k, j, i),
                        self.get(i, k, j),
                        self.get(j, k, i),
                        self.get(k, i, j),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// `g(JH, e_k)`.
    pub fn jh(&self) -> Vec<f64> {
        self.mean.iter().map(|m| -m).collect()
    }
}

/// Contract the first three slots of an `n³` coordinate tensor with `e`.
fn to_frame3(t: &[f64], e: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let mut cur = t.to_vec();
    for _ in 0..3 {
        // Contract the leading index and rotate it to the back.
        let mut next = vec![0.0; n * n * n];
        for a in 0..n {
            for rest in 0..n * n {
                let mut s = 0.0;
                for i in 0..n {
                    s += e[(i, a)] * cur[i * n * n + rest];
                }
                next[rest * n + a] = s;
            }
        }
        cur = next;
    }
    cur
}

fn to_frame4(t: &[f64], e: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let mut cur = t.to_vec();
    let m = n * n * n;
    for _ in 0..4 {
        let mut next = vec![0.0; n * m];
        for a in 0..n {
            for rest in 0..m {
                let mut s = 0.0;
                for i in 0..n {
                    s += e[(i, a)] * cur[i * m + rest];
                }
                next[rest * n + a] = s;
            }
        }
        cur = next;
    }
    cur
}

fn check_point(spec: &AngleSpectrum, gm: &GaussMapField) -> Result<()> {
    if spec.n() != gm.n() {
        return Err(GeomError::Contract(
            "spectrum and Gauss map differ in dimension".into(),
        ));
    }
    Ok(())
}

/// Second fundamental form of the Gauss map in the frame of `spec`.
pub fn second_fundamental_form(gm: &GaussMapField, spec: &AngleSpectrum) -> Result<LagrangianSff> {
    check_point(spec, gm)?;
    let n = gm.n();
    let t = gm.coordinate_sff(&spec.point)?;
    let h = to_frame3(&t, &spec.frame, n);
    let mean = (0..n)
        .map(|k| (0..n).map(|i| h[(i * n + i) * n + k]).sum::<f64>() / n as f64)
        .collect();
    Ok(LagrangianSff { n, h, mean })
}

/// One direction of the mean-curvature identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmerTerm {
    pub direction: usize,
    /// `g(JH, dG ∂_i)`.
    pub lhs: f64,
    /// `(1/n) ∂_i Σ_j arctan λ_j`.
    pub rhs: f64,
    pub residual: f64,
}

fn arctan_sum(patch: &HypersurfacePatch, q: &[f64], cfg: &NumConfig) -> Result<f64> {
    Ok(shape_operator(patch, q, &cfg.fine())?
        .lambdas
        .iter()
        .map(|l| l.atan())
        .sum())
}

/// `g(JH, ·) = (1/n) d(Σ arctan λ_j)` along each coordinate direction.
pub fn verify_palmer(gm: &GaussMapField, p: &[f64]) -> Result<Vec<PalmerTerm>> {
    let n = gm.n();
    let cfg = *gm.cfg();
    gm.patch()
        .chart()
        .domain()
        .check_margin(p, cfg.second.reach() + 4.0 * cfg.first.step)?;
    let fr = gm.frame(p)?;
    let spec = spectrum_from_frame(&fr, ProductStructure::CanonicalFromLift)?;
    let sff = second_fundamental_form(gm, &spec)?;
    let jh = sff.jh();
    let eg = spec.frame.transpose() * fr.metric();
    let field = |q: &[f64]| Ok(vec![arctan_sum(gm.patch(), q, &cfg)?]);
    (0..n)
        .map(|i| {
            let lhs: f64 = (0..n).map(|k| jh[k] * eg[(k, i)]).sum();
            let mut dir = vec![0.0; n];
            dir[i] = 1.0;
            let rhs = derivative_along(&field, p, &dir, &cfg.second)?[0] / n as f64;
            Ok(PalmerTerm {
                direction: i,
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            })
        })
        .collect()
}

/// One instance of a frame relation, indexed by `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationTerm {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ThetaDerivatives {
    /// `e_i(θ_j − θ_k) = h_{jj}^i − h_{kk}^i`.
    pub derivative: Vec<RelationTerm>,
    /// `sin(θ_j − θ_k) ω_j^k(e_i) = cos(θ_j − θ_k) h_{ij}^k`.
    pub connection: Vec<RelationTerm>,
    /// Relations not evaluated because angle branches cross at the point.
    pub skipped: Vec<String>,
}

impl ThetaDerivatives {
    pub fn max_derivative(&self) -> f64 {
        self.derivative
            .iter()
            .map(|t| t.residual)
            .fold(0.0, f64::max)
    }

    pub fn max_connection(&self) -> f64 {
        self.connection
            .iter()
            .map(|t| t.residual)
            .fold(0.0, f64::max)
    }
}

/// A spectrum at a nearby point, relabelled to continue the base frame.
struct Aligned {
    angles: Vec<f64>,
    frame: DMatrix<f64>,
    spread: Vec<f64>,
}

fn align(
    base: &AngleSpectrum,
    metric: &DMatrix<f64>,
    clusters: &[Vec<usize>],
    other: &AngleSpectrum,
) -> Result<Aligned> {
    let n = base.n();
    let overlap = base.frame.transpose() * metric * &other.frame;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for c in 0..n {
        let best = (0..clusters.len())
            .max_by(|&x, &y| {
                let mx: f64 = clusters[x].iter().map(|&j| overlap[(j, c)].powi(2)).sum();
                let my: f64 = clusters[y].iter().map(|&j| overlap[(j, c)].powi(2)).sum();
                mx.total_cmp(&my)
            })
            .expect("nonempty");
        members[best].push(c);
    }
    let mut angles = vec![0.0; n];
    let mut frame = DMatrix::zeros(base.frame.nrows(), n);
    let mut spread = vec![0.0; clusters.len()];
    for (ci, (cl, mem)) in clusters.iter().zip(&members).enumerate() {
        if cl.len() != mem.len() {
            return Err(GeomError::EigenCrossing(format!(
                "angle cluster {cl:?} at {:?} cannot be continued",
                base.point
            )));
        }
        let m = DMatrix::from_fn(cl.len(), cl.len(), |r, c| overlap[(cl[r], mem[c])]);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let rot = vt.transpose() * u.transpose();
        let cols = DMatrix::from_fn(base.frame.nrows(), mem.len(), |r, c| {
            other.frame[(r, mem[c])]
        });
        let aligned = cols * &rot;
        let target = base.angles[cl[0]];
        let th: Vec<f64> = mem
            .iter()
            .map(|&c| unwrap_near(other.angles[c], target))
            .collect();
        let (lo, hi) = th
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        spread[ci] = hi - lo;
        for (r, &j) in cl.iter().enumerate() {
            frame.set_column(j, &aligned.column(r));
            angles[j] = (0..mem.len()).map(|c| rot[(c, r)].powi(2) * th[c]).sum();
        }
    }
    Ok(Aligned {
        angles,
        frame,
        spread,
    })
}

/// The frame relations between angle derivatives, the second fundamental
/// form and the connection forms, in the gauge of `spec`.
pub fn verify_theta_derivatives(
    gm: &GaussMapField,
    spec: &AngleSpectrum,
) -> Result<ThetaDerivatives> {
    check_point(spec, gm)?;
    let n = gm.n();
    let cfg = *gm.cfg();
    let p = spec.point.clone();
    let fr = gm.frame(&p)?;
    let metric = fr.metric();
    let sff = second_fundamental_form(gm, spec)?;
    let clusters = spec.clusters();
    let cluster_of: Vec<usize> = {
        let mut v = vec![0; n];
        for (ci, cl) in clusters.iter().enumerate() {
            for &j in cl {
                v[j] = ci;
            }
        }
        v
    };
    let ys: Vec<CVector> = (0..n)
        .map(|j| fr.push(spec.frame.column(j).as_slice()))
        .collect();
    let width = 2 * (n + 2);
    let mut out = ThetaDerivatives::default();
    for i in 0..n {
        let dir: Vec<f64> = spec.frame.column(i).iter().copied().collect();
        let scale = dir.iter().map(|x| x.abs()).fold(0.0, f64::max);
        gm.patch()
            .chart()
            .domain()
            .check_margin(&p, cfg.second.reach() * scale + 4.0 * cfg.first.step)?;
        let split = RefCell::new(vec![0.0f64; clusters.len()]);
        let field = |q: &[f64]| -> Result<Vec<f64>> {
            let fq = gm.frame(q)?;
            let sq = spectrum_from_frame(&fq, spec.gauge)?;
            let al = align(spec, &metric, &clusters, &sq)?;
            for (s, x) in split.borrow_mut().iter_mut().zip(&al.spread) {
                *s = s.max(*x);
            }
            let mut v = al.angles.clone();
            for j in 0..n {
                let y = fq.push(al.frame.column(j).as_slice());
                v.extend(y.re());
                v.extend(y.im());
            }
            Ok(v)
        };
        let d = derivative_along(&field, &p, &dir, &cfg.second)?;
        let split = split.into_inner();
        for j in 0..n {
            for k in j + 1..n {
                let same = cluster_of[j] == cluster_of[k];
                if same && split[cluster_of[j]] > SPLIT_TOL {
                    out.skipped.push(
                        GeomError::EigenCrossing(format!(
                            "θ_{j} and θ_{k} cross at {p:?} (direction e_{i})"
                        ))
                        .to_string(),
                    );
                    continue;
                }
                let lhs = d[j] - d[k];
                let rhs = sff.get(j, j, i) - sff.get(k, k, i);
                out.derivative.push(RelationTerm {
                    i,
                    j,
                    k,
                    lhs,
                    rhs,
                    residual: (lhs - rhs).abs(),
                });
            }
        }
        for j in 0..n {
            let dy = CVector::from_stacked(&d[n + j * width..n + (j + 1) * width])?;
            for k in 0..n {
                if j == k {
                    continue;
                }
                let delta = spec.angles[j] - spec.angles[k];
                if delta.sin().abs() < SINE_FLOOR {
                    continue;
                }
                let omega = herm_re(&dy, &ys[k]);
                let lhs = delta.sin() * omega;
                let rhs = delta.cos() * sff.get(i, j, k);
                out.connection.push(RelationTerm {
                    i,
                    j,
                    k,
                    lhs,
                    rhs,
                    residual: (lhs - rhs).abs(),
                });
            }
        }
    }
    Ok(out)
}

/// `K(e_i, e_j) = −2cos²(θ_i − θ_j) + g(h_ii, h_jj) − g(h_ij, h_ij)`.
pub fn sectional_curvature(spec: &AngleSpectrum, sff: &LagrangianSff, i: usize, j: usize) -> f64 {
    let d = spec.angles[i] - spec.angles[j];
    let mut k = -2.0 * d.cos().powi(2);
    for m in 0..sff.n() {
        k += sff.get(i, i, m) * sff.get(j, j, m) - sff.get(i, j, m).powi(2);
    }
    k
}

/// Riemann tensor `R_{ijkl} = g(R(∂_i, ∂_j)∂_k, ∂_l)` of the Gauss-map metric,
/// from finite-difference Christoffel symbols.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    n: usize,
    r: Vec<f64>,
    pub metric: DMatrix<f64>,
}

impl CurvatureTensor {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.r[((i * n + j) * n + k) * n + l]
    }

    /// Sectional curvature of the plane spanned by coordinate vectors `u, v`.
    pub fn sectional(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut num = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        num += self.get(i, j, k, l) * u[i] * v[j] * v[k] * u[l];
                    }
                }
            }
        }
        let g = |x: &[f64], y: &[f64]| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += self.metric[(i, j)] * x[i] * y[j];
                }
            }
            s
        };
        num / (g(u, u) * g(v, v) - g(u, v).powi(2))
    }

    /// Components in a frame given by coordinate columns.
    pub fn in_frame(&self, e: &DMatrix<f64>) -> Vec<f64> {
        to_frame4(&self.r, e, self.n)
    }
}

fn metric_field(gm: &GaussMapField, q: &[f64]) -> Result<Vec<f64>> {
    Ok(gm.frame(q)?.metric().as_slice().to_vec())
}

/// `Γ^m_{ij}` flattened as `(m, i, j)`.
fn christoffel(gm: &GaussMapField, q: &[f64]) -> Result<Vec<f64>> {
    let n = gm.n();
    let cfg = gm.cfg().second;
    let f = |x: &[f64]| metric_field(gm, x);
    let g = DMatrix::from_column_slice(n, n, &f(q)?);
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|k| partial(&f, q, k, &cfg))
        .collect::<Result<_>>()?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| GeomError::Signature("singular Gauss-map metric".into()))?;
    // ∂_k g_ij with column-major storage: entry (i, j) at j*n + i.
    let d = |k: usize, i: usize, j: usize| dg[k][j * n + i];
    let mut out = vec![0.0; n * n * n];
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(m, l)] * (d(i, l, j) + d(j, l, i) - d(l, i, j));
                }
                out[(m * n + i) * n + j] = 0.5 * s;
            }
        }
    }
    Ok(out)
}

/// Intrinsic curvature of the metric induced by the Gauss map at `p`.
pub fn intrinsic_curvature(gm: &GaussMapField, p: &[f64]) -> Result<CurvatureTensor> {
    let n = gm.n();
    let cfg = *gm.cfg();
    gm.patch()
        .chart()
        .domain()
        .check_margin(p, 2.0 * cfg.second.reach() + 4.0 * cfg.first.step)?;
    let gam = christoffel(gm, p)?;
    let f = |x: &[f64]| christoffel(gm, x);
    let dgam: Vec<Vec<f64>> = (0..n)
        .map(|k| partial(&f, p, k, &cfg.second))
        .collect::<Result<_>>()?;
    let metric = DMatrix::from_column_slice(n, n, &metric_field(gm, p)?);
    let g = |m: usize, i: usize, j: usize| gam[(m * n + i) * n + j];
    let dg = |k: usize, m: usize, i: usize, j: usize| dgam[k][(m * n + i) * n + j];
    // R^l_{kij} = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let mut up = vec![0.0; n * n * n * n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = dg(i, l, j, k) - dg(j, l, i, k);
                    for m in 0..n {
                        s += g(l, i, m) * g(m, j, k) - g(l, j, m) * g(m, i, k);
                    }
                    up[((l * n + k) * n + i) * n + j] = s;
                }
            }
        }
    }
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    r[((i * n + j) * n + k) * n + l] = (0..n)
                        .map(|m| up[((m * n + k) * n + i) * n + j] * metric[(m, l)])
                        .sum();
                }
            }
        }
    }
    Ok(CurvatureTensor { n, r, metric })
}

/// Worst residuals of the Gauss and Codazzi equations, in the frame of `spec`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussCodazzi {
    pub gauss: f64,
    pub codazzi: f64,
}

/// Gauss equation: finite-difference intrinsic curvature against the
/// `B`, `C`, `h` expression. Codazzi equation: antisymmetrized covariant
/// derivative of `h` against the `B`, `C` expression.
pub fn verify_gauss_codazzi(
    gm: &GaussMapField,
    spec: &AngleSpectrum,
    sff: &LagrangianSff,
) -> Result<GaussCodazzi> {
    check_point(spec, gm)?;
    let n = gm.n();
    let p = &spec.point;
    let cfg = *gm.cfg();
    let curv = intrinsic_curvature(gm, p)?;
    let r = curv.in_frame(&spec.frame);
    let (b, c) = (&spec.b, &spec.c);
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let mut gauss: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut rhs = -delta(j, k) * delta(i, l) + delta(i, k) * delta(j, l)
                        - b[(j, k)] * b[(i, l)]
                        + b[(i, k)] * b[(j, l)]
                        - c[(j, k)] * c[(i, l)]
                        + c[(i, k)] * c[(j, l)];
                    for m in 0..n {
                        rhs += sff.get(j, k, m) * sff.get(i, l, m)
                            - sff.get(i, k, m) * sff.get(j, l, m);
                    }
                    gauss = gauss.max((r[((i * n + j) * n + k) * n + l] - rhs).abs());
                }
            }
        }
    }

    // ∇_i T_jkl in coordinates, then to the frame.
    gm.patch()
        .chart()
        .domain()
        .check_margin(p, 2.0 * cfg.second.reach() + 4.0 * cfg.first.step)?;
    let t = gm.coordinate_sff(p)?;
    let f = |x: &[f64]| gm.coordinate_sff(x);
    let dt: Vec<Vec<f64>> = (0..n)
        .map(|i| partial(&f, p, i, &cfg.second))
        .collect::<Result<_>>()?;
    let gam = christoffel(gm, p)?;
    let g = |m: usize, i: usize, j: usize| gam[(m * n + i) * n + j];
    let tt = |j: usize, k: usize, l: usize| t[(j * n + k) * n + l];
    let mut cov = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = dt[i][(j * n + k) * n + l];
                    for m in 0..n {
                        s -= g(m, i, j) * tt(m, k, l)
                            + g(m, i, k) * tt(j, m, l)
                            + g(m, i, l) * tt(j, k, m);
                    }
                    cov[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let cov = to_frame4(&cov, &spec.frame, n);
    let at = |i: usize, j: usize, k: usize, l: usize| cov[((i * n + j) * n + k) * n + l];
    let mut codazzi: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = at(i, j, k, l) - at(j, i, k, l);
                    let rhs = b[(j, k)] * c[(i, l)] - b[(i, k)] * c[(j, l)] - c[(j, k)] * b[(i, l)]
                        + c[(i, k)] * b[(j, l)];
                    codazzi = codazzi.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(GaussCodazzi { gauss, codazzi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{
        golden_lambdas, hyperboloid, instantiate, interleave, wave_profile, CatalogEntry, FamilyId,
        Profile,
    };
    use crate::quadric::same_point;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn cfg() -> NumConfig {
        NumConfig::default()
    }

    fn gauss(entry: &CatalogEntry) -> GaussMapField {
        build_gauss_map(&instantiate(entry).unwrap(), &cfg()).unwrap()
    }

    fn canonical(gm: &GaussMapField, p: &[f64]) -> AngleSpectrum {
        angle_spectrum(gm, ProductStructure::CanonicalFromLift, p).unwrap()
    }

    fn real_lift(re: &[f64], im: &[f64]) -> QuadricPoint {
        let s = FRAC_1_SQRT_2;
        let re: Vec<f64> = re.iter().map(|x| x * s).collect();
        let im: Vec<f64> = im.iter().map(|x| x * s).collect();
        QuadricPoint::new(CVector::from_parts(&re, &im).unwrap()).unwrap()
    }

    #[test]
    fn umbilic_right_angle_lift_is_exact() {
        let gm = gauss(&CatalogEntry::umbilic(FRAC_PI_2, 2).unwrap());
        let p = [1.0, 0.5];
        let z = gm.point(&p).unwrap();
        let hp = hyperboloid(&p);
        let mut im = vec![1.0];
        im.extend(vec![0.0; 3]);
        let mut re = vec![0.0];
        re.extend(hp);
        let expect = real_lift(&re, &im);
        let diff = (z.lift() - expect.lift()).norm_euclid();
        assert!(diff < 1e-12, "{diff:e}");
    }

    #[test]
    fn umbilic_and_product_gauss_maps_are_fixed_points() {
        for alpha in [0.4, 1.0, 2.2] {
            let gm = gauss(&CatalogEntry::umbilic(alpha, 2).unwrap());
            let p = [0.8, 0.6];
            let hp = hyperboloid(&p);
            let mut re = vec![0.0];
            re.extend(&hp);
            let mut im = vec![1.0, 0.0, 0.0, 0.0];
            im.truncate(4);
            assert!(same_point(&gm.point(&p).unwrap(), &real_lift(&re, &im)).equal);
        }
        // product: [ψ(ip, q)]
        let gm = gauss(&CatalogEntry::product(0.7, 1, 3).unwrap());
        let p = [0.9, 1.1, 0.3];
        let (hp, hq) = (hyperboloid(&p[..1]), hyperboloid(&p[1..]));
        let zeros_p = vec![0.0; hp.len()];
        let zeros_q = vec![0.0; hq.len()];
        let re = interleave(&zeros_p, &hq);
        let im = interleave(&hp, &zeros_q);
        let sp = same_point(&gm.point(&p).unwrap(), &real_lift(&re, &im));
        assert!(sp.equal, "residual {:e}", sp.residual);
    }

    #[test]
    fn lagrangian_and_horizontal() {
        let entries = [
            CatalogEntry::umbilic(FRAC_PI_3, 3).unwrap(),
            CatalogEntry::rotation(Profile::constant_g(0.5).unwrap(), 2).unwrap(),
        ];
        for (e, tol) in entries.iter().zip([1e-8, 1e-6]) {
            let gm = gauss(e);
            for p in gm.patch().sample().grid(3) {
                assert!(lagrangian_residual(&gm, &p).unwrap() <= tol);
                assert!(horizontality_residual(&gm, &p).unwrap() <= 1e-7);
            }
        }
    }

    #[test]
    fn corrupted_lift_is_rejected() {
        let patch = instantiate(&CatalogEntry::umbilic(FRAC_PI_4, 2).unwrap()).unwrap();
        let chart = patch.chart().clone();
        let bad = SmoothMap::from_fn(chart.domain().clone(), 8, move |p| {
            let a = chart.eval(p)?;
            Ok(a.iter().chain(&a).map(|x| x * FRAC_1_SQRT_2).collect())
        });
        let err = GaussMapField::from_lift(patch, bad, cfg()).unwrap_err();
        assert_eq!(err.kind(), "InvalidLiftError");
    }

    #[test]
    fn umbilic_angles_equal_alpha() {
        let gm = gauss(&CatalogEntry::umbilic(FRAC_PI_4, 3).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        for t in &spec.angles {
            assert!((t - FRAC_PI_4).abs() < 1e-9, "{t}");
        }
        assert!(spec.frame_residual() < 1e-9);
        let m = spec.frame.transpose() * gm.frame(&spec.point).unwrap().metric() * &spec.frame;
        assert!((m - DMatrix::identity(3, 3)).amax() < 1e-9);
    }

    #[test]
    fn product_angles_on_the_rephased_lift() {
        // With the lift ψ(ip, q)/√2 the angle is 0 along the H^k factor and π/2
        // along the H^{n-k} factor.
        let entry = CatalogEntry::product(FRAC_PI_3, 1, 3).unwrap();
        let patch = instantiate(&entry).unwrap();
        let lift = SmoothMap::from_fn(patch.chart().domain().clone(), 10, |p: &[f64]| {
            let (hp, hq) = (hyperboloid(&p[..1]), hyperboloid(&p[1..]));
            let re = interleave(&vec![0.0; hp.len()], &hq);
            let im = interleave(&hp, &vec![0.0; hq.len()]);
            Ok(re.iter().chain(&im).map(|x| x * FRAC_1_SQRT_2).collect())
        });
        let gm = GaussMapField::from_lift(patch, lift, cfg()).unwrap();
        let p = gm.patch().sample().center();
        let spec = canonical(&gm, &p);
        for j in 0..3 {
            let e = spec.frame.column(j);
            let t = spec.angles[j];
            if e[0].abs() > 0.5 {
                assert!(angle_distance(t, 0.0) < 1e-8, "θ on H^k = {t}");
            } else {
                assert!(angle_distance(t, FRAC_PI_2) < 1e-8, "θ on H^(n-k) = {t}");
            }
        }
        // A X = +X along the first factor.
        let fr = gm.frame(&p).unwrap();
        let x = fr.push(&[1.0, 0.0, 0.0]);
        let ax = apply_a_raw(ProductStructure::CanonicalFromLift, fr.z.lift(), &x);
        assert!((&ax - &x).norm_euclid() < 1e-8);
    }

    #[test]
    fn rotation_angles_match_closed_form() {
        let e = CatalogEntry::rotation(Profile::constant_g(0.5).unwrap(), 2).unwrap();
        let gm = gauss(&e);
        let p = gm.patch().sample().center();
        let spec = canonical(&gm, &p);
        let mut cots: Vec<f64> = spec.angles.iter().map(|t| 1.0 / t.tan()).collect();
        let mut gold = golden_lambdas(&e, &p).unwrap();
        cots.sort_by(f64::total_cmp);
        gold.sort_by(f64::total_cmp);
        for (c, g) in cots.iter().zip(&gold) {
            assert!((c - g).abs() < 1e-6, "{c} vs {g}");
        }
    }

    #[test]
    fn non_lagrangian_tangent_plane_fails_joint_diagonalization() {
        // A J-invariant tangent plane span{X, JX}: B and C do not commute.
        let z = real_lift(&[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]);
        let x = CVector::from_parts(&[0.0, 0.0, 1.0, 0.0], &[0.0; 4]).unwrap();
        let fr = LiftFrame {
            point: vec![0.0, 0.0],
            z,
            dz: vec![x.clone(), x.mul_i()],
        };
        let err = spectrum_from_frame(&fr, ProductStructure::CanonicalFromLift).unwrap_err();
        assert_eq!(err.kind(), "JointDiagonalizationError");
    }

    #[test]
    fn structure_identities_hold_in_both_gauges() {
        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 3).unwrap());
        let p = gm.patch().sample().center();
        for gauge in [
            ProductStructure::CanonicalFromLift,
            ProductStructure::Rotated { phase: 0.9 },
        ] {
            let r = structure_residuals(&gm, gauge, &p).unwrap();
            assert!(r.max() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn gauge_rotation_shifts_angles() {
        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 2).unwrap());
        let p = gm.patch().sample().center();
        let base = canonical(&gm, &p);
        for phi in [0.3, FRAC_PI_2, PI] {
            let rot = angle_spectrum(&gm, ProductStructure::Rotated { phase: phi }, &p).unwrap();
            let mut want: Vec<f64> = base
                .angles
                .iter()
                .map(|t| reduce_pi(t - phi / 2.0))
                .collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in rot.angles.iter().zip(&want) {
                assert!(angle_distance(*a, *b) < 1e-9, "φ = {phi}: {a} vs {b}");
            }
            // the formula-level rotation agrees with recomputation
            let moved = rotate_spectrum(&base, phi);
            for (a, b) in moved.angles.iter().zip(&rot.angles) {
                assert!(angle_distance(*a, *b) < 1e-9);
            }
        }
    }

    #[test]
    fn gauge_normalize_examples() {
        // sorted multisets of angles mod π agree after a common shift
        fn shifted(a: &[f64], b: &[f64], shift: f64) -> bool {
            let mut x: Vec<f64> = a.iter().map(|t| reduce_pi(t + shift)).collect();
            let mut y: Vec<f64> = b.iter().map(|t| reduce_pi(*t)).collect();
            x.sort_by(f64::total_cmp);
            y.sort_by(f64::total_cmp);
            // compare cyclically so values near 0 and near π line up
            (0..x.len()).any(|r| {
                x.iter()
                    .zip(y.iter().cycle().skip(r))
                    .all(|(u, v)| angle_distance(*u, *v) < 1e-8)
            })
        }

        let gm = gauss(&CatalogEntry::umbilic(0.9, 3).unwrap());
        let p = gm.patch().sample().center();
        let norm = gauge_normalize(&canonical(&gm, &p));
        for t in &norm.angles {
            assert!(angle_distance(*t, 0.0) < 1e-9);
        }

        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 3).unwrap());
        let p = gm.patch().sample().center();
        let direct = gauge_normalize(&canonical(&gm, &p));
        let sum: f64 = direct.angles.iter().sum();
        assert!(angle_distance(sum, 0.0) < 1e-9);
        // an already normalized spectrum moves by −Σθ/n, a multiple of π/n
        let again = gauge_normalize(&direct);
        let j = (sum / PI).round();
        assert!(shifted(&direct.angles, &again.angles, -j * PI / 3.0));
        if j.rem_euclid(3.0) == 0.0 {
            assert!(shifted(&direct.angles, &again.angles, 0.0));
        }

        let via = gauge_normalize(
            &angle_spectrum(&gm, ProductStructure::Rotated { phase: 1.1 }, &p).unwrap(),
        );
        assert!(
            (0..3).any(|k| shifted(&direct.angles, &via.angles, k as f64 * PI / 3.0)),
            "{direct:?} vs {via:?}"
        );
    }

    #[test]
    fn theta_lambda_on_examples() {
        let gm = gauss(&CatalogEntry::product(FRAC_PI_3, 1, 2).unwrap());
        let tl = verify_theta_lambda(&gm, &gm.patch().sample().center()).unwrap();
        assert!(tl.max_residual() < 1e-6);
        assert_eq!(tl.gauge_free.len(), 1);
        let pair = tl.gauge_free[0];
        assert!(
            pair.rhs.abs() < 1e-9 && pair.lhs.abs() < 1e-6 && pair.residual < 1e-6,
            "{pair:?}"
        );

        let gm = gauss(&CatalogEntry::umbilic(1.2, 2).unwrap());
        let tl = verify_theta_lambda(&gm, &gm.patch().sample().center()).unwrap();
        assert!(tl
            .pairs
            .iter()
            .all(|p| (p.cot_theta - 1.0 / 1.2f64.tan()).abs() < 1e-6));
        assert!(tl.gauge_free.is_empty());

        let e = CatalogEntry::default_for(FamilyId::RotationMinusNull, 2).unwrap();
        let gm = gauss(&e);
        let p = gm.patch().sample().center();
        let tl = verify_theta_lambda(&gm, &p).unwrap();
        let mut gold = golden_lambdas(&e, &p).unwrap();
        gold.sort_by(f64::total_cmp);
        for (pair, g) in tl.pairs.iter().zip(&gold) {
            assert!((pair.cot_theta - g).abs() < 1e-6);
        }
        assert!(tl.max_gauge_free(1e-3) < 1e-4);
    }

    #[test]
    fn totally_geodesic_examples() {
        for e in [
            CatalogEntry::umbilic(0.8, 3).unwrap(),
            CatalogEntry::product(0.8, 1, 3).unwrap(),
        ] {
            let gm = gauss(&e);
            for p in gm.patch().sample().grid(2) {
                let spec = canonical(&gm, &p);
                let sff = second_fundamental_form(&gm, &spec).unwrap();
                assert!(sff.max_abs() < 1e-6, "{}", sff.max_abs());
            }
        }
    }

    #[test]
    fn sff_is_totally_symmetric() {
        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 3).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        assert!(sff.max_abs() > 1e-3);
        assert!(sff.symmetry_residual() < 1e-6);
    }

    #[test]
    fn palmer_formula() {
        for e in [
            CatalogEntry::umbilic(0.8, 2).unwrap(),
            CatalogEntry::product(0.8, 1, 2).unwrap(),
        ] {
            let gm = gauss(&e);
            for t in verify_palmer(&gm, &gm.patch().sample().center()).unwrap() {
                assert!(t.lhs.abs() < 1e-6 && t.rhs.abs() < 1e-6, "{t:?}");
            }
        }
        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 2).unwrap());
        let mut seen: f64 = 0.0;
        for p in gm.patch().sample().grid(3) {
            for t in verify_palmer(&gm, &p).unwrap() {
                seen = seen.max(t.lhs.abs());
                assert!(t.residual < 1e-5, "{t:?}");
            }
        }
        assert!(seen > 1e-3, "profile should not be isoparametric");
    }

    #[test]
    fn theta_derivative_relations() {
        let gm = gauss(&CatalogEntry::product(0.6, 1, 2).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let td = verify_theta_derivatives(&gm, &spec).unwrap();
        assert!(td.max_derivative() < 1e-8 && td.max_connection() < 1e-8);
        for t in td.derivative.iter().chain(&td.connection) {
            assert!(t.lhs.abs() < 1e-8 && t.rhs.abs() < 1e-8);
        }

        for n in [2, 3] {
            let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), n).unwrap());
            let spec = canonical(&gm, &gm.patch().sample().center());
            let td = verify_theta_derivatives(&gm, &spec).unwrap();
            assert!(td.skipped.is_empty(), "{:?}", td.skipped);
            assert!(!td.connection.is_empty());
            assert!(
                td.max_derivative() < 1e-4 && td.max_connection() < 1e-4,
                "{td:?}"
            );
            let moving = td
                .derivative
                .iter()
                .map(|t| t.lhs.abs())
                .fold(0.0, f64::max);
            assert!(moving > 1e-3);
        }
    }

    #[test]
    fn constant_curvature_examples() {
        let gm = gauss(&CatalogEntry::umbilic(0.8, 2).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        assert!((sectional_curvature(&spec, &sff, 0, 1) + 2.0).abs() < 1e-6);

        let gm = gauss(&CatalogEntry::product(0.8, 1, 2).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        assert!(sectional_curvature(&spec, &sff, 0, 1).abs() < 1e-6);

        // n = 3, k = 2: planes inside one factor have K = −2, mixed planes 0
        let gm = gauss(&CatalogEntry::product(0.8, 2, 3).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                let k = sectional_curvature(&spec, &sff, i, j);
                let same = angle_distance(spec.angles[i], spec.angles[j]) < 1e-6;
                let want = if same { -2.0 } else { 0.0 };
                assert!((k - want).abs() < 1e-6, "({i},{j}): {k}");
            }
        }
    }

    #[test]
    fn intrinsic_oracle_matches_formula() {
        let gm = gauss(&CatalogEntry::rotation(wave_profile().unwrap(), 2).unwrap());
        let p = gm.patch().sample().center();
        let spec = canonical(&gm, &p);
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        let curv = intrinsic_curvature(&gm, &p).unwrap();
        let (e0, e1): (Vec<f64>, Vec<f64>) = (
            spec.frame.column(0).iter().copied().collect(),
            spec.frame.column(1).iter().copied().collect(),
        );
        assert!((curv.sectional(&e0, &e1) - sectional_curvature(&spec, &sff, 0, 1)).abs() < 1e-5);
    }

    #[test]
    fn gauss_and_codazzi_equations() {
        let gm = gauss(&CatalogEntry::umbilic(0.8, 2).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        let gc = verify_gauss_codazzi(&gm, &spec, &sff).unwrap();
        assert!(gc.gauss < 1e-5 && gc.codazzi < 1e-5, "{gc:?}");

        let gm = gauss(&CatalogEntry::product(0.8, 1, 3).unwrap());
        let spec = canonical(&gm, &gm.patch().sample().center());
        let sff = second_fundamental_form(&gm, &spec).unwrap();
        let gc = verify_gauss_codazzi(&gm, &spec, &sff).unwrap();
        assert!(gc.codazzi < 1e-5, "{gc:?}");

        for id in [
            FamilyId::RotationPlusMinus,
            FamilyId::RotationMinusMinus,
            FamilyId::RotationMinusNull,
        ] {
            let gm = gauss(&CatalogEntry::default_for(id, 2).unwrap());
            let spec = canonical(&gm, &gm.patch().sample().center());
            let sff = second_fundamental_form(&gm, &spec).unwrap();
            let gc = verify_gauss_codazzi(&gm, &spec, &sff).unwrap();
            assert!(gc.gauss < 1e-4 && gc.codazzi < 1e-4, "{id}: {gc:?}");
        }
    }

    #[test]
    fn lift_can_be_rephased_without_changing_points() {
        let gm = gauss(&CatalogEntry::umbilic(0.5, 2).unwrap());
        let p = [1.0, 0.4];
        let z = gm.point(&p).unwrap();
        let w = QuadricPoint::new(z.lift().scale(Complex64::from_polar(1.0, 0.4))).unwrap();
        assert!(same_point(&z, &w).equal);
    }
}
