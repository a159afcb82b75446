//! Evaluate the selected suites over a grid.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qgv_core::catalog::{
    golden_angles, golden_lambdas, instantiate, random_profile, wave_profile, CatalogEntry,
    FamilyId, Profile,
};
use qgv_core::diff::{Domain, GenericFn, SmoothMap};
use qgv_core::dual::Scalar;
use qgv_core::gauss::{
    angle_distance, angle_spectrum, build_gauss_map, gauge_normalize, horizontality_residual,
    intrinsic_curvature, lagrangian_residual, second_fundamental_form, sectional_curvature,
    structure_residuals, verify_gauss_codazzi, verify_palmer, verify_theta_derivatives,
    verify_theta_lambda, AngleSpectrum, GaussMapField, LagrangianSff,
};
use qgv_core::hypersurface::{
    parallel_patch, shape_operator, HypersurfacePatch, NumConfig, Orientation,
};
use qgv_core::quadric::{same_point, ProductStructure};
use qgv_core::{GeomError, Result as GeomResult};

use crate::checks::{CheckInfo, Scope, Suite, CHECKS};
use crate::config::{
    ChartSpec, OrientationChoice, ProfileChoice, RunConfig, DEFAULT_RANDOM_POINTS,
};
use crate::expr::Expr;
use crate::report::{Record, VerificationReport};
use crate::CliError;

/// Offsets of the parallel hypersurfaces compared against the original.
pub const PARALLEL_OFFSETS: [f64; 3] = [0.2, 0.5, 1.0];
/// Gauge rotations applied by the gauge suite.
pub const GAUGE_PHASES: [f64; 3] = [0.3, PI / 2.0, PI];
/// Gap below which a pair of principal curvatures is skipped by the
/// gauge-free relation.
pub const LAMBDA_GAP: f64 = 1e-3;
/// Margin between a user chart's sampling box and its evaluation domain.
const CHART_MARGIN: f64 = 0.25;

/// The hypersurface a run is about.
pub struct Target {
    pub patch: HypersurfacePatch,
    pub entry: Option<CatalogEntry>,
}

impl Target {
    fn totally_geodesic(&self) -> bool {
        matches!(
            self.entry.as_ref().map(|e| e.id()),
            Some(FamilyId::Umbilic | FamilyId::Product)
        )
    }

    fn applies(&self, info: &CheckInfo) -> bool {
        match info.scope {
            Scope::Always => true,
            Scope::Catalog => self.entry.is_some(),
            Scope::TotallyGeodesic => self.totally_geodesic(),
        }
    }
}

struct ExprChart {
    exprs: Arc<Vec<Expr>>,
}

impl GenericFn for ExprChart {
    fn call<S: Scalar>(&self, p: &[S]) -> GeomResult<Vec<S>> {
        Ok(self.exprs.iter().map(|e| e.eval(p)).collect())
    }
}

fn config_err(e: GeomError) -> CliError {
    CliError::Config(e.to_string())
}

fn profile_for(id: FamilyId, choice: ProfileChoice) -> Result<Profile, CliError> {
    let kind = id
        .rotation_kind()
        .ok_or_else(|| CliError::Config(format!("example `{id}` takes no profile")))?;
    let plus_minus_only = |what: &str| {
        CliError::Config(format!(
            "the {what} profile belongs to rotation_sig_plus_minus"
        ))
    };
    match choice {
        ProfileChoice::Default => Ok(CatalogEntry::default_for(id, 1)
            .map_err(config_err)?
            .profile()
            .expect("rotation family")
            .clone()),
        ProfileChoice::Wave if id == FamilyId::RotationPlusMinus => {
            wave_profile().map_err(config_err)
        }
        ProfileChoice::Wave => Err(plus_minus_only("wave")),
        ProfileChoice::ConstantG(g) if id == FamilyId::RotationPlusMinus => {
            Profile::constant_g(g).map_err(config_err)
        }
        ProfileChoice::ConstantG(_) => Err(plus_minus_only("constant_g")),
        ProfileChoice::Random(seed) => {
            random_profile(kind, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(config_err)
        }
    }
}

fn chart_patch(spec: &ChartSpec, cfg: &NumConfig) -> Result<HypersurfacePatch, CliError> {
    let exprs = spec
        .coords
        .iter()
        .map(|c| Expr::parse(c, &spec.params, &spec.constants))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let bounds: Vec<(f64, f64)> = spec.domain.iter().map(|[a, b]| (*a, *b)).collect();
    let sample = Domain::from_bounds(&bounds).map_err(config_err)?;
    let domain = sample.expand(CHART_MARGIN).map_err(config_err)?;
    let n = spec.params.len();
    let chart = SmoothMap::generic(
        domain,
        n + 2,
        ExprChart {
            exprs: Arc::new(exprs),
        },
    );
    let orientation = match spec.orientation {
        OrientationChoice::Positive => Orientation::Positive,
        OrientationChoice::Negative => Orientation::Negative,
    };
    let patch = HypersurfacePatch::new(chart, sample, orientation).map_err(config_err)?;
    patch.check_invariants(3, cfg).map_err(config_err)?;
    Ok(patch)
}

/// Build the patch named by the config, with the grid box applied.
pub fn build_target(cfg: &RunConfig, ncfg: &NumConfig) -> Result<Target, CliError> {
    let s = &cfg.source;
    let (patch, entry) = match (&s.example, &s.chart) {
        (Some(name), _) => {
            let id = FamilyId::from_str(name).map_err(config_err)?;
            let entry = match id {
                FamilyId::Umbilic => CatalogEntry::umbilic(cfg.alpha(), s.n),
                FamilyId::Product => CatalogEntry::product(cfg.alpha(), s.k.unwrap_or(1), s.n),
                _ => CatalogEntry::rotation(
                    profile_for(id, s.profile.unwrap_or(ProfileChoice::Default))?,
                    s.n,
                ),
            }
            .map_err(config_err)?;
            (instantiate(&entry).map_err(config_err)?, Some(entry))
        }
        (None, Some(chart)) => (chart_patch(chart, ncfg)?, None),
        (None, None) => return Err(CliError::Config("source needs `example` or `chart`".into())),
    };
    let patch = match &cfg.grid.bounds {
        Some(b) => {
            let bounds: Vec<(f64, f64)> = b.iter().map(|[a, b]| (*a, *b)).collect();
            patch
                .with_sample(Domain::from_bounds(&bounds).map_err(config_err)?)
                .map_err(config_err)?
        }
        None => patch,
    };
    Ok(Target { patch, entry })
}

/// Grid points, followed by seeded random points when a seed is set.
pub fn sample_points(cfg: &RunConfig, dom: &Domain) -> Vec<Vec<f64>> {
    let mut pts = dom.grid(cfg.grid.points);
    if let Some(seed) = cfg.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cfg.random_points.unwrap_or(DEFAULT_RANDOM_POINTS) {
            pts.push(
                (0..dom.dim())
                    .map(|i| rng.gen_range(dom.lo()[i]..=dom.hi()[i]))
                    .collect(),
            );
        }
    }
    pts
}

/// Override by check id, then by suite, then the registry default.
pub fn tolerance(cfg: &RunConfig, info: &CheckInfo) -> f64 {
    cfg.tolerances
        .get(info.id)
        .or_else(|| cfg.tolerances.get(info.suite.as_str()))
        .copied()
        .unwrap_or(info.tolerance)
}

/// Smallest worst-case distance between two angle multisets mod π, over
/// cyclic relabellings of the sorted lists.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    let sort = |v: &[f64]| {
        let mut v: Vec<f64> = v.iter().map(|t| t.rem_euclid(PI)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sort(a), sort(b));
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    (0..n.max(1))
        .map(|r| {
            (0..n)
                .map(|i| angle_distance(a[i], b[(i + r) % n]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

struct Context<'a> {
    cfg: &'a RunConfig,
    ncfg: NumConfig,
    target: &'a Target,
    gm: GeomResult<GaussMapField>,
    parallel: Vec<(f64, GeomResult<GaussMapField>)>,
    checks: Vec<&'static CheckInfo>,
}

/// Per-point quantities shared between checks.
struct PointData {
    spec: GeomResult<AngleSpectrum>,
    sff: GeomResult<LagrangianSff>,
}

impl Context<'_> {
    fn gm(&self) -> GeomResult<&GaussMapField> {
        self.gm.as_ref().map_err(Clone::clone)
    }

    fn point_data(&self, p: &[f64]) -> PointData {
        let spec = self
            .gm()
            .and_then(|gm| angle_spectrum(gm, ProductStructure::CanonicalFromLift, p));
        let sff = match (&self.gm, &spec) {
            (Ok(gm), Ok(s)) => second_fundamental_form(gm, s),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        PointData { spec, sff }
    }

    fn evaluate(&self, p: &[f64]) -> Vec<Record> {
        debug!("evaluating {p:?}");
        let data = self.point_data(p);
        self.checks
            .iter()
            .map(|info| {
                let tol = tolerance(self.cfg, info);
                match self.residual(info.id, p, &data) {
                    Ok(r) => Record::measured(info, p, r, tol),
                    Err(e) => Record::failed(info, p, tol, e.kind(), e.to_string()),
                }
            })
            .collect()
    }

    fn residual(&self, id: &str, p: &[f64], d: &PointData) -> GeomResult<f64> {
        let gm = self.gm()?;
        let spec = || d.spec.as_ref().map_err(Clone::clone);
        let sff = || d.sff.as_ref().map_err(Clone::clone);
        let entry = || self.target.entry.as_ref().expect("catalog scope");
        match id {
            "lagrangian" => lagrangian_residual(gm, p),
            "horizontality" => horizontality_residual(gm, p),
            "product_structure" => {
                let r = structure_residuals(gm, ProductStructure::CanonicalFromLift, p)?;
                Ok(r.involution.max(r.symmetry).max(r.anticommute))
            }
            "bc_algebra" => {
                let r = structure_residuals(gm, ProductStructure::CanonicalFromLift, p)?;
                Ok(r.pythagoras.max(r.commutator).max(r.bc_symmetry))
            }
            "golden_lambda" => {
                let got = shape_operator(&self.target.patch, p, &self.ncfg)?.lambdas;
                let mut want = golden_lambdas(entry(), p)?;
                want.sort_by(f64::total_cmp);
                Ok(got
                    .iter()
                    .zip(&want)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            }
            "theta_lambda" => Ok(verify_theta_lambda(gm, p)?.max_residual()),
            "theta_lambda_gauge_free" => Ok(verify_theta_lambda(gm, p)?.max_gauge_free(LAMBDA_GAP)),
            "golden_angle" => Ok(multiset_distance(
                &spec()?.angles,
                &golden_angles(entry(), p)?,
            )),
            "theta_derivatives" => {
                let td = verify_theta_derivatives(gm, spec()?)?;
                Ok(td.max_derivative().max(td.max_connection()))
            }
            "palmer" => Ok(verify_palmer(gm, p)?
                .iter()
                .map(|t| t.residual)
                .fold(0.0, f64::max)),
            "minimal" => {
                let h = sff()?.jh().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let d = verify_palmer(gm, p)?
                    .iter()
                    .map(|t| t.rhs.abs())
                    .fold(0.0, f64::max);
                Ok(h.max(d))
            }
            "sectional_curvature" => {
                let (spec, sff) = (spec()?, sff()?);
                let curv = intrinsic_curvature(gm, p)?;
                let mut worst: f64 = 0.0;
                for (i, j) in pairs(spec.n()) {
                    let oracle = curv.sectional(&column(spec, i), &column(spec, j));
                    worst = worst.max((sectional_curvature(spec, sff, i, j) - oracle).abs());
                }
                Ok(worst)
            }
            "constant_curvature" => {
                let spec = spec()?;
                let curv = intrinsic_curvature(gm, p)?;
                let mut worst: f64 = 0.0;
                for (i, j) in pairs(spec.n()) {
                    // directions in one factor share an angle; across factors the angles differ by π/2
                    let same = angle_distance(spec.angles[i], spec.angles[j]) < 1e-3;
                    let want = if same { -2.0 } else { 0.0 };
                    worst = worst
                        .max((curv.sectional(&column(spec, i), &column(spec, j)) - want).abs());
                }
                Ok(worst)
            }
            "totally_geodesic" => Ok(sff()?.max_abs()),
            "gauss_equation" => Ok(verify_gauss_codazzi(gm, spec()?, sff()?)?.gauss),
            "codazzi_equation" => Ok(verify_gauss_codazzi(gm, spec()?, sff()?)?.codazzi),
            "parallel_invariance" => {
                let z = gm.point(p)?;
                let mut worst: f64 = 0.0;
                for (_, other) in &self.parallel {
                    let w = other.as_ref().map_err(Clone::clone)?.point(p)?;
                    worst = worst.max(same_point(&z, &w).residual);
                }
                Ok(worst)
            }
            "gauge_shift" => {
                let base = spec()?;
                let mut worst: f64 = 0.0;
                for phi in GAUGE_PHASES {
                    let rot = angle_spectrum(gm, ProductStructure::Rotated { phase: phi }, p)?;
                    let want: Vec<f64> = base.angles.iter().map(|t| t - phi / 2.0).collect();
                    worst = worst.max(multiset_distance(&rot.angles, &want));
                }
                Ok(worst)
            }
            "gauge_normalize" => Ok(angle_distance(
                gauge_normalize(spec()?).angles.iter().sum(),
                0.0,
            )),
            other => unreachable!("check `{other}` has no evaluator"),
        }
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn column(spec: &AngleSpectrum, j: usize) -> Vec<f64> {
    spec.frame.column(j).iter().copied().collect()
}

/// Execute a run and assemble its report. Geometric failures become failed
/// records; only configuration problems are errors.
pub fn run(cfg: &RunConfig) -> Result<VerificationReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let ncfg = NumConfig::default();
    let suites = cfg.suites()?;
    let target = build_target(cfg, &ncfg)?;
    let checks: Vec<&'static CheckInfo> = CHECKS
        .iter()
        .filter(|c| suites.contains(&c.suite) && target.applies(c))
        .collect();
    let gm = build_gauss_map(&target.patch, &ncfg);
    let parallel = if suites.contains(&Suite::Parallel) {
        PARALLEL_OFFSETS
            .iter()
            .map(|&t| {
                (
                    t,
                    parallel_patch(&target.patch, t, &ncfg)
                        .and_then(|q| build_gauss_map(&q, &ncfg)),
                )
            })
            .collect()
    } else {
        Vec::new()
    };
    let points = sample_points(cfg, target.patch.sample());
    info!(
        "running {} checks on {} points (suites: {})",
        checks.len(),
        points.len(),
        suites
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );
    let ctx = Context {
        cfg,
        ncfg,
        target: &target,
        gm,
        parallel,
        checks,
    };
    let per_point: Vec<Vec<Record>> = with_pool(cfg.jobs, || {
        points.par_iter().map(|p| ctx.evaluate(p)).collect()
    })?;
    // records grouped by check, then by point
    let mut records: Vec<Record> = Vec::new();
    for (k, _) in ctx.checks.iter().enumerate() {
        records.extend(per_point.iter().map(|recs| recs[k].clone()));
    }
    let report =
        VerificationReport::new(cfg.clone(), &suites, records, start.elapsed().as_secs_f64());
    info!(
        "{} of {} checks passed",
        report.summary.passed, report.summary.total
    );
    Ok(report)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {j} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Per-point fields for external plotting: coordinates, principal
/// curvatures, angles of the canonical lift and `g(JH, e_k)`.
pub fn dump_fields(cfg: &RunConfig) -> Result<String, CliError> {
    let ncfg = NumConfig::default();
    let target = build_target(cfg, &ncfg)?;
    let n = target.patch.n();
    let gm = build_gauss_map(&target.patch, &ncfg).map_err(config_err)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..n).map(|i| format!("lambda{i}")));
    header.extend((0..n).map(|i| format!("theta{i}")));
    header.extend((0..n).map(|i| format!("jh{i}")));
    header.push("arctan_sum".into());
    w.write_record(&header)
        .map_err(|e| CliError::Io(e.to_string()))?;
    for p in sample_points(cfg, target.patch.sample()) {
        let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        let blank = |k: usize| vec![String::new(); k];
        match shape_operator(&target.patch, &p, &ncfg) {
            Ok(sd) => row.extend(sd.lambdas.iter().map(|x| x.to_string())),
            Err(_) => row.extend(blank(n)),
        }
        let spec = angle_spectrum(&gm, ProductStructure::CanonicalFromLift, &p);
        match &spec {
            Ok(s) => row.extend(s.angles.iter().map(|x| x.to_string())),
            Err(_) => row.extend(blank(n)),
        }
        match spec.and_then(|s| second_fundamental_form(&gm, &s)) {
            Ok(h) => row.extend(h.jh().iter().map(|x| x.to_string())),
            Err(_) => row.extend(blank(n)),
        }
        match shape_operator(&target.patch, &p, &ncfg) {
            Ok(sd) => row.push(sd.lambdas.iter().map(|l| l.atan()).sum::<f64>().to_string()),
            Err(_) => row.push(String::new()),
        }
        w.write_record(&row)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
