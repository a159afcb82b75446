use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qgv_core::catalog::{
    hyperboloid, instantiate, random_profile, CatalogEntry, FamilyId, RotationKind,
};
use qgv_core::diff::{hessian, jacobian, DiffConfig, Domain, SmoothMap};
use qgv_core::gauss::{
    angle_distance, angle_spectrum, build_gauss_map, gauge_normalize, lagrangian_residual,
    structure_residuals, verify_theta_lambda,
};
use qgv_core::hypersurface::{parallel_patch, NumConfig};
use qgv_core::indefinite::{g_selfadjoint_eigen, herm, inner_real, CVector, IndefVector, SymPair};
use qgv_core::quadric::{
    apply_a, apply_j, horizontal_project, quadric_metric, same_point, HorizontalVector,
    ProductStructure, QuadricPoint,
};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

fn cvec(parts: &[(f64, f64)]) -> CVector {
    CVector::new(parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

/// `[(a + ib)/√2]` for `a = (cos α, sin α·p)`, `b = (−sin α, cos α·p)`, rephased by `t`.
fn quadric_point(alpha: f64, p: &[f64], t: f64) -> QuadricPoint {
    let h = hyperboloid(p);
    let mut a = vec![alpha.cos()];
    let mut b = vec![-alpha.sin()];
    a.extend(h.iter().map(|x| alpha.sin() * x));
    b.extend(h.iter().map(|x| alpha.cos() * x));
    QuadricPoint::from_real_pair(&a, &b).unwrap().rephased(t)
}

fn point_strategy() -> impl Strategy<Value = QuadricPoint> {
    (
        0.1f64..3.0,
        0.0f64..1.5,
        0.0f64..6.2,
        0.2f64..2.8,
        -3.0f64..3.0,
    )
        .prop_map(|(alpha, r, phi, chi, t)| quadric_point(alpha, &[r, chi, phi], t))
}

fn horizontal(z: &QuadricPoint, raw: &[(f64, f64)]) -> HorizontalVector {
    horizontal_project(z, &cvec(raw))
}

fn diff(x: &HorizontalVector, y: &HorizontalVector) -> f64 {
    (x.w() - y.w()).norm_euclid()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn hermitian_form_is_hermitian(z in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 5),
                                   w in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 5)) {
        let (z, w) = (cvec(&z), cvec(&w));
        let a = herm(&z, &w);
        let b = herm(&w, &z).conj();
        prop_assert!((a - b).norm() < 1e-12);
        prop_assert!(herm(&z, &z).im.abs() < 1e-12);
    }

    #[test]
    fn real_inner_product_is_symmetric_and_bilinear(
        x in prop::collection::vec(-3.0f64..3.0, 5),
        y in prop::collection::vec(-3.0f64..3.0, 5),
        c in -2.0f64..2.0,
        index in 0usize..3,
    ) {
        let v = |c: Vec<f64>| IndefVector::new(c, index).unwrap();
        let xy = inner_real(&v(x.clone()), &v(y.clone())).unwrap();
        prop_assert!((xy - inner_real(&v(y.clone()), &v(x.clone())).unwrap()).abs() < 1e-12);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| c * a + b).collect();
        let lhs = inner_real(&v(sum), &v(y.clone())).unwrap();
        let rhs = c * xy + inner_real(&v(y.clone()), &v(y)).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn self_adjoint_eigen_is_metric_orthonormal(
        m in prop::collection::vec(-1.0f64..1.0, 9),
        k in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let m = DMatrix::from_vec(3, 3, m);
        let g = &m * m.transpose() + DMatrix::identity(3, 3) * 0.5;
        let k = DMatrix::from_vec(3, 3, k);
        let pi = &k + k.transpose();
        let pair = SymPair::from_forms(g.clone(), &pi).unwrap();
        let eig = g_selfadjoint_eigen(&pair).unwrap();
        let v = &eig.vectors;
        prop_assert!((v.transpose() * &g * v - DMatrix::identity(3, 3)).amax() < 1e-8);
        for (c, lam) in eig.values.iter().enumerate() {
            let col = v.column(c).into_owned();
            prop_assert!((pair.s() * &col - &col * *lam).amax() < 1e-8 * (1.0 + lam.abs()));
        }
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hessian_of_a_quadratic_is_exact(c in prop::collection::vec(-2.0f64..2.0, 6), p in (-1.0f64..1.0, -1.0f64..1.0)) {
        let cc = c.clone();
        let f = SmoothMap::from_fn(Domain::from_bounds(&[(-3.0, 3.0), (-3.0, 3.0)]).unwrap(), 1, move |x: &[f64]| {
            Ok(vec![cc[0] * x[0] * x[0] + cc[1] * x[0] * x[1] + cc[2] * x[1] * x[1] + cc[3] * x[0] + cc[4] * x[1] + cc[5]])
        });
        let pt = [p.0, p.1];
        let h = hessian(&f, &pt, &DiffConfig::default()).unwrap();
        prop_assert!((h.get(0, 0, 0) - 2.0 * c[0]).abs() < 1e-6);
        prop_assert!((h.get(0, 0, 1) - c[1]).abs() < 1e-6);
        prop_assert!((h.get(0, 1, 0) - c[1]).abs() < 1e-6);
        prop_assert!((h.get(0, 1, 1) - 2.0 * c[2]).abs() < 1e-6);
        let j = jacobian(&f, &pt, &DiffConfig::default()).unwrap();
        prop_assert!((j[(0, 0)] - (2.0 * c[0] * p.0 + c[1] * p.1 + c[3])).abs() < 1e-8);
    }

    #[test]
    fn rephased_lifts_name_the_same_point(z in point_strategy(), t in -6.0f64..6.0) {
        prop_assert!(same_point(&z, &z.rephased(t)).equal);
    }

    #[test]
    fn horizontal_projection_is_idempotent(z in point_strategy(), w in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5)) {
        let x = horizontal(&z, &w);
        prop_assert!(x.horizontality_residual() < 1e-9);
        let again = horizontal_project(&z, x.w());
        prop_assert!(diff(&x, &again) < 1e-9 * (1.0 + x.w().norm_euclid()));
    }

    #[test]
    fn complex_and_product_structures(
        z in point_strategy(),
        u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        phase in -3.2f64..3.2,
    ) {
        let (x, y) = (horizontal(&z, &u), horizontal(&z, &v));
        let scale = 1.0 + x.w().norm_euclid();
        let tol = 1e-9 * scale * scale;
        for gauge in [ProductStructure::CanonicalFromLift, ProductStructure::Rotated { phase }] {
            let ax = apply_a(gauge, &x);
            // A² = id, AJ = −JA, g(AX, Y) = g(X, AY)
            prop_assert!(diff(&apply_a(gauge, &ax), &x) < tol);
            prop_assert!(diff(&apply_a(gauge, &apply_j(&x)), &apply_j(&ax).scale(-1.0)) < tol);
            let lhs = quadric_metric(&ax, &y).unwrap();
            let rhs = quadric_metric(&x, &apply_a(gauge, &y)).unwrap();
            prop_assert!((lhs - rhs).abs() < tol);
        }
        let jx = apply_j(&x);
        prop_assert!(diff(&apply_j(&jx), &x.scale(-1.0)) < tol);
        prop_assert!((quadric_metric(&jx, &apply_j(&y)).unwrap() - quadric_metric(&x, &y).unwrap()).abs() < tol);
    }
}

fn random_entry(kind: RotationKind, seed: u64, n: usize) -> CatalogEntry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CatalogEntry::rotation(random_profile(kind, &mut rng).unwrap(), n).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = RotationKind> {
    prop_oneof![
        Just(RotationKind::PlusMinus),
        Just(RotationKind::MinusMinus),
        Just(RotationKind::Null)
    ]
}

/// A point of the sampling box at fractional position `f`.
fn box_point(dom: &Domain, f: &[f64]) -> Vec<f64> {
    (0..dom.dim())
        .map(|i| dom.lo()[i] + f[i] * (dom.hi()[i] - dom.lo()[i]))
        .collect()
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn gauss_map_invariants_on_random_profiles(
        kind in kind_strategy(),
        seed in any::<u64>(),
        f in prop::collection::vec(0.0f64..1.0, 2),
        phi in -3.2f64..3.2,
    ) {
        let cfg = NumConfig::default();
        let patch = instantiate(&random_entry(kind, seed, 2)).unwrap();
        let gm = build_gauss_map(&patch, &cfg).unwrap();
        let p = box_point(patch.sample(), &f);

        prop_assert!(lagrangian_residual(&gm, &p).unwrap() <= 1e-6);
        let r = structure_residuals(&gm, ProductStructure::Rotated { phase: phi }, &p).unwrap();
        prop_assert!(r.max() <= 1e-6, "{r:?}");
        let tl = verify_theta_lambda(&gm, &p).unwrap();
        prop_assert!(tl.max_residual() <= 1e-5);
        prop_assert!(tl.max_gauge_free(1e-3) <= 1e-4);

        // θ ↦ θ − φ/2 under a gauge rotation by φ
        let base = angle_spectrum(&gm, ProductStructure::CanonicalFromLift, &p).unwrap();
        let rot = angle_spectrum(&gm, ProductStructure::Rotated { phase: phi }, &p).unwrap();
        let mut want: Vec<f64> = base.angles.iter().map(|t| (t - phi / 2.0).rem_euclid(std::f64::consts::PI)).collect();
        want.sort_by(f64::total_cmp);
        let matched = (0..2).any(|s| rot.angles.iter().zip(want.iter().cycle().skip(s)).all(|(a, b)| angle_distance(*a, *b) < 1e-6));
        prop_assert!(matched, "{:?} vs {:?}", rot.angles, want);

        let norm = gauge_normalize(&rot);
        prop_assert!(angle_distance(norm.angles.iter().sum(), 0.0) < 1e-7);
    }

    #[test]
    fn parallel_patches_share_the_gauss_map(
        family in prop_oneof![Just(FamilyId::Umbilic), Just(FamilyId::Product), Just(FamilyId::RotationPlusMinus)],
        t in 0.1f64..1.2,
        f in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let cfg = NumConfig::default();
        let patch = instantiate(&CatalogEntry::default_for(family, 2).unwrap()).unwrap();
        let moved = parallel_patch(&patch, t, &cfg).unwrap();
        let (g0, g1) = (build_gauss_map(&patch, &cfg).unwrap(), build_gauss_map(&moved, &cfg).unwrap());
        let p = box_point(patch.sample(), &f);
        let sp = same_point(&g0.point(&p).unwrap(), &g1.point(&p).unwrap());
        prop_assert!(sp.equal && sp.residual <= 1e-6, "{sp:?}");
    }
}
