use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use qgv_bench::fixture;
use qgv_cli::expr::Expr;
use qgv_core::catalog::FamilyId;
use qgv_core::gauss::{
    angle_spectrum, second_fundamental_form, verify_gauss_codazzi, verify_palmer,
};
use qgv_core::hypersurface::shape_operator;
use qgv_core::quadric::ProductStructure;

const FAMILIES: [(FamilyId, &str); 3] = [
    (FamilyId::Umbilic, "umbilic"),
    (FamilyId::RotationPlusMinus, "plus_minus"),
    (FamilyId::RotationMinusNull, "null"),
];

fn shape(c: &mut Criterion) {
    let mut g = c.benchmark_group("shape_operator");
    for (id, name) in FAMILIES {
        let (gm, p) = fixture(id, 2);
        g.bench_function(name, |b| {
            b.iter(|| shape_operator(gm.patch(), black_box(&p), gm.cfg()).unwrap())
        });
    }
    g.finish();
}

fn gauss_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauss_map");
    for (id, name) in FAMILIES {
        let (gm, p) = fixture(id, 2);
        g.bench_function(format!("point/{name}"), |b| {
            b.iter(|| gm.point(black_box(&p)).unwrap())
        });
        g.bench_function(format!("angles/{name}"), |b| {
            b.iter(|| {
                angle_spectrum(&gm, ProductStructure::CanonicalFromLift, black_box(&p)).unwrap()
            })
        });
    }
    g.finish();
}

fn identities(c: &mut Criterion) {
    let mut g = c.benchmark_group("identities");
    g.sample_size(10);
    let (gm, p) = fixture(FamilyId::RotationPlusMinus, 2);
    let spec = angle_spectrum(&gm, ProductStructure::CanonicalFromLift, &p).unwrap();
    g.bench_function("sff", |b| {
        b.iter(|| second_fundamental_form(&gm, black_box(&spec)).unwrap())
    });
    let sff = second_fundamental_form(&gm, &spec).unwrap();
    g.bench_function("gauss_codazzi", |b| {
        b.iter(|| verify_gauss_codazzi(&gm, black_box(&spec), &sff).unwrap())
    });
    g.bench_function("palmer", |b| {
        b.iter(|| verify_palmer(&gm, black_box(&p)).unwrap())
    });
    g.finish();
}

fn expressions(c: &mut Criterion) {
    let params = vec!["r".to_string(), "t".to_string()];
    let consts = BTreeMap::from([("alpha".to_string(), 0.9)]);
    let e = Expr::parse(
        "sin(alpha) * sinh(r) * cos(t) + exp(-r^2)",
        &params,
        &consts,
    )
    .unwrap();
    c.bench_function("expr_eval", |b| {
        b.iter(|| e.eval(black_box(&[0.7_f64, 0.3][..])))
    });
}

criterion_group!(benches, shape, gauss_map, identities, expressions);
criterion_main!(benches);
