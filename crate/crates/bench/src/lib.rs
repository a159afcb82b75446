//! Fixtures shared by the benchmarks.

use qgv_core::catalog::{instantiate, CatalogEntry, FamilyId};
use qgv_core::gauss::{build_gauss_map, GaussMapField};
use qgv_core::hypersurface::NumConfig;

/// Gauss map of a catalog default and the centre of its sampling box.
pub fn fixture(id: FamilyId, n: usize) -> (GaussMapField, Vec<f64>) {
    let entry = CatalogEntry::default_for(id, n).expect("catalog default");
    let patch = instantiate(&entry).expect("instantiate");
    let gm = build_gauss_map(&patch, &NumConfig::default()).expect("gauss map");
    let b = entry.sample_box().expect("sample box");
    let mid = b
        .lo()
        .iter()
        .zip(b.hi())
        .map(|(l, h)| 0.5 * (l + h))
        .collect();
    (gm, mid)
}
