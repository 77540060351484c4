//! Fixtures shared by the criterion benches.

use entro_core::gallery::{self, GalleryParams};
use entro_core::{Bundle, OrbitTable};

/// Doubling on a circle grid with spacing `mesh`.
pub fn doubling(mesh: f64) -> Bundle {
    let params = GalleryParams {
        mesh: Some(mesh),
        ..Default::default()
    };
    gallery::by_name("doubling", &params).expect("doubling builds")
}

/// Forward crumple bundle with `N = n` and its default sample.
pub fn crumple(n: usize) -> Bundle {
    let params = GalleryParams {
        n: Some(n),
        ..Default::default()
    };
    gallery::by_name("crumple", &params).expect("crumple builds")
}

/// Orbit table of the bundle's own sample to depth `depth`.
pub fn orbit_table(b: &Bundle, depth: usize) -> OrbitTable {
    OrbitTable::build(&b.system, &b.cloud, depth).expect("orbits stay in the domain")
}
