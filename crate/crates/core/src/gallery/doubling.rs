//! Angle doubling on the unit circle in the plane.

use std::f64::consts::TAU;

use super::{log2, Bundle, Plan, Target, Targets};
use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::CompactFamily;
use crate::metric::{MetricSpec, PointCloud};

/// Spacing of the 4096-point grid.
pub const DEFAULT_MESH: f64 = TAU / 4096.0;

/// `(c, s) -> (c^2 - s^2, 2cs)`: the complex square on the circle.
pub fn doubling_system() -> DynSystem {
    DynSystem::new("doubling", 2, |p, out| {
        out[0] = p[0] * p[0] - p[1] * p[1];
        out[1] = 2.0 * p[0] * p[1];
    })
}

/// `size` points at the dyadic angles `k / size`.
pub fn circle_grid(size: usize, label: &str) -> Result<PointCloud> {
    if size < 3 {
        return Err(Error::Config(format!(
            "a circle grid needs at least 3 points, got {size}"
        )));
    }
    let pts = (0..size)
        .map(|k| {
            let a = TAU * k as f64 / size as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    PointCloud::new(pts, TAU / size as f64, label)
}

pub fn build_doubling(mesh: f64) -> Result<Bundle> {
    if !(mesh > 0.0 && mesh < 1.0) {
        return Err(Error::Config(format!("doubling mesh must lie in (0, 1), got {mesh}")));
    }
    let size = (TAU / mesh).ceil() as usize;
    let cloud = circle_grid(size, "circle")?;
    let half = super::filter_cloud(&cloud, "upper half circle", |p| p[1] >= 0.0)?;
    let family = CompactFamily::new(vec![half, cloud.clone()], "arcs of the circle")?;
    let mut b = Bundle::base("doubling", doubling_system(), MetricSpec::euclidean(), cloud);
    b.family = Some(family);
    b.bd = Plan::new(&[0.04, 0.02, 0.01], 12);
    b.compacta = Plan::new(&[0.04, 0.02, 0.01], 12);
    b.friedland = Plan::new(&[0.08, 0.04, 0.02], 12);
    b.rho = 4.0;
    b.targets = Targets {
        bd: Some(Target::Near(log2())),
        compacta: Some(Target::Near(log2())),
        friedland: Some(Target::Near(log2())),
    };
    Ok(b)
}
