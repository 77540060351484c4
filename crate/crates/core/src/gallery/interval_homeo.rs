//! The homeomorphism `g` of `(0, 1)` underlying the crumple construction,
//! with the plain metric of the line.

use super::{filter_cloud, Bundle, Plan, Target, Targets};
use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::CompactFamily;
use crate::gallery::crumple::CrumpleConstruction;
use crate::metric::{MetricSpec, PointCloud};

pub const DEFAULT_MESH: f64 = 0.001;

pub fn interval_system() -> DynSystem {
    DynSystem::new("interval-homeo", 1, |x, out| out[0] = CrumpleConstruction::g(x[0]))
        .with_domain(|x| x[0] > 0.0 && x[0] < 1.0)
        .with_inverse(|x, out| out[0] = CrumpleConstruction::g_inv(x[0]))
}

pub fn build_interval_homeo(mesh: f64) -> Result<Bundle> {
    if !(mesh > 0.0 && mesh < 0.25) {
        return Err(Error::Config(format!(
            "interval mesh must lie in (0, 0.25), got {mesh}"
        )));
    }
    let count = (1.0 / mesh).ceil() as usize;
    let data: Vec<f64> = (0..count).map(|i| (i as f64 + 0.5) / count as f64).collect();
    let cloud = PointCloud::from_flat(data, 1, mesh, "grid")?;
    let members = [0.25, 0.1, 0.01]
        .iter()
        .map(|&a| filter_cloud(&cloud, format!("[{a}, {}]", 1.0 - a), |p| p[0] >= a && p[0] <= 1.0 - a))
        .collect::<Result<Vec<_>>>()?;
    let mut b = Bundle::base("interval-homeo", interval_system(), MetricSpec::euclidean(), cloud);
    b.family = Some(CompactFamily::new(members, "closed subintervals")?);
    b.bd = Plan::new(&[0.04, 0.02, 0.01], 8);
    b.compacta = Plan::new(&[0.04, 0.02, 0.01], 8);
    b.friedland = Plan::new(&[0.16, 0.08, 0.04], 8);
    b.targets = Targets {
        bd: Some(Target::Near(0.0)),
        compacta: Some(Target::Near(0.0)),
        friedland: Some(Target::Near(0.0)),
    };
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invertible_and_contracting_to_zero() {
        let sys = interval_system();
        assert!(sys.is_invertible());
        let pts: Vec<&[f64]> = vec![&[0.01], &[0.3], &[0.77]];
        assert!(sys.inverse_residual(pts).unwrap() < 1e-12);
        let mut x = vec![0.9];
        for _ in 0..50 {
            let y = sys.apply(&x);
            assert!(y[0] < x[0] && y[0] > 0.0);
            x = y;
        }
    }
}
