//! `f(x, θ) = (x², 2θ)` on the open annulus `(0, 1) × S¹`, under three
//! embeddings: the punctured disc, the disc with the radius flipped, and
//! the sphere with both boundary circles pinched to poles.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{log2, Bundle, Plan, Target, Targets};
use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::CompactFamily;
use crate::metric::{MetricSpec, PointCloud};

/// Angular spacing of the sample circles.
pub const DEFAULT_MESH: f64 = TAU / 16384.0;

/// How far from the outer boundary the sample circles sit.
pub const BOUNDARY_OFFSETS: [f64; 3] = [1e-12, 1e-11, 1e-10];

/// Annulus coordinates of the family circles, outermost in the inverted
/// embedding first.
pub const FAMILY_XS: [f64; 5] = [0.1, 0.05, 0.15, 0.2, 0.25];

/// Rounding allowance on the unit circle for the inverted variant.
pub const RADIUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnulusVariant {
    Disc,
    Inverted,
    Sphere,
}

impl AnnulusVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnulusVariant::Disc => "disc",
            AnnulusVariant::Inverted => "inverted",
            AnnulusVariant::Sphere => "sphere",
        }
    }

    /// Embedding of `(x, θ)`.
    pub fn embed(self, x: f64, theta: f64) -> Vec<f64> {
        let (s, c) = (TAU * theta).sin_cos();
        match self {
            AnnulusVariant::Disc => vec![x * c, x * s],
            AnnulusVariant::Inverted => vec![(1.0 - x) * c, (1.0 - x) * s],
            AnnulusVariant::Sphere => {
                let r = (PI * x).sin();
                vec![r * c, r * s, (PI * x).cos()]
            }
        }
    }

    /// The annulus map in embedded coordinates.
    pub fn system(self) -> DynSystem {
        let name = format!("annulus-{}", self.as_str());
        match self {
            AnnulusVariant::Disc => DynSystem::new(name, 2, |p, out| {
                out[0] = p[0] * p[0] - p[1] * p[1];
                out[1] = 2.0 * p[0] * p[1];
            })
            .with_domain(|p| {
                let r2 = p[0] * p[0] + p[1] * p[1];
                r2 > 0.0 && r2 < 1.0
            }),
            // radius r = 1 - x goes to 1 - (1 - r)^2 = r (2 - r)
            AnnulusVariant::Inverted => DynSystem::new(name, 2, |p, out| {
                let r2 = p[0] * p[0] + p[1] * p[1];
                let r = r2.sqrt().min(1.0);
                let k = r * (2.0 - r) / r2;
                out[0] = (p[0] * p[0] - p[1] * p[1]) * k;
                out[1] = 2.0 * p[0] * p[1] * k;
            })
            // rounding may land a hair outside the unit circle
            .with_domain(|p| {
                let r = p[0].hypot(p[1]);
                r > 0.0 && r <= 1.0 + RADIUS_SLACK
            }),
            AnnulusVariant::Sphere => DynSystem::new(name, 3, |p, out| {
                let x = p[2].clamp(-1.0, 1.0).acos() / PI;
                let theta = p[1].atan2(p[0]) / TAU;
                let q = AnnulusVariant::Sphere.embed(x * x, 2.0 * theta);
                out.copy_from_slice(&q);
            })
            .with_domain(|p| ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) - 1.0).abs() < 1e-9),
        }
    }

    /// `ceil(2π / mesh)`-point circles at the given annulus coordinates.
    pub fn circles(self, xs: &[f64], mesh: f64, label: &str) -> Result<PointCloud> {
        let per = (TAU / mesh).ceil() as usize;
        let mut pts = Vec::with_capacity(per * xs.len());
        for (c, &x) in xs.iter().enumerate() {
            // stagger the circles so no two share an angle
            let off = c as f64 / xs.len() as f64;
            for k in 0..per {
                pts.push(self.embed(x, (k as f64 + off) / per as f64));
            }
        }
        PointCloud::new(pts, mesh, label)
    }
}

/// Conjugacy defect `|embed(f(x, θ)) - q(embed(x, θ))|` of the disc
/// embedding on a grid of `k × k` annulus points.
pub fn disc_conjugacy_residual(k: usize) -> f64 {
    let sys = AnnulusVariant::Disc.system();
    let mut worst = 0.0f64;
    for i in 1..k {
        for j in 0..k {
            let (x, t) = (i as f64 / k as f64, j as f64 / k as f64);
            let lhs = AnnulusVariant::Disc.embed(x * x, (2.0 * t).fract());
            let rhs = sys.apply(&AnnulusVariant::Disc.embed(x, t));
            worst = worst.max((lhs[0] - rhs[0]).hypot(lhs[1] - rhs[1]));
        }
    }
    worst
}

/// Unions of the first `k` circles at `xs`, one member per `k` in `sizes`.
pub fn circle_family(variant: AnnulusVariant, xs: &[f64], sizes: &[usize], mesh: f64) -> Result<CompactFamily> {
    if xs.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(&bad) = sizes.iter().find(|&&k| k == 0 || k > xs.len()) {
        return Err(Error::Config(format!("family size {bad} outside 1..={}", xs.len())));
    }
    if xs.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Config("family radii must lie in (0, 1)".into()));
    }
    let bands = variant.circles(xs, mesh, "bands")?;
    let per = bands.len() / xs.len();
    let members = sizes
        .iter()
        .map(|&k| {
            let idx: Vec<usize> = (0..k * per).collect();
            bands.select(&idx, format!("circles at x = {:?}", &xs[..k]))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    CompactFamily::new(members, format!("circles with x in [{lo}, {hi}]"))
}

pub fn build_annulus(variant: AnnulusVariant, mesh: f64) -> Result<Bundle> {
    if !(mesh > 0.0 && mesh < 0.5) {
        return Err(Error::Config(format!("annulus mesh must lie in (0, 0.5), got {mesh}")));
    }
    // sample circles: next to the unit circle for the two disc variants,
    // mid-latitude for the sphere
    let xs: Vec<f64> = match variant {
        AnnulusVariant::Disc => BOUNDARY_OFFSETS.iter().map(|d| 1.0 - d).collect(),
        AnnulusVariant::Inverted => BOUNDARY_OFFSETS.to_vec(),
        AnnulusVariant::Sphere => vec![0.4, 0.5, 0.6],
    };
    let cloud = variant.circles(&xs, mesh, "circles")?;
    let mut b = Bundle::base(
        &format!("annulus-{}", variant.as_str()),
        variant.system(),
        MetricSpec::euclidean(),
        cloud,
    );
    b.family = Some(circle_family(variant, &FAMILY_XS, &[1, 3, 5], mesh)?);
    let eps = [0.04, 0.02, 0.01];
    b.bd = Plan::new(&eps, 12);
    b.compacta = Plan::new(&eps, 8);
    b.friedland = Plan::new(&[0.08, 0.04, 0.02], 12);
    b.rho = 4.0;
    let (bd, bc) = match variant {
        AnnulusVariant::Disc => (Target::Near(log2()), Target::Below(0.15)),
        AnnulusVariant::Inverted => (Target::Near(log2()), Target::Near(log2())),
        AnnulusVariant::Sphere => (Target::Below(0.15), Target::Below(0.15)),
    };
    b.targets = Targets {
        bd: Some(bd),
        compacta: Some(bc),
        friedland: Some(bd),
    };
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_embedding_conjugates_square() {
        assert!(disc_conjugacy_residual(64) < 1e-12);
    }

    #[test]
    fn inverted_radius_and_sphere_poles() {
        let sys = AnnulusVariant::Inverted.system();
        let p = AnnulusVariant::Inverted.embed(0.6, 0.1);
        let q = sys.apply(&p);
        let want = AnnulusVariant::Inverted.embed(0.36, 0.2);
        assert!((q[0] - want[0]).abs() < 1e-12 && (q[1] - want[1]).abs() < 1e-12);
        let sphere = AnnulusVariant::Sphere.system();
        let p = AnnulusVariant::Sphere.embed(0.5, 0.3);
        let q = sphere.apply(&p);
        let want = AnnulusVariant::Sphere.embed(0.25, 0.6);
        assert!(q.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(AnnulusVariant::Sphere.embed(0.0, 0.7), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn families_nest() {
        for v in [AnnulusVariant::Disc, AnnulusVariant::Inverted, AnnulusVariant::Sphere] {
            let b = build_annulus(v, TAU / 256.0).unwrap();
            assert_eq!(b.family.as_ref().unwrap().members.len(), 3);
            assert_eq!(b.cloud.len(), 3 * 256);
        }
    }
}
