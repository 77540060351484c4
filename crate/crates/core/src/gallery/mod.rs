//! Worked examples packaged as bundles: a system, a metric, a sample, a
//! family of compact pieces, run plans for the three estimators and the
//! entropy values they should land near.

pub mod annulus;
pub mod crumple;
pub mod doubling;
pub mod escape;
pub mod interval_homeo;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::{
    bd_estimate, compacta_estimate_with, inequality_report, CompactFamily, EntropyEstimate, ExtrapolationRule,
    InequalityVerdict,
};
use crate::metric::{truncation_depth, CountMode, MetricSpec, PointCloud};
use crate::orbit_space::{diameter_bound, friedland_estimate_with, DEFAULT_RHO, TAIL_TOLERANCE};

pub use annulus::{build_annulus, circle_family, AnnulusVariant};
pub use crumple::{build_crumple, CrumpleConstruction, Direction};
pub use doubling::build_doubling;
pub use escape::{akm_cover_demo, build_escape, AkmCover, EscapeConstruction};
pub use interval_homeo::build_interval_homeo;

/// Tolerance used when comparing estimates against targets.
pub const TARGET_TOLERANCE: f64 = 0.15;

/// Where an estimate is expected to land.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Target {
    /// Within the tolerance of the value.
    Near(f64),
    /// Strictly below the value.
    Below(f64),
}

impl Target {
    pub fn accepts(&self, value: f64, tolerance: f64) -> bool {
        match *self {
            Target::Near(t) => (value - t).abs() <= tolerance,
            Target::Below(t) => value < t,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Target::Near(t) => format!("≈ {t:.4}"),
            Target::Below(t) => format!("< {t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub bd: Option<Target>,
    pub compacta: Option<Target>,
    pub friedland: Option<Target>,
}

/// Scales and orders for one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub eps_list: Vec<f64>,
    pub n_max: usize,
    #[serde(default)]
    pub mode: Option<CountMode>,
}

impl Plan {
    pub fn new(eps_list: &[f64], n_max: usize) -> Self {
        Self {
            eps_list: eps_list.to_vec(),
            n_max,
            mode: None,
        }
    }

    pub fn with_mode(mut self, mode: CountMode) -> Self {
        self.mode = Some(mode);
        self
    }
}

/// Everything needed to estimate the three entropies of one example.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub name: String,
    pub system: DynSystem,
    pub spec: MetricSpec,
    pub cloud: PointCloud,
    pub family: Option<CompactFamily>,
    /// Sample for the Friedland run when it differs from `cloud`.
    pub friedland_cloud: Option<PointCloud>,
    pub bd: Plan,
    pub compacta: Plan,
    pub friedland: Plan,
    /// Weight of the sequence metric, twice the map's stretch factor.
    pub rho: f64,
    pub targets: Targets,
    pub notes: Vec<String>,
}

/// Estimates of one bundle and how they compare with each other.
#[derive(Debug, Clone)]
pub struct BundleReport {
    pub name: String,
    pub bd: EntropyEstimate,
    pub compacta: EntropyEstimate,
    pub friedland: EntropyEstimate,
    pub verdict: InequalityVerdict,
}

impl Bundle {
    fn base(name: &str, system: DynSystem, spec: MetricSpec, cloud: PointCloud) -> Self {
        Self {
            name: name.to_string(),
            system,
            spec,
            cloud,
            family: None,
            friedland_cloud: None,
            bd: Plan::new(&[0.4, 0.2, 0.1], 8),
            compacta: Plan::new(&[0.4, 0.2, 0.1], 8),
            friedland: Plan::new(&[0.4, 0.2, 0.1], 8),
            rho: DEFAULT_RHO,
            targets: Targets::default(),
            notes: Vec::new(),
        }
    }

    pub fn friedland_sample(&self) -> &PointCloud {
        self.friedland_cloud.as_ref().unwrap_or(&self.cloud)
    }

    /// Depth at which the weighted tail of `d̂` drops below the tail
    /// tolerance for this sample.
    pub fn friedland_truncation(&self) -> Result<usize> {
        let diam = diameter_bound(self.friedland_sample(), &self.spec).max(f64::MIN_POSITIVE);
        truncation_depth(self.rho, diam, TAIL_TOLERANCE)
    }

    pub fn run_bd(&self) -> Result<EntropyEstimate> {
        let p = &self.bd;
        bd_estimate(
            &self.system,
            &self.cloud,
            &self.spec,
            &p.eps_list,
            p.n_max,
            p.mode,
            &ExtrapolationRule::default(),
        )
    }

    pub fn run_compacta(&self) -> Result<EntropyEstimate> {
        let family = self
            .family
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} has no compact family", self.name)))?;
        let p = &self.compacta;
        compacta_estimate_with(
            &self.system,
            &self.spec,
            family,
            &p.eps_list,
            p.n_max,
            p.mode,
            &ExtrapolationRule::default(),
        )
    }

    pub fn run_friedland(&self) -> Result<EntropyEstimate> {
        let p = &self.friedland;
        friedland_estimate_with(
            &self.system,
            self.friedland_sample(),
            &self.spec,
            self.rho,
            self.friedland_truncation()?,
            &p.eps_list,
            p.n_max,
            p.mode,
            &ExtrapolationRule::default(),
        )
    }

    pub fn run_all(&self) -> Result<BundleReport> {
        let bd = self.run_bd()?;
        let compacta = self.run_compacta()?;
        let friedland = self.run_friedland()?;
        let verdict = inequality_report(&bd, &compacta, &friedland, TARGET_TOLERANCE);
        Ok(BundleReport {
            name: self.name.clone(),
            bd,
            compacta,
            friedland,
            verdict,
        })
    }
}

impl BundleReport {
    /// Target checks, in the order BD, compacta, Friedland; `None` where
    /// the bundle sets no target.
    pub fn target_checks(&self, targets: &Targets) -> [Option<bool>; 3] {
        let check = |t: &Option<Target>, e: &EntropyEstimate| t.map(|t| t.accepts(e.headline, TARGET_TOLERANCE));
        [
            check(&targets.bd, &self.bd),
            check(&targets.compacta, &self.compacta),
            check(&targets.friedland, &self.friedland),
        ]
    }
}

/// Optional builder parameters; unset fields take each builder's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalleryParams {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub depth: Option<usize>,
    pub lmax: Option<usize>,
    pub orbit_len: Option<usize>,
    pub mesh: Option<f64>,
}

/// Gallery names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "doubling",
    "crumple",
    "crumple-inverse",
    "escape",
    "annulus-disc",
    "annulus-inverted",
    "annulus-sphere",
    "interval-homeo",
];

/// Builds a bundle by name. `annulus` alone means the disc variant.
pub fn by_name(name: &str, params: &GalleryParams) -> Result<Bundle> {
    let n = params.n.unwrap_or(2);
    match name {
        "doubling" => build_doubling(params.mesh.unwrap_or(doubling::DEFAULT_MESH)),
        "crumple" | "crumple-inverse" => {
            let dir = if name == "crumple" {
                Direction::Forward
            } else {
                Direction::Inverse
            };
            build_crumple(
                n,
                params.depth.unwrap_or(crumple::default_depth(n)),
                params.mesh.unwrap_or(crumple::default_mesh(n)),
                dir,
            )
        }
        "escape" => {
            let lmax = params.lmax.unwrap_or(escape::DEFAULT_LMAX);
            let needed = EscapeConstruction::new(n, lmax)?.word_sequence().len();
            let orbit_len = params.orbit_len.unwrap_or(needed);
            build_escape(n, lmax, orbit_len, params.mesh.unwrap_or(1.0 / orbit_len.max(1) as f64))
        }
        "annulus" | "annulus-disc" => build_annulus(AnnulusVariant::Disc, params.mesh.unwrap_or(annulus::DEFAULT_MESH)),
        "annulus-inverted" => build_annulus(AnnulusVariant::Inverted, params.mesh.unwrap_or(annulus::DEFAULT_MESH)),
        "annulus-sphere" => build_annulus(AnnulusVariant::Sphere, params.mesh.unwrap_or(annulus::DEFAULT_MESH)),
        "interval-homeo" => build_interval_homeo(params.mesh.unwrap_or(interval_homeo::DEFAULT_MESH)),
        other => Err(Error::Config(format!(
            "unknown gallery system '{other}' (known: {})",
            NAMES.join(", ")
        ))),
    }
}

/// `log N` in nats.
pub fn log_n(n: usize) -> f64 {
    (n as f64).ln()
}

pub(crate) fn log2() -> f64 {
    LN_2
}

/// Points of `cloud` passing `keep`, as a new cloud.
pub(crate) fn filter_cloud(
    cloud: &PointCloud,
    label: impl Into<String>,
    keep: impl Fn(&[f64]) -> bool,
) -> Result<PointCloud> {
    let idx: Vec<usize> = (0..cloud.len()).filter(|&i| keep(cloud.point(i))).collect();
    if idx.is_empty() {
        return Err(Error::Empty);
    }
    cloud.select(&idx, label)
}
