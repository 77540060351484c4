//! Experiment configuration: JSON, one experiment per file or a `batch`
//! array of them.

use std::path::{Path, PathBuf};

use entro_core::gallery::{self, circle_family, AnnulusVariant, CrumpleConstruction};
use entro_core::{Bundle, CountMode, Error, GalleryParams, MetricSpec, Result};
use serde::{Deserialize, Serialize};

/// Estimators a run may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Bd,
    Compacta,
    Friedland,
}

fn all_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Bd, EstimatorKind::Compacta, EstimatorKind::Friedland]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub params: GalleryParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    /// Overrides the builder's sample spacing.
    pub mesh: Option<f64>,
    /// Skips the `mesh <= min(eps) / 4` check.
    #[serde(default)]
    pub allow_coarse_mesh: bool,
}

/// Nested compact pieces: circles at annulus coordinates, or crumpled-curve
/// graphs over `[a_{k+1}, 1]` for lap cuts `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FamilyConfig {
    Radii {
        radii: Vec<f64>,
        /// Member `i` is the union of the first `sizes[i]` circles; defaults
        /// to `1..=len`.
        #[serde(default)]
        sizes: Option<Vec<usize>>,
    },
    Laps {
        laps: Vec<usize>,
        samples_per_lap: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Counts CSV path.
    pub counts: PathBuf,
    /// Plain-text report path; the report always goes to stdout as well.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Verifier verdicts (JSON), written by `verify`.
    #[serde(default)]
    pub verdicts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Pairs sampled by the sequence-metric comparison.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Parent/subsample pairs in the subsample check.
    #[serde(default = "default_subsamples")]
    pub subsamples: usize,
    /// Points in the small clouds used by exact checks.
    #[serde(default = "default_small")]
    pub small_cloud: usize,
}

fn default_pairs() -> usize {
    500
}

fn default_subsamples() -> usize {
    10
}

fn default_small() -> usize {
    20
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            pairs: default_pairs(),
            subsamples: default_subsamples(),
            small_cloud: default_small(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    /// Scales for BD and compacta, and for Friedland unless
    /// `friedland_eps_list` is set.
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub friedland_eps_list: Option<Vec<f64>>,
    /// Largest order for BD and Friedland.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub compacta_n_max: Option<usize>,
    #[serde(default)]
    pub mode: Option<CountMode>,
    #[serde(default)]
    pub cloud: CloudConfig,
    #[serde(default)]
    pub compact_family: Option<FamilyConfig>,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<EstimatorKind>,
    pub outputs: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchFile {
    batch: Vec<ExperimentConfig>,
}

/// Reads a single experiment or a batch.
pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("json: {e}")))?;
    let configs = if value.get("batch").is_some() {
        let file: BatchFile = serde_json::from_value(value).map_err(|e| Error::Config(format!("batch: {e}")))?;
        if file.batch.is_empty() {
            return Err(Error::Config("batch: no entries".into()));
        }
        file.batch
    } else {
        vec![serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?]
    };
    for (i, c) in configs.iter().enumerate() {
        c.validate().map_err(|e| match e {
            Error::Config(m) if configs.len() > 1 => Error::Config(format!("{m} (batch entry {i})")),
            other => other,
        })?;
    }
    let mut paths: Vec<&PathBuf> = configs
        .iter()
        .flat_map(|c| {
            [
                Some(&c.outputs.counts),
                c.outputs.report.as_ref(),
                c.outputs.verdicts.as_ref(),
            ]
        })
        .flatten()
        .collect();
    paths.sort();
    if let Some(w) = paths.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("outputs: {} is used twice", w[0].display())));
    }
    Ok(configs)
}

fn check_eps(field: &str, eps: &[f64]) -> Result<()> {
    if let Some(&bad) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::Config(format!(
            "{field}: scales must be positive and finite, got {bad}"
        )));
    }
    if let Some(w) = eps.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "{field}: must be strictly decreasing, got {} then {}",
            w[0], w[1]
        )));
    }
    if !eps.is_empty() && eps.len() < 3 {
        return Err(Error::Config(format!(
            "{field}: needs at least 3 scales (or none), got {}",
            eps.len()
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Field checks that need no bundle.
    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = &self.eps_list {
            check_eps("eps_list", eps)?;
        }
        if let Some(eps) = &self.friedland_eps_list {
            check_eps("friedland_eps_list", eps)?;
        }
        for (field, n) in [("n_max", self.n_max), ("compacta_n_max", self.compacta_n_max)] {
            if let Some(n) = n {
                if n < 6 {
                    return Err(Error::Config(format!("{field}: must be at least 6, got {n}")));
                }
            }
        }
        if let Some(mesh) = self.cloud.mesh {
            if !(mesh.is_finite() && mesh > 0.0) {
                return Err(Error::Config(format!("cloud.mesh: must be positive, got {mesh}")));
            }
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("estimators: none requested".into()));
        }
        if let Some(spec) = &self.metric {
            spec.validate().map_err(|e| Error::Config(format!("metric: {e}")))?;
        }
        if self.verify.small_cloud < 2 || self.verify.small_cloud > 24 {
            return Err(Error::Config(format!(
                "verify.small_cloud: must lie in 2..=24, got {}",
                self.verify.small_cloud
            )));
        }
        Ok(())
    }

    pub fn wants(&self, kind: EstimatorKind) -> bool {
        self.estimators.contains(&kind)
    }

    /// The gallery bundle with every override applied and checked.
    pub fn bundle(&self) -> Result<Bundle> {
        let mut params = self.system.params.clone();
        if self.cloud.mesh.is_some() {
            params.mesh = self.cloud.mesh;
        }
        let mut b = gallery::by_name(&self.system.name, &params)?;
        if let Some(spec) = self.metric {
            b.spec = spec;
        }
        if let Some(eps) = &self.eps_list {
            b.bd.eps_list = eps.clone();
            b.compacta.eps_list = eps.clone();
            if self.friedland_eps_list.is_none() {
                b.friedland.eps_list = eps.clone();
            }
        }
        if let Some(eps) = &self.friedland_eps_list {
            b.friedland.eps_list = eps.clone();
        }
        if let Some(n) = self.n_max {
            b.bd.n_max = n;
            b.friedland.n_max = n;
        }
        if let Some(n) = self.compacta_n_max {
            b.compacta.n_max = n;
        }
        if let Some(mode) = self.mode {
            b.bd.mode = Some(mode);
            b.compacta.mode = Some(mode);
            b.friedland.mode = Some(mode);
        }
        if let Some(family) = &self.compact_family {
            b.family = Some(self.family(family, &params, b.cloud.mesh)?);
        }
        if !self.cloud.allow_coarse_mesh {
            let used = [
                (self.wants(EstimatorKind::Bd), &b.cloud, &b.bd.eps_list),
                (
                    self.wants(EstimatorKind::Friedland),
                    b.friedland_sample(),
                    &b.friedland.eps_list,
                ),
            ];
            for (_, cloud, eps) in used.iter().filter(|u| u.0) {
                if let Some(min) = eps.iter().copied().reduce(f64::min) {
                    if cloud.mesh > min / 4.0 {
                        return Err(Error::Config(format!(
                            "cloud.mesh: {} exceeds min(eps) / 4 = {} (set cloud.allow_coarse_mesh to override)",
                            cloud.mesh,
                            min / 4.0
                        )));
                    }
                }
            }
        }
        Ok(b)
    }

    fn family(&self, family: &FamilyConfig, params: &GalleryParams, mesh: f64) -> Result<entro_core::CompactFamily> {
        let name = self.system.name.as_str();
        let wrap = |e: Error| match e {
            Error::Config(m) => Error::Config(format!("compact_family: {m}")),
            other => other,
        };
        match family {
            FamilyConfig::Radii { radii, sizes } => {
                let variant = match name {
                    "annulus" | "annulus-disc" => AnnulusVariant::Disc,
                    "annulus-inverted" => AnnulusVariant::Inverted,
                    "annulus-sphere" => AnnulusVariant::Sphere,
                    _ => {
                        return Err(Error::Config(format!(
                            "compact_family: radii apply to the annulus systems, not {name}"
                        )))
                    }
                };
                let sizes = sizes.clone().unwrap_or_else(|| (1..=radii.len()).collect());
                circle_family(variant, radii, &sizes, mesh).map_err(wrap)
            }
            FamilyConfig::Laps { laps, samples_per_lap } => {
                if !matches!(name, "crumple" | "crumple-inverse") {
                    return Err(Error::Config(format!(
                        "compact_family: laps apply to the crumple systems, not {name}"
                    )));
                }
                let c = CrumpleConstruction::new(params.n.unwrap_or(2)).map_err(wrap)?;
                c.lap_family(laps, *samples_per_lap, mesh).map_err(wrap)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"system": {"name": "doubling"}, "outputs": {"counts": "c.csv"}}"#;

    fn with(extra: &str) -> String {
        format!("{}, {extra}}}", &BASE[..BASE.len() - 1])
    }

    #[test]
    fn minimal_config() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].estimators, all_estimators());
        assert_eq!(c[0].seed, 0);
    }

    #[test]
    fn increasing_eps_rejected() {
        let err = parse(&with(r#""eps_list": [0.01, 0.02, 0.04]"#)).unwrap_err();
        assert!(err.to_string().starts_with("config: eps_list"), "{err}");
    }

    #[test]
    fn short_eps_and_small_n_rejected() {
        assert!(parse(&with(r#""eps_list": [0.04, 0.02]"#)).is_err());
        assert!(parse(&with(r#""eps_list": []"#)).is_ok());
        let err = parse(&with(r#""n_max": 4"#)).unwrap_err();
        assert!(err.to_string().contains("n_max"));
    }

    #[test]
    fn unknown_field_is_named() {
        let err = parse(&with(r#""epslist": [0.1]"#)).unwrap_err();
        assert!(err.to_string().contains("epslist"), "{err}");
        let err =
            parse(r#"{"system": {"name": "crumple", "params": {"n": 2}}, "outputs": {"counts": "c"}}"#).unwrap_err();
        assert!(err.to_string().contains("`n`"), "{err}");
    }

    #[test]
    fn coarse_mesh_rejected_unless_allowed() {
        let c = &parse(&with(r#""cloud": {"mesh": 0.05}"#)).unwrap()[0];
        let err = c.bundle().unwrap_err();
        assert!(err.to_string().contains("cloud.mesh"));
        let c = &parse(&with(r#""cloud": {"mesh": 0.05, "allow_coarse_mesh": true}"#)).unwrap()[0];
        assert!(c.bundle().is_ok());
    }

    #[test]
    fn family_must_fit_system() {
        let c = &parse(&with(r#""compact_family": {"laps": [1, 2], "samples_per_lap": 9}"#)).unwrap()[0];
        assert!(c.bundle().unwrap_err().to_string().contains("laps"));
    }

    #[test]
    fn batch_rejects_shared_outputs() {
        let text = format!(r#"{{"batch": [{BASE}, {BASE}]}}"#);
        assert!(parse(&text).unwrap_err().to_string().contains("used twice"));
    }

    #[test]
    fn metric_override_parses() {
        let c = &parse(&with(r#""metric": {"kind": "max_product", "arity": 2}"#)).unwrap()[0];
        assert_eq!(c.metric, Some(MetricSpec::max_product(2).unwrap()));
    }
}
