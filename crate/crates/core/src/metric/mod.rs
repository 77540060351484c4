//! Distances, finite point clouds and the packing/covering counters.
//!
//! Every entropy number in this crate is a growth rate of counts produced
//! here: the size of a maximal `eps`-separated subset of a cloud and the size
//! of a minimal `eps`-spanning subset, both measured in some metric that may
//! depend on an orbit order `n`.

mod cloud;
mod counting;
mod exact;

pub use cloud::{dense_subsample, local_cluster, subsample_check, PointCloud, Subsample, SubsampleVerdict};
pub use counting::{
    count_table, greedy_order, max_separated, min_spanning, separated_greedy, spanning_greedy, CloudMetric, CountMode,
    CountRow, CountTable, OrderedMetric, EXACT_CAP,
};
pub use exact::{exact_max_separated, exact_min_spanning};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance used to decide that two points coincide.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Which distance function is in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    /// Euclidean distance on the raw vector.
    Euclidean,
    /// The vector is `arity` equal blocks; distance is the max of the
    /// blockwise Euclidean distances.
    MaxProduct { arity: usize },
    /// The vector is `truncation` stacked ambient points `x_0 .. x_{M-1}`;
    /// distance is `sum_i rho^-i |x_i - x'_i|`.
    SequenceRho { rho: f64, truncation: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(flatten)]
    pub kind: MetricKind,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self::euclidean()
    }
}

impl MetricSpec {
    pub fn euclidean() -> Self {
        Self {
            kind: MetricKind::Euclidean,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn max_product(arity: usize) -> Result<Self> {
        let spec = Self {
            kind: MetricKind::MaxProduct { arity },
            tolerance: DEFAULT_TOLERANCE,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sequence_rho(rho: f64, truncation: usize) -> Result<Self> {
        let spec = Self {
            kind: MetricKind::SequenceRho { rho, truncation },
            tolerance: DEFAULT_TOLERANCE,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Sequence metric whose truncation depth makes the neglected tail
    /// `rho^-M * diam / (1 - 1/rho)` smaller than `tail_tolerance`.
    pub fn sequence_for_diameter(rho: f64, diam: f64, tail_tolerance: f64) -> Result<Self> {
        let truncation = truncation_depth(rho, diam, tail_tolerance)?;
        Self::sequence_rho(rho, truncation)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be >= 0".into()));
        }
        match self.kind {
            MetricKind::Euclidean => Ok(()),
            MetricKind::MaxProduct { arity: 0 } => Err(Error::Config("max_product arity must be positive".into())),
            MetricKind::MaxProduct { .. } => Ok(()),
            MetricKind::SequenceRho { rho, .. } if !(rho > 1.0) => {
                Err(Error::Config(format!("rho must exceed 1, got {rho}")))
            }
            MetricKind::SequenceRho { truncation: 0, .. } => {
                Err(Error::Config("sequence truncation must be positive".into()))
            }
            MetricKind::SequenceRho { .. } => Ok(()),
        }
    }

    /// Checks that a vector of length `len` can be interpreted by this metric.
    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::Shape("zero-dimensional point".into()));
        }
        let blocks = match self.kind {
            MetricKind::Euclidean => 1,
            MetricKind::MaxProduct { arity } => arity,
            MetricKind::SequenceRho { truncation, .. } => truncation,
        };
        if !len.is_multiple_of(blocks) {
            return Err(Error::Shape(format!(
                "dimension {len} is not a multiple of {blocks} blocks"
            )));
        }
        Ok(())
    }

    /// Number of leading coordinates whose differences are dominated by the
    /// distance (used to bucket points on a grid).
    pub(crate) fn anchor_dims(&self, len: usize) -> usize {
        match self.kind {
            MetricKind::Euclidean | MetricKind::MaxProduct { .. } => len,
            MetricKind::SequenceRho { truncation, .. } => len / truncation,
        }
    }

    /// Distance without shape validation. Callers guarantee equal lengths
    /// compatible with the block structure.
    #[inline]
    pub fn dist_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = match self.kind {
            MetricKind::Euclidean => euclid(a, b),
            MetricKind::MaxProduct { arity } => {
                let block = a.len() / arity;
                a.chunks_exact(block)
                    .zip(b.chunks_exact(block))
                    .map(|(x, y)| euclid(x, y))
                    .fold(0.0, f64::max)
            }
            MetricKind::SequenceRho { rho, truncation } => {
                let block = a.len() / truncation;
                let inv = 1.0 / rho;
                let mut weight = 1.0;
                let mut total = 0.0;
                for (x, y) in a.chunks_exact(block).zip(b.chunks_exact(block)) {
                    total += weight * euclid(x, y);
                    weight *= inv;
                }
                total
            }
        };
        if d <= self.tolerance {
            0.0
        } else {
            d
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.validate()?;
        if a.len() != b.len() {
            return Err(Error::Shape(format!("points of dimension {} and {}", a.len(), b.len())));
        }
        self.check_dim(a.len())?;
        Ok(self.dist_unchecked(a, b))
    }
}

/// Distance between two vectors under `spec`.
pub fn pairwise_dist(a: &[f64], b: &[f64], spec: &MetricSpec) -> Result<f64> {
    spec.dist(a, b)
}

/// Smallest `M` with `rho^-M * diam / (1 - 1/rho) < tail_tolerance`.
pub fn truncation_depth(rho: f64, diam: f64, tail_tolerance: f64) -> Result<usize> {
    if !(rho > 1.0) {
        return Err(Error::Config(format!("rho must exceed 1, got {rho}")));
    }
    if !(tail_tolerance > 0.0) || !(diam >= 0.0) {
        return Err(Error::Config("tail tolerance and diameter must be positive".into()));
    }
    let scale = diam / (1.0 - 1.0 / rho);
    let mut m = 1usize;
    while scale * rho.powi(-(m as i32)) >= tail_tolerance {
        m += 1;
    }
    Ok(m)
}

#[inline]
pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        let d = pairwise_dist(&[0.0, 0.0], &[3.0, 4.0], &MetricSpec::euclidean()).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn identical_points_are_at_zero() {
        let p = [0.3, -1.2, 7.0, 0.5];
        for spec in [
            MetricSpec::euclidean(),
            MetricSpec::max_product(2).unwrap(),
            MetricSpec::sequence_rho(2.0, 2).unwrap(),
        ] {
            assert_eq!(spec.dist(&p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn geometric_series_sequence_metric() {
        let spec = MetricSpec::sequence_rho(2.0, 20).unwrap();
        let a = vec![0.0; 20];
        let b = vec![1.0; 20];
        let d = spec.dist(&a, &b).unwrap();
        assert_relative_eq!(d, 2.0 - 2f64.powi(-19), epsilon = 1e-15);
        assert!((d - 1.999998).abs() < 1e-6);
    }

    #[test]
    fn max_product_takes_worst_block() {
        let spec = MetricSpec::max_product(2).unwrap();
        let d = spec.dist(&[0.0, 0.0, 0.0, 0.0], &[3.0, 4.0, 1.0, 0.0]).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn shape_and_config_errors() {
        let spec = MetricSpec::euclidean();
        assert!(matches!(spec.dist(&[0.0], &[0.0, 1.0]), Err(Error::Shape(_))));
        assert!(matches!(MetricSpec::sequence_rho(1.0, 4), Err(Error::Config(_))));
        let bad = MetricSpec {
            kind: MetricKind::SequenceRho {
                rho: 0.5,
                truncation: 2,
            },
            tolerance: 0.0,
        };
        assert!(matches!(bad.dist(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::Config(_))));
        let odd = MetricSpec::max_product(3).unwrap();
        assert!(matches!(odd.dist(&[0.0; 4], &[1.0; 4]), Err(Error::Shape(_))));
    }

    #[test]
    fn truncation_depth_bounds_tail() {
        let m = truncation_depth(2.0, 2.0, 1e-6).unwrap();
        assert!(2f64.powi(-(m as i32)) * 2.0 / 0.5 < 1e-6);
        assert!(2f64.powi(-(m as i32 - 1)) * 2.0 / 0.5 >= 1e-6);
        // doubling the diameter costs exactly one more block when rho = 2
        assert_eq!(truncation_depth(2.0, 4.0, 1e-6).unwrap(), m + 1);
    }

    fn spec_strategy() -> impl Strategy<Value = MetricSpec> {
        prop_oneof![
            Just(MetricSpec::euclidean()),
            Just(MetricSpec::max_product(2).unwrap()),
            (1.1f64..4.0).prop_map(|rho| MetricSpec::sequence_rho(rho, 3).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn metric_axioms(
            spec in spec_strategy(),
            a in prop::collection::vec(-2.0f64..2.0, 6),
            b in prop::collection::vec(-2.0f64..2.0, 6),
            c in prop::collection::vec(-2.0f64..2.0, 6),
        ) {
            let ab = spec.dist(&a, &b).unwrap();
            let ba = spec.dist(&b, &a).unwrap();
            let bc = spec.dist(&b, &c).unwrap();
            let ac = spec.dist(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(spec.dist(&a, &a).unwrap(), 0.0);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
