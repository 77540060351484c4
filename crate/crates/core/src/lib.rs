//! Numerical topological entropy for self-maps of totally bounded metric
//! spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coding;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod gallery;
pub mod metric;
pub mod orbit_space;

pub use coding::{Alpha, CodingSystem, Complexity};
pub use dynamics::{DynSystem, OrbitTable};
pub use error::{Error, Result};
pub use estimators::{CompactFamily, EntropyEstimate, ExtrapolationRule, InequalityVerdict, Method};
pub use gallery::{Bundle, BundleReport, GalleryParams};
pub use metric::{CountMode, CountRow, CountTable, MetricKind, MetricSpec, PointCloud};
