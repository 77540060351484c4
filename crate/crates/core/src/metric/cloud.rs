use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{euclid, MetricSpec, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};

/// A finite sample of a space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    dim: usize,
    /// Claimed density of the sample in the underlying space.
    pub mesh: f64,
    pub label: String,
}

impl PointCloud {
    /// Builds a cloud, rejecting ragged input and duplicate points.
    pub fn new(points: Vec<Vec<f64>>, mesh: f64, label: impl Into<String>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::Empty)?;
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Shape(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim, mesh, label)
    }

    pub fn from_flat(data: Vec<f64>, dim: usize, mesh: f64, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::Empty);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Shape("flat data is not a whole number of points".into()));
        }
        if !(mesh > 0.0) {
            return Err(Error::Config(format!("mesh must be positive, got {mesh}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite coordinate".into()));
        }
        let cloud = Self {
            data,
            dim,
            mesh,
            label: label.into(),
        };
        if let Some((i, j)) = cloud.find_duplicate(DEFAULT_TOLERANCE) {
            return Err(Error::Config(format!("duplicate points {i} and {j}")));
        }
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The sub-cloud made of the given indices, in the given order.
    pub fn select(&self, indices: &[usize], label: impl Into<String>) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self::from_flat(data, self.dim, self.mesh, label)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in c.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Largest pairwise distance; quadratic, meant for small clouds.
    pub fn diameter(&self, spec: &MetricSpec) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(spec.dist_unchecked(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Whether every point of `other` is already a point of `self`.
    pub fn contains_all(&self, other: &PointCloud, tolerance: f64) -> bool {
        if other.dim != self.dim {
            return false;
        }
        let mut mine: Vec<&[f64]> = self.points().collect();
        mine.sort_by(|a, b| a[0].total_cmp(&b[0]));
        other.points().all(|q| {
            let lo = mine.partition_point(|p| p[0] < q[0] - tolerance);
            mine[lo..]
                .iter()
                .take_while(|p| p[0] <= q[0] + tolerance)
                .any(|p| euclid(p, q) <= tolerance)
        })
    }

    fn find_duplicate(&self, tolerance: f64) -> Option<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.point(a)[0].total_cmp(&self.point(b)[0]));
        for (k, &i) in idx.iter().enumerate() {
            let pi = self.point(i);
            for &j in &idx[k + 1..] {
                let pj = self.point(j);
                if pj[0] - pi[0] > tolerance {
                    break;
                }
                if euclid(pi, pj) < tolerance {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }

    /// CSV with a `x0,..,x(d-1)` header and one point per row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        w.write_record(&header).map_err(csv_err)?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_csv(text: &str, mesh: f64, label: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        for (k, name) in header.iter().enumerate() {
            if name.trim() != format!("x{k}") {
                return Err(Error::Shape(format!("unexpected column header {name:?}")));
            }
        }
        let dim = header.len();
        let mut data = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            for field in record.iter() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Shape(format!("bad number {field:?}")))?;
                data.push(v);
            }
        }
        Self::from_flat(data, dim, mesh, label)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// A random subset of a parent cloud together with its measured density.
#[derive(Debug, Clone)]
pub struct Subsample {
    pub cloud: PointCloud,
    /// Parent index of every kept point.
    pub parent_indices: Vec<usize>,
    /// Largest distance from a parent point to the nearest kept point.
    pub achieved_mesh: f64,
}

/// Keeps `ceil(keep_fraction * len)` points chosen by a seeded shuffle,
/// preserving parent order.
pub fn dense_subsample(cloud: &PointCloud, keep_fraction: f64, seed: u64, spec: &MetricSpec) -> Result<Subsample> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let n = cloud.len();
    let keep = ((keep_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    if keep < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(keep);
        idx.sort_unstable();
    }
    let sub = cloud.select(&idx, format!("{}[sub]", cloud.label))?;
    let achieved_mesh = cloud
        .points()
        .map(|p| {
            sub.points()
                .map(|q| spec.dist_unchecked(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(Subsample {
        cloud: sub,
        parent_indices: idx,
        achieved_mesh,
    })
}

/// Exact counts of a parent cloud and a dense subsample at matched scales.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleVerdict {
    pub eps: f64,
    /// Largest distance from a parent point to the subsample.
    pub density: f64,
    pub sep_parent: usize,
    /// Separated count of the subsample at `eps - 2 density`, when positive.
    pub sep_sub: Option<usize>,
    pub span_parent: usize,
    /// Spanning count of the subsample at `eps + 2 density`.
    pub span_sub: usize,
}

impl SubsampleVerdict {
    /// `sep_sub >= sep_parent` and `span_sub <= span_parent`.
    pub fn passed(&self) -> bool {
        self.sep_sub.is_none_or(|s| s >= self.sep_parent) && self.span_sub <= self.span_parent
    }
}

/// Compares exact counts of `parent` at `eps` with those of a dense
/// subsample at `eps ∓ 2δ`, `δ` the subsample's achieved mesh.
pub fn subsample_check(
    parent: &PointCloud,
    keep_fraction: f64,
    seed: u64,
    spec: &MetricSpec,
    eps: f64,
) -> Result<SubsampleVerdict> {
    use super::counting::{max_separated, min_spanning, CountMode};
    let sub = dense_subsample(parent, keep_fraction, seed, spec)?;
    let delta = sub.achieved_mesh;
    let (sep_parent, _) = max_separated(parent, spec, eps, CountMode::Exact)?;
    let (span_parent, _) = min_spanning(parent, spec, eps, CountMode::Exact)?;
    let lower = eps - 2.0 * delta;
    let sep_sub = if lower > 0.0 {
        Some(max_separated(&sub.cloud, spec, lower, CountMode::Exact)?.0)
    } else {
        None
    };
    let (span_sub, _) = min_spanning(&sub.cloud, spec, eps + 2.0 * delta, CountMode::Exact)?;
    Ok(SubsampleVerdict {
        eps,
        density: delta,
        sep_parent,
        sep_sub,
        span_parent,
        span_sub,
    })
}

/// The `k` points of `cloud` nearest to a seeded random point of it.
pub fn local_cluster(cloud: &PointCloud, spec: &MetricSpec, k: usize, seed: u64) -> Result<PointCloud> {
    if cloud.is_empty() || k == 0 {
        return Err(Error::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = cloud.point(rng.gen_range(0..cloud.len()));
    let mut idx: Vec<(f64, usize)> = (0..cloud.len())
        .map(|i| (spec.dist_unchecked(center, cloud.point(i)), i))
        .collect();
    let k = k.min(idx.len());
    idx.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = idx[..k].iter().map(|p| p.1).collect();
    keep.sort_unstable();
    cloud.select(&keep, format!("{} near point {}", cloud.label, keep[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.iter().map(|&x| vec![x]).collect(), 0.01, "line").unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(PointCloud::new(vec![], 0.1, "e"), Err(Error::Empty));
        assert!(matches!(
            PointCloud::new(vec![vec![0.0], vec![0.0, 1.0]], 0.1, "r"),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            PointCloud::new(vec![vec![0.5], vec![0.5]], 0.1, "d"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cloud = PointCloud::new(
            vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-7, std::f64::consts::PI]],
            0.05,
            "c",
        )
        .unwrap();
        let text = cloud.to_csv().unwrap();
        assert!(text.starts_with("x0,x1\n"));
        let back = PointCloud::from_csv(&text, 0.05, "c").unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn full_subsample_is_identity() {
        let cloud = line(&[0.0, 0.1, 0.3, 0.7]);
        let sub = dense_subsample(&cloud, 1.0, 9, &MetricSpec::euclidean()).unwrap();
        assert_eq!(sub.cloud.as_flat(), cloud.as_flat());
        assert_eq!(sub.achieved_mesh, 0.0);
    }

    #[test]
    fn subsample_is_deterministic() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let cloud = line(&xs);
        let spec = MetricSpec::euclidean();
        let a = dense_subsample(&cloud, 0.3, 4, &spec).unwrap();
        let b = dense_subsample(&cloud, 0.3, 4, &spec).unwrap();
        assert_eq!(a.parent_indices, b.parent_indices);
        assert_eq!(a.cloud.len(), 15);
        assert!(a.achieved_mesh >= 0.02 - 1e-12);
        assert!(matches!(dense_subsample(&cloud, 0.0, 1, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn subsample_counts_bracket_parent() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.618_034).fract()).collect();
        let cloud = line(&xs);
        let spec = MetricSpec::euclidean();
        for seed in 0..10 {
            let v = subsample_check(&cloud, 0.6, seed, &spec, 0.2).unwrap();
            assert!(v.passed(), "{v:?}");
        }
        let full = subsample_check(&cloud, 1.0, 0, &spec, 0.2).unwrap();
        assert_eq!(full.sep_sub, Some(full.sep_parent));
        assert_eq!(full.span_sub, full.span_parent);
    }

    #[test]
    fn containment() {
        let big = line(&[0.0, 0.1, 0.2, 0.3]);
        let small = line(&[0.1, 0.3]);
        assert!(big.contains_all(&small, 1e-12));
        assert!(!small.contains_all(&big, 1e-12));
    }

    #[test]
    fn cluster_is_nearest_points() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let cloud = PointCloud::new(pts, 1.0, "line").unwrap();
        let c = local_cluster(&cloud, &MetricSpec::euclidean(), 5, 3).unwrap();
        assert_eq!(c.len(), 5);
        let xs: Vec<f64> = c.points().map(|p| p[0]).collect();
        assert!(xs.windows(2).all(|w| w[1] - w[0] == 1.0));
        let again = local_cluster(&cloud, &MetricSpec::euclidean(), 5, 3).unwrap();
        assert_eq!(c.as_flat(), again.as_flat());
        assert_eq!(
            local_cluster(&cloud, &MetricSpec::euclidean(), 80, 0).unwrap().len(),
            50
        );
    }
}
