use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::exact::{exact_max_separated, exact_min_spanning};
use super::{MetricSpec, PointCloud};
use crate::error::{Error, Result};

/// Largest reduced problem handed to the exhaustive solvers.
pub const EXACT_CAP: usize = 24;

/// At most this many anchor coordinates are used for grid bucketing.
const MAX_ANCHOR: usize = 4;

/// Neighbor-list budget for greedy set cover; beyond it the separated
/// witness (which always spans) is reported instead.
const COVER_BUDGET: usize = 8_000_000;
/// Most candidate pairs the set cover may examine.
const CANDIDATE_BUDGET: usize = 10_000_000;

/// A family of metrics on a fixed finite index set, parametrized by an
/// orbit order `n >= 1`.
pub trait OrderedMetric: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest order for which `dist` is defined.
    fn max_order(&self) -> usize;

    fn dist(&self, a: usize, b: usize, n: usize) -> f64;

    /// `dist(a, b, n) < eps`, possibly decided without the full distance.
    fn closer_than(&self, a: usize, b: usize, n: usize, eps: f64) -> bool {
        self.dist(a, b, n) < eps
    }

    /// Appends coordinates `c` with `|c(a)_k - c(b)_k| <= dist(a, b, n)` for
    /// every pair and every `k`. Only the first few are used.
    fn anchor(&self, a: usize, n: usize, out: &mut Vec<f64>);
}

/// A plain cloud under a fixed metric; the order is ignored.
pub struct CloudMetric<'a> {
    pub cloud: &'a PointCloud,
    pub spec: MetricSpec,
}

impl<'a> CloudMetric<'a> {
    pub fn new(cloud: &'a PointCloud, spec: MetricSpec) -> Result<Self> {
        spec.validate()?;
        spec.check_dim(cloud.dim())?;
        Ok(Self { cloud, spec })
    }
}

impl OrderedMetric for CloudMetric<'_> {
    fn len(&self) -> usize {
        self.cloud.len()
    }

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn dist(&self, a: usize, b: usize, _n: usize) -> f64 {
        self.spec.dist_unchecked(self.cloud.point(a), self.cloud.point(b))
    }

    fn anchor(&self, a: usize, _n: usize, out: &mut Vec<f64>) {
        let k = self.spec.anchor_dims(self.cloud.dim()).min(MAX_ANCHOR);
        out.extend_from_slice(&self.cloud.point(a)[..k]);
    }
}

/// Row provenance: greedy heuristic or exhaustive optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Greedy,
    Exact,
}

impl CountMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountMode::Greedy => "greedy",
            CountMode::Exact => "exact",
        }
    }
}

impl std::str::FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(CountMode::Greedy),
            "exact" => Ok(CountMode::Exact),
            other => Err(Error::Config(format!("unknown count mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub epsilon: f64,
    pub n: usize,
    pub sep_count: usize,
    pub span_count: usize,
    pub mode: CountMode,
}

/// `(eps, n) -> (separated, spanning)` counts for one cloud.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountTable {
    pub rows: Vec<CountRow>,
    /// Separated witness for each row, parallel to `rows`.
    pub witnesses: Vec<Vec<usize>>,
    pub cloud_size: usize,
    /// Set when some orbit left the domain; holds the largest usable order.
    pub truncated_at: Option<usize>,
}

impl CountTable {
    /// Distinct epsilons in row order.
    pub fn epsilons(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.epsilon) {
                out.push(r.epsilon);
            }
        }
        out
    }

    /// `(n, sep_count)` for one epsilon, ordered by `n`.
    pub fn sep_series(&self, eps: f64) -> Vec<(usize, usize)> {
        let mut s: Vec<(usize, usize)> = self
            .rows
            .iter()
            .filter(|r| r.epsilon == eps)
            .map(|r| (r.n, r.sep_count))
            .collect();
        s.sort_unstable();
        s
    }

    pub fn row(&self, eps: f64, n: usize) -> Option<&CountRow> {
        self.rows.iter().find(|r| r.epsilon == eps && r.n == n)
    }

    /// Lists every violated table invariant.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for r in &self.rows {
            if r.span_count > r.sep_count {
                bad.push(format!(
                    "eps={} n={}: span {} > sep {}",
                    r.epsilon, r.n, r.span_count, r.sep_count
                ));
            }
            if r.mode == CountMode::Exact {
                let half = self
                    .rows
                    .iter()
                    .find(|h| h.n == r.n && h.mode == CountMode::Exact && h.epsilon == r.epsilon / 2.0);
                if let Some(h) = half {
                    if r.sep_count > h.span_count {
                        bad.push(format!(
                            "eps={} n={}: sep {} > span(eps/2) {}",
                            r.epsilon, r.n, r.sep_count, h.span_count
                        ));
                    }
                }
            }
            for o in &self.rows {
                if o.n == r.n && o.epsilon < r.epsilon && o.sep_count < r.sep_count {
                    bad.push(format!(
                        "n={}: sep increases with eps ({} -> {})",
                        r.n, o.epsilon, r.epsilon
                    ));
                }
                if o.epsilon == r.epsilon && o.n > r.n && o.sep_count < r.sep_count {
                    bad.push(format!("eps={}: sep decreases with n ({} -> {})", r.epsilon, r.n, o.n));
                }
            }
        }
        bad
    }
}

/// Indices sorted by decreasing Euclidean distance from the centroid,
/// ties by index.
pub fn greedy_order(cloud: &PointCloud) -> Vec<usize> {
    let c = cloud.centroid();
    let dist: Vec<f64> = cloud.points().map(|p| super::euclid(p, &c)).collect();
    let mut idx: Vec<usize> = (0..cloud.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx
}

type CellKey = [i64; MAX_ANCHOR];

struct Anchors {
    k: usize,
    coords: Vec<f64>,
}

impl Anchors {
    fn build<M: OrderedMetric + ?Sized>(metric: &M, n: usize) -> Self {
        let mut coords = Vec::new();
        let mut buf = Vec::new();
        let mut k = MAX_ANCHOR;
        for a in 0..metric.len() {
            buf.clear();
            metric.anchor(a, n, &mut buf);
            k = k.min(buf.len());
            coords.extend(buf.iter().copied().chain(std::iter::repeat(0.0)).take(MAX_ANCHOR));
        }
        Self { k, coords }
    }

    fn key(&self, a: usize, cell: f64) -> CellKey {
        let mut key = [0i64; MAX_ANCHOR];
        let c = &self.coords[a * MAX_ANCHOR..(a + 1) * MAX_ANCHOR];
        for d in 0..self.k {
            key[d] = (c[d] / cell).floor() as i64;
        }
        key
    }
}

struct Grid {
    k: usize,
    cells: HashMap<CellKey, Vec<u32>>,
}

impl Grid {
    fn new(k: usize) -> Self {
        Self {
            k,
            cells: HashMap::new(),
        }
    }

    fn insert(&mut self, key: CellKey, a: usize) {
        self.cells.entry(key).or_default().push(a as u32);
    }

    /// Calls `f` on the occupants of every cell adjacent to `key` until it
    /// returns `true`.
    fn adjacent(&self, key: CellKey) -> impl Iterator<Item = &Vec<u32>> + '_ {
        (0..3usize.pow(self.k as u32)).filter_map(move |code| {
            let mut probe = key;
            let mut c = code;
            for p in probe.iter_mut().take(self.k) {
                *p += (c % 3) as i64 - 1;
                c /= 3;
            }
            self.cells.get(&probe)
        })
    }

    /// Number of (point, candidate) pairs a full neighbor scan would test.
    fn candidate_pairs(&self) -> usize {
        self.cells
            .iter()
            .map(|(key, list)| list.len() * self.adjacent(*key).map(Vec::len).sum::<usize>())
            .sum()
    }

    fn any_near(&self, key: CellKey, mut f: impl FnMut(usize) -> bool) -> bool {
        self.adjacent(key).any(|list| list.iter().any(|&b| f(b as usize)))
    }
}

/// Extends `seed` to a maximal `eps`-separated set by scanning `order`.
///
/// The seed must already be separated; it is kept verbatim.
pub fn separated_greedy<M: OrderedMetric + ?Sized>(
    metric: &M,
    n: usize,
    eps: f64,
    order: &[usize],
    seed: &[usize],
) -> Vec<usize> {
    let anchors = Anchors::build(metric, n);
    let mut grid = Grid::new(anchors.k);
    let mut taken = vec![false; metric.len()];
    let mut witness = Vec::with_capacity(seed.len());
    for &s in seed {
        grid.insert(anchors.key(s, eps), s);
        taken[s] = true;
        witness.push(s);
    }
    for &p in order {
        if taken[p] {
            continue;
        }
        let key = anchors.key(p, eps);
        if !grid.any_near(key, |w| metric.closer_than(p, w, n, eps)) {
            grid.insert(key, p);
            taken[p] = true;
            witness.push(p);
        }
    }
    witness
}

/// Greedy set cover with centers drawn from the points themselves.
/// Returns `None` when the neighbor scan or the neighbor lists would
/// exceed the working budget.
pub fn spanning_greedy<M: OrderedMetric + ?Sized>(
    metric: &M,
    n: usize,
    eps: f64,
    order: &[usize],
) -> Option<Vec<usize>> {
    let len = metric.len();
    let anchors = Anchors::build(metric, n);
    let mut grid = Grid::new(anchors.k);
    for a in 0..len {
        grid.insert(anchors.key(a, eps), a);
    }
    if grid.candidate_pairs() > CANDIDATE_BUDGET {
        return None;
    }
    let mut neighbors: Vec<Vec<u32>> = Vec::with_capacity(len);
    let mut total = 0usize;
    for a in 0..len {
        let mut list = Vec::new();
        grid.any_near(anchors.key(a, eps), |b| {
            if b == a || metric.closer_than(a, b, n, eps) {
                list.push(b as u32);
            }
            false
        });
        total += list.len();
        if total > COVER_BUDGET {
            return None;
        }
        neighbors.push(list);
    }
    let mut rank = vec![0usize; len];
    for (r, &p) in order.iter().enumerate() {
        rank[p] = r;
    }
    let mut covered = vec![false; len];
    let mut remaining = len;
    let mut heap: BinaryHeap<(usize, Reverse<usize>, usize)> =
        (0..len).map(|a| (neighbors[a].len(), Reverse(rank[a]), a)).collect();
    let mut centers = Vec::new();
    while remaining > 0 {
        let (gain, r, a) = heap.pop()?;
        let fresh = neighbors[a].iter().filter(|&&b| !covered[b as usize]).count();
        if fresh == 0 {
            continue;
        }
        if fresh < gain {
            heap.push((fresh, r, a));
            continue;
        }
        for &b in &neighbors[a] {
            if !covered[b as usize] {
                covered[b as usize] = true;
                remaining -= 1;
            }
        }
        centers.push(a);
    }
    Some(centers)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("eps must be positive, got {eps}")))
    }
}

/// Maximal `eps`-separated subset of a cloud, greedy or exact.
pub fn max_separated(cloud: &PointCloud, spec: &MetricSpec, eps: f64, mode: CountMode) -> Result<(usize, Vec<usize>)> {
    check_eps(eps)?;
    let metric = CloudMetric::new(cloud, *spec)?;
    let witness = match mode {
        CountMode::Greedy => separated_greedy(&metric, 1, eps, &greedy_order(cloud), &[]),
        CountMode::Exact => exact_max_separated(&metric, 1, eps, EXACT_CAP)?,
    };
    Ok((witness.len(), witness))
}

/// Smallest `eps`-spanning subset of a cloud (centers from the cloud).
pub fn min_spanning(cloud: &PointCloud, spec: &MetricSpec, eps: f64, mode: CountMode) -> Result<(usize, Vec<usize>)> {
    check_eps(eps)?;
    let metric = CloudMetric::new(cloud, *spec)?;
    let witness = match mode {
        CountMode::Greedy => {
            let order = greedy_order(cloud);
            let sep = separated_greedy(&metric, 1, eps, &order, &[]);
            match spanning_greedy(&metric, 1, eps, &order) {
                Some(cover) if cover.len() <= sep.len() => cover,
                _ => sep,
            }
        }
        CountMode::Exact => exact_min_spanning(&metric, 1, eps, EXACT_CAP)?,
    };
    Ok((witness.len(), witness))
}

/// Fills a count table for every `(eps, n)` with `n <= n_max`.
///
/// `mode = None` picks exact counting for clouds of at most [`EXACT_CAP`]
/// points. Greedy rows are seeded from the larger of the `(n-1, eps)` and
/// `(n, coarser eps)` witnesses so counts are monotone in both arguments.
pub fn count_table<M: OrderedMetric + ?Sized>(
    metric: &M,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
    order: &[usize],
) -> Result<CountTable> {
    if metric.len() == 0 {
        return Err(Error::Empty);
    }
    for &e in eps_list {
        check_eps(e)?;
    }
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let mode = mode.unwrap_or(if metric.len() <= EXACT_CAP {
        CountMode::Exact
    } else {
        CountMode::Greedy
    });
    let usable = n_max.min(metric.max_order());
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    eps_sorted.dedup();

    let mut table = CountTable {
        cloud_size: metric.len(),
        truncated_at: (usable < n_max).then_some(usable),
        ..Default::default()
    };
    let mut coarser: Vec<Vec<usize>> = Vec::new();
    for &eps in &eps_sorted {
        let mut current: Vec<Vec<usize>> = Vec::with_capacity(usable);
        for n in 1..=usable {
            let (sep, span) = match mode {
                CountMode::Exact => (
                    exact_max_separated(metric, n, eps, EXACT_CAP)?,
                    exact_min_spanning(metric, n, eps, EXACT_CAP)?.len(),
                ),
                CountMode::Greedy => {
                    let prev = current.last().map(Vec::as_slice).unwrap_or(&[]);
                    let above = coarser.get(n - 1).map(Vec::as_slice).unwrap_or(&[]);
                    let seed = if above.len() > prev.len() { above } else { prev };
                    let sep = separated_greedy(metric, n, eps, order, seed);
                    let span = match spanning_greedy(metric, n, eps, order) {
                        Some(cover) => cover.len().min(sep.len()),
                        None => sep.len(),
                    };
                    (sep, span)
                }
            };
            table.rows.push(CountRow {
                epsilon: eps,
                n,
                sep_count: sep.len(),
                span_count: span,
                mode,
            });
            table.witnesses.push(sep.clone());
            current.push(sep);
        }
        coarser = current;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.iter().map(|&x| vec![x]).collect(), 0.01, "line").unwrap()
    }

    #[test]
    fn listed_order_greedy_example() {
        let cloud = line(&[0.0, 0.05, 0.2, 0.45]);
        let metric = CloudMetric::new(&cloud, MetricSpec::euclidean()).unwrap();
        let w = separated_greedy(&metric, 1, 0.15, &[0, 1, 2, 3], &[]);
        assert_eq!(w, vec![0, 2, 3]);
        let (count, _) = max_separated(&cloud, &MetricSpec::euclidean(), 0.15, CountMode::Greedy).unwrap();
        assert_eq!(count, 3);
    }

    #[test]
    fn eps_beyond_diameter_leaves_one_point() {
        let cloud = line(&[0.0, 0.3, 0.31, 0.9]);
        for mode in [CountMode::Greedy, CountMode::Exact] {
            let (s, _) = max_separated(&cloud, &MetricSpec::euclidean(), 1.5, mode).unwrap();
            let (r, _) = min_spanning(&cloud, &MetricSpec::euclidean(), 1.5, mode).unwrap();
            assert_eq!((s, r), (1, 1));
        }
    }

    #[test]
    fn small_spanning_example() {
        // the middle point is within 0.1 of both ends
        let cloud = line(&[0.0, 0.1, 0.2]);
        let (r, w) = min_spanning(&cloud, &MetricSpec::euclidean(), 0.15, CountMode::Exact).unwrap();
        assert_eq!((r, w), (1, vec![1]));
        let (g, _) = min_spanning(&cloud, &MetricSpec::euclidean(), 0.15, CountMode::Greedy).unwrap();
        assert_eq!(g, 1);
        let cloud = line(&[0.0, 0.1, 0.25]);
        let (r, _) = min_spanning(&cloud, &MetricSpec::euclidean(), 0.15, CountMode::Exact).unwrap();
        assert_eq!(r, 2);
    }

    #[test]
    fn singleton_cloud() {
        let cloud = line(&[0.4]);
        for eps in [1e-6, 0.5, 10.0] {
            assert_eq!(
                min_spanning(&cloud, &MetricSpec::euclidean(), eps, CountMode::Exact)
                    .unwrap()
                    .0,
                1
            );
        }
    }

    #[test]
    fn greedy_witness_spans() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 / 200.0).collect();
        let cloud = line(&xs);
        let spec = MetricSpec::euclidean();
        let (_, w) = max_separated(&cloud, &spec, 0.07, CountMode::Greedy).unwrap();
        for p in cloud.points() {
            assert!(w.iter().any(|&s| spec.dist_unchecked(p, cloud.point(s)) < 0.07));
        }
    }

    #[test]
    fn exact_over_cap_is_too_large() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let cloud = line(&xs);
        let err = max_separated(&cloud, &MetricSpec::euclidean(), 0.15, CountMode::Exact).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }

    #[test]
    fn bad_eps_is_config_error() {
        let cloud = line(&[0.0, 1.0]);
        assert!(matches!(
            max_separated(&cloud, &MetricSpec::euclidean(), 0.0, CountMode::Greedy),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn table_is_monotone() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 * 0.618_033_988_7).fract()).collect();
        let cloud = line(&xs);
        let metric = CloudMetric::new(&cloud, MetricSpec::euclidean()).unwrap();
        let order = greedy_order(&cloud);
        let t = count_table(&metric, &[0.1, 0.05, 0.025], 3, None, &order).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert!(t.invariant_violations().is_empty(), "{:?}", t.invariant_violations());
        assert_eq!(t.rows[0].mode, CountMode::Greedy);
    }
}
