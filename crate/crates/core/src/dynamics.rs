//! Self-maps, precomputed orbits and the Bowen-Dinaburg metrics
//! `d_n(x, y) = max_{i<n} d(f^i x, f^i y)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{count_table, greedy_order, CountMode, CountTable, MetricSpec, OrderedMetric, PointCloud};

/// Writes the image of the first argument into the second.
pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A self-map of a subset of `R^ambient_dim`.
#[derive(Clone)]
pub struct DynSystem {
    pub name: String,
    pub ambient_dim: usize,
    eval: MapFn,
    domain: DomainFn,
    inverse: Option<MapFn>,
    /// Points or region markers where continuity degrades.
    pub singular_hints: Vec<Vec<f64>>,
}

impl fmt::Debug for DynSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynSystem")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("invertible", &self.inverse.is_some())
            .finish()
    }
}

impl DynSystem {
    /// A system defined on all finite vectors.
    pub fn new(
        name: impl Into<String>,
        ambient_dim: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            ambient_dim,
            eval: Arc::new(eval),
            domain: Arc::new(|x: &[f64]| x.iter().all(|v| v.is_finite())),
            inverse: None,
            singular_hints: Vec::new(),
        }
    }

    pub fn identity(ambient_dim: usize) -> Self {
        Self::new("identity", ambient_dim, |x, out| out.copy_from_slice(x))
            .with_inverse(|x, out| out.copy_from_slice(x))
    }

    /// Restricts the domain; non-finite vectors are always outside it.
    pub fn with_domain(mut self, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(move |x: &[f64]| x.iter().all(|v| v.is_finite()) && domain(x));
        self
    }

    pub fn with_inverse(mut self, inverse: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn with_hints(mut self, hints: Vec<Vec<f64>>) -> Self {
        self.singular_hints = hints;
        self
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.ambient_dim && (self.domain)(x)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        (self.eval)(x, &mut out);
        out
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inverse.as_ref().map(|inv| {
            let mut out = vec![0.0; self.ambient_dim];
            inv(x, &mut out);
            out
        })
    }

    /// The inverse map as a system of its own, sharing the domain.
    pub fn inverted(&self) -> Option<DynSystem> {
        let inverse = self.inverse.clone()?;
        Some(DynSystem {
            name: format!("{}^-1", self.name),
            ambient_dim: self.ambient_dim,
            eval: inverse,
            domain: self.domain.clone(),
            inverse: Some(self.eval.clone()),
            singular_hints: self.singular_hints.clone(),
        })
    }

    /// Largest `|f(f^-1(p)) - p|` and `|f^-1(f(p)) - p|` over the points.
    pub fn inverse_residual<'a>(&self, points: impl IntoIterator<Item = &'a [f64]>) -> Option<f64> {
        let inv = self.inverse.as_ref()?;
        let mut a = vec![0.0; self.ambient_dim];
        let mut b = vec![0.0; self.ambient_dim];
        let mut worst = 0.0f64;
        for p in points {
            inv(p, &mut a);
            (self.eval)(&a, &mut b);
            worst = worst.max(crate::metric::pairwise_dist(p, &b, &MetricSpec::euclidean()).ok()?);
            (self.eval)(p, &mut a);
            inv(&a, &mut b);
            worst = worst.max(crate::metric::pairwise_dist(p, &b, &MetricSpec::euclidean()).ok()?);
        }
        Some(worst)
    }
}

/// `(x, f x, ..., f^{n-1} x)`; fails with `escaped(i)` when `f^i x` leaves
/// the domain.
pub fn iterate_orbit(sys: &DynSystem, x: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    if x.len() != sys.ambient_dim {
        return Err(Error::Shape(format!(
            "point of dimension {} for a system on R^{}",
            x.len(),
            sys.ambient_dim
        )));
    }
    if !sys.in_domain(x) {
        return Err(Error::Escaped {
            step: 0,
            last: x.to_vec(),
        });
    }
    let mut orbit = Vec::with_capacity(n);
    orbit.push(x.to_vec());
    for step in 1..n {
        let next = sys.apply(&orbit[step - 1]);
        if !sys.in_domain(&next) {
            return Err(Error::Escaped {
                step,
                last: orbit[step - 1].clone(),
            });
        }
        orbit.push(next);
    }
    Ok(orbit)
}

/// Where the first orbit left the domain while building an [`OrbitTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeInfo {
    pub point: usize,
    pub step: usize,
}

/// Orbit segments of every cloud point, stored flat.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    pub base: PointCloud,
    depth: usize,
    dim: usize,
    data: Vec<f64>,
    /// Set when some orbit escaped; `depth` is then the largest length all
    /// orbits share.
    pub escape: Option<EscapeInfo>,
}

impl OrbitTable {
    /// Computes orbits of length `depth`, truncating every row to the
    /// shortest in-domain orbit if one escapes.
    pub fn build(sys: &DynSystem, base: &PointCloud, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Config("orbit depth must be at least 1".into()));
        }
        let dim = sys.ambient_dim;
        if base.dim() != dim {
            return Err(Error::Shape(format!(
                "cloud of dimension {} for a system on R^{dim}",
                base.dim()
            )));
        }
        let mut data = vec![0.0; base.len() * depth * dim];
        let mut usable = depth;
        let mut escape: Option<EscapeInfo> = None;
        for (p, x) in base.points().enumerate() {
            if !sys.in_domain(x) {
                return Err(Error::Escaped {
                    step: 0,
                    last: x.to_vec(),
                });
            }
            let row = &mut data[p * depth * dim..(p + 1) * depth * dim];
            row[..dim].copy_from_slice(x);
            let limit = usable;
            for t in 1..limit {
                let (done, rest) = row.split_at_mut(t * dim);
                let next = &mut rest[..dim];
                sys.apply_into(&done[(t - 1) * dim..], next);
                if !sys.in_domain(next) {
                    usable = t;
                    escape = Some(EscapeInfo { point: p, step: t });
                    break;
                }
            }
        }
        let mut table = Self {
            base: base.clone(),
            depth: usable,
            dim,
            data,
            escape,
        };
        table.compact(depth);
        Ok(table)
    }

    /// Like [`OrbitTable::build`] but any escape is an error.
    pub fn build_strict(sys: &DynSystem, base: &PointCloud, depth: usize) -> Result<Self> {
        let table = Self::build(sys, base, depth)?;
        match &table.escape {
            Some(e) => {
                let orbit = iterate_orbit(sys, table.base.point(e.point), e.step + 1);
                Err(orbit.err().unwrap_or(Error::Escaped {
                    step: e.step,
                    last: table.point(e.point, e.step - 1).to_vec(),
                }))
            }
            None => Ok(table),
        }
    }

    fn compact(&mut self, stride: usize) {
        if self.depth == stride {
            return;
        }
        let (d, dim) = (self.depth, self.dim);
        let mut data = Vec::with_capacity(self.base.len() * d * dim);
        for p in 0..self.base.len() {
            data.extend_from_slice(&self.data[p * stride * dim..(p * stride + d) * dim]);
        }
        self.data = data;
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `f^t` of base point `p`.
    #[inline]
    pub fn point(&self, p: usize, t: usize) -> &[f64] {
        let at = (p * self.depth + t) * self.dim;
        &self.data[at..at + self.dim]
    }

    /// The orbit segment of `p` as one stacked vector.
    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.depth * self.dim..(p + 1) * self.depth * self.dim]
    }

    /// Cloud of the time-`t` images of all base points.
    pub fn image_cloud(&self, t: usize, label: impl Into<String>) -> Result<PointCloud> {
        let mut data = Vec::with_capacity(self.len() * self.dim);
        for p in 0..self.len() {
            data.extend_from_slice(self.point(p, t));
        }
        PointCloud::from_flat(data, self.dim, self.base.mesh, label)
    }
}

/// The Bowen-Dinaburg metrics of a system on a precomputed orbit table.
pub struct BowenMetric<'a> {
    pub table: &'a OrbitTable,
    pub spec: MetricSpec,
}

impl<'a> BowenMetric<'a> {
    pub fn new(table: &'a OrbitTable, spec: MetricSpec) -> Result<Self> {
        spec.validate()?;
        spec.check_dim(table.dim())?;
        Ok(Self { table, spec })
    }
}

impl OrderedMetric for BowenMetric<'_> {
    fn len(&self) -> usize {
        self.table.len()
    }

    fn max_order(&self) -> usize {
        self.table.depth()
    }

    fn dist(&self, a: usize, b: usize, n: usize) -> f64 {
        (0..n)
            .map(|t| self.spec.dist_unchecked(self.table.point(a, t), self.table.point(b, t)))
            .fold(0.0, f64::max)
    }

    fn closer_than(&self, a: usize, b: usize, n: usize, eps: f64) -> bool {
        // the last step is the most expanded one, try it first
        (0..n)
            .rev()
            .all(|t| self.spec.dist_unchecked(self.table.point(a, t), self.table.point(b, t)) < eps)
    }

    fn anchor(&self, a: usize, n: usize, out: &mut Vec<f64>) {
        let k = self.spec.anchor_dims(self.table.dim());
        out.extend_from_slice(&self.table.point(a, n - 1)[..k]);
        if n > 1 {
            out.extend_from_slice(&self.table.point(a, 0)[..k]);
        }
    }
}

/// `max_{i<n} d(f^i x, f^i y)`.
pub fn bd_dist(sys: &DynSystem, spec: &MetricSpec, x: &[f64], y: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("order n must be at least 1".into()));
    }
    let ox = iterate_orbit(sys, x, n)?;
    let oy = iterate_orbit(sys, y, n)?;
    let mut best = 0.0f64;
    for (a, b) in ox.iter().zip(&oy) {
        best = best.max(spec.dist(a, b)?);
    }
    Ok(best)
}

/// Separated and spanning counts under `d_n` for every `(eps, n)`.
///
/// An escaping orbit truncates the table; `truncated_at` then records the
/// largest order that could be counted.
pub fn bd_count_table(
    sys: &DynSystem,
    cloud: &PointCloud,
    spec: &MetricSpec,
    eps_list: &[f64],
    n_max: usize,
) -> Result<CountTable> {
    bd_count_table_with(sys, cloud, spec, eps_list, n_max, None)
}

/// [`bd_count_table`] with an explicit counting mode.
pub fn bd_count_table_with(
    sys: &DynSystem,
    cloud: &PointCloud,
    spec: &MetricSpec,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
) -> Result<CountTable> {
    let table = OrbitTable::build(sys, cloud, n_max)?;
    let metric = BowenMetric::new(&table, *spec)?;
    count_table(&metric, eps_list, n_max, mode, &greedy_order(cloud))
}

/// Outcome of checking that forward-separated sets stay separated under
/// the inverse map after transport by `f^{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportVerdict {
    pub witnesses: usize,
    pub pairs: usize,
    pub violations: usize,
}

impl TransportVerdict {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// For a witness `S` that is `(n, eps)`-separated under `f`, checks that
/// `f^{n-1}(S)` is `(n, eps)`-separated under `f^-1`, with the inverse
/// orbits computed through the inverse map. Distances within the metric's
/// tolerance of `eps` count as equal to it. Pairs whose first coordinates
/// at time 0 differ by at least `eps` count as separated without a full
/// comparison.
pub fn inverse_transport_check(
    sys: &DynSystem,
    spec: &MetricSpec,
    table: &OrbitTable,
    witness: &[usize],
    n: usize,
    eps: f64,
) -> Result<TransportVerdict> {
    let inv = sys
        .inverted()
        .ok_or_else(|| Error::Config(format!("{} has no inverse", sys.name)))?;
    if n == 0 || n > table.depth() {
        return Err(Error::Config(format!(
            "order {n} outside the orbit table depth {}",
            table.depth()
        )));
    }
    let mut ends = Vec::with_capacity(witness.len() * table.dim());
    for &s in witness {
        ends.extend_from_slice(table.point(s, n - 1));
    }
    let dim = table.dim();
    let mut back: Vec<Vec<Vec<f64>>> = Vec::with_capacity(witness.len());
    for chunk in ends.chunks_exact(dim) {
        back.push(iterate_orbit(&inv, chunk, n)?);
    }
    let k = back.len();
    let mut verdict = TransportVerdict {
        witnesses: k,
        pairs: k * k.saturating_sub(1) / 2,
        violations: 0,
    };
    let mut by_x: Vec<usize> = (0..k).collect();
    by_x.sort_by(|&a, &b| back[a][0][0].total_cmp(&back[b][0][0]));
    for (pos, &i) in by_x.iter().enumerate() {
        for &j in &by_x[pos + 1..] {
            if back[j][0][0] - back[i][0][0] >= eps {
                break;
            }
            let d = back[i]
                .iter()
                .zip(&back[j])
                .map(|(a, b)| spec.dist_unchecked(a, b))
                .fold(0.0, f64::max);
            if d < eps - spec.tolerance {
                verdict.violations += 1;
            }
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::CountMode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doubling_angle() -> DynSystem {
        DynSystem::new("doubling-angle", 1, |x, out| out[0] = (2.0 * x[0]).fract())
            .with_domain(|x| (0.0..1.0).contains(&x[0]))
    }

    fn circle_doubling() -> DynSystem {
        DynSystem::new("doubling", 2, |p, out| {
            let (c, s) = (p[0], p[1]);
            out[0] = c * c - s * s;
            out[1] = 2.0 * c * s;
        })
    }

    fn on_circle(theta: f64) -> Vec<f64> {
        let a = std::f64::consts::TAU * theta;
        vec![a.cos(), a.sin()]
    }

    #[test]
    fn doubling_orbit_by_hand() {
        let orbit = iterate_orbit(&doubling_angle(), &[0.1], 3).unwrap();
        let flat: Vec<f64> = orbit.into_iter().flatten().collect();
        for (got, want) in flat.iter().zip([0.1, 0.2, 0.4]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_point_orbit_is_constant() {
        let orbit = iterate_orbit(&DynSystem::identity(2), &[0.3, 0.4], 5).unwrap();
        assert!(orbit.iter().all(|p| p == &[0.3, 0.4]));
    }

    #[test]
    fn escape_reports_step_and_last_point() {
        let push = DynSystem::new("push", 1, |x, out| out[0] = x[0] + 0.4).with_domain(|x| x[0] < 1.0);
        let err = iterate_orbit(&push, &[0.0], 5).unwrap_err();
        assert_eq!(
            err,
            Error::Escaped {
                step: 3,
                last: vec![0.8]
            }
        );
        assert_eq!(err.to_string(), "escaped(3)");
    }

    #[test]
    fn bd_dist_takes_worst_time() {
        let d = bd_dist(&doubling_angle(), &MetricSpec::euclidean(), &[0.0], &[0.1], 3).unwrap();
        assert!((d - 0.4).abs() < 1e-15);
        let d1 = bd_dist(&doubling_angle(), &MetricSpec::euclidean(), &[0.0], &[0.1], 1).unwrap();
        assert_eq!(d1, 0.1);
    }

    #[test]
    fn bd_dist_is_monotone_in_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = circle_doubling();
        let spec = MetricSpec::euclidean();
        for _ in 0..200 {
            let x = on_circle(rng.gen());
            let y = on_circle(rng.gen());
            let n = rng.gen_range(1..10);
            // recompute from scratch at both orders
            let a = bd_dist(&sys, &spec, &x, &y, n).unwrap();
            let b = bd_dist(&sys, &spec, &x, &y, n + 1).unwrap();
            assert!(b >= a);
        }
    }

    #[test]
    fn identity_counts_ignore_n() {
        let pts: Vec<Vec<f64>> = (0..60).map(|i| on_circle(i as f64 / 60.0)).collect();
        let cloud = PointCloud::new(pts, 0.1, "circle").unwrap();
        let t = bd_count_table(
            &DynSystem::identity(2),
            &cloud,
            &MetricSpec::euclidean(),
            &[0.5, 0.25, 0.125],
            6,
        )
        .unwrap();
        for eps in t.epsilons() {
            let s = t.sep_series(eps);
            assert!(s.iter().all(|&(_, c)| c == s[0].1));
        }
    }

    #[test]
    fn truncation_on_escape() {
        let push = DynSystem::new("push", 1, |x, out| out[0] = x[0] * 2.0).with_domain(|x| x[0] < 1.0);
        let cloud = PointCloud::new(vec![vec![0.1], vec![0.2], vec![0.4]], 0.1, "c").unwrap();
        let t = bd_count_table(&push, &cloud, &MetricSpec::euclidean(), &[0.05], 6).unwrap();
        // 0.4 -> 0.8 -> 1.6 leaves after two entries
        assert_eq!(t.truncated_at, Some(2));
        assert_eq!(t.rows.len(), 2);
        assert!(OrbitTable::build_strict(&push, &cloud, 6).is_err());
    }

    #[test]
    fn doubling_counts_double() {
        let pts: Vec<Vec<f64>> = (0..4096).map(|i| on_circle(i as f64 / 4096.0)).collect();
        let cloud = PointCloud::new(pts, 0.002, "grid").unwrap();
        let t = bd_count_table(&circle_doubling(), &cloud, &MetricSpec::euclidean(), &[0.04], 5).unwrap();
        let s = t.sep_series(0.04);
        // four doublings, up to a factor two of greedy slack either way
        let ratio = s[4].1 as f64 / s[0].1 as f64;
        assert!((8.0..=32.0).contains(&ratio), "{s:?}");
        assert!(s.iter().all(|&(_, c)| c < 4096));
    }

    #[test]
    fn inverse_transport_on_rotation() {
        let rot = DynSystem::new("rot", 2, |p, out| {
            let (c, s) = (0.6f64, 0.8f64);
            out[0] = c * p[0] - s * p[1];
            out[1] = s * p[0] + c * p[1];
        })
        .with_inverse(|p, out| {
            let (c, s) = (0.6f64, 0.8f64);
            out[0] = c * p[0] + s * p[1];
            out[1] = -s * p[0] + c * p[1];
        });
        let pts: Vec<Vec<f64>> = (0..40).map(|i| on_circle(i as f64 / 40.0)).collect();
        let cloud = PointCloud::new(pts, 0.1, "c").unwrap();
        let spec = MetricSpec::euclidean();
        let table = OrbitTable::build(&rot, &cloud, 4).unwrap();
        let metric = BowenMetric::new(&table, spec).unwrap();
        let w = crate::metric::separated_greedy(&metric, 4, 0.3, &greedy_order(&cloud), &[]);
        let v = inverse_transport_check(&rot, &spec, &table, &w, 4, 0.3).unwrap();
        assert!(v.passed());
        assert_eq!(v.pairs, w.len() * (w.len() - 1) / 2);
        assert!(rot.inverse_residual(cloud.points()).unwrap() < 1e-12);
    }

    #[test]
    fn exact_table_for_small_clouds() {
        let pts: Vec<Vec<f64>> = (0..16).map(|i| on_circle(i as f64 / 16.0)).collect();
        let cloud = PointCloud::new(pts, 0.2, "c").unwrap();
        let t = bd_count_table(&circle_doubling(), &cloud, &MetricSpec::euclidean(), &[0.8, 0.4], 3).unwrap();
        assert!(t.rows.iter().all(|r| r.mode == CountMode::Exact));
        assert!(t.invariant_violations().is_empty());
    }

    fn rotation() -> DynSystem {
        DynSystem::new("rot", 2, |p, out| {
            out[0] = 0.6 * p[0] - 0.8 * p[1];
            out[1] = 0.8 * p[0] + 0.6 * p[1];
        })
        .with_inverse(|p, out| {
            out[0] = 0.6 * p[0] + 0.8 * p[1];
            out[1] = -0.8 * p[0] + 0.6 * p[1];
        })
    }

    proptest! {
        #[test]
        fn transport_violations_match_all_pairs(seed in 0u64..500, n in 1usize..5, eps in 0.05f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let cloud = PointCloud::new(pts, 0.1, "c").unwrap();
            let sys = rotation();
            let inv = sys.inverted().unwrap();
            let spec = MetricSpec::euclidean();
            let table = OrbitTable::build(&sys, &cloud, n).unwrap();
            let w: Vec<usize> = (0..30).filter(|_| rng.gen_bool(0.6)).collect();
            let v = inverse_transport_check(&sys, &spec, &table, &w, n, eps).unwrap();
            let mut brute = 0;
            for (a, &i) in w.iter().enumerate() {
                for &j in &w[a + 1..] {
                    let d = bd_dist(&inv, &spec, table.point(i, n - 1), table.point(j, n - 1), n).unwrap();
                    brute += usize::from(d < eps - spec.tolerance);
                }
            }
            prop_assert_eq!(v.violations, brute);
        }

        #[test]
        fn bowen_metric_axioms(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..3).map(|_| on_circle(rng.gen())).collect();
            let cloud = PointCloud::new(pts, 0.1, "t").unwrap();
            let table = OrbitTable::build(&circle_doubling(), &cloud, n).unwrap();
            let m = BowenMetric::new(&table, MetricSpec::euclidean()).unwrap();
            prop_assert_eq!(m.dist(0, 1, n), m.dist(1, 0, n));
            prop_assert_eq!(m.dist(2, 2, n), 0.0);
            prop_assert!(m.dist(0, 2, n) <= m.dist(0, 1, n) + m.dist(1, 2, n) + 1e-12);
            prop_assert_eq!(m.dist(0, 1, 1), MetricSpec::euclidean().dist_unchecked(cloud.point(0), cloud.point(1)));
        }
    }
}
