//! Orbit sequences `(x, f x, f^2 x, ...)`, the weighted metric
//! `d̂ = sum_i rho^-i d(x_i, x'_i)`, the shift, and the checks relating
//! counts upstairs and downstairs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{iterate_orbit, BowenMetric, DynSystem, OrbitTable};
use crate::error::{Error, Result};
use crate::estimators::{entropy_estimate, EntropyEstimate, ExtrapolationRule, Method};
use crate::metric::{
    count_table, exact_max_separated, exact_min_spanning, greedy_order, truncation_depth, CountMode, CountTable,
    MetricSpec, OrderedMetric, PointCloud, DEFAULT_TOLERANCE, EXACT_CAP,
};

pub const DEFAULT_RHO: f64 = 2.0;

/// Tail bound used to pick the truncation depth of lifted orbits.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// A truncated orbit sequence, stored as stacked blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSeqPoint {
    pub blocks: Vec<f64>,
    pub block_dim: usize,
    pub rho: f64,
    pub truncation: usize,
    /// Metric used between blocks.
    pub base: MetricSpec,
}

impl OrbitSeqPoint {
    pub fn block(&self, i: usize) -> &[f64] {
        &self.blocks[i * self.block_dim..(i + 1) * self.block_dim]
    }

    /// First coordinate of the sequence.
    pub fn project(&self) -> &[f64] {
        self.block(0)
    }

    /// Drops the first block and appends the image of the last one.
    pub fn shift(&self, sys: &DynSystem) -> Result<Self> {
        let last = self.block(self.truncation - 1);
        let next = sys.apply(last);
        if !sys.in_domain(&next) {
            return Err(Error::Escaped {
                step: self.truncation,
                last: last.to_vec(),
            });
        }
        let mut blocks = self.blocks[self.block_dim..].to_vec();
        blocks.extend_from_slice(&next);
        Ok(Self { blocks, ..self.clone() })
    }

    /// Largest `|f(x_i) - x_{i+1}|`; zero for a genuine lifted orbit.
    pub fn membership_residual(&self, sys: &DynSystem) -> f64 {
        (0..self.truncation - 1)
            .map(|i| {
                let img = sys.apply(self.block(i));
                crate::metric::pairwise_dist(&img, self.block(i + 1), &MetricSpec::euclidean()).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }
}

/// `(x, f x, ..., f^{M-1} x)` as an orbit-sequence point.
pub fn lift_orbit(sys: &DynSystem, x: &[f64], rho: f64, truncation: usize, base: MetricSpec) -> Result<OrbitSeqPoint> {
    if !(rho > 1.0) {
        return Err(Error::Config(format!("rho must exceed 1, got {rho}")));
    }
    if truncation == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    let orbit = iterate_orbit(sys, x, truncation)?;
    Ok(OrbitSeqPoint {
        blocks: orbit.concat(),
        block_dim: x.len(),
        rho,
        truncation,
        base,
    })
}

/// `sum_{i<M} rho^-i d(x_i, x'_i)`.
pub fn dhat_dist(a: &OrbitSeqPoint, b: &OrbitSeqPoint) -> Result<f64> {
    if a.rho != b.rho || a.truncation != b.truncation || a.block_dim != b.block_dim || a.base != b.base {
        return Err(Error::Config(
            "orbit sequences with different rho, truncation, block size or base metric".into(),
        ));
    }
    let mut w = 1.0;
    let mut total = 0.0;
    for i in 0..a.truncation {
        total += w * a.base.dist_unchecked(a.block(i), b.block(i));
        w /= a.rho;
    }
    Ok(total)
}

/// The shift on stacked orbit segments of length `truncation`.
pub fn shift_system(base: &DynSystem, truncation: usize) -> DynSystem {
    let dim = base.ambient_dim;
    let f = base.clone();
    let g = base.clone();
    DynSystem::new(format!("shift[{}]", base.name), dim * truncation, move |x, out| {
        out[..dim * (truncation - 1)].copy_from_slice(&x[dim..]);
        f.apply_into(&x[dim * (truncation - 1)..], &mut out[dim * (truncation - 1)..]);
    })
    .with_domain(move |x| x.chunks_exact(dim).all(|b| g.in_domain(b)))
}

/// Lifts every cloud point to depth `truncation`.
pub fn lifted_cloud(sys: &DynSystem, cloud: &PointCloud, truncation: usize) -> Result<PointCloud> {
    let table = OrbitTable::build_strict(sys, cloud, truncation)?;
    let mut data = Vec::with_capacity(cloud.len() * truncation * cloud.dim());
    for p in 0..cloud.len() {
        data.extend_from_slice(table.row(p));
    }
    PointCloud::from_flat(
        data,
        cloud.dim() * truncation,
        cloud.mesh,
        format!("{}[lifted]", cloud.label),
    )
}

/// Bowen metrics of the shift on lifted orbits, read off base orbits of
/// length `n + M - 1`:
/// `max_{i<n} sum_{j<M} rho^-j d(f^{i+j} x, f^{i+j} y)`.
pub struct ShiftBowenMetric<'a> {
    table: &'a OrbitTable,
    base: MetricSpec,
    weights: Vec<f64>,
}

impl<'a> ShiftBowenMetric<'a> {
    pub fn new(table: &'a OrbitTable, base: MetricSpec, rho: f64, truncation: usize) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::Config(format!("rho must exceed 1, got {rho}")));
        }
        base.validate()?;
        base.check_dim(table.dim())?;
        if truncation == 0 || truncation > table.depth() {
            return Err(Error::Config(format!(
                "truncation {truncation} needs orbits of at least that length, have {}",
                table.depth()
            )));
        }
        let weights = (0..truncation).map(|j| rho.powi(-(j as i32))).collect();
        Ok(Self { table, base, weights })
    }

    fn window_sum(&self, a: usize, b: usize, i: usize, stop: f64) -> f64 {
        let mut total = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            total += w * self
                .base
                .dist_unchecked(self.table.point(a, i + j), self.table.point(b, i + j));
            if total >= stop {
                break;
            }
        }
        total
    }
}

impl OrderedMetric for ShiftBowenMetric<'_> {
    fn len(&self) -> usize {
        self.table.len()
    }

    fn max_order(&self) -> usize {
        self.table.depth() + 1 - self.weights.len()
    }

    fn dist(&self, a: usize, b: usize, n: usize) -> f64 {
        (0..n)
            .map(|i| self.window_sum(a, b, i, f64::INFINITY))
            .fold(0.0, f64::max)
    }

    fn closer_than(&self, a: usize, b: usize, n: usize, eps: f64) -> bool {
        // base distances are shared by overlapping windows, so compute each once
        let len = n + self.weights.len() - 1;
        let mut stack = [f64::NAN; 64];
        let mut heap = Vec::new();
        let cache: &mut [f64] = if len <= stack.len() {
            &mut stack[..len]
        } else {
            heap.resize(len, f64::NAN);
            &mut heap
        };
        // the two ends first: expanding maps separate late, contracting early
        let windows = std::iter::once(n - 1)
            .chain((n > 1).then_some(0))
            .chain((1..n.saturating_sub(1)).rev());
        for i in windows {
            let mut total = 0.0;
            for (j, w) in self.weights.iter().enumerate() {
                let t = i + j;
                if cache[t].is_nan() {
                    cache[t] = self.base.dist_unchecked(self.table.point(a, t), self.table.point(b, t));
                }
                total += w * cache[t];
                if total >= eps {
                    return false;
                }
            }
        }
        true
    }

    fn anchor(&self, a: usize, n: usize, out: &mut Vec<f64>) {
        let k = self.base.anchor_dims(self.table.dim());
        out.extend_from_slice(&self.table.point(a, n - 1)[..k]);
        if n > 1 {
            out.extend_from_slice(&self.table.point(a, 0)[..k]);
        }
    }
}

/// Counts for the shift on the lifted cloud.
#[allow(clippy::too_many_arguments)]
pub fn friedland_count_table(
    sys: &DynSystem,
    cloud: &PointCloud,
    base: &MetricSpec,
    rho: f64,
    truncation: usize,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
) -> Result<CountTable> {
    let table = OrbitTable::build_strict(sys, cloud, n_max + truncation - 1)?;
    let metric = ShiftBowenMetric::new(&table, *base, rho, truncation)?;
    count_table(&metric, eps_list, n_max, mode, &greedy_order(cloud))
}

/// Friedland entropy estimate: Bowen-Dinaburg growth for the shift on
/// lifted orbits under `d̂`.
pub fn friedland_estimate(
    sys: &DynSystem,
    cloud: &PointCloud,
    base: &MetricSpec,
    rho: f64,
    truncation: usize,
    eps_list: &[f64],
    n_max: usize,
) -> Result<EntropyEstimate> {
    friedland_estimate_with(
        sys,
        cloud,
        base,
        rho,
        truncation,
        eps_list,
        n_max,
        None,
        &ExtrapolationRule::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn friedland_estimate_with(
    sys: &DynSystem,
    cloud: &PointCloud,
    base: &MetricSpec,
    rho: f64,
    truncation: usize,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
    rule: &ExtrapolationRule,
) -> Result<EntropyEstimate> {
    let table = friedland_count_table(sys, cloud, base, rho, truncation, eps_list, n_max, mode)?;
    let mut est = entropy_estimate(&table, rule)?;
    est.method = Method::Friedland;
    est.label = format!("{}/{}", sys.name, cloud.label);
    Ok(est)
}

/// An upper bound on the diameter: exact for small clouds, otherwise
/// twice the eccentricity of the first point.
pub fn diameter_bound(cloud: &PointCloud, spec: &MetricSpec) -> f64 {
    if cloud.len() <= 4096 {
        return cloud.diameter(spec);
    }
    let p0 = cloud.point(0);
    2.0 * cloud.points().map(|q| spec.dist_unchecked(p0, q)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Verdict {
    /// Smallest `N` with `sum_{i>=N} rho^-i diam < eps`.
    pub n_tail: usize,
    pub truncation: usize,
    pub pairs: usize,
    /// Pairs with `d_N < eps`, and those among them with `d̂ >= (N+1) eps`.
    pub bowen_close: usize,
    pub bowen_violations: usize,
    /// Pairs with `d̂ < rho^-N eps`, and those among them with `d_N >= eps`.
    pub dhat_close: usize,
    pub dhat_violations: usize,
}

impl Lemma4Verdict {
    pub fn passed(&self) -> bool {
        self.bowen_violations == 0 && self.dhat_violations == 0
    }
}

fn sample_pairs(cloud: &PointCloud, count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let len = cloud.len();
    let mut pairs = Vec::with_capacity(count);
    if len == 1 {
        return vec![(0, 0); count];
    }
    let mut sorted: Vec<usize> = (0..len).collect();
    sorted.sort_by(|&a, &b| cloud.point(a)[0].total_cmp(&cloud.point(b)[0]));
    let mut rank = vec![0; len];
    for (r, &p) in sorted.iter().enumerate() {
        rank[p] = r;
    }
    pairs.push((0, 0));
    while pairs.len() < count {
        let a = rng.gen_range(0..len);
        if pairs.len() % 2 == 0 {
            let mut b = rng.gen_range(0..len - 1);
            if b >= a {
                b += 1;
            }
            pairs.push((a, b));
        } else {
            // a near neighbour in the first coordinate
            let r = rank[a];
            let lo = r.saturating_sub(8);
            let hi = (r + 9).min(len);
            let choices: Vec<usize> = (lo..hi).filter(|&k| k != r).map(|k| sorted[k]).collect();
            let b = *choices.choose(rng).expect("at least two points");
            pairs.push((a, b));
        }
    }
    pairs
}

/// Checks both directions comparing `d_N` and `d̂` on sampled pairs:
/// `d_N < eps => d̂ < (N+1) eps` and `d̂ < rho^-N eps => d_N < eps`.
pub fn lemma4_check(
    sys: &DynSystem,
    cloud: &PointCloud,
    base: &MetricSpec,
    rho: f64,
    eps: f64,
    pairs: usize,
    seed: u64,
) -> Result<Lemma4Verdict> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let diam = diameter_bound(cloud, base);
    let n_tail = truncation_depth(rho, diam, eps)?;
    let truncation = truncation_depth(rho, diam, TAIL_TOLERANCE)?.max(n_tail + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = sample_pairs(cloud, pairs, &mut rng);
    let mut involved: Vec<usize> = chosen.iter().flat_map(|&(a, b)| [a, b]).collect();
    involved.sort_unstable();
    involved.dedup();
    let sub = cloud.select(&involved, "pairs")?;
    let table = OrbitTable::build_strict(sys, &sub, truncation)?;
    let local = |p: usize| involved.binary_search(&p).expect("selected");
    let bowen = BowenMetric::new(&table, *base)?;
    let mut v = Lemma4Verdict {
        n_tail,
        truncation,
        pairs: chosen.len(),
        bowen_close: 0,
        bowen_violations: 0,
        dhat_close: 0,
        dhat_violations: 0,
    };
    let w: Vec<f64> = (0..truncation).map(|j| rho.powi(-(j as i32))).collect();
    for &(a, b) in &chosen {
        let (a, b) = (local(a), local(b));
        let dn = bowen.dist(a, b, n_tail);
        let dhat: f64 = (0..truncation)
            .map(|j| w[j] * base.dist_unchecked(table.point(a, j), table.point(b, j)))
            .sum();
        if dn < eps {
            v.bowen_close += 1;
            if dhat >= (n_tail + 1) as f64 * eps {
                v.bowen_violations += 1;
            }
        }
        if dhat < rho.powi(-(n_tail as i32)) * eps {
            v.dhat_close += 1;
            if dn >= eps {
                v.dhat_violations += 1;
            }
        }
    }
    Ok(v)
}

/// A system together with the metric used on its side of a semiconjugacy.
#[derive(Debug, Clone)]
pub struct Side<'a> {
    pub system: &'a DynSystem,
    pub spec: MetricSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiconjVerdict {
    pub n: usize,
    pub eps: f64,
    pub eps_up: f64,
    pub sep_up: usize,
    pub sep_down: usize,
    pub span_up: usize,
    pub span_down: usize,
    pub residual: f64,
}

impl SemiconjVerdict {
    pub fn passed(&self) -> bool {
        self.sep_up >= self.sep_down && self.span_up >= self.span_down
    }
}

/// Exact comparison of `(n, eps)` counts downstairs with `(n, modulus(eps))`
/// counts upstairs for a semiconjugacy `h`, with `h∘f̃ = f∘h` checked on
/// the sample first.
#[allow(clippy::too_many_arguments)]
pub fn semiconj_check(
    up: Side<'_>,
    down: Side<'_>,
    h: &dyn Fn(&[f64]) -> Vec<f64>,
    modulus: &dyn Fn(f64) -> f64,
    cloud: &PointCloud,
    eps: f64,
    n: usize,
    tolerance: f64,
) -> Result<SemiconjVerdict> {
    let mut residual = 0.0f64;
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(cloud.len());
    for (k, p) in cloud.points().enumerate() {
        let hp = h(p);
        let lhs = h(&up.system.apply(p));
        let rhs = down.system.apply(&hp);
        let r = crate::metric::pairwise_dist(&lhs, &rhs, &MetricSpec::euclidean())?;
        if r > tolerance {
            return Err(Error::NotSemiconjugate { residual: r, index: k });
        }
        residual = residual.max(r);
        if !images
            .iter()
            .any(|q| crate::metric::pairwise_dist(q, &hp, &MetricSpec::euclidean()).unwrap_or(1.0) <= DEFAULT_TOLERANCE)
        {
            images.push(hp);
        }
    }
    let downstairs = PointCloud::new(images, cloud.mesh, format!("{}[image]", cloud.label))?;
    let eps_up = modulus(eps);
    let counts = |side: &Side<'_>, c: &PointCloud, e: f64| -> Result<(usize, usize)> {
        let table = OrbitTable::build_strict(side.system, c, n)?;
        let m = BowenMetric::new(&table, side.spec)?;
        Ok((
            exact_max_separated(&m, n, e, EXACT_CAP)?.len(),
            exact_min_spanning(&m, n, e, EXACT_CAP)?.len(),
        ))
    };
    let (sep_up, span_up) = counts(&up, cloud, eps_up)?;
    let (sep_down, span_down) = counts(&down, &downstairs, eps)?;
    Ok(SemiconjVerdict {
        n,
        eps,
        eps_up,
        sep_up,
        sep_down,
        span_up,
        span_down,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn doubling_angle() -> DynSystem {
        DynSystem::new("doubling-angle", 1, |x, out| out[0] = (2.0 * x[0]).fract())
            .with_domain(|x| (0.0..1.0).contains(&x[0]))
    }

    fn circle_doubling() -> DynSystem {
        DynSystem::new("doubling", 2, |p, out| {
            out[0] = p[0] * p[0] - p[1] * p[1];
            out[1] = 2.0 * p[0] * p[1];
        })
    }

    fn on_circle(theta: f64) -> Vec<f64> {
        let a = std::f64::consts::TAU * theta;
        vec![a.cos(), a.sin()]
    }

    #[test]
    fn lift_by_hand() {
        let e = MetricSpec::euclidean();
        let p = lift_orbit(&doubling_angle(), &[0.1], 2.0, 4, e).unwrap();
        for (got, want) in p.blocks.iter().zip([0.1, 0.2, 0.4, 0.8]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(p.project(), &[0.1]);
        let fixed = lift_orbit(&DynSystem::identity(2), &[0.2, 0.3], 2.0, 5, e).unwrap();
        assert!(fixed.blocks.chunks(2).all(|b| b == [0.2, 0.3]));
        assert_eq!(fixed.membership_residual(&DynSystem::identity(2)), 0.0);
    }

    #[test]
    fn shift_matches_lift_of_image() {
        let e = MetricSpec::euclidean();
        let sys = circle_doubling();
        for k in 0..20 {
            let x = on_circle(k as f64 * 0.0371);
            let a = lift_orbit(&sys, &x, 2.0, 6, e).unwrap();
            let b = lift_orbit(&sys, &sys.apply(&x), 2.0, 6, e).unwrap();
            assert_eq!(&a.blocks[2..], &b.blocks[..10]);
            assert_eq!(a.shift(&sys).unwrap(), b);
        }
    }

    #[test]
    fn dhat_examples() {
        let e = MetricSpec::euclidean();
        let id = DynSystem::identity(1);
        let a = lift_orbit(&id, &[0.0], 2.0, 20, e).unwrap();
        let b = lift_orbit(&id, &[1.0], 2.0, 20, e).unwrap();
        assert_eq!(dhat_dist(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(dhat_dist(&a, &b).unwrap(), 2.0, epsilon = 1e-5);
        let c = lift_orbit(&id, &[1.0], 3.0, 20, e).unwrap();
        assert!(matches!(dhat_dist(&a, &c), Err(Error::Config(_))));
    }

    #[test]
    fn shift_expands_dhat_by_at_most_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut theta = || -> f64 { rng.gen() };
        let sys = circle_doubling();
        let e = MetricSpec::euclidean();
        for _ in 0..200 {
            let a = lift_orbit(&sys, &on_circle(theta()), 2.0, 30, e).unwrap();
            let b = lift_orbit(&sys, &on_circle(theta()), 2.0, 30, e).unwrap();
            let before = dhat_dist(&a, &b).unwrap();
            let after = dhat_dist(&a.shift(&sys).unwrap(), &b.shift(&sys).unwrap()).unwrap();
            // the appended block adds at most rho^-(M-1) * diam
            assert!(after <= 2.0 * before + 2.0 * 2f64.powi(-29) + 1e-12);
        }
    }

    #[test]
    fn shift_bowen_agrees_with_stacked_shift() {
        let sys = circle_doubling();
        let pts: Vec<Vec<f64>> = (0..12).map(|k| on_circle(k as f64 * 0.0813 + 0.01)).collect();
        let cloud = PointCloud::new(pts, 0.1, "c").unwrap();
        let m = 8;
        let n = 3;
        let table = OrbitTable::build(&sys, &cloud, n + m - 1).unwrap();
        let fast = ShiftBowenMetric::new(&table, MetricSpec::euclidean(), 2.0, m).unwrap();
        let lifted = lifted_cloud(&sys, &cloud, m).unwrap();
        let shift = shift_system(&sys, m);
        let up_table = OrbitTable::build(&shift, &lifted, n).unwrap();
        let slow = BowenMetric::new(&up_table, MetricSpec::sequence_rho(2.0, m).unwrap()).unwrap();
        for a in 0..12 {
            for b in 0..12 {
                assert_relative_eq!(fast.dist(a, b, n), slow.dist(a, b, n), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lemma4_doubling() {
        let pts: Vec<Vec<f64>> = (0..4096).map(|k| on_circle(k as f64 / 4096.0)).collect();
        let cloud = PointCloud::new(pts, 0.002, "grid").unwrap();
        let v = lemma4_check(&circle_doubling(), &cloud, &MetricSpec::euclidean(), 2.0, 0.1, 500, 1).unwrap();
        assert_eq!(v.pairs, 500);
        assert!(v.passed(), "{v:?}");
        assert!(v.bowen_close >= 1 && v.dhat_close >= 1);
    }

    #[test]
    fn tail_depth_grows_by_one_when_diameter_doubles() {
        let a = truncation_depth(2.0, 2.0, 0.1).unwrap();
        let b = truncation_depth(2.0, 4.0, 0.1).unwrap();
        assert_eq!(b, a + 1);
    }

    #[test]
    fn semiconj_identity_gives_equalities() {
        let sys = circle_doubling();
        let pts: Vec<Vec<f64>> = (0..16).map(|k| on_circle(k as f64 / 16.0 + 0.003)).collect();
        let cloud = PointCloud::new(pts, 0.2, "c").unwrap();
        let side = Side {
            system: &sys,
            spec: MetricSpec::euclidean(),
        };
        let v = semiconj_check(side.clone(), side, &|p| p.to_vec(), &|e| e, &cloud, 0.5, 2, 1e-9).unwrap();
        assert_eq!((v.sep_up, v.span_up), (v.sep_down, v.span_down));
    }

    #[test]
    fn semiconj_rejects_non_conjugacy() {
        let sys = circle_doubling();
        let id = DynSystem::identity(2);
        let cloud = PointCloud::new(vec![on_circle(0.1), on_circle(0.3)], 0.2, "c").unwrap();
        let err = semiconj_check(
            Side {
                system: &sys,
                spec: MetricSpec::euclidean(),
            },
            Side {
                system: &id,
                spec: MetricSpec::euclidean(),
            },
            &|p| p.to_vec(),
            &|e| e,
            &cloud,
            0.5,
            2,
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSemiconjugate { index: 0, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dhat_metric_axioms(t in prop::collection::vec(0.0f64..1.0, 3)) {
            let sys = circle_doubling();
            let e = MetricSpec::euclidean();
            let p: Vec<OrbitSeqPoint> = t.iter().map(|&x| lift_orbit(&sys, &on_circle(x), 2.0, 24, e).unwrap()).collect();
            let d = |i: usize, j: usize| dhat_dist(&p[i], &p[j]).unwrap();
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert_eq!(d(2, 2), 0.0);
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
            let start = on_circle(t[0]);
            prop_assert_eq!(p[0].project(), start.as_slice());
        }
    }
}
