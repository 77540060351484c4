//! Exhaustive separated/spanning counts.
//!
//! The closeness graph (`dist < eps`) is reduced by merging true twins
//! (vertices with identical closed neighborhoods, which are interchangeable
//! both as separated points and as spanning centers) and split into
//! connected components. Every component must then have at most `cap`
//! vertices and is solved by branch and bound on bitmasks.

use std::collections::HashMap;

use super::counting::OrderedMetric;
use crate::error::{Error, Result};

/// Closed neighborhoods of the reduced closeness graph, one component at a
/// time, with the original index of every local vertex.
struct Component {
    vertices: Vec<usize>,
    adj: Vec<u64>,
}

fn closeness_lists<M: OrderedMetric + ?Sized>(metric: &M, n: usize, eps: f64) -> Vec<Vec<u32>> {
    let len = metric.len();
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(len);
    for a in 0..len {
        let mut buf = Vec::new();
        metric.anchor(a, n, &mut buf);
        anchors.push(buf);
    }
    // bucket on the first anchor coordinate, sorted sweep
    let mut idx: Vec<usize> = (0..len).collect();
    let first = |a: usize| anchors[a].first().copied().unwrap_or(0.0);
    idx.sort_by(|&a, &b| first(a).total_cmp(&first(b)).then(a.cmp(&b)));
    let mut lists: Vec<Vec<u32>> = (0..len).map(|a| vec![a as u32]).collect();
    for (k, &a) in idx.iter().enumerate() {
        for &b in &idx[k + 1..] {
            if first(b) - first(a) >= eps {
                break;
            }
            if metric.closer_than(a, b, n, eps) {
                lists[a].push(b as u32);
                lists[b].push(a as u32);
            }
        }
    }
    for l in &mut lists {
        l.sort_unstable();
    }
    lists
}

/// Merges true twins until none remain; returns the surviving vertices and
/// their neighborhoods restricted to survivors.
fn merge_twins(mut lists: Vec<Vec<u32>>) -> (Vec<bool>, Vec<Vec<u32>>) {
    let len = lists.len();
    let mut alive = vec![true; len];
    loop {
        let mut seen: HashMap<&[u32], u32> = HashMap::new();
        let mut dead = Vec::new();
        for a in 0..len {
            if !alive[a] {
                continue;
            }
            if seen.insert(lists[a].as_slice(), a as u32).is_some() {
                dead.push(a);
            }
        }
        // the first occurrence (smallest index) survives
        if dead.is_empty() {
            break;
        }
        for &a in &dead {
            alive[a] = false;
        }
        for a in 0..len {
            if alive[a] {
                lists[a].retain(|&b| alive[b as usize]);
            }
        }
    }
    (alive, lists)
}

fn components(alive: &[bool], lists: &[Vec<u32>], cap: usize) -> Result<Vec<Component>> {
    let len = alive.len();
    let mut comp_of = vec![usize::MAX; len];
    let mut out = Vec::new();
    for start in 0..len {
        if !alive[start] || comp_of[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut vertices = vec![start];
        comp_of[start] = id;
        let mut head = 0;
        while head < vertices.len() {
            let a = vertices[head];
            head += 1;
            for &b in &lists[a] {
                let b = b as usize;
                if comp_of[b] == usize::MAX {
                    comp_of[b] = id;
                    vertices.push(b);
                }
            }
        }
        if vertices.len() > cap || vertices.len() > 64 {
            return Err(Error::TooLarge {
                size: vertices.len(),
                cap,
            });
        }
        vertices.sort_unstable();
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = vertices
            .iter()
            .map(|&v| lists[v].iter().fold(0u64, |m, &b| m | 1u64 << local[&(b as usize)]))
            .collect();
        out.push(Component { vertices, adj });
    }
    Ok(out)
}

fn reduce<M: OrderedMetric + ?Sized>(metric: &M, n: usize, eps: f64, cap: usize) -> Result<Vec<Component>> {
    if metric.len() == 0 {
        return Err(Error::Empty);
    }
    let lists = closeness_lists(metric, n, eps);
    let (alive, lists) = merge_twins(lists);
    components(&alive, &lists, cap)
}

/// Maximum independent set of the closeness graph; `adj` holds closed
/// neighborhoods.
fn max_independent(adj: &[u64]) -> u64 {
    fn go(cands: u64, chosen: u64, adj: &[u64], best: &mut u64) {
        if chosen.count_ones() + cands.count_ones() <= best.count_ones() {
            return;
        }
        if cands == 0 {
            *best = chosen;
            return;
        }
        // branch on the candidate with most candidate neighbors
        let mut pick = cands.trailing_zeros() as usize;
        let mut deg = 0;
        let mut rest = cands;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let d = (adj[v] & cands).count_ones();
            if d > deg {
                deg = d;
                pick = v;
            }
        }
        if deg == 1 {
            // no edges left among candidates
            *best = chosen | cands;
            return;
        }
        let bit = 1u64 << pick;
        go(cands & !adj[pick], chosen | bit, adj, best);
        go(cands & !bit, chosen, adj, best);
    }
    let full = if adj.len() == 64 {
        u64::MAX
    } else {
        (1u64 << adj.len()) - 1
    };
    let mut best = 0;
    go(full, 0, adj, &mut best);
    best
}

/// Minimum dominating set of the closeness graph (closed neighborhoods).
fn min_dominating(adj: &[u64]) -> u64 {
    fn go(covered: u64, chosen: u64, full: u64, adj: &[u64], best: &mut u64) {
        if covered == full {
            if chosen.count_ones() < best.count_ones() {
                *best = chosen;
            }
            return;
        }
        if chosen.count_ones() + 1 >= best.count_ones() {
            return;
        }
        // the uncovered vertex with the fewest possible dominators
        let mut pick = usize::MAX;
        let mut fewest = u32::MAX;
        let mut rest = full & !covered;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let c = adj[v].count_ones();
            if c < fewest {
                fewest = c;
                pick = v;
            }
        }
        let mut options = adj[pick];
        while options != 0 {
            let v = options.trailing_zeros() as usize;
            options &= options - 1;
            go(covered | adj[v], chosen | 1u64 << v, full, adj, best);
        }
    }
    let full = if adj.len() == 64 {
        u64::MAX
    } else {
        (1u64 << adj.len()) - 1
    };
    let mut best = full;
    go(0, 0, full, adj, &mut best);
    best
}

fn collect(comps: &[Component], pick: impl Fn(&[u64]) -> u64) -> Vec<usize> {
    let mut out = Vec::new();
    for c in comps {
        let mut mask = pick(&c.adj);
        while mask != 0 {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            out.push(c.vertices[v]);
        }
    }
    out.sort_unstable();
    out
}

/// A largest `eps`-separated subset under `metric` at order `n`.
pub fn exact_max_separated<M: OrderedMetric + ?Sized>(
    metric: &M,
    n: usize,
    eps: f64,
    cap: usize,
) -> Result<Vec<usize>> {
    let comps = reduce(metric, n, eps, cap)?;
    Ok(collect(&comps, max_independent))
}

/// A smallest `eps`-spanning subset (open balls, centers among the points).
pub fn exact_min_spanning<M: OrderedMetric + ?Sized>(metric: &M, n: usize, eps: f64, cap: usize) -> Result<Vec<usize>> {
    let comps = reduce(metric, n, eps, cap)?;
    Ok(collect(&comps, min_dominating))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CloudMetric, MetricSpec, PointCloud};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Subset enumeration, independent of the graph reductions above.
    fn brute(cloud: &PointCloud, spec: &MetricSpec, eps: f64) -> (usize, usize) {
        let n = cloud.len();
        let d = |a: usize, b: usize| spec.dist_unchecked(cloud.point(a), cloud.point(b));
        let mut sep = 0;
        let mut span = n;
        for mask in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let k = members.len();
            if k > sep
                && members
                    .iter()
                    .enumerate()
                    .all(|(i, &a)| members[i + 1..].iter().all(|&b| d(a, b) >= eps))
            {
                sep = k;
            }
            if k < span && (0..n).all(|p| members.iter().any(|&c| d(p, c) < eps)) {
                span = k;
            }
        }
        (sep, span)
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
        let pts = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        PointCloud::new(pts, 0.01, "rand").unwrap()
    }

    #[test]
    fn matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = MetricSpec::euclidean();
        for trial in 0..40 {
            let cloud = random_cloud(&mut rng, 8 + trial % 5, 2);
            let eps = rng.gen_range(0.1..0.6);
            let m = CloudMetric::new(&cloud, spec).unwrap();
            let s = exact_max_separated(&m, 1, eps, 24).unwrap().len();
            let r = exact_min_spanning(&m, 1, eps, 24).unwrap().len();
            assert_eq!((s, r), brute(&cloud, &spec, eps), "trial {trial}");
        }
    }

    #[test]
    fn twelve_point_greedy_between_exact_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = MetricSpec::euclidean();
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng, 12, 2);
            let eps = rng.gen_range(0.15..0.5);
            let (sep, span) = brute(&cloud, &spec, eps);
            let (g, _) = crate::metric::max_separated(&cloud, &spec, eps, crate::metric::CountMode::Greedy).unwrap();
            assert!(span <= g && g <= sep, "{span} <= {g} <= {sep}");
        }
    }

    #[test]
    fn cliques_collapse_past_the_cap() {
        // 3 tight clusters of 40 points: the closeness graph is 3 cliques
        let mut pts = Vec::new();
        for c in 0..3 {
            for k in 0..40 {
                pts.push(vec![c as f64 * 10.0 + k as f64 * 1e-3]);
            }
        }
        let cloud = PointCloud::new(pts, 0.01, "clusters").unwrap();
        let m = CloudMetric::new(&cloud, MetricSpec::euclidean()).unwrap();
        assert_eq!(exact_max_separated(&m, 1, 1.0, 24).unwrap().len(), 3);
        assert_eq!(exact_min_spanning(&m, 1, 1.0, 24).unwrap().len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sandwich_holds(seed in 0u64..10_000, size in 3usize..14, eps in 0.05f64..0.8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cloud = random_cloud(&mut rng, size, 2);
            let m = CloudMetric::new(&cloud, MetricSpec::euclidean()).unwrap();
            let r = exact_min_spanning(&m, 1, eps, 24).unwrap().len();
            let s = exact_max_separated(&m, 1, eps, 24).unwrap().len();
            let r_half = exact_min_spanning(&m, 1, eps / 2.0, 24).unwrap().len();
            prop_assert!(r <= s && s <= r_half);
        }
    }
}
