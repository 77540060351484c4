//! Growth rates of count tables and the entropy numbers built from them.
//!
//! A rate is the least-squares slope of `log c_n` against `n` over the
//! longest pre-saturation window. The headline value of an estimate is the
//! rate at the smallest `eps` that agrees with the next coarser one.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{bd_count_table_with, DynSystem};
use crate::error::{Error, Result};
use crate::metric::{CountMode, CountTable, MetricSpec, PointCloud};

/// Least-squares slope of `log c_n` on `n` for `n` in `[n_lo, n_hi]`.
///
/// `counts[0]` is `c_1`.
pub fn growth_rate(counts: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if lo == 0 || hi > counts.len() || hi < lo {
        return Err(Error::Window(format!(
            "window [{lo}, {hi}] outside 1..={}",
            counts.len()
        )));
    }
    if hi - lo + 1 < 3 {
        return Err(Error::Window(format!("window [{lo}, {hi}] has fewer than 3 samples")));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|n| {
            let c = counts[n - 1];
            if c > 0.0 && c.is_finite() {
                Ok((n as f64, c.ln()))
            } else {
                Err(Error::Window(format!("count c_{n} = {c} is not positive")))
            }
        })
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// How per-`eps` rates are windowed and combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationRule {
    /// Largest rate change between consecutive `eps` counted as stable.
    pub stabilization_tolerance: f64,
    /// Counts at or above this fraction of the cloud size are saturated.
    pub saturation_fraction: f64,
    /// Least admissible `n_hi - n_lo`.
    pub min_span: usize,
}

impl Default for ExtrapolationRule {
    fn default() -> Self {
        Self {
            stabilization_tolerance: 0.05,
            saturation_fraction: 0.9,
            min_span: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BowenDinaburg,
    Compacta,
    Friedland,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BowenDinaburg => "BD",
            Method::Compacta => "compacta",
            Method::Friedland => "friedland",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRate {
    pub epsilon: f64,
    pub rate: f64,
    /// `[n_lo, n_hi]`, inclusive.
    pub window: (usize, usize),
    /// No admissible window existed; the rate is only indicative.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct EntropyEstimate {
    pub label: String,
    pub method: Method,
    pub per_eps: Vec<EpsRate>,
    /// Natural-log entropy estimate.
    pub headline: f64,
    /// Epsilon whose rate is the headline.
    pub headline_eps: f64,
    pub stable: bool,
    pub diagnostics: Vec<String>,
    /// Counts behind the headline (for compacta: the best member's).
    pub table: CountTable,
    /// Member estimates of a compacta run, in family order.
    pub members: Vec<EntropyEstimate>,
}

impl EntropyEstimate {
    pub fn headline_bits(&self) -> f64 {
        self.headline / LN_2
    }

    pub fn rate_at(&self, eps: f64) -> Option<f64> {
        self.per_eps.iter().find(|r| r.epsilon == eps).map(|r| r.rate)
    }

    /// Plain-text report block.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "[{}] {} headline = {:.4} nats ({:.4} bits) at eps = {}{}",
            self.label,
            self.method.as_str(),
            self.headline,
            self.headline_bits(),
            self.headline_eps,
            if self.stable { "" } else { " (unstable)" }
        );
        for r in &self.per_eps {
            let _ = writeln!(
                s,
                "  eps = {:<8} rate = {:.4} nats ({:.4} bits) window = [{}, {}]{}",
                r.epsilon,
                r.rate,
                r.rate / LN_2,
                r.window.0,
                r.window.1,
                if r.saturated { " saturated" } else { "" }
            );
        }
        for m in &self.members {
            let _ = writeln!(
                s,
                "  member {}: {:.4} nats ({:.4} bits)",
                m.label,
                m.headline,
                m.headline_bits()
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(s, "  note: {d}");
        }
        s
    }
}

/// Longest run of consecutive orders whose counts stay below `limit`.
fn presaturation_window(series: &[(usize, usize)], limit: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run: Option<usize> = None;
    let mut prev: Option<usize> = None;
    for &(n, c) in series {
        if (c as f64) < limit {
            if prev.is_none_or(|p| p + 1 != n) {
                run = None;
            }
            let lo = *run.get_or_insert(n);
            if best.is_none_or(|(a, b)| n - lo > b - a) {
                best = Some((lo, n));
            }
        } else {
            run = None;
        }
        prev = Some(n);
    }
    best
}

/// Per-`eps` rates and the stabilized headline of a count table.
pub fn entropy_estimate(table: &CountTable, rule: &ExtrapolationRule) -> Result<EntropyEstimate> {
    let eps_list = {
        let mut e = table.epsilons();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    };
    if eps_list.len() < 3 {
        return Err(Error::Config(format!(
            "an estimate needs at least 3 eps values, got {}",
            eps_list.len()
        )));
    }
    let n_top = table.rows.iter().map(|r| r.n).max().unwrap_or(0);
    if n_top < 6 {
        return Err(Error::Window(format!(
            "an estimate needs orders up to at least 6, table stops at {n_top}"
        )));
    }
    let limit = rule.saturation_fraction * table.cloud_size as f64;
    let mut diagnostics = Vec::new();
    if let Some(t) = table.truncated_at {
        diagnostics.push(format!("truncated({t}): an orbit left the domain"));
    }
    let mut per_eps = Vec::with_capacity(eps_list.len());
    for &eps in &eps_list {
        let series = table.sep_series(eps);
        let counts: Vec<f64> = series.iter().map(|&(_, c)| c as f64).collect();
        let entry = match presaturation_window(&series, limit) {
            Some((lo, hi)) if hi - lo >= rule.min_span => EpsRate {
                epsilon: eps,
                rate: growth_rate(&counts, (lo, hi))?,
                window: (lo, hi),
                saturated: false,
            },
            _ => {
                let hi = (1 + rule.min_span).min(counts.len());
                let rate = growth_rate(&counts, (1, hi)).unwrap_or(0.0);
                diagnostics.push(format!("saturated at eps = {eps}"));
                EpsRate {
                    epsilon: eps,
                    rate,
                    window: (1, hi),
                    saturated: true,
                }
            }
        };
        per_eps.push(entry);
    }
    let usable: Vec<&EpsRate> = per_eps.iter().filter(|r| !r.saturated).collect();
    let mut pick: Option<&EpsRate> = None;
    for pair in usable.windows(2) {
        if (pair[1].rate - pair[0].rate).abs() < rule.stabilization_tolerance {
            pick = Some(pair[1]);
        }
    }
    let stable = pick.is_some();
    let chosen = pick
        .or_else(|| usable.last().copied())
        .unwrap_or_else(|| per_eps.last().expect("at least 3 eps"));
    if !stable {
        diagnostics.push("unstable: no consecutive eps pair agrees".into());
    }
    if usable.is_empty() {
        diagnostics.push("every eps is saturated".into());
    }
    Ok(EntropyEstimate {
        label: String::new(),
        method: Method::BowenDinaburg,
        headline: chosen.rate,
        headline_eps: chosen.epsilon,
        per_eps,
        stable,
        diagnostics,
        table: table.clone(),
        members: Vec::new(),
    })
}

/// Bowen-Dinaburg estimate of `sys` on a cloud.
pub fn bd_estimate(
    sys: &DynSystem,
    cloud: &PointCloud,
    spec: &MetricSpec,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
    rule: &ExtrapolationRule,
) -> Result<EntropyEstimate> {
    let table = bd_count_table_with(sys, cloud, spec, eps_list, n_max, mode)?;
    let mut est = entropy_estimate(&table, rule)?;
    est.label = format!("{}/{}", sys.name, cloud.label);
    Ok(est)
}

/// Samples of an increasing sequence of compact sets.
#[derive(Debug, Clone)]
pub struct CompactFamily {
    pub members: Vec<PointCloud>,
    pub description: String,
}

impl CompactFamily {
    /// Checks that every member is contained in the next.
    pub fn new(members: Vec<PointCloud>, description: impl Into<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty);
        }
        for (k, pair) in members.windows(2).enumerate() {
            if !pair[1].contains_all(&pair[0], crate::metric::DEFAULT_TOLERANCE) {
                return Err(Error::Config(format!(
                    "family member {k} is not contained in member {}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            members,
            description: description.into(),
        })
    }
}

/// Bowen compacta estimate: one BD estimate per member with separated
/// sets drawn from the member and orbits followed wherever they go.
pub fn compacta_estimate(
    sys: &DynSystem,
    spec: &MetricSpec,
    family: &CompactFamily,
    eps_list: &[f64],
    n_max: usize,
) -> Result<EntropyEstimate> {
    compacta_estimate_with(sys, spec, family, eps_list, n_max, None, &ExtrapolationRule::default())
}

pub fn compacta_estimate_with(
    sys: &DynSystem,
    spec: &MetricSpec,
    family: &CompactFamily,
    eps_list: &[f64],
    n_max: usize,
    mode: Option<CountMode>,
    rule: &ExtrapolationRule,
) -> Result<EntropyEstimate> {
    let mut members = Vec::new();
    let mut diagnostics = Vec::new();
    for cloud in &family.members {
        match bd_estimate(sys, cloud, spec, eps_list, n_max, mode, rule) {
            Ok(mut est) => {
                est.method = Method::Compacta;
                est.label = cloud.label.clone();
                members.push(est);
            }
            Err(e @ (Error::Escaped { .. } | Error::Window(_))) => {
                diagnostics.push(format!("member {} skipped: {e}", cloud.label));
            }
            Err(e) => return Err(e),
        }
    }
    let best = members
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.headline.total_cmp(&b.1.headline))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Window("no family member could be estimated".into()))?;
    for pair in members.windows(2) {
        if pair[1].headline < pair[0].headline - 2.0 * rule.stabilization_tolerance {
            diagnostics.push(format!(
                "non-monotone family: {} ({:.4}) after {} ({:.4})",
                pair[1].label, pair[1].headline, pair[0].label, pair[0].headline
            ));
        }
    }
    let top = &members[best];
    Ok(EntropyEstimate {
        label: format!("{}/{}", sys.name, family.description),
        method: Method::Compacta,
        per_eps: top.per_eps.clone(),
        headline: top.headline,
        headline_eps: top.headline_eps,
        stable: top.stable,
        diagnostics,
        table: top.table.clone(),
        members,
    })
}

/// Pairwise comparison of the three entropies of one system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub bd: f64,
    pub compacta: f64,
    pub friedland: f64,
    pub slack: f64,
    pub friedland_matches_bd: bool,
    pub bd_dominates_compacta: bool,
}

impl InequalityVerdict {
    pub fn passed(&self) -> bool {
        self.friedland_matches_bd && self.bd_dominates_compacta
    }

    /// `FR≈BD: pass|fail; BD≥Bc: pass|fail`.
    pub fn line(&self) -> String {
        let word = |ok: bool| if ok { "pass" } else { "fail" };
        format!(
            "FR≈BD: {}; BD≥Bc: {}",
            word(self.friedland_matches_bd),
            word(self.bd_dominates_compacta)
        )
    }
}

/// Checks `|fr - bd| <= slack` and `bd >= bc - slack`.
pub fn inequality_report(
    bd: &EntropyEstimate,
    bc: &EntropyEstimate,
    fr: &EntropyEstimate,
    slack: f64,
) -> InequalityVerdict {
    InequalityVerdict {
        bd: bd.headline,
        compacta: bc.headline,
        friedland: fr.headline,
        slack,
        friedland_matches_bd: (fr.headline - bd.headline).abs() <= slack,
        bd_dominates_compacta: bd.headline >= bc.headline - slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{CountMode, CountRow};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_from(series: &[(f64, Vec<usize>)], cloud_size: usize) -> CountTable {
        let mut t = CountTable {
            cloud_size,
            ..Default::default()
        };
        for (eps, counts) in series {
            for (k, &c) in counts.iter().enumerate() {
                t.rows.push(CountRow {
                    epsilon: *eps,
                    n: k + 1,
                    sep_count: c,
                    span_count: c,
                    mode: CountMode::Greedy,
                });
                t.witnesses.push(Vec::new());
            }
        }
        t
    }

    #[test]
    fn geometric_sequence_rate() {
        let c: Vec<f64> = (1..=8).map(|n| 3.0 * 2f64.powi(n)).collect();
        assert_relative_eq!(growth_rate(&c, (1, 8)).unwrap(), LN_2, epsilon = 1e-12);
        assert_relative_eq!(growth_rate(&c, (3, 6)).unwrap(), LN_2, epsilon = 1e-12);
    }

    #[test]
    fn constant_sequence_rate() {
        assert_eq!(growth_rate(&[5.0; 6], (1, 6)).unwrap(), 0.0);
    }

    #[test]
    fn word_counts_rate() {
        // 2^n binary words of length n
        let c: Vec<f64> = (1..=6).map(|n| (1u64 << n) as f64).collect();
        assert_relative_eq!(growth_rate(&c, (1, 6)).unwrap(), LN_2, epsilon = 1e-12);
    }

    #[test]
    fn short_window_is_rejected() {
        let err = growth_rate(&[1.0, 2.0, 4.0], (2, 3)).unwrap_err();
        assert!(matches!(err, Error::Window(_)));
        assert!(err.to_string().starts_with("window"));
    }

    #[test]
    fn headline_picks_smallest_stable_eps() {
        let geo =
            |base: f64, n: usize| -> Vec<usize> { (1..=n).map(|k| (base * 2f64.powi(k as i32)) as usize).collect() };
        let t = table_from(&[(0.4, geo(5.0, 8)), (0.2, geo(10.0, 8)), (0.1, geo(20.0, 8))], 1 << 20);
        let est = entropy_estimate(&t, &ExtrapolationRule::default()).unwrap();
        assert!(est.stable);
        assert_eq!(est.headline_eps, 0.1);
        assert!((est.headline - LN_2).abs() < 0.02);
    }

    #[test]
    fn saturated_eps_is_flagged_and_skipped() {
        let t = table_from(
            &[
                (0.4, vec![2, 4, 8, 16, 32, 64]),
                (0.2, vec![4, 8, 16, 32, 64, 100]),
                (0.1, vec![40, 80, 100, 100, 100, 100]),
            ],
            100,
        );
        let est = entropy_estimate(&t, &ExtrapolationRule::default()).unwrap();
        assert!(est.per_eps[2].saturated);
        assert_eq!(est.per_eps[1].window, (1, 5));
        assert_eq!(est.headline_eps, 0.2);
        assert!(est.diagnostics.iter().any(|d| d.contains("saturated")));
    }

    #[test]
    fn unstable_falls_back_to_smallest_eps() {
        let t = table_from(
            &[
                (0.4, vec![1, 1, 1, 1, 1, 1]),
                (0.2, vec![1, 2, 4, 8, 16, 32]),
                (0.1, vec![1, 3, 9, 27, 81, 243]),
            ],
            10_000,
        );
        let est = entropy_estimate(&t, &ExtrapolationRule::default()).unwrap();
        assert!(!est.stable);
        assert_eq!(est.headline_eps, 0.1);
        assert_relative_eq!(est.headline, 3f64.ln(), epsilon = 1e-9);
        assert!(est.report().contains("unstable"));
    }

    #[test]
    fn preconditions() {
        let t = table_from(&[(0.4, vec![1; 6]), (0.2, vec![1; 6])], 10);
        assert!(matches!(
            entropy_estimate(&t, &ExtrapolationRule::default()),
            Err(Error::Config(_))
        ));
        let t = table_from(&[(0.4, vec![1; 5]), (0.2, vec![1; 5]), (0.1, vec![1; 5])], 10);
        assert!(matches!(
            entropy_estimate(&t, &ExtrapolationRule::default()),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn identity_estimates_are_zero() {
        let pts: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64 / 80.0]).collect();
        let cloud = PointCloud::new(pts, 0.0125, "line").unwrap();
        let id = DynSystem::identity(1);
        let spec = MetricSpec::euclidean();
        let eps = [0.2, 0.1, 0.05];
        let bd = bd_estimate(&id, &cloud, &spec, &eps, 6, None, &ExtrapolationRule::default()).unwrap();
        assert_eq!(bd.headline, 0.0);
        let half = cloud.select(&(0..40).collect::<Vec<_>>(), "half").unwrap();
        let fam = CompactFamily::new(vec![half, cloud.clone()], "halves").unwrap();
        let bc = compacta_estimate(&id, &spec, &fam, &eps, 6).unwrap();
        assert_eq!(bc.headline, 0.0);
        assert_eq!(bc.members.len(), 2);
        let v = inequality_report(&bd, &bc, &bd, 0.15);
        assert!(v.passed());
        assert_eq!(v.line(), "FR≈BD: pass; BD≥Bc: pass");
    }

    #[test]
    fn family_must_be_nested() {
        let a = PointCloud::new(vec![vec![0.0], vec![1.0]], 0.1, "a").unwrap();
        let b = PointCloud::new(vec![vec![0.0], vec![0.5]], 0.1, "b").unwrap();
        assert!(matches!(CompactFamily::new(vec![a, b], "bad"), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn rate_ignores_scaling(
            counts in prop::collection::vec(1.0f64..1e6, 6),
            scale in 1e-3f64..1e3,
        ) {
            let scaled: Vec<f64> = counts.iter().map(|c| c * scale).collect();
            let a = growth_rate(&counts, (1, 6)).unwrap();
            let b = growth_rate(&scaled, (1, 6)).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
