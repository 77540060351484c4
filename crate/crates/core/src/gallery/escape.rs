//! An escaping orbit with a symbolic height: translation on `ℕ`, drawn as
//! `i -> (1/(1+i), s_i + 1)`, where `s` contains every finite word.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{log_n, Bundle, Plan, Target, Targets};
use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::CompactFamily;
use crate::metric::{CountMode, MetricSpec, PointCloud};

pub const DEFAULT_LMAX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscapeConstruction {
    pub n: usize,
    pub lmax: usize,
}

impl EscapeConstruction {
    pub fn new(n: usize, lmax: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("escape needs N >= 2, got {n}")));
        }
        if lmax == 0 {
            return Err(Error::Config("escape needs L_max >= 1".into()));
        }
        let len: u128 = (1..=lmax as u32).map(|l| l as u128 * (n as u128).pow(l)).sum();
        if len > 50_000_000 {
            return Err(Error::Config(format!(
                "word sequence for N = {n}, L_max = {lmax} has {len} symbols"
            )));
        }
        Ok(Self { n, lmax })
    }

    /// All words of length `1..=lmax`, shortest first, each length in
    /// lexicographic order.
    pub fn word_sequence(&self) -> Vec<u8> {
        let mut s = Vec::new();
        for len in 1..=self.lmax {
            let mut word = vec![0u8; len];
            loop {
                s.extend_from_slice(&word);
                if !next_word(&mut word, self.n) {
                    break;
                }
            }
        }
        s
    }

    /// First index at which every word of length `len` starts, or `None`
    /// if some word is missing.
    pub fn word_indices(s: &[u8], n: usize, len: usize) -> Option<HashMap<Vec<u8>, usize>> {
        let mut first = HashMap::new();
        for i in 0..s.len().saturating_sub(len - 1) {
            first.entry(s[i..i + len].to_vec()).or_insert(i);
        }
        (first.len() == n.pow(len as u32)).then_some(first)
    }

    pub fn point(s: &[u8], i: usize) -> [f64; 2] {
        [1.0 / (1.0 + i as f64), symbol(s, i) as f64 + 1.0]
    }

    /// Translation `i -> i + 1` on the embedded orbit.
    pub fn system(&self, s: Vec<u8>) -> DynSystem {
        DynSystem::new(format!("escape[N={}]", self.n), 2, move |p, out| {
            let i = (1.0 / p[0] - 1.0).round() as usize + 1;
            out.copy_from_slice(&Self::point(&s, i));
        })
        .with_domain(|p| p[0] > 0.0 && p[0] <= 1.0)
    }
}

/// `s_i`, padded with 0 past the end.
fn symbol(s: &[u8], i: usize) -> u8 {
    s.get(i).copied().unwrap_or(0)
}

/// Lexicographic successor; false after the last word.
fn next_word(word: &mut [u8], n: usize) -> bool {
    for d in word.iter_mut().rev() {
        if (*d as usize) + 1 < n {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// Bundle for the first `orbit_len` orbit points. The unsampled tail lies
/// within `1 / orbit_len` of the last sampled point, which is the natural
/// `mesh`.
pub fn build_escape(n: usize, lmax: usize, orbit_len: usize, mesh: f64) -> Result<Bundle> {
    let c = EscapeConstruction::new(n, lmax)?;
    let s = c.word_sequence();
    if orbit_len < s.len() {
        return Err(Error::Config(format!(
            "orbit_len {orbit_len} is shorter than the {} symbols needed for L_max = {lmax}",
            s.len()
        )));
    }
    let data: Vec<f64> = (0..orbit_len).flat_map(|i| EscapeConstruction::point(&s, i)).collect();
    let cloud = PointCloud::from_flat(data, 2, mesh, "orbit")?;
    let members = [4usize, 8, 16]
        .iter()
        .map(|&k| {
            cloud.select(
                &(0..k.min(orbit_len)).collect::<Vec<_>>(),
                format!("first {k} orbit points"),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = MetricSpec::max_product(2)?;
    let mut b = Bundle::base(&format!("escape-N{n}"), c.system(s), spec, cloud);
    b.family = Some(CompactFamily::new(members, "finite orbit segments")?);
    let eps = [1.0, 0.9, 0.8];
    b.bd = Plan::new(&eps, lmax.max(6)).with_mode(CountMode::Exact);
    b.compacta = Plan::new(&eps, 6).with_mode(CountMode::Exact);
    b.friedland = Plan::new(&eps, 6).with_mode(CountMode::Greedy);
    // weighted tail of height gaps, (N - 1) / (rho - 1), stays below 0.2
    b.rho = 4.0 * n as f64;
    b.targets = Targets {
        bd: Some(Target::Near(log_n(n))),
        compacta: None,
        friedland: Some(Target::Near(log_n(n))),
    };
    b.notes
        .push("compact subsets of the orbit are finite, so compacta counts saturate".into());
    Ok(b)
}

/// The symbolic cover `{A_0, ..., A_{N-1}}` refined `n` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AkmCover {
    pub cover_size: usize,
    /// Number of word cells `A_w`, `|w| = n`.
    pub refinement_size: usize,
    pub has_proper_subcover: bool,
    /// `log` of the smallest subcover of the refinement.
    pub h_value: f64,
    /// For every word (in lexicographic order) an orbit index lying in that
    /// cell only.
    pub witnesses: Vec<usize>,
}

/// Refines the symbolic cover along the orbit and checks that each word
/// cell holds an orbit index no other cell contains.
pub fn akm_cover_demo(n: usize, order: usize, lmax: usize) -> Result<AkmCover> {
    if order == 0 || order > lmax {
        return Err(Error::Config(format!(
            "need 1 <= n <= L_max, got n = {order}, L_max = {lmax}"
        )));
    }
    let c = EscapeConstruction::new(n, lmax)?;
    let s = c.word_sequence();
    let first = EscapeConstruction::word_indices(&s, n, order)
        .ok_or_else(|| Error::Config(format!("some word of length {order} is missing")))?;
    let mut words: Vec<(&Vec<u8>, &usize)> = first.iter().collect();
    words.sort();
    let mut witnesses = Vec::with_capacity(words.len());
    let mut private = true;
    for (w, &i) in words {
        // orbit index i lies in A_v exactly when s_i..s_{i+n-1} = v
        let others = first.keys().filter(|v| *v != w && s[i..i + order] == v[..]).count();
        private &= others == 0 && s[i..i + order] == w[..];
        witnesses.push(i);
    }
    let cells = witnesses.len();
    let minimal = if private { cells } else { 0 };
    Ok(AkmCover {
        cover_size: n,
        refinement_size: cells,
        has_proper_subcover: !private,
        h_value: (minimal as f64).ln(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BowenMetric;
    use crate::dynamics::OrbitTable;
    use crate::metric::exact_max_separated;

    #[test]
    fn sequence_prefix() {
        let s = EscapeConstruction::new(2, 2).unwrap().word_sequence();
        assert_eq!(s, vec![0, 1, 0, 0, 0, 1, 1, 0, 1, 1]);
        let s3 = EscapeConstruction::new(3, 4).unwrap().word_sequence();
        assert_eq!(s3.len(), 3 + 2 * 9 + 3 * 27 + 4 * 81);
        for len in 1..=4 {
            assert!(EscapeConstruction::word_indices(&s3, 3, len).is_some());
        }
    }

    #[test]
    fn different_symbols_are_far_apart() {
        let s = EscapeConstruction::new(3, 3).unwrap().word_sequence();
        let spec = MetricSpec::max_product(2).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let d = spec.dist_unchecked(&EscapeConstruction::point(&s, i), &EscapeConstruction::point(&s, j));
                if s[i] != s[j] {
                    assert!(d >= 1.0);
                } else {
                    assert!(d < 1.0);
                }
            }
        }
    }

    #[test]
    fn map_is_translation() {
        let c = EscapeConstruction::new(2, 3);
        let c = c.unwrap();
        let s = c.word_sequence();
        let sys = c.system(s.clone());
        for i in 0..s.len() + 5 {
            assert_eq!(
                sys.apply(&EscapeConstruction::point(&s, i)),
                EscapeConstruction::point(&s, i + 1)
            );
        }
    }

    #[test]
    fn orbit_len_too_short() {
        assert!(matches!(build_escape(2, 4, 10, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn separated_count_at_scale_one() {
        let b = build_escape(2, 5, EscapeConstruction::new(2, 5).unwrap().word_sequence().len(), 1.0).unwrap();
        let table = OrbitTable::build(&b.system, &b.cloud, 5).unwrap();
        let m = BowenMetric::new(&table, b.spec).unwrap();
        for n in 1..=4 {
            let sep = exact_max_separated(&m, n, 1.0, 24).unwrap();
            assert!(sep.len() >= 1 << n);
        }
    }

    #[test]
    fn akm_examples() {
        let a = akm_cover_demo(3, 2, 3).unwrap();
        assert_eq!(a.refinement_size, 9);
        assert!(!a.has_proper_subcover);
        assert!((a.h_value - 2.0 * 3f64.ln()).abs() < 1e-12);
        let one = akm_cover_demo(4, 1, 2).unwrap();
        assert!((one.h_value - 4f64.ln()).abs() < 1e-12);
        let five = akm_cover_demo(2, 5, 5).unwrap();
        assert_eq!(five.refinement_size, 32);
        // brute check of the witnesses: the word at each witness is unique
        let s = EscapeConstruction::new(2, 5).unwrap().word_sequence();
        let mut seen: Vec<&[u8]> = five.witnesses.iter().map(|&i| &s[i..i + 5]).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 32);
        assert!(akm_cover_demo(2, 4, 3).is_err());
    }
}
