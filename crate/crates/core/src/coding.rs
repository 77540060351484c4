//! The two-interval exchange `x -> x + 1 - α` on `(0, α)`, `x -> x - α` on
//! `(α, 1)`, its binary coding and the word complexity of the coded orbits.
//!
//! The points whose orbits reach `0`, `α` or `1` form a countable dense set
//! on which the exchange is undefined. Orbits are checked against a guard
//! band of width [`GUARD`] around those three points.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::growth_rate;

/// Half-width of the band around `0`, `α` and `1` treated as undefined.
pub const GUARD: f64 = 1e-9;

/// Smallest denominator accepted for a rational surrogate of `α`.
pub const MIN_DENOMINATOR: u64 = 1_000_000;

/// Longest word length; words are packed into a `u128`.
pub const MAX_WORD: usize = 128;

/// `α` as a continued-fraction convergent `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alpha {
    pub num: u64,
    pub den: u64,
}

impl Alpha {
    /// `832040 / 1346269`, the convergent `F_30 / F_31` of `(√5 - 1) / 2`.
    pub fn golden() -> Self {
        Self {
            num: 832_040,
            den: 1_346_269,
        }
    }

    /// First convergent of `a` whose denominator reaches [`MIN_DENOMINATOR`].
    pub fn from_f64(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
        let mut x = a;
        loop {
            let k = x.floor();
            if k > 1e12 {
                break;
            }
            let k = k as u64;
            let (p2, q2) = (k * p1 + p0, k * q1 + q0);
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            let frac = x - x.floor();
            if q1 >= MIN_DENOMINATOR || frac < 1e-15 {
                break;
            }
            x = 1.0 / frac;
        }
        if q1 < MIN_DENOMINATOR {
            return Err(Error::Config(format!(
                "alpha {a} is rational with denominator {q1} < {MIN_DENOMINATOR}"
            )));
        }
        Ok(Self { num: p1, den: q1 })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `x -> x + 1 - α` below `α`, `x -> x - α` above.
pub fn iet_step(alpha: f64, x: f64) -> Result<f64> {
    if !(x > GUARD && x < 1.0 - GUARD) || (x - alpha).abs() <= GUARD {
        return Err(Error::UndefinedPoint { step: 0 });
    }
    Ok(if x < alpha { x + (1.0 - alpha) } else { x - alpha })
}

/// Word complexity of sampled orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    /// `p[L - 1]` distinct words of length `L`.
    pub p: Vec<usize>,
    /// Seeds dropped because their orbit entered the guard band.
    pub skipped: usize,
    /// Growth rate of `p` over the upper half of the lengths.
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct CodingSystem {
    pub alpha: Alpha,
    /// Observed words, keyed by length, packed most recent symbol last.
    pub word_cache: BTreeMap<usize, HashSet<u128>>,
}

impl CodingSystem {
    pub fn new(alpha: Alpha) -> Self {
        Self {
            alpha,
            word_cache: BTreeMap::new(),
        }
    }

    pub fn step(&self, x: f64) -> Result<f64> {
        iet_step(self.alpha.value(), x)
    }

    /// Symbol `i` is 0 when the `i`-th iterate lies below `α`.
    pub fn code_word(&self, x: f64, len: usize) -> Result<Vec<u8>> {
        let a = self.alpha.value();
        let mut word = Vec::with_capacity(len);
        let mut x = x;
        for i in 0..len {
            let next = iet_step(a, x).map_err(|_| Error::UndefinedPoint { step: i })?;
            word.push(u8::from(x > a));
            x = next;
        }
        Ok(word)
    }

    /// Records every length-`1..=lmax` word of `seeds` orbits of length
    /// `orbit_len` started at uniform points, and returns `p(1..=lmax)`.
    pub fn word_complexity(&mut self, lmax: usize, seeds: usize, orbit_len: usize, seed: u64) -> Result<Complexity> {
        if !(6..=MAX_WORD).contains(&lmax) {
            return Err(Error::Config(format!("L_max must lie in 6..={MAX_WORD}, got {lmax}")));
        }
        if orbit_len < 10 * lmax {
            return Err(Error::Config(format!(
                "orbit_len {orbit_len} is below 10 * L_max = {}",
                10 * lmax
            )));
        }
        if seeds == 0 {
            return Err(Error::Config("need at least one seed".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut skipped = 0;
        for _ in 0..seeds {
            let x = rng.gen_range(GUARD..1.0 - GUARD);
            match self.code_word(x, orbit_len) {
                Ok(word) => self.record(&word, lmax),
                Err(Error::UndefinedPoint { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        if skipped == seeds {
            return Err(Error::UndefinedPoint { step: 0 });
        }
        let p: Vec<usize> = (1..=lmax)
            .map(|l| self.word_cache.get(&l).map_or(0, HashSet::len))
            .collect();
        let entropy = coded_entropy(&p)?;
        Ok(Complexity { p, skipped, entropy })
    }

    fn record(&mut self, symbols: &[u8], lmax: usize) {
        for len in 1..=lmax.min(symbols.len()) {
            let mask = if len == 128 { u128::MAX } else { (1u128 << len) - 1 };
            let set = self.word_cache.entry(len).or_default();
            let mut w = 0u128;
            for (i, &s) in symbols.iter().enumerate() {
                w = ((w << 1) | s as u128) & mask;
                if i + 1 >= len {
                    set.insert(w);
                }
            }
        }
    }
}

/// Growth rate of `p(L)` over `L` in `[lmax / 2, lmax]`.
pub fn coded_entropy(p: &[usize]) -> Result<f64> {
    let counts: Vec<f64> = p.iter().map(|&c| c as f64).collect();
    growth_rate(&counts, (p.len() / 2, p.len()))
}
