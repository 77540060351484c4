//! The crumpled curve: the graph of a zigzag `Φ` over `(0, 1)` whose laps
//! pile up at 0, with the interval map `g` lifted to it.
//!
//! Block `j` is `[1/(j+1), 1/j]` and holds `N^(j-1)` laps of equal width.
//! `g` maps block `j` affinely onto block `j + 1`, so every lap past the
//! first is carried over `N` laps and the height is folded `N` times.

use super::{filter_cloud, log_n, Bundle, Plan, Target, Targets};
use crate::dynamics::DynSystem;
use crate::error::{Error, Result};
use crate::estimators::CompactFamily;
use crate::metric::{MetricSpec, PointCloud};

/// Finest scale used by the default plans.
pub const FINEST_EPS: f64 = 0.05;

/// Largest order used by the default plans.
pub const N_MAX: usize = 7;

/// Points per lap in the compact pieces of the inverse-map family.
pub const FAMILY_LAP_SAMPLES: usize = 81;

/// Longest order for the inverse-map compacta run.
pub const FAMILY_N_MAX: usize = 24;

/// Extra forward steps applied to the inverse-map sample beyond the
/// largest order, leaving room for the Friedland lookahead.
pub const INVERSE_EXTRA: usize = 6;

/// Mesh refinement of the inverse-map sample over the forward one.
pub const INVERSE_REFINE: f64 = 16.0;

/// Deepest lap of the inverse-map sample.
pub const INVERSE_LAPS: usize = 2;

/// Scales of the Friedland runs.
pub const FRIEDLAND_EPS: [f64; 3] = [0.4, 0.2, 0.1];

/// Deepest lap used by default: the first lap of block 3.
pub fn default_depth(n: usize) -> usize {
    n.max(2) + 1
}

/// Height spacing fine enough that `(N_MAX, FINEST_EPS)`-separation is
/// visible: folds stretch heights by `N` per step.
pub fn default_mesh(n: usize) -> f64 {
    FINEST_EPS / (n.max(2) as f64).powi(N_MAX as i32 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrumpleConstruction {
    pub n: usize,
}

impl CrumpleConstruction {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("crumple needs N >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    fn laps_in_block(&self, j: usize) -> usize {
        self.n.pow(j as u32 - 1)
    }

    /// Index of the first lap of block `j >= 1`.
    pub fn block_start(&self, j: usize) -> usize {
        (self.n.pow(j as u32 - 1) - 1) / (self.n - 1)
    }

    /// Block containing lap `k`.
    fn block_of_lap(&self, k: usize) -> usize {
        let mut j = 1;
        while self.block_start(j + 1) <= k {
            j += 1;
        }
        j
    }

    /// Block containing `x` in `(0, 1]`, with `1/j` assigned to block `j`.
    fn block_of(x: f64) -> usize {
        let j = (1.0 / x).floor().max(1.0) as usize;
        // guard the floor against rounding at block ends
        if x > 1.0 / j as f64 {
            j - 1
        } else if x < 1.0 / (j + 1) as f64 {
            j + 1
        } else {
            j
        }
    }

    /// `a_k`: right end of lap `k`.
    pub fn a(&self, k: usize) -> f64 {
        let j = self.block_of_lap(k);
        let m = k - self.block_start(j);
        let (hi, lo) = (1.0 / j as f64, 1.0 / (j + 1) as f64);
        hi - m as f64 * (hi - lo) / self.laps_in_block(j) as f64
    }

    /// Lap `I_k = [a_{k+1}, a_k]`.
    pub fn lap(&self, k: usize) -> (f64, f64) {
        (self.a(k + 1), self.a(k))
    }

    /// Lap index of `x` and its position in the lap measured from the
    /// right end, in `[0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let j = Self::block_of(x.min(1.0));
        let (hi, lo) = (1.0 / j as f64, 1.0 / (j + 1) as f64);
        let laps = self.laps_in_block(j);
        let u = ((hi - x) / (hi - lo)).clamp(0.0, 1.0) * laps as f64;
        let m = (u.floor() as usize).min(laps - 1);
        (self.block_start(j) + m, u - m as f64)
    }

    /// `Φ`: affine on each lap with `Φ(a_k) = (-1)^k`.
    pub fn phi(&self, x: f64) -> f64 {
        let (k, s) = self.locate(x);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * (1.0 - 2.0 * s)
    }

    /// The interval homeomorphism: `g(1/j) = 1/(j+1)` for `j >= 2`,
    /// affine between, fixing 0 and 1.
    pub fn g(x: f64) -> f64 {
        if x >= 0.5 {
            return 1.0 / 3.0 + (x - 0.5) * 4.0 / 3.0;
        }
        let j = Self::block_of(x);
        let (hi, lo) = (1.0 / j as f64, 1.0 / (j + 1) as f64);
        let t = ((hi - x) / (hi - lo)).clamp(0.0, 1.0);
        let (hi2, lo2) = (lo, 1.0 / (j + 2) as f64);
        hi2 - t * (hi2 - lo2)
    }

    pub fn g_inv(x: f64) -> f64 {
        if x >= 1.0 / 3.0 {
            return 0.5 + (x - 1.0 / 3.0) * 0.75;
        }
        let j = Self::block_of(x);
        let (hi, lo) = (1.0 / j as f64, 1.0 / (j + 1) as f64);
        let t = ((hi - x) / (hi - lo)).clamp(0.0, 1.0);
        let (hi0, lo0) = (1.0 / (j - 1) as f64, hi);
        hi0 - t * (hi0 - lo0)
    }

    /// Height after one step of `G`, read off the current height alone.
    /// Valid on the graph over `(0, 1/2)`, where each lap is carried onto
    /// `N` equal laps.
    pub fn fold(&self, y: f64) -> f64 {
        let s = ((1.0 - y) / 2.0).clamp(0.0, 1.0);
        let u = self.n as f64 * s;
        let i = (u.floor() as usize).min(self.n - 1);
        let s2 = u - i as f64;
        let sign = if i.is_multiple_of(2) { -1.0 } else { 1.0 };
        sign * (1.0 - 2.0 * s2)
    }

    pub fn embed(&self, x: f64) -> [f64; 2] {
        [x, self.phi(x)]
    }

    /// `G = embed ∘ g ∘ embed^-1` on the plane, with inverse attached.
    pub fn system(&self) -> DynSystem {
        let fwd = *self;
        let inv = *self;
        DynSystem::new(format!("crumple[N={}]", self.n), 2, move |p, out| {
            let x = Self::g(p[0]);
            out[0] = x;
            out[1] = if p[0] >= 0.5 { fwd.phi(x) } else { fwd.fold(p[1]) };
        })
        .with_domain(|p| p[0] > 0.0 && p[0] < 1.0 && (-1.0..=1.0).contains(&p[1]))
        .with_inverse(move |p, out| {
            let x = Self::g_inv(p[0]);
            out[0] = x;
            out[1] = inv.phi(x);
        })
    }

    /// `count` points per lap for laps `0..=depth`, offset per lap by a
    /// golden-ratio shift so no two laps share heights.
    pub fn sample(&self, depth: usize, count: usize, label: &str, mesh: f64) -> Result<PointCloud> {
        let shift = (5f64.sqrt() - 1.0) / 2.0;
        let mut data = Vec::with_capacity((depth + 1) * count * 2);
        for k in 0..=depth {
            let (lo, hi) = self.lap(k);
            let off = ((k + 1) as f64 * shift).fract();
            for i in 0..count {
                let s = (i as f64 + off) / count as f64;
                let x = hi - s * (hi - lo);
                data.push(x);
                data.push(self.phi(x));
            }
        }
        PointCloud::from_flat(data, 2, mesh, label)
    }

    /// Checks that the per-lap sample splits every lap into at least two
    /// points per fold and that the deepest lap is representable.
    pub fn check_mesh(&self, depth: usize, mesh: f64) -> Result<usize> {
        if !(mesh > 0.0) || mesh > 1.0 / self.n as f64 {
            return Err(Error::Mesh(format!(
                "mesh {mesh} leaves fewer than two samples per fold of a lap (needs mesh <= 1/{})",
                self.n
            )));
        }
        let (lo, hi) = self.lap(depth);
        let count = (2.0 / mesh).ceil() as usize + 1;
        if (hi - lo) / (count as f64) < 1e3 * f64::EPSILON {
            return Err(Error::Mesh(format!(
                "lap {depth} has width {:.3e}, too narrow for {count} samples",
                hi - lo
            )));
        }
        Ok(count)
    }
}

impl CrumpleConstruction {
    /// Graphs over `[a_{k+1}, 1]` for each cut `k`, sampled with `count`
    /// points per lap.
    pub fn lap_family(&self, cuts: &[usize], count: usize, mesh: f64) -> Result<CompactFamily> {
        let mut cuts = cuts.to_vec();
        cuts.sort_unstable();
        cuts.dedup();
        let last = *cuts.last().ok_or(Error::Empty)?;
        let wide = self.sample(last, count, "graph", mesh)?;
        let members = cuts
            .iter()
            .map(|&k| {
                let a = self.a(k + 1);
                filter_cloud(&wide, format!("graph over [a_{}, 1]", k + 1), |p| p[0] >= a)
            })
            .collect::<Result<Vec<_>>>()?;
        CompactFamily::new(members, "graph over [a_k, 1]")
    }
}

/// Bundle for `G` (forward) or `G^-1` (inverse) on the crumpled curve.
pub fn build_crumple(n: usize, depth: usize, mesh: f64, direction: Direction) -> Result<Bundle> {
    let c = CrumpleConstruction::new(n)?;
    if depth < 2 {
        return Err(Error::Config(format!("crumple depth must be at least 2, got {depth}")));
    }
    let count = c.check_mesh(depth, mesh)?;
    let forward = c.system();
    let spec = MetricSpec::euclidean();
    let eps = [4.0 * FINEST_EPS, 2.0 * FINEST_EPS, FINEST_EPS];
    let target = log_n(n);
    let rho = 2.0 * n as f64;
    match direction {
        Direction::Forward => {
            let base = c.sample(depth, count, "graph", mesh)?;
            let mut b = Bundle::base(&format!("crumple-N{n}"), forward, spec, base);
            b.family = Some(c.lap_family(&[depth / 3, 2 * depth / 3, depth], count, mesh)?);
            b.bd = Plan::new(&eps, N_MAX);
            b.compacta = Plan::new(&eps, N_MAX);
            b.friedland = Plan::new(&FRIEDLAND_EPS, N_MAX);
            b.rho = rho;
            b.targets = Targets {
                bd: Some(Target::Near(target)),
                compacta: Some(Target::Near(target)),
                friedland: Some(Target::Near(target)),
            };
            Ok(b)
        }
        Direction::Inverse => {
            let system = forward.inverted().expect("crumple map is invertible");
            let n_max = N_MAX;
            let steps = n_max - 1 + INVERSE_EXTRA;
            let fine = mesh / INVERSE_REFINE;
            let seed = c.sample(INVERSE_LAPS.min(depth), c.check_mesh(depth, fine)?, "graph", fine)?;
            let mut data = Vec::with_capacity(seed.as_flat().len());
            for p in seed.points() {
                let mut q = p.to_vec();
                for _ in 0..steps {
                    q = forward.apply(&q);
                }
                data.extend_from_slice(&q);
            }
            let cloud = PointCloud::from_flat(data, 2, fine, format!("graph moved by G^{steps}"))?;
            // compact pieces: laps whose left end is at least a_depth / 2
            let floor = c.a(depth) / 2.0;
            let mut last = 0;
            while c.a(last + 2) >= floor {
                last += 1;
            }
            let mut b = Bundle::base(&format!("crumple-inverse-N{n}"), system, spec, cloud);
            b.family = Some(c.lap_family(&[last / 3, 2 * last / 3, last], FAMILY_LAP_SAMPLES.max(2 * n + 1), mesh)?);
            b.bd = Plan::new(&eps, n_max);
            b.compacta = Plan::new(&eps, FAMILY_N_MAX);
            b.friedland = Plan::new(&FRIEDLAND_EPS, n_max);
            b.rho = rho;
            b.targets = Targets {
                bd: Some(Target::Near(target)),
                compacta: Some(Target::Below(0.15)),
                friedland: Some(Target::Near(target)),
            };
            b.notes.push(format!(
                "sample is the forward sample moved by G^{steps} so inverse orbits retrace forward ones"
            ));
            Ok(b)
        }
    }
}
