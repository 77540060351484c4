//! Verifier suites for a configured bundle: the sequence-metric comparison,
//! the projection semiconjugacy, the subsample bracket and the inequality
//! between the three estimates.

use std::fmt::Write as _;

use entro_core::metric::{local_cluster, subsample_check};
use entro_core::orbit_space::{lemma4_check, lifted_cloud, semiconj_check, shift_system, Side};
use entro_core::{Bundle, EntropyEstimate, Error, MetricSpec, PointCloud, Result};
use serde::Serialize;

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::output::{to_csv, write_atomic, CsvRow};
use crate::run::run_bundle;

/// Residual allowed in `h∘f̃ = f∘h` for the projection.
pub const PROJECTION_TOLERANCE: f64 = 1e-9;

/// Order used by the exact semiconjugacy comparison.
pub const SEMICONJ_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyOutcome {
    pub checks: Vec<CheckLine>,
    #[serde(skip)]
    pub report: String,
    #[serde(skip)]
    pub rows: Vec<CsvRow>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, suite: &str, passed: bool, detail: String) {
        self.checks.push(CheckLine {
            suite: suite.to_string(),
            passed,
            detail,
        });
    }
}

fn scale_of(cluster: &PointCloud, spec: &MetricSpec) -> f64 {
    cluster.diameter(spec) / 3.0
}

/// Runs every suite on the configured bundle.
pub fn verify_bundle(b: &Bundle, cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let mut out = VerifyOutcome::default();
    let seed = cfg.seed;
    let v = &cfg.verify;

    for (i, &eps) in b.bd.eps_list.iter().enumerate() {
        let r = lemma4_check(
            &b.system,
            &b.cloud,
            &b.spec,
            b.rho,
            eps,
            v.pairs,
            seed.wrapping_add(i as u64),
        )?;
        out.push(
            "sequence-metric",
            r.passed(),
            format!(
                "eps {eps}: N = {}, {} pairs, Bowen-close {} ({} violations), d̂-close {} ({} violations)",
                r.n_tail, r.pairs, r.bowen_close, r.bowen_violations, r.dhat_close, r.dhat_violations
            ),
        );
    }

    let cluster = local_cluster(&b.cloud, &b.spec, v.small_cloud, seed)?;
    let truncation = b.friedland_truncation()?;
    let lifted = lifted_cloud(&b.system, &cluster, truncation)?;
    let shift = shift_system(&b.system, truncation);
    let dim = b.cloud.dim();
    let eps = scale_of(&cluster, &b.spec);
    let r = semiconj_check(
        Side {
            system: &shift,
            spec: MetricSpec::sequence_rho(b.rho, truncation)?,
        },
        Side {
            system: &b.system,
            spec: b.spec,
        },
        &|p| p[..dim].to_vec(),
        &|e| e,
        &lifted,
        eps,
        SEMICONJ_ORDER,
        PROJECTION_TOLERANCE,
    )?;
    out.push(
        "projection",
        r.passed(),
        format!(
            "eps {eps:.6}, n {}: separated {} over {}, spanning {} over {}, residual {:e}",
            r.n, r.sep_up, r.sep_down, r.span_up, r.span_down, r.residual
        ),
    );

    let mut failures = 0;
    let mut skipped = 0;
    for i in 0..v.subsamples {
        let s = seed.wrapping_add(1000 + i as u64);
        let parent = local_cluster(&b.cloud, &b.spec, v.small_cloud, s)?;
        let r = subsample_check(&parent, 0.5, s, &b.spec, scale_of(&parent, &b.spec))?;
        failures += usize::from(!r.passed());
        skipped += usize::from(r.sep_sub.is_none());
    }
    out.push(
        "subsample",
        failures == 0,
        format!(
            "{} parent/subsample pairs, {failures} failures, {skipped} without a separated comparison",
            v.subsamples
        ),
    );

    let all = [EstimatorKind::Bd, EstimatorKind::Compacta, EstimatorKind::Friedland];
    let run = run_bundle(b, &all, &b.name)?;
    match run.verdict {
        Some(verdict) => {
            let [bd, bc, fr] = [&run.bd, &run.compacta, &run.friedland].map(headline);
            out.push(
                "inequality",
                verdict.passed(),
                format!("{} (BD {bd:.4}, compacta {bc:.4}, Friedland {fr:.4})", verdict.line()),
            );
        }
        None => return Err(Error::Config("eps_list: the inequality suite needs scales".into())),
    }
    out.rows = run.rows;

    let s = &mut out.report;
    let _ = writeln!(s, "== verify {} (seed {seed}) ==", b.name);
    for c in &out.checks {
        let _ = writeln!(
            s,
            "{}: {} ({})",
            c.suite,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    Ok(out)
}

fn headline(e: &Option<EntropyEstimate>) -> f64 {
    e.as_ref().map_or(f64::NAN, |e| e.headline)
}

/// Runs the suites for one configured experiment and writes the verdicts.
pub fn verify_entry(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let b = cfg.bundle()?;
    let out = verify_bundle(&b, cfg)?;
    write_atomic(&cfg.outputs.counts, &to_csv(&out.rows)?)?;
    if let Some(path) = &cfg.outputs.verdicts {
        let json = serde_json::to_vec_pretty(&out).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(path, &json)?;
    }
    if let Some(path) = &cfg.outputs.report {
        write_atomic(path, out.report.as_bytes())?;
    }
    Ok(out)
}
