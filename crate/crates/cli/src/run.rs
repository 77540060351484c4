//! Estimation runs for one bundle and the report block they produce.

use std::fmt::Write as _;

use entro_core::estimators::inequality_report;
use entro_core::gallery::{Target, TARGET_TOLERANCE};
use entro_core::{Bundle, EntropyEstimate, InequalityVerdict, Result};
use rayon::prelude::*;

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::output::{estimate_rows, metric_label, to_csv, write_atomic, CsvRow};

/// Estimates of one run; a slot is empty when the estimator was not
/// requested or had no scales.
#[derive(Debug, Default)]
pub struct RunResult {
    pub bd: Option<EntropyEstimate>,
    pub compacta: Option<EntropyEstimate>,
    pub friedland: Option<EntropyEstimate>,
    pub verdict: Option<InequalityVerdict>,
    pub rows: Vec<CsvRow>,
    pub report: String,
}

impl RunResult {
    pub fn verdict_failed(&self) -> bool {
        self.verdict.is_some_and(|v| !v.passed())
    }
}

pub fn friedland_metric_label(b: &Bundle) -> Result<String> {
    Ok(format!(
        "sequence_rho(rho={},truncation={},base={})",
        b.rho,
        b.friedland_truncation()?,
        metric_label(&b.spec)
    ))
}

/// Runs the requested estimators on `b` and renders the report block.
pub fn run_bundle(b: &Bundle, wanted: &[EstimatorKind], heading: &str) -> Result<RunResult> {
    let mut out = RunResult::default();
    let wants = |k| wanted.contains(&k);
    let base_metric = metric_label(&b.spec);
    if wants(EstimatorKind::Bd) && !b.bd.eps_list.is_empty() {
        let e = b.run_bd()?;
        out.rows.extend(estimate_rows(&b.name, &base_metric, &e));
        out.bd = Some(e);
    }
    if wants(EstimatorKind::Compacta) && !b.compacta.eps_list.is_empty() {
        let e = b.run_compacta()?;
        out.rows.extend(estimate_rows(&b.name, &base_metric, &e));
        out.compacta = Some(e);
    }
    if wants(EstimatorKind::Friedland) && !b.friedland.eps_list.is_empty() {
        let e = b.run_friedland()?;
        out.rows.extend(estimate_rows(&b.name, &friedland_metric_label(b)?, &e));
        out.friedland = Some(e);
    }
    if let (Some(bd), Some(bc), Some(fr)) = (&out.bd, &out.compacta, &out.friedland) {
        out.verdict = Some(inequality_report(bd, bc, fr, TARGET_TOLERANCE));
    }

    let s = &mut out.report;
    let _ = writeln!(s, "== {heading} ==");
    let estimates = [
        (&out.bd, b.targets.bd),
        (&out.compacta, b.targets.compacta),
        (&out.friedland, b.targets.friedland),
    ];
    if estimates.iter().all(|(e, _)| e.is_none()) {
        let _ = writeln!(s, "no scales requested");
    }
    for (e, _) in &estimates {
        if let Some(e) = e {
            s.push_str(&e.report());
        }
    }
    if let Some(v) = &out.verdict {
        let _ = writeln!(s, "{}", v.line());
    }
    for (e, target) in &estimates {
        if let (Some(e), Some(t)) = (e, target) {
            let ok = t.accepts(e.headline, TARGET_TOLERANCE);
            let _ = writeln!(
                s,
                "target {} {}: {:.4} {}",
                e.method.as_str(),
                describe(t),
                e.headline,
                if ok { "met" } else { "missed" }
            );
        }
    }
    for note in &b.notes {
        let _ = writeln!(s, "note: {note}");
    }
    Ok(out)
}

fn describe(t: &Target) -> String {
    match *t {
        Target::Near(v) => format!("{v:.4} ± {TARGET_TOLERANCE}"),
        Target::Below(v) => format!("< {v}"),
    }
}

/// Runs one configured experiment and writes its artifacts.
pub fn run_entry(cfg: &ExperimentConfig) -> Result<RunResult> {
    let b = cfg.bundle()?;
    let heading = format!("{} (seed {})", b.name, cfg.seed);
    let result = run_bundle(&b, &cfg.estimators, &heading)?;
    write_atomic(&cfg.outputs.counts, &to_csv(&result.rows)?)?;
    if let Some(path) = &cfg.outputs.report {
        write_atomic(path, result.report.as_bytes())?;
    }
    Ok(result)
}

/// Runs every entry, concurrently, returning results in config order.
pub fn run_batch<T: Send>(
    configs: &[ExperimentConfig],
    f: impl Fn(&ExperimentConfig) -> Result<T> + Sync + Send,
) -> Vec<Result<T>> {
    configs.par_iter().map(f).collect()
}
