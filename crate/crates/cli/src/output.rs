//! Counts CSV, report text and atomic file writes.

use std::io::Write;
use std::path::Path;

use entro_core::{CountMode, CountRow, CountTable, EntropyEstimate, Error, MetricKind, MetricSpec, Result};

/// Column order of the counts CSV.
pub const HEADER: [&str; 8] = ["system", "metric", "epsilon", "n", "sep", "span", "mode", "rate"];

/// One CSV line: a count row tagged with its run and the rate at its scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub system: String,
    pub metric: String,
    pub row: CountRow,
    pub rate: Option<f64>,
}

pub fn metric_label(spec: &MetricSpec) -> String {
    match spec.kind {
        MetricKind::Euclidean => "euclidean".into(),
        MetricKind::MaxProduct { arity } => format!("max_product(arity={arity})"),
        MetricKind::SequenceRho { rho, truncation } => format!("sequence_rho(rho={rho},truncation={truncation})"),
    }
}

/// Rows of `table` under the given tags, with the estimate's rate per scale.
pub fn rows_for(system: &str, metric: &str, table: &CountTable, estimate: Option<&EntropyEstimate>) -> Vec<CsvRow> {
    table
        .rows
        .iter()
        .map(|r| CsvRow {
            system: system.to_string(),
            metric: metric.to_string(),
            row: *r,
            rate: estimate.and_then(|e| e.rate_at(r.epsilon)),
        })
        .collect()
}

/// Rows of an estimate: its own table, or each member's for compacta.
pub fn estimate_rows(prefix: &str, metric: &str, e: &EntropyEstimate) -> Vec<CsvRow> {
    if e.members.is_empty() {
        rows_for(&format!("{prefix}:{}", e.method.as_str()), metric, &e.table, Some(e))
    } else {
        e.members
            .iter()
            .flat_map(|m| {
                let system = format!("{prefix}:{}:{}", e.method.as_str(), m.label);
                rows_for(&system, metric, &m.table, Some(m))
            })
            .collect()
    }
}

/// Floats are written in their shortest round-trip form.
pub fn to_csv(rows: &[CsvRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.system.clone(),
            r.metric.clone(),
            r.row.epsilon.to_string(),
            r.row.n.to_string(),
            r.row.sep_count.to_string(),
            r.row.span_count.to_string(),
            r.row.mode.as_str().to_string(),
            r.rate.map_or_else(String::new, |x| x.to_string()),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn from_csv(bytes: &[u8]) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| Error::Shape(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(Error::Shape(format!("unexpected header {header:?}")));
    }
    let bad = |field: &str, v: &str| Error::Shape(format!("bad {field} {v:?}"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Shape(e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| f(i).parse::<usize>().map_err(|_| bad(HEADER[i], f(i)));
        out.push(CsvRow {
            system: f(0).to_string(),
            metric: f(1).to_string(),
            row: CountRow {
                epsilon: f(2).parse().map_err(|_| bad("epsilon", f(2)))?,
                n: num(3)?,
                sep_count: num(4)?,
                span_count: num(5)?,
                mode: f(6).parse::<CountMode>().map_err(|_| bad("mode", f(6)))?,
            },
            rate: match f(7) {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("rate", s))?),
            },
        });
    }
    Ok(out)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
