//! CSV files for sweep results, annealing traces and the one-dimensional
//! search table.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use masec_core::harness::{ArrayKind, SearchTable, SweepResult};
use masec_core::optimizer::TraceRecord;
use serde::{Deserialize, Serialize};

pub const SWEEP_HEADER: [&str; 8] = [
    "sweep_var",
    "sweep_value",
    "method",
    "rep_count",
    "mean_secrecy",
    "mean_bob_capacity",
    "mean_eve_capacity",
    "seed_base",
];

pub const TRACE_HEADER: [&str; 4] = ["iter", "objective", "accepted", "temperature"];

pub const SEARCH_HEADER: [&str; 6] = [
    "mode",
    "moved",
    "secrecy",
    "margin",
    "baseline_secrecy",
    "offsets",
];

#[derive(Debug, Serialize, Deserialize)]
struct SweepRow {
    sweep_var: String,
    sweep_value: f64,
    method: String,
    rep_count: usize,
    mean_secrecy: f64,
    mean_bob_capacity: f64,
    mean_eve_capacity: f64,
    seed_base: u64,
}

fn method_from_label(label: &str) -> Result<ArrayKind> {
    [ArrayKind::Ma, ArrayKind::Ula, ArrayKind::Upa]
        .into_iter()
        .find(|k| k.label() == label)
        .ok_or_else(|| anyhow!("unknown method {label:?}"))
}

fn headerless<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_sweep<W: Write>(results: &[SweepResult], w: W) -> Result<()> {
    let mut out = headerless(w, &SWEEP_HEADER)?;
    for r in results {
        out.serialize(SweepRow {
            sweep_var: r.sweep_var.clone(),
            sweep_value: r.sweep_value,
            method: r.method.label().to_string(),
            rep_count: r.rep_count,
            mean_secrecy: r.mean_secrecy,
            mean_bob_capacity: r.mean_bob_capacity,
            mean_eve_capacity: r.mean_eve_capacity,
            seed_base: r.seed_base,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepResult>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(anyhow!("unexpected sweep header {header:?}"));
    }
    rdr.deserialize::<SweepRow>()
        .map(|row| {
            let row = row?;
            Ok(SweepResult {
                method: method_from_label(&row.method)?,
                sweep_var: row.sweep_var,
                sweep_value: row.sweep_value,
                rep_count: row.rep_count,
                mean_secrecy: row.mean_secrecy,
                mean_bob_capacity: row.mean_bob_capacity,
                mean_eve_capacity: row.mean_eve_capacity,
                seed_base: row.seed_base,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub accepted: bool,
    pub temperature: f64,
}

pub fn write_trace<W: Write>(trace: &[TraceRecord], w: W) -> Result<()> {
    let mut out = headerless(w, &TRACE_HEADER)?;
    for r in trace {
        out.serialize(TraceRow {
            iter: r.iter,
            objective: r.objective,
            accepted: r.accepted,
            temperature: r.temperature,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(anyhow!("unexpected trace header {header:?}"));
    }
    rdr.deserialize().map(|row| Ok(row?)).collect()
}

pub fn write_search<W: Write>(table: &SearchTable, w: W) -> Result<()> {
    let mut out = headerless(w, &SEARCH_HEADER)?;
    for r in &table.rows {
        let offsets: Vec<String> = r.offsets.iter().map(f64::to_string).collect();
        out.write_record([
            r.mode.name().to_string(),
            r.moved.to_string(),
            r.secrecy.to_string(),
            r.margin.to_string(),
            r.baseline_secrecy.to_string(),
            offsets.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Create `path` and hand a buffered writer to `body`; errors name the path.
pub fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
