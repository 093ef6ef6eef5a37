use std::fs;
use std::io::{self, Write};
use std::path::Path;

use bwsrank_core::analysis::{TimeReport, WorkloadProjection};
use bwsrank_core::AgreementReport;
use clap::ValueEnum;
use serde::Serialize;

use crate::error::Result;
use crate::OutputArgs;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Writes `value` as pretty JSON, or whatever `csv` produces.
pub fn emit<T: Serialize>(
    output: &OutputArgs,
    value: &T,
    csv: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    let mut bytes = Vec::new();
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut bytes, value)?;
            bytes.push(b'\n');
        }
        Format::Csv => csv(&mut bytes)?,
    }
    write_out(output.out.as_deref(), &bytes)
}

pub fn agreement_csv(report: &AgreementReport, out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["first", "second", "tolerance", "percent"])?;
    for p in &report.pairwise {
        w.write_record([p.first.as_str(), &p.second, &report.tolerance.to_string(), &p.percent.to_string()])?;
    }
    w.write_record(["*", &report.pooling, &report.tolerance.to_string(), &report.percent_agreement.to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn time_csv(report: &TimeReport, out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "count", "mean", "min", "max"])?;
    let rows = report.by_key.iter().map(|(k, s)| (k.as_str(), s)).chain(report.overall.iter().map(|s| ("*", s)));
    for (key, s) in rows {
        w.write_record([key, &s.count.to_string(), &s.mean.to_string(), &s.min.to_string(), &s.max.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn workload_csv(p: &WorkloadProjection<f64>, out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.serialize(p)?;
    w.flush()?;
    Ok(())
}
