use std::io::Write;
use std::path::Path;

use spongelab::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 5] = ["name", "anchor", "status", "values", "witness"];

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(|e| e.to_string())?;
            for c in &report.records {
                let status = serde_json::to_value(c.status).map_err(|e| e.to_string())?;
                let values = serde_json::to_string(&c.values).map_err(|e| e.to_string())?;
                let witness = match &c.witness {
                    Some(v) => serde_json::to_string(v).map_err(|e| e.to_string())?,
                    None => String::new(),
                };
                w.write_record([
                    c.name.as_str(),
                    c.anchor.as_str(),
                    status.as_str().unwrap_or_default(),
                    values.as_str(),
                    witness.as_str(),
                ])
                .map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())
        }
    }
}

/// Writes to `path`, or to stdout when it is `None`.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}
