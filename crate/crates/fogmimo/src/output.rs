//! CSV emission and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::SystemConfig;
use crate::run::{RunError, Table};

/// Schema version of every CSV produced by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same value.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| format_value(v))).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))
}

pub fn csv_string(table: &Table) -> Result<String, RunError> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    String::from_utf8(buf).map_err(|e| RunError::Io(e.to_string()))
}

/// Path of the manifest written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

/// Configuration echo plus a `[manifest]` table. The document is itself a
/// valid configuration, so running `command` on it reproduces the CSV.
pub fn manifest_text(cfg: &SystemConfig, command: &str) -> String {
    format!(
        "{}\n[manifest]\ncommand = {command:?}\nversion = {:?}\nschema = {SCHEMA_VERSION}\nseed = {}\n",
        cfg.emit(),
        env!("CARGO_PKG_VERSION"),
        cfg.seed
    )
}

/// Writes the CSV (or prints it when `out` is `None`) and its manifest.
pub fn emit(table: &Table, cfg: &SystemConfig, command: &str, out: Option<&Path>) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(e.to_string());
    match out {
        None => write_csv(table, std::io::stdout().lock()),
        Some(path) => {
            write_csv(table, fs::File::create(path).map_err(io)?)?;
            fs::write(manifest_path(path), manifest_text(cfg, command)).map_err(io)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, 2613.5, 1e-300, -7.25] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_value(f64::NAN), "NaN");
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(manifest_path(Path::new("out/fig3.csv")), Path::new("out/fig3.csv.manifest.toml"));
    }
}
