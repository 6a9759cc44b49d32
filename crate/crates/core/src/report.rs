//! Report files.
//!
//! A run writes, into its output directory:
//!
//! - `<identity>.json` for every identity that ran: `{schema_version, tool,
//!   tool_version, identity, reports}` with `reports` ordered by scenario id;
//! - `summary.csv` with columns `id, identity, max_abs_err, max_rel_err,
//!   coverage, pass`, one row per scenario and identity;
//! - `run_metadata.json` with the wall-clock timestamp and run settings.
//!
//! Everything except `run_metadata.json` depends only on the configuration,
//! so reruns produce byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calculus::{Identity, IdentityReport};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "run_metadata.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub identity: Identity,
    pub reports: Vec<IdentityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub identity: Identity,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub coverage: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub tool_version: String,
    pub config: String,
    pub timestamp_unix: u64,
    pub jobs: usize,
    pub reports: usize,
    pub passed: usize,
}

/// Groups reports by identity, each group ordered by scenario id.
pub fn group(reports: &[IdentityReport]) -> BTreeMap<Identity, Vec<IdentityReport>> {
    let mut map: BTreeMap<Identity, Vec<IdentityReport>> = BTreeMap::new();
    for r in reports {
        map.entry(r.identity).or_default().push(r.clone());
    }
    for v in map.values_mut() {
        v.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    }
    map
}

pub fn summary_rows(reports: &[IdentityReport]) -> Vec<SummaryRow> {
    group(reports)
        .into_values()
        .flatten()
        .map(|r| SummaryRow {
            id: r.scenario,
            identity: r.identity,
            max_abs_err: r.max_abs_err,
            max_rel_err: r.max_rel_err,
            coverage: r.coverage,
            pass: r.pass,
        })
        .collect()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes the per-identity JSON files and the CSV summary; returns their
/// paths.
pub fn write_reports(dir: &Path, reports: &[IdentityReport]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (identity, reports) in group(reports) {
        let file = ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: TOOL.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            identity,
            reports,
        };
        let path = dir.join(format!("{identity}.json"));
        let text = serde_json::to_string_pretty(&file).expect("reports serialize") + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    for row in summary_rows(reports) {
        w.serialize(row).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn write_metadata(dir: &Path, meta: &RunMetadata) -> Result<PathBuf> {
    let path = dir.join(METADATA_FILE);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| io_err(path, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{verify_eq1, VerifyOptions};
    use crate::maps::{DiffeoCurve, Domain};
    use crate::sections::Section;
    use crate::bundles::FunctorSpec;

    #[test]
    fn round_trip() {
        let d = Domain::cube(1, 2.0);
        let c = DiffeoCurve::parse(&["x1 + t*x1/2"], d.clone(), (-1.0, 1.0)).unwrap();
        let s = Section::parse(FunctorSpec::COTANGENT, d, &["x1"]).unwrap();
        let mut opts = VerifyOptions::new(Identity::Eq1);
        opts.scenario = "b".into();
        let mut reports = vec![verify_eq1(&c, &s, 0.1, &[vec![0.5]], &opts)];
        opts.scenario = "a".into();
        reports.push(verify_eq1(&c, &s, 0.1, &[vec![0.5]], &opts));
        let dir = tempfile::tempdir().unwrap();
        let files = write_reports(dir.path(), &reports).unwrap();
        assert_eq!(files.len(), 2);
        let back = read_report(&files[0]).unwrap();
        assert_eq!(back.reports[0].scenario, "a");
        assert_eq!(back.reports[1], reports[0]);
        let rows = read_summary(&files[1]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.pass));
        let header = std::fs::read_to_string(&files[1]).unwrap();
        assert!(header.starts_with("id,identity,max_abs_err,max_rel_err,coverage,pass\n"));
    }
}
