//! CSV and JSON experiment reports.
//!
//! A CSV report starts with one `#` comment line carrying the crate version,
//! the resolved `m` and the full config as compact JSON, followed by a header
//! row of [`TRIAL_COLUMNS`] and one RFC 4180 row per trial. Absent optional
//! values are empty fields. A JSON report is an object holding the same
//! metadata and a `records` array.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::TrialRecord;
use crate::concentration::TailCheckReport;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRIAL_COLUMNS: [&str; 19] = [
    "trial",
    "d",
    "sigma",
    "truth_seed",
    "ensemble_seed",
    "noise_seed",
    "truth_id",
    "kappa_bits",
    "status",
    "recovered_id",
    "residual",
    "complexity_bits",
    "candidates_scored",
    "noise_norm",
    "l2",
    "l2_per_element",
    "quantized_l2",
    "bound",
    "within_bound",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// From a file extension, defaulting to CSV.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub version: String,
    /// Resolution in effect; `ceil(ln n)` with the natural log when the
    /// config leaves `m` unset.
    pub m: u32,
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
}

fn preamble(cfg: &ExperimentConfig) -> Result<String> {
    Ok(format!(
        "# mcp-core {VERSION} m={} config={}\n",
        cfg.resolution()?.bits(),
        cfg.to_json()
    ))
}

/// Writes a report to any sink. I/O errors are reported against `label`.
pub fn write_report<W: Write>(
    mut sink: W,
    records: &[TrialRecord],
    cfg: &ExperimentConfig,
    format: ReportFormat,
    label: &Path,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            sink.write_all(preamble(cfg)?.as_bytes())
                .map_err(|e| Error::io(label, e))?;
            let csv_err = |source| Error::Csv {
                path: label.into(),
                source,
            };
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
            w.write_record(TRIAL_COLUMNS).map_err(csv_err)?;
            for r in records {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(label, e))?;
        }
        ReportFormat::Json => {
            let report = JsonReport {
                version: VERSION.into(),
                m: cfg.resolution()?.bits(),
                config: cfg.clone(),
                records: records.to_vec(),
            };
            serde_json::to_writer_pretty(&mut sink, &report).map_err(|source| Error::Json {
                path: label.into(),
                source,
            })?;
            sink.write_all(b"\n").map_err(|e| Error::io(label, e))?;
        }
    }
    Ok(())
}

pub fn emit_report(records: &[TrialRecord], cfg: &ExperimentConfig, format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut sink = BufWriter::new(file);
    write_report(&mut sink, records, cfg, format, path)?;
    sink.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json_report(path: &Path) -> Result<JsonReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

/// Tail checks as CSV: `event_name,trials,hits,empirical_rate,analytic_bound,pass`.
pub fn write_tail_reports<W: Write>(sink: W, reports: &[TailCheckReport], label: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: label.into(),
        source,
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "event_name",
        "trials",
        "hits",
        "empirical_rate",
        "analytic_bound",
        "pass",
    ])
    .map_err(csv_err)?;
    for r in reports {
        w.serialize((
            &r.event_name,
            r.trials,
            r.hits,
            r.empirical_rate,
            r.analytic_bound,
            r.pass,
        ))
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(label, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::run_experiment;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"experiment_id": "NOISELESS_SCALING", "n": 16, "m": 3, "d_grid": [1, 3],
            "generators": [{"family": "CONSTANT"}, {"family": "K_SPARSE", "max_k": 1}],
            "budget": 16, "trials": 4, "base_seed": 9}"#,
        )
        .unwrap()
    }

    fn render(records: &[TrialRecord], format: ReportFormat) -> String {
        let mut out = Vec::new();
        write_report(&mut out, records, &config(), format, Path::new("mem")).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn header_matches_record_fields() {
        let records = run_experiment(&config()).unwrap().records;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&records[0]).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRIAL_COLUMNS.join(","));
    }

    #[test]
    fn empty_csv_is_preamble_and_header() {
        let text = render(&[], ReportFormat::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# mcp-core "));
        assert!(lines[0].contains("\"budget\":16"));
        assert_eq!(lines[1], TRIAL_COLUMNS.join(","));
    }

    #[test]
    fn json_round_trip() {
        let records = run_experiment(&config()).unwrap().records;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&records, &config(), ReportFormat::Json, &path).unwrap();
        let back = read_json_report(&path).unwrap();
        assert_eq!(back.records, records);
        assert_eq!(back.config, config());
        assert_eq!(back.m, 3);
    }

    #[test]
    fn csv_rows_and_quoting() {
        let records = run_experiment(&config()).unwrap().records;
        let text = render(&records, ReportFormat::Csv);
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        assert_eq!(reader.records().count(), records.len());
        assert_eq!(render(&records, ReportFormat::Csv), text);
    }

    #[test]
    fn unwritable_path_reports_context() {
        let err = emit_report(&[], &config(), ReportFormat::Csv, Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }

    #[test]
    fn tail_csv_columns() {
        let mut out = Vec::new();
        let reports = [TailCheckReport::new("E2", 10, 1, 0.5)];
        write_tail_reports(&mut out, &reports, Path::new("mem")).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "event_name,trials,hits,empirical_rate,analytic_bound,pass\nE2,10,1,0.1,0.5,true\n"
        );
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(ReportFormat::for_path(Path::new("a.JSON")), ReportFormat::Json);
        assert_eq!(ReportFormat::for_path(Path::new("a.csv")), ReportFormat::Csv);
        assert_eq!(ReportFormat::for_path(Path::new("a")), ReportFormat::Csv);
    }
}
