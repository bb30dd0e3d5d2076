//! Report envelope and output writers.
//!
//! Every run emits {"config": ..., "results": ..., "violations": [...],
//! "version": ...} plus a timestamp unless --no-timestamp is set; with the
//! timestamp suppressed, identical configs produce byte-identical reports.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct Report {
    pub config: Value,
    pub results: Value,
    pub violations: Vec<Value>,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Output of one subcommand run: the report body, optional CSV rendering,
/// and whether an assertion-mode violation occurred.
pub struct RunOutcome {
    pub results: Value,
    pub violations: Vec<Value>,
    pub csv_header: &'static str,
    pub csv_rows: Vec<String>,
    pub violation_flag: bool,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    /// One report object with config echo, results and violations.
    Json,
    /// Command-specific fixed columns, plot-ready.
    Csv,
    /// One result record per line, violations appended.
    Jsonl,
}

pub fn write_report(
    outcome: &RunOutcome,
    config_echo: Value,
    format: OutputFormat,
    output: Option<&PathBuf>,
    no_timestamp: bool,
) -> std::io::Result<()> {
    let rendered = match format {
        OutputFormat::Json => {
            let report = Report {
                config: config_echo,
                results: outcome.results.clone(),
                violations: outcome.violations.clone(),
                version: VERSION,
                timestamp: if no_timestamp {
                    None
                } else {
                    Some(now_utc())
                },
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from(outcome.csv_header);
            s.push('\n');
            for row in &outcome.csv_rows {
                s.push_str(row);
                s.push('\n');
            }
            s
        }
        OutputFormat::Jsonl => {
            let mut s = String::new();
            let records: Vec<&Value> = match &outcome.results {
                Value::Array(items) => items.iter().collect(),
                other => vec![other],
            };
            for record in records {
                s.push_str(&serde_json::to_string(record).expect("record serializes"));
                s.push('\n');
            }
            for v in &outcome.violations {
                let line = serde_json::json!({"violation": v});
                s.push_str(&serde_json::to_string(&line).expect("violation serializes"));
                s.push('\n');
            }
            s
        }
    };
    match output {
        Some(path) => std::fs::write(path, rendered)?,
        None => std::io::stdout().write_all(rendered.as_bytes())?,
    }
    Ok(())
}

/// Seconds since the Unix epoch; good enough as a run marker without
/// pulling in a date-time dependency.
fn now_utc() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}
