use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::convergence::ConvergenceReport;
use crate::error::Error;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format `{s}`; expected csv, markdown or json"
            ))),
        }
    }
}

/// Three significant digits with a signed two-digit exponent, e.g. `1.21e-06`.
pub fn format_error(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_order(order: Option<f64>) -> String {
    order.map(|o| format!("{o:.4}")).unwrap_or_default()
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    problem: &'a str,
    method: &'a str,
    rows: &'a [super::convergence::ConvergenceRow],
    wall_time_s: f64,
}

pub fn emit_report(report: &ConvergenceReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("N,error,order\n");
            for r in &report.rows {
                let _ = writeln!(out, "{},{},{}", r.n, format_error(r.error), format_order(r.order));
            }
        }
        ReportFormat::Markdown => {
            let _ = writeln!(out, "Global error and observed order: {} on {}", report.method, report.problem);
            out.push('\n');
            out.push_str("| N | error | order |\n|---:|---:|---:|\n");
            for r in &report.rows {
                let _ = writeln!(out, "| {} | {} | {} |", r.n, format_error(r.error), format_order(r.order));
            }
        }
        ReportFormat::Json => {
            let doc = JsonReport {
                schema: REPORT_SCHEMA,
                problem: &report.problem,
                method: &report.method,
                rows: &report.rows,
                wall_time_s: report.wall_time_s,
            };
            out = serde_json::to_string_pretty(&doc).expect("report serializes");
            out.push('\n');
        }
    }
    out
}
