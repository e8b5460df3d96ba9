//! Rows and emitters for the benchmark tables and the convergence study.
//!
//! One row per mesh resolution. The csv schema is fixed:
//!
//!   h,H,eta,lambda_max,lambda_min,kappa,niter_plain,niter_prec,wall_time_s
//!
//! Columns a table does not produce stay empty (eigenvalues for the
//! iteration table, iteration counts for the eigenvalue tables). The
//! condition number of the unpreconditioned operator is not part of the
//! csv schema and appears only in the markdown and json renderings.
//!
//! Csv floats use the shortest round-trip decimal form, so identical runs
//! give byte-identical files. Markdown rounds for reading.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Md,
    Json,
}

/// One resolution of a table sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub eta: f64,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub kappa: Option<f64>,
    /// Condition number of the plain operator (markdown and json only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa_plain: Option<f64>,
    pub niter_plain: Option<usize>,
    pub niter_prec: Option<usize>,
    pub wall_time_s: f64,
}

impl ReportRow {
    pub fn new(n: usize, m: usize, eta: f64) -> Self {
        ReportRow {
            h: 1.0 / n as f64,
            big_h: 1.0 / m as f64,
            eta,
            lambda_max: None,
            lambda_min: None,
            kappa: None,
            kappa_plain: None,
            niter_plain: None,
            niter_prec: None,
            wall_time_s: 0.0,
        }
    }
}

/// One resolution of the manufactured-solution study. Orders are the
/// observed rates against the previous row, so the first row has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsRow {
    pub h: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    pub energy_order: Option<f64>,
    pub l2_order: Option<f64>,
}

pub const CSV_HEADER: &str = "h,H,eta,lambda_max,lambda_min,kappa,niter_plain,niter_prec,wall_time_s";
pub const MMS_CSV_HEADER: &str = "h,energy_error,l2_error,energy_order,l2_order";

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_count(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn md_num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn md_sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4e}")).unwrap_or_default()
}

pub fn csv_report(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            num(r.h),
            num(r.big_h),
            num(r.eta),
            opt_num(r.lambda_max),
            opt_num(r.lambda_min),
            opt_num(r.kappa),
            opt_count(r.niter_plain),
            opt_count(r.niter_prec),
            num(r.wall_time_s),
        )
        .expect("write to string");
    }
    s
}

pub fn md_report(rows: &[ReportRow]) -> String {
    let plain = rows.iter().any(|r| r.kappa_plain.is_some());
    let mut s = String::from("| h | H | eta | lambda_max | lambda_min | kappa |");
    if plain {
        s.push_str(" kappa_plain |");
    }
    s.push_str(" niter_plain | niter_prec | wall_time_s |\n");
    let cols = if plain { 10 } else { 9 };
    s.push('|');
    for _ in 0..cols {
        s.push_str(" --- |");
    }
    s.push('\n');
    for r in rows {
        write!(
            s,
            "| {:.4} | {:.4} | {} | {} | {} | {} |",
            r.h,
            r.big_h,
            num(r.eta),
            md_num(r.lambda_max),
            md_num(r.lambda_min),
            md_num(r.kappa),
        )
        .expect("write to string");
        if plain {
            write!(s, " {} |", md_sci(r.kappa_plain)).expect("write to string");
        }
        writeln!(
            s,
            " {} | {} | {:.3} |",
            opt_count(r.niter_plain),
            opt_count(r.niter_prec),
            r.wall_time_s,
        )
        .expect("write to string");
    }
    s
}

pub fn json_report(rows: &[ReportRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn csv_mms(rows: &[MmsRow]) -> String {
    let mut s = String::from(MMS_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            num(r.h),
            num(r.energy_error),
            num(r.l2_error),
            opt_num(r.energy_order),
            opt_num(r.l2_order),
        )
        .expect("write to string");
    }
    s
}

pub fn md_mms(rows: &[MmsRow]) -> String {
    let mut s = String::from(
        "| h | energy_error | l2_error | energy_order | l2_order |\n| --- | --- | --- | --- | --- |\n",
    );
    for r in rows {
        writeln!(
            s,
            "| {:.4} | {} | {} | {} | {} |",
            r.h,
            md_sci(Some(r.energy_error)),
            md_sci(Some(r.l2_error)),
            md_num(r.energy_order),
            md_num(r.l2_order),
        )
        .expect("write to string");
    }
    s
}

pub fn json_mms(rows: &[MmsRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

fn write_out(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Render and write a table report. Empty input is refused so callers can
/// distinguish an empty selection from a successful run.
pub fn emit_report(rows: &[ReportRow], format: Format, out: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let text = match format {
        Format::Csv => csv_report(rows),
        Format::Md => md_report(rows),
        Format::Json => json_report(rows),
    };
    write_out(&text, out)
}

pub fn emit_mms(rows: &[MmsRow], format: Format, out: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let text = match format {
        Format::Csv => csv_mms(rows),
        Format::Md => md_mms(rows),
        Format::Json => json_mms(rows),
    };
    write_out(&text, out)
}
