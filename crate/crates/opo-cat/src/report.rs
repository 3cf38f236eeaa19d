//! Oracle-versus-formula comparison reports and their emission in CSV,
//! JSON, and plain-text form. Output is byte-stable for fixed inputs:
//! rows are sorted by quantity name and floats use a fixed 12-significant-
//! digit format.

use std::io::Write;

use crate::fmt::g12;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub quantity: String,
    pub closed_form: f64,
    pub oracle: f64,
    /// |closed − oracle| / |closed|, or the absolute difference when the
    /// closed form is zero.
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Text,
}

impl ComparisonReport {
    pub fn push(&mut self, quantity: &str, closed_form: f64, oracle: f64, tolerance: f64) {
        let rel_error = if closed_form == 0.0 {
            (closed_form - oracle).abs()
        } else {
            (closed_form - oracle).abs() / closed_form.abs()
        };
        self.rows.push(ReportRow {
            quantity: quantity.to_string(),
            closed_form,
            oracle,
            rel_error,
            tolerance,
            pass: rel_error <= tolerance,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn sorted_rows(&self) -> Vec<&ReportRow> {
        let mut rows: Vec<&ReportRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.quantity.cmp(&b.quantity));
        rows
    }

    pub fn emit<W: Write>(&self, mut w: W, format: ReportFormat, config_hash: &str) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(e.to_string());
        match format {
            ReportFormat::Csv => {
                writeln!(w, "# config-hash={config_hash}").map_err(io)?;
                writeln!(w, "quantity,closed_form,oracle,rel_error,tolerance,pass").map_err(io)?;
                for r in self.sorted_rows() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        r.quantity,
                        g12(r.closed_form),
                        g12(r.oracle),
                        g12(r.rel_error),
                        g12(r.tolerance),
                        r.pass
                    )
                    .map_err(io)?;
                }
            }
            ReportFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .sorted_rows()
                    .into_iter()
                    .map(|r| {
                        serde_json::json!({
                            "quantity": r.quantity,
                            "closed_form": r.closed_form,
                            "oracle": r.oracle,
                            "rel_error": r.rel_error,
                            "tolerance": r.tolerance,
                            "pass": r.pass,
                        })
                    })
                    .collect();
                let doc = serde_json::json!({
                    "config_hash": config_hash,
                    "all_pass": self.all_pass(),
                    "rows": rows,
                });
                writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("report serializes")).map_err(io)?;
            }
            ReportFormat::Text => {
                writeln!(w, "comparison report (config {config_hash})").map_err(io)?;
                for r in self.sorted_rows() {
                    writeln!(
                        w,
                        "  {:<22} closed={:<18} oracle={:<18} err={:<12} tol={:<10} {}",
                        r.quantity,
                        g12(r.closed_form),
                        g12(r.oracle),
                        g12(r.rel_error),
                        g12(r.tolerance),
                        if r.pass { "pass" } else { "FAIL" }
                    )
                    .map_err(io)?;
                }
                let passed = self.rows.iter().filter(|r| r.pass).count();
                writeln!(
                    w,
                    "{}: {passed}/{} rows pass",
                    if self.all_pass() { "PASS" } else { "FAIL" },
                    self.rows.len()
                )
                .map_err(io)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only_csv() {
        let rep = ComparisonReport::default();
        let mut buf = Vec::new();
        rep.emit(&mut buf, ReportFormat::Csv, "deadbeef").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# config-hash="));
        assert_eq!(lines[1], "quantity,closed_form,oracle,rel_error,tolerance,pass");
        assert!(rep.all_pass());
    }

    #[test]
    fn rows_sorted_and_pass_logic() {
        let mut rep = ComparisonReport::default();
        rep.push("zeta", 1.0, 1.005, 0.01);
        rep.push("alpha", 2.0, 2.5, 0.01);
        assert!(!rep.all_pass());
        let mut buf = Vec::new();
        rep.emit(&mut buf, ReportFormat::Csv, "x").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[2].starts_with("alpha,"));
        assert!(lines[2].ends_with(",false"));
        assert!(lines[3].starts_with("zeta,"));
        assert!(lines[3].ends_with(",true"));
    }

    #[test]
    fn text_format_has_summary_line() {
        let mut rep = ComparisonReport::default();
        rep.push("visibility", 0.6, 0.601, 0.017);
        let mut buf = Vec::new();
        rep.emit(&mut buf, ReportFormat::Text, "x").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("PASS: 1/1 rows pass"));
    }
}
