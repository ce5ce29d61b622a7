//! Report serialization: JSON for full fidelity, CSV for one-row-per-check
//! tabular digests.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::harness::config::SweepConfig;
use crate::harness::fuzz::FuzzSummary;
use crate::harness::sweep::TrialRecord;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?}, expected json or csv")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

/// A complete sweep run: the inputs that produced it plus every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub library_version: String,
    pub seed: u64,
    pub config: SweepConfig,
    pub records: Vec<TrialRecord>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn report_err(e: impl fmt::Display) -> Error {
    Error::Report(e.to_string())
}

const CSV_HEADER: [&str; 14] = [
    "trial_id",
    "f",
    "g",
    "alpha",
    "a",
    "b",
    "check",
    "variant",
    "lhs",
    "rhs",
    "margin",
    "holds",
    "residual",
    "quad_error",
];

/// Write a sweep report.
///
/// JSON carries the whole structure. CSV flattens to one row per evaluated
/// check with fixed columns; fields a check does not produce stay empty, and
/// trial errors appear only in the JSON form. All floats use 17 significant
/// digits, so equal runs emit byte-equal tables.
pub fn emit_report(
    report: &SweepReport,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<(), Error> {
    if report.records.is_empty() {
        return Err(Error::Report("report contains no records".into()));
    }
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, report).map_err(report_err)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(report_err)?;
            for r in &report.records {
                let head = [
                    r.trial_id.clone(),
                    r.f.clone(),
                    r.g.clone(),
                    num(r.alpha),
                    num(r.a),
                    num(r.b),
                ];
                for bound in &r.bounds {
                    let mut row = head.to_vec();
                    row.extend([
                        bound.theorem.label().to_string(),
                        bound.variant.label().to_string(),
                        num(bound.lhs),
                        num(bound.rhs),
                        num(bound.margin),
                        bound.holds.to_string(),
                        String::new(),
                        num(bound.quad_error),
                    ]);
                    w.write_record(&row).map_err(report_err)?;
                }
                for id in &r.identities {
                    let mut row = head.to_vec();
                    row.extend([
                        id.name.label().to_string(),
                        String::new(),
                        num(id.lhs),
                        num(id.rhs),
                        String::new(),
                        id.pass.to_string(),
                        num(id.abs_residual),
                        String::new(),
                    ]);
                    w.write_record(&row).map_err(report_err)?;
                }
                if let Some(mvt) = &r.mvt {
                    let mut row = head.to_vec();
                    row.extend([
                        "mvt".to_string(),
                        String::new(),
                        num(mvt.q),
                        num(mvt.phi_xi),
                        String::new(),
                        mvt.resolved.to_string(),
                        num(mvt.residual),
                        String::new(),
                    ]);
                    w.write_record(&row).map_err(report_err)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Write a fuzz summary: JSON carries the whole summary, CSV tabulates the
/// violations (header only when there are none).
pub fn emit_fuzz_report(
    summary: &FuzzSummary,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<(), Error> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, summary).map_err(report_err)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "trial_id", "f", "g", "alpha", "a", "b", "theorem", "variant", "lhs", "rhs",
                "margin", "quad_error",
            ])
            .map_err(report_err)?;
            for v in &summary.violations {
                w.write_record([
                    v.trial_id.clone(),
                    v.f.clone(),
                    v.g.clone(),
                    num(v.alpha),
                    num(v.a),
                    num(v.b),
                    v.theorem.label().to_string(),
                    v.variant.label().to_string(),
                    num(v.lhs),
                    num(v.rhs),
                    num(v.margin),
                    num(v.quad_error),
                ])
                .map_err(report_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Read back a JSON sweep report, e.g. to re-emit it as CSV.
pub fn read_report(input: &mut dyn Read) -> Result<SweepReport, Error> {
    serde_json::from_reader(input).map_err(report_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gruss::BoundVariant;
    use crate::harness::config::{Check, FunctionSource};
    use crate::harness::sweep::run_sweep;
    use crate::quad::QuadratureSpec;

    fn sample_report() -> SweepReport {
        let config = SweepConfig {
            alphas: vec![0.5, 1.0],
            intervals: vec![(1.0, 2.0), (2.0, 3.0)],
            functions: FunctionSource::Pairs(vec![("x".into(), "sin(x)".into())]),
            variants: BoundVariant::ALL.to_vec(),
            tolerances: QuadratureSpec::default(),
            checks: vec![Check::Thm31],
        };
        let records = run_sweep(&config, 21).unwrap();
        SweepReport {
            library_version: crate::VERSION.to_string(),
            seed: 21,
            config,
            records,
        }
    }

    #[test]
    fn csv_emits_one_row_per_check() {
        let report = sample_report();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // 4 records, one theorem, three variants each, plus the header.
        assert_eq!(lines.len(), 1 + 4 * 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("0000000000000015-000000,x,sin(x),"));
        for line in &lines[1..] {
            assert_eq!(line.matches("thm31").count(), 1);
        }
    }

    #[test]
    fn json_round_trips_bit_exact() {
        let report = sample_report();
        let mut buf = Vec::new();
        emit_report(&report, ReportFormat::Json, &mut buf).unwrap();
        assert_eq!(buf.last(), Some(&b'\n'));
        let back = read_report(&mut buf.as_slice()).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn empty_reports_are_refused() {
        let mut report = sample_report();
        report.records.clear();
        let mut buf = Vec::new();
        match emit_report(&report, ReportFormat::Json, &mut buf) {
            Err(Error::Report(msg)) => assert!(msg.contains("no records")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_parses_and_prints() {
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("yaml".parse::<ReportFormat>().is_err());
        assert_eq!(ReportFormat::Csv.to_string(), "csv");
    }

    #[test]
    fn fuzz_csv_lists_violations_only() {
        use crate::harness::fuzz::fuzz_search;
        let mut config = crate::harness::config::desk_suite();
        config.checks = vec![Check::Thm31];
        config.variants = vec![BoundVariant::Safe];
        let summary = fuzz_search(2, 3, &config).unwrap();
        let mut buf = Vec::new();
        emit_fuzz_report(&summary, ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + summary.violations.len());
    }
}
