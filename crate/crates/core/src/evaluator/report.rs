use alloc::string::String;
use core::fmt::Write;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MetricsReport, SweepTable};

pub const SWEEP_HEADER: &str = "english_percentage\tF1\tPrecision\tRecall";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(alloc::format!("unknown report format {other:?} (expected tsv or json)")),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

/// TSV: one `metric<TAB>value` row per figure, percentages to 2 decimals.
pub fn render_metrics(report: &MetricsReport, format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        return json(report);
    }
    let mut out = String::from("metric\tvalue\n");
    let rows = [
        ("F1", report.f1),
        ("Precision", report.precision),
        ("Recall", report.recall),
        ("predicate_F1", report.predicate_identification.f1),
        ("sense_accuracy", report.sense_accuracy),
        ("role_F1", report.roles.f1),
        ("role_Precision", report.roles.precision),
        ("role_Recall", report.roles.recall),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k}\t{v:.2}");
    }
    let counts = [
        ("gold_items", report.counts.gold),
        ("predicted_items", report.counts.predicted),
        ("matched_items", report.counts.matched),
    ];
    for (k, v) in counts {
        let _ = writeln!(out, "{k}\t{v}");
    }
    out
}

/// TSV: [`SWEEP_HEADER`] then one row per fraction.
pub fn render_sweep(table: &SweepTable, format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        return json(table);
    }
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{}\t{:.2}\t{:.2}\t{:.2}",
            row.english_percentage, row.f1, row.precision, row.recall
        );
    }
    out
}
