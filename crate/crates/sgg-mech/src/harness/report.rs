//! Report emission: a `condition,metric,value` CSV and a fixed-viewbox
//! SVG bar chart. Both are byte-stable for identical inputs.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::experiments::ReportRow;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(HarnessError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Write rows in the requested format.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path)?;
    match format {
        ReportFormat::Csv => write_csv(rows, &mut file),
        ReportFormat::Svg => write_svg(rows, &mut file),
    }
}

fn write_csv(rows: &[ReportRow], out: &mut impl Write) -> Result<(), HarnessError> {
    writeln!(out, "condition,metric,value")?;
    for (condition, metric, value) in rows {
        writeln!(out, "{condition},{metric},{value}")?;
    }
    Ok(())
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;

/// One bar per row, labelled `condition/metric`, scaled to the maximum
/// absolute value.
fn write_svg(rows: &[ReportRow], out: &mut impl Write) -> Result<(), HarnessError> {
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\">"
    )?;
    writeln!(out, "<rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>")?;
    if !rows.is_empty() {
        let max = rows
            .iter()
            .map(|(_, _, v)| v.abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        let margin = 40.0;
        let chart_height = SVG_HEIGHT - 2.0 * margin;
        let slot = (SVG_WIDTH - 2.0 * margin) / rows.len() as f64;
        let bar_width = slot * 0.6;
        for (i, (condition, metric, value)) in rows.iter().enumerate() {
            let height = chart_height * (value.abs() / max);
            let x = margin + slot * i as f64 + slot * 0.2;
            let y = SVG_HEIGHT - margin - height;
            writeln!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{bar_width}\" height=\"{height}\" fill=\"#4878a8\"/>"
            )?;
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{condition}/{metric}</text>",
                x + bar_width / 2.0,
                SVG_HEIGHT - margin + 14.0
            )?;
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{value}</text>",
                x + bar_width / 2.0,
                y - 4.0
            )?;
        }
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ReportRow> {
        vec![
            ("a".into(), "m1".into(), 0.25),
            ("b".into(), "m1".into(), 0.75),
        ]
    }

    #[test]
    fn csv_schema_and_stability() {
        let mut first = Vec::new();
        write_csv(&rows(), &mut first).unwrap();
        let mut second = Vec::new();
        write_csv(&rows(), &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text.lines().next(), Some("condition,metric,value"));
        assert!(text.contains("a,m1,0.25"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "condition,metric,value\n");
    }

    #[test]
    fn svg_has_fixed_viewbox_and_is_stable() {
        let mut first = Vec::new();
        write_svg(&rows(), &mut first).unwrap();
        let mut second = Vec::new();
        write_svg(&rows(), &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("viewBox=\"0 0 640 480\""));
        assert_eq!(text.matches("<rect").count(), 3, "background + two bars");
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!(matches!(
            "yaml".parse::<ReportFormat>(),
            Err(HarnessError::UnsupportedFormat(_))
        ));
    }
}
