//! Flat report rows and their CSV / JSON writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::RunOutcome;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 15] = [
    "algorithm",
    "strategy",
    "mode",
    "n",
    "epsilon",
    "t",
    "T",
    "s",
    "query_count",
    "success_amplitude",
    "error_2norm",
    "error_trace",
    "residual_T",
    "wall_ms",
    "seed",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub strategy: String,
    pub mode: String,
    pub n: usize,
    pub epsilon: f64,
    pub t: usize,
    #[serde(rename = "T")]
    pub big_t: usize,
    pub s: Option<usize>,
    pub query_count: usize,
    pub success_amplitude: Option<f64>,
    pub error_2norm: Option<f64>,
    pub error_trace: Option<f64>,
    #[serde(rename = "residual_T")]
    pub residual_t: f64,
    pub wall_ms: f64,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_outcome(o: &RunOutcome) -> Self {
        let r = &o.report;
        Self {
            algorithm: r.algorithm.as_str().into(),
            strategy: r.strategy.as_str().into(),
            mode: match r.mode {
                crate::synthesis::ModeKind::Exact => "exact".into(),
                crate::synthesis::ModeKind::Perturbed => "perturbed".into(),
            },
            n: r.n,
            epsilon: r.epsilon,
            t: r.t,
            big_t: r.big_t,
            s: r.s,
            query_count: r.query_count,
            success_amplitude: r.success_amplitude,
            error_2norm: r.error_2norm,
            error_trace: r.error_trace,
            residual_t: r.residual_t,
            wall_ms: (o.wall_ms * 1e3).round() / 1e3,
            seed: o.config.seed,
        }
    }
}

/// JSON form: the CSV fields plus any warnings raised while running.
#[derive(Serialize)]
struct JsonRow<'a> {
    #[serde(flatten)]
    row: &'a ReportRow,
    warnings: &'a [String],
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(
    mut out: W,
    rows: &[ReportRow],
    warnings: &[Vec<String>],
) -> Result<()> {
    let items: Vec<JsonRow> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| JsonRow {
            row,
            warnings: warnings.get(i).map(|w| w.as_slice()).unwrap_or(&[]),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &items).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_report(outcomes: &[RunOutcome], path: &Path, format: Format) -> Result<()> {
    let rows: Vec<ReportRow> = outcomes.iter().map(ReportRow::from_outcome).collect();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Csv => write_csv(file, &rows),
        Format::Json => {
            let warnings: Vec<Vec<String>> = outcomes.iter().map(|o| o.warnings.clone()).collect();
            write_json(file, &rows, &warnings)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{run_config, ExperimentConfig};

    fn outcome(algorithm: &str) -> RunOutcome {
        let c = ExperimentConfig::from_json(&format!(
            r#"{{"n": 1, "epsilon": 0.2, "algorithm": "{algorithm}", "seed": 3, "overrides": {{"t": 2, "s": 2}}}}"#
        ))
        .unwrap();
        run_config(&c).unwrap()
    }

    fn strip_wall(line: &str) -> String {
        let mut f: Vec<&str> = line.split(',').collect();
        f[13] = "";
        f.join(",")
    }

    #[test]
    fn csv_layout() {
        let outs = [
            outcome("postselect"),
            outcome("one-query"),
            outcome("ten-query"),
            outcome("four-query"),
        ];
        let rows: Vec<ReportRow> = outs.iter().map(ReportRow::from_outcome).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(text.matches("algorithm,").count(), 1);
        assert!(!text.contains('\r'));
        let trace = |l: &str| l.split(',').nth(11).unwrap().to_string();
        assert!(trace(lines[1]).is_empty());
        assert!(!trace(lines[2]).is_empty());
        assert!(trace(lines[3]).is_empty() && trace(lines[4]).is_empty());

        let again = ReportRow::from_outcome(&outcome("one-query"));
        let mut buf = Vec::new();
        write_csv(&mut buf, &[again]).unwrap();
        let second = String::from_utf8(buf).unwrap();
        assert_eq!(
            strip_wall(lines[2]),
            strip_wall(second.lines().nth(1).unwrap())
        );
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let o = outcome("postselect");
        let row = ReportRow::from_outcome(&o);
        let mut buf = Vec::new();
        write_json(&mut buf, &[row], std::slice::from_ref(&o.warnings)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let obj = v[0].as_object().unwrap();
        for c in CSV_COLUMNS {
            assert!(obj.contains_key(c), "{c}");
        }
        assert_eq!(obj.len(), CSV_COLUMNS.len() + 1);
        assert!(!obj["warnings"].as_array().unwrap().is_empty());
    }
}
