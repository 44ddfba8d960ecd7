//! CSV and JSON reports.
//!
//! An accuracy table has one row per target with the columns
//! `target,mean_error,std_dev,n`. A scenario report stacks several tables
//! into sections; in CSV each section starts with `# section:` comment lines
//! and sections are separated by a blank line.

use std::fmt;

use diffdrive_core::experiments::{Axis, DriftResult, ExperimentStats};
use serde::{Deserialize, Serialize};

pub const STATS_HEADER: &str = "target,mean_error,std_dev,n";
pub const DRIFT_HEADER: &str =
    "revolutions,epsilon,compensated,total_rotation,insertion_drift,drift_per_rev";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum ReportError {
    Empty,
    NonFinite { row: usize, field: &'static str, value: f64 },
    Csv(csv::Error),
    Json(serde_json::Error),
    /// Text that is not laid out as a report.
    Malformed(String),
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Empty => write!(f, "report has no rows"),
            ReportError::NonFinite { row, field, value } => {
                write!(f, "row {row}: {field} is not finite ({value})")
            }
            ReportError::Csv(e) => write!(f, "csv: {e}"),
            ReportError::Json(e) => write!(f, "json: {e}"),
            ReportError::Malformed(m) => write!(f, "malformed report: {m}"),
        }
    }
}

impl std::error::Error for ReportError {}

impl From<csv::Error> for ReportError {
    fn from(e: csv::Error) -> Self {
        ReportError::Csv(e)
    }
}

impl From<serde_json::Error> for ReportError {
    fn from(e: serde_json::Error) -> Self {
        ReportError::Json(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub target: f64,
    pub mean_error: f64,
    pub std_dev: f64,
    pub n: usize,
}

impl From<&ExperimentStats> for StatsRow {
    fn from(s: &ExperimentStats) -> Self {
        Self {
            target: s.target,
            mean_error: s.mean_error,
            std_dev: s.std_dev,
            n: s.n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub revolutions: u32,
    pub epsilon: f64,
    pub compensated: bool,
    /// deg
    pub total_rotation: f64,
    /// mm
    pub insertion_drift: f64,
    /// mm/rev
    pub drift_per_rev: f64,
}

impl DriftRow {
    pub fn new(revolutions: u32, epsilon: f64, compensated: bool, r: &DriftResult) -> Self {
        Self {
            revolutions,
            epsilon,
            compensated,
            total_rotation: r.total_rotation,
            insertion_drift: r.insertion_drift,
            drift_per_rev: r.drift_per_rev,
        }
    }
}

fn check_stats(rows: &[StatsRow]) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    for (i, r) in rows.iter().enumerate() {
        for (field, value) in [("target", r.target), ("mean_error", r.mean_error), ("std_dev", r.std_dev)] {
            if !value.is_finite() {
                return Err(ReportError::NonFinite { row: i, field, value });
            }
        }
    }
    Ok(())
}

fn check_drift(rows: &[DriftRow]) -> Result<(), ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    for (i, r) in rows.iter().enumerate() {
        for (field, value) in [
            ("epsilon", r.epsilon),
            ("total_rotation", r.total_rotation),
            ("insertion_drift", r.insertion_drift),
            ("drift_per_rev", r.drift_per_rev),
        ] {
            if !value.is_finite() {
                return Err(ReportError::NonFinite { row: i, field, value });
            }
        }
    }
    Ok(())
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Malformed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn read_csv<T: for<'de> Deserialize<'de>>(text: &str, header: &str) -> Result<Vec<T>, ReportError> {
    let first = text.lines().next().unwrap_or_default();
    if first.trim() != header {
        return Err(ReportError::Malformed(format!("expected header `{header}`, found `{first}`")));
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(ReportError::from)).collect()
}

/// Render accuracy statistics as a `target,mean_error,std_dev,n` table.
pub fn emit_report(stats: &[ExperimentStats], format: ReportFormat) -> Result<String, ReportError> {
    let rows: Vec<StatsRow> = stats.iter().map(StatsRow::from).collect();
    emit_rows(&rows, format)
}

pub fn emit_rows(rows: &[StatsRow], format: ReportFormat) -> Result<String, ReportError> {
    check_stats(rows)?;
    match format {
        ReportFormat::Csv => write_csv(rows),
        ReportFormat::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

/// Inverse of [`emit_report`].
pub fn read_report(text: &str, format: ReportFormat) -> Result<Vec<StatsRow>, ReportError> {
    let rows: Vec<StatsRow> = match format {
        ReportFormat::Csv => read_csv(text, STATS_HEADER)?,
        ReportFormat::Json => serde_json::from_str(text)?,
    };
    check_stats(&rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    Insertion,
    Rotary,
}

impl From<Axis> for AxisLabel {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Insertion => AxisLabel::Insertion,
            Axis::Rotary => AxisLabel::Rotary,
        }
    }
}

impl AxisLabel {
    fn name(self) -> &'static str {
        match self {
            AxisLabel::Insertion => "insertion",
            AxisLabel::Rotary => "rotary",
        }
    }

    fn unit(self) -> &'static str {
        match self {
            AxisLabel::Insertion => "mm",
            AxisLabel::Rotary => "deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SectionBody {
    Accuracy { axis: AxisLabel, rows: Vec<StatsRow> },
    Drift { rows: Vec<DriftRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    #[serde(flatten)]
    pub body: SectionBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub sections: Vec<Section>,
}

impl ScenarioReport {
    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        if self.sections.is_empty() {
            return Err(ReportError::Empty);
        }
        for s in &self.sections {
            match &s.body {
                SectionBody::Accuracy { rows, .. } => check_stats(rows)?,
                SectionBody::Drift { rows } => check_drift(rows)?,
            }
        }
        match format {
            ReportFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            ReportFormat::Csv => {
                let mut out = format!("# seed: {}\n", self.seed);
                for s in &self.sections {
                    out.push('\n');
                    out.push_str(&format!("# section: {}\n", s.title.replace('\n', " ")));
                    match &s.body {
                        SectionBody::Accuracy { axis, rows } => {
                            out.push_str(&format!("# axis: {} ({})\n", axis.name(), axis.unit()));
                            out.push_str(&write_csv(rows)?);
                        }
                        SectionBody::Drift { rows } => out.push_str(&write_csv(rows)?),
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn parse(text: &str, format: ReportFormat) -> Result<Self, ReportError> {
        match format {
            ReportFormat::Json => Ok(serde_json::from_str(text)?),
            ReportFormat::Csv => parse_sections(text),
        }
    }
}

fn parse_sections(text: &str) -> Result<ScenarioReport, ReportError> {
    let malformed = |m: &str| ReportError::Malformed(m.to_owned());
    let mut blocks = text.split("\n\n");
    let seed = blocks
        .next()
        .and_then(|b| b.trim().strip_prefix("# seed: "))
        .ok_or_else(|| malformed("missing `# seed:` line"))?
        .parse()
        .map_err(|_| malformed("seed is not an integer"))?;
    let mut sections = Vec::new();
    for block in blocks {
        let mut rest = block;
        let mut take_comment = |prefix: &str| -> Option<String> {
            let (line, tail) = rest.split_once('\n')?;
            let value = line.strip_prefix(prefix)?.to_owned();
            rest = tail;
            Some(value)
        };
        let title = take_comment("# section: ").ok_or_else(|| malformed("section without title"))?;
        let axis = take_comment("# axis: ");
        let body = match axis.as_deref() {
            Some("insertion (mm)") => SectionBody::Accuracy {
                axis: AxisLabel::Insertion,
                rows: read_csv(rest, STATS_HEADER)?,
            },
            Some("rotary (deg)") => SectionBody::Accuracy {
                axis: AxisLabel::Rotary,
                rows: read_csv(rest, STATS_HEADER)?,
            },
            Some(other) => return Err(ReportError::Malformed(format!("unknown axis `{other}`"))),
            None => SectionBody::Drift {
                rows: read_csv(rest, DRIFT_HEADER)?,
            },
        };
        sections.push(Section { title, body });
    }
    Ok(ScenarioReport { seed, sections })
}
